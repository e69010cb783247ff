#pragma once

#include <iosfwd>

namespace carbosound {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Subcommands: analyze, batch, fit, synth, report. Runtime failures print
// {"error": ..., "context": ...} on err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace carbosound
