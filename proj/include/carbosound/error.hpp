#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace carbosound {

enum class ErrorCode {
  UnreadableFile,
  NonUniformSampling,
  EmptySignal,
  InvalidWaveform,
  MismatchedGrids,
  InvalidManifest,
  UnknownWindow,
  AllBelowFloor,
  ZeroEnergySignal,
  NonPositiveImpedance,
  InvalidArgument,
  ZeroMean,
  TooFewValues,
  InsufficientBins,
  UnsortedDays,
  NoFundamental,
  NonPositiveInput,
  NonPositiveFundamental,
  TooFewPoints,
  DegenerateX,
  DegenerateData,
  FitDiverged,
  ZeroVariance,
  AliasedHarmonic,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library is reported through this type; `code()` is the
// machine-readable name that ends up in reports and CLI error output.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& context);

  ErrorCode code() const noexcept { return code_; }
  const std::string& context() const noexcept { return context_; }

 private:
  ErrorCode code_;
  std::string context_;
};

// A value that may be missing for a recorded reason. Used where one failed
// index must not abort the rest of an analysis.
template <class T>
struct Fallible {
  std::optional<T> value;
  std::string reason;   // ErrorCode name when value is empty
  std::string context;

  bool has_value() const noexcept { return value.has_value(); }
  const T& operator*() const { return *value; }
  const T* operator->() const { return &*value; }
};

template <class F>
auto attempt(F&& fn) -> Fallible<decltype(fn())> {
  Fallible<decltype(fn())> out;
  try {
    out.value = fn();
  } catch (const Error& e) {
    out.reason = std::string(to_string(e.code()));
    out.context = e.context();
  }
  return out;
}

}  // namespace carbosound
