#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace carbosound {

inline constexpr double kDefaultNominalF0Hz = 5.0e5;
inline constexpr double kDefaultImpedanceOhm = 1.0;

// One specimen at one carbonation day, bound to the shots recorded for it.
struct SpecimenRecord {
  std::string id;
  double wc_ratio{0.0};
  int day{0};
  std::optional<double> caco3_pct;
  std::vector<std::filesystem::path> waveform_paths;
};

struct DatasetManifest {
  std::vector<SpecimenRecord> specimens;
  double nominal_f0_hz{kDefaultNominalF0Hz};
  double impedance_ohm{kDefaultImpedanceOhm};
  // Directory relative waveform paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

enum class FindingKind {
  MissingFile,
  DuplicateId,
  NonMonotoneDays,
  NonFiniteConcentration,
  NegativeConcentration,
  NegativeDay,
  InvalidWcRatio,
  InconsistentWcRatio,
  NoWaveforms,
  InvalidNominalFrequency,
  InvalidImpedance,
};

std::string to_string(FindingKind kind);

struct Finding {
  FindingKind kind;
  std::string subject;  // specimen id or path the finding refers to

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const noexcept { return findings.empty(); }
};

// Records are keyed by (id, day): the same id may appear once per day, and a
// specimen's days must be listed in strictly increasing order.
ValidationReport validate_manifest(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace carbosound
