#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "carbosound/energy.hpp"
#include "carbosound/error.hpp"
#include "carbosound/harmonics.hpp"
#include "carbosound/manifest.hpp"
#include "carbosound/phase.hpp"
#include "carbosound/regression.hpp"
#include "carbosound/spectral.hpp"
#include "carbosound/waveform.hpp"

namespace carbosound {

struct AnalysisSettings {
  Window window{Window::Rectangular};
  std::optional<FrequencyBand> band;  // phase band override
  double min_prominence{kDefaultMinProminence};
  std::optional<double> impedance_ohm;  // overrides the manifest value
  bool exclude_outliers{false};
  unsigned workers{1};
};

// Throws InvalidArgument on out-of-range settings.
void validate_settings(const AnalysisSettings& s);

struct EnergyBundle {
  double total_j{0.0};
  double delta_t_s{0.0};
  Fallible<MuFit> mu;
  CumulativeEnergyCurve curve;
};

struct PhaseBundle {
  PhaseSlopeIndex index;
  double travel_time_s{0.0};
  std::optional<double> delta_vs_benchmark;  // filled by the series step
};

struct HarmonicBundle {
  HarmonicSet set;
  NonlinearityIndex index;
  std::size_t n_peaks{0};
};

struct DayBundle {
  std::string id;
  double wc_ratio{0.0};
  int day{0};
  std::optional<double> caco3_pct;
  std::size_t n_waveforms{0};
  bool default_distance{false};
  Fallible<EnergyBundle> energy;
  Fallible<PhaseBundle> phase;
  Fallible<HarmonicBundle> harmonics;
};

// Indices of one (already averaged) waveform. A failing index is recorded
// with its reason and never aborts the others.
DayBundle analyze_waveform(const Waveform& w, double nominal_f0_hz, double impedance_ohm,
                           const AnalysisSettings& settings);

// Loads and averages the record's waveforms, then analyze_waveform.
DayBundle analyze_specimen_day(const SpecimenRecord& rec, const DatasetManifest& manifest,
                               const AnalysisSettings& settings);

// Per-day values feeding the cross-day fits; absent values are NaN.
struct SeriesInput {
  std::vector<int> days;
  std::vector<double> caco3;
  std::vector<double> energy;
  std::vector<double> mu;
  std::vector<double> delta_t;
  std::vector<double> slope;
  std::vector<double> gamma;
};

struct SeriesFits {
  Fallible<FitResult> mu_vs_day;          // linear
  Fallible<FitResult> energy_vs_day;      // A exp(-b x)
  Fallible<FitResult> energy_vs_caco3;    // two-term
  Fallible<PhaseSlopeSeries> phase;       // A - B exp(-c x) vs day, two-term vs CaCO3
  Fallible<ExponentialTrend> gamma_vs_day;
  Fallible<LogLinearTrend> loggamma_vs_caco3;
  Fallible<double> cv_delta_t;
};

inline constexpr std::size_t kMinSeriesDays = 4;

SeriesFits fit_series(const SeriesInput& in, bool exclude_outliers);

struct SpecimenReport {
  std::string id;
  double wc_ratio{0.0};
  std::vector<DayBundle> days;  // sorted by day
  SeriesInput series;
  SeriesFits fits;
};

struct GroupReport {
  double wc_ratio{0.0};
  std::vector<std::string> specimen_ids;
  SeriesInput mean_series;  // per-day mean over the group's specimens
  SeriesFits fits;
};

struct CarbonationReport {
  AnalysisSettings settings;
  double nominal_f0_hz{kDefaultNominalF0Hz};
  double impedance_ohm{kDefaultImpedanceOhm};
  std::vector<std::string> warnings;
  std::vector<SpecimenReport> specimens;  // ordered by (wc_ratio, id)
  std::vector<GroupReport> groups;        // ordered by wc_ratio
};

// Never throws for data problems; they end up as warnings or absent entries.
CarbonationReport build_report(const DatasetManifest& manifest, const AnalysisSettings& settings);

// JSON text (2-space indent, trailing newline).
std::string report_to_json(const CarbonationReport& report);
std::string day_to_json(const DayBundle& day);
std::string fit_to_json(const FitResult& fit);

// One row per specimen-day.
void write_report_csv(const CarbonationReport& report, const std::filesystem::path& path);

void write_text_file(const std::string& text, const std::filesystem::path& path);

}  // namespace carbosound
