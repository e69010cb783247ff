#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "carbosound/error.hpp"
#include "carbosound/regression.hpp"
#include "carbosound/spectral.hpp"

namespace carbosound {

struct FrequencyBand {
  double lo{0.0};
  double hi{0.0};
};

struct PhaseSlopeIndex {
  double slope{0.0};      // rad/Hz
  double intercept{0.0};  // rad
  double pearson_r{0.0};
  FrequencyBand band;
  std::size_t n_bins{0};
};

inline constexpr std::size_t kMinPhaseBins = 8;

// Default analysis band around a spectral peak: [0.5, 1.5] * f_peak.
FrequencyBand default_phase_band(double f_peak_hz);

// Least-squares line through the unwrapped phase inside `band`. When the
// amplitude floor splits the band into several runs of adjacent bins, the
// longest run is used; unwrapping across a gap cannot be trusted.
PhaseSlopeIndex phase_slope(const PhaseCurve& pc, FrequencyBand band);

// tau = -slope / (2 pi)
double travel_time(const PhaseSlopeIndex& idx);

struct PhaseDayRecord {
  int day{0};
  PhaseSlopeIndex index;
  std::optional<double> caco3_pct;
};

struct PhaseSlopeSeries {
  std::vector<int> days;
  std::vector<double> slopes;
  // Slope minus the slope of the first (benchmark, normally day 0) record.
  std::vector<double> delta_vs_benchmark;
  // A - B exp(-c day)
  Fallible<FitResult> fit_vs_day;
  // Days whose studentised residual in fit_vs_day exceeds the threshold.
  std::vector<int> outlier_days;
  bool outliers_excluded{false};
  // A exp(b x) + C exp(d x) against CaCO3; records without a concentration
  // are skipped.
  Fallible<FitResult> fit_vs_caco3;
};

inline constexpr double kOutlierThreshold = 3.0;

// Throws UnsortedDays unless days are strictly increasing. Outliers are only
// flagged unless exclude_outliers is set, in which case fit_vs_day is redone
// without them.
PhaseSlopeSeries phase_slope_series(std::span<const PhaseDayRecord> records, bool exclude_outliers = false);

}  // namespace carbosound
