#include "carbosound/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace carbosound {

FrequencyBand default_phase_band(double f_peak_hz) { return {0.5 * f_peak_hz, 1.5 * f_peak_hz}; }

PhaseSlopeIndex phase_slope(const PhaseCurve& pc, FrequencyBand band) {
  if (!(band.lo < band.hi)) throw Error(ErrorCode::InvalidArgument, "band must satisfy f_lo < f_hi");
  std::size_t best_begin = 0;
  std::size_t best_len = 0;
  std::size_t i = 0;
  const std::size_t n = pc.freqs.size();
  while (i < n) {
    if (pc.freqs[i] < band.lo || pc.freqs[i] > band.hi) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && pc.freqs[j] <= band.hi && pc.bins[j] == pc.bins[j - 1] + 1) ++j;
    if (j - i > best_len) {
      best_begin = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len < kMinPhaseBins) {
    throw Error(ErrorCode::InsufficientBins, std::to_string(best_len) + " contiguous bins in band");
  }
  std::span<const double> f(pc.freqs.data() + best_begin, best_len);
  std::span<const double> ph(pc.phase.data() + best_begin, best_len);
  const FitResult lf = linear_fit(f, ph);
  PhaseSlopeIndex idx;
  idx.slope = lf.params[0];
  idx.intercept = lf.params[1];
  idx.pearson_r = lf.pearson_r;
  idx.band = band;
  idx.n_bins = best_len;
  return idx;
}

double travel_time(const PhaseSlopeIndex& idx) { return -idx.slope / (2.0 * std::numbers::pi); }

PhaseSlopeSeries phase_slope_series(std::span<const PhaseDayRecord> records, bool exclude_outliers) {
  PhaseSlopeSeries s;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].day <= records[i - 1].day) throw Error(ErrorCode::UnsortedDays, "days must be strictly increasing");
  }
  for (const auto& r : records) {
    s.days.push_back(r.day);
    s.slopes.push_back(r.index.slope);
    s.delta_vs_benchmark.push_back(r.index.slope - records.front().index.slope);
  }
  std::vector<double> x(s.days.begin(), s.days.end());

  s.fit_vs_day = attempt([&] { return fit(ModelFamily::ExpOffset, x, s.slopes); });
  if (s.fit_vs_day.has_value()) {
    const auto stud = studentized_residuals(*s.fit_vs_day, x, s.slopes);
    for (std::size_t i = 0; i < stud.size(); ++i) {
      if (std::abs(stud[i]) > kOutlierThreshold) s.outlier_days.push_back(s.days[i]);
    }
    if (exclude_outliers && !s.outlier_days.empty()) {
      std::vector<double> xk;
      std::vector<double> yk;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::find(s.outlier_days.begin(), s.outlier_days.end(), s.days[i]) == s.outlier_days.end()) {
          xk.push_back(x[i]);
          yk.push_back(s.slopes[i]);
        }
      }
      s.fit_vs_day = attempt([&] { return fit(ModelFamily::ExpOffset, xk, yk); });
      s.outliers_excluded = true;
    }
  }

  std::vector<double> conc;
  std::vector<double> slope_c;
  for (const auto& r : records) {
    if (r.caco3_pct && std::isfinite(*r.caco3_pct)) {
      conc.push_back(*r.caco3_pct);
      slope_c.push_back(r.index.slope);
    }
  }
  s.fit_vs_caco3 = attempt([&] { return fit(ModelFamily::TwoTerm, conc, slope_c); });
  return s;
}

}  // namespace carbosound
