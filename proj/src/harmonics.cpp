#include "carbosound/harmonics.hpp"

#include <algorithm>
#include <cmath>

namespace carbosound {

namespace {

Peak measure_peak(const PowerSpectrum& ps, std::size_t k, double global_max, double prominence) {
  const auto& p = ps.psd;
  const auto& f = ps.freqs;
  const double half = 0.5 * p[k];
  std::size_t l = k;
  while (l > 0 && p[l - 1] >= half) --l;
  std::size_t r = k;
  while (r + 1 < p.size() && p[r + 1] >= half) ++r;

  double power = 0.0;
  for (std::size_t i = l; i <= r; ++i) power += p[i] * ps.df;

  double f_left = f[l];
  if (l > 0 && p[l] != p[l - 1]) f_left = f[l - 1] + (half - p[l - 1]) / (p[l] - p[l - 1]) * ps.df;
  double f_right = f[r];
  if (r + 1 < p.size() && p[r] != p[r + 1]) f_right = f[r] + (p[r] - half) / (p[r] - p[r + 1]) * ps.df;

  Peak pk;
  pk.freq = f[k];
  pk.amplitude = std::sqrt(power);
  pk.bandwidth = std::max(ps.df, f_right - f_left);
  pk.prominence = prominence / global_max;
  pk.height = p[k];
  return pk;
}

const Peak* strongest_in(std::span<const Peak> sorted, double lo, double hi, bool hi_inclusive = true) {
  const Peak* best = nullptr;
  for (const Peak& p : sorted) {
    const bool inside = p.freq >= lo && (hi_inclusive ? p.freq <= hi : p.freq < hi);
    if (inside && (!best || p.amplitude > best->amplitude)) best = &p;
  }
  return best;
}

}  // namespace

std::vector<Peak> detect_peaks(const PowerSpectrum& ps, double min_prominence) {
  if (!(min_prominence > 0.0 && min_prominence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "min_prominence must lie in (0, 1]");
  }
  const auto& p = ps.psd;
  std::vector<Peak> out;
  if (p.size() < 3) return out;
  const double global_max = *std::max_element(p.begin(), p.end());
  if (!(global_max > 0.0)) return out;
  std::vector<double> sorted = p;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];

  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    if (!(p[k] > p[k - 1] && p[k] >= p[k + 1])) continue;
    if (p[k] < kMinPeakToMedian * median) continue;
    double left_min = p[k];
    for (std::size_t j = k; j-- > 0;) {
      if (p[j] > p[k]) break;
      left_min = std::min(left_min, p[j]);
    }
    double right_min = p[k];
    for (std::size_t j = k + 1; j < p.size(); ++j) {
      if (p[j] > p[k]) break;
      right_min = std::min(right_min, p[j]);
    }
    const double prominence = p[k] - std::max(left_min, right_min);
    if (prominence >= min_prominence * global_max) out.push_back(measure_peak(ps, k, global_max, prominence));
  }
  return out;
}

HarmonicSet classify_harmonics(std::span<const Peak> peaks, double f0_nominal_hz) {
  if (!(f0_nominal_hz > 0.0)) throw Error(ErrorCode::NonPositiveInput, "nominal frequency must be positive");
  std::vector<Peak> sorted(peaks.begin(), peaks.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const Peak& a, const Peak& b) {
    if (a.freq != b.freq) return a.freq < b.freq;
    return a.amplitude > b.amplitude;
  });
  const Peak* fund = strongest_in(sorted, kFundamentalBandLo * f0_nominal_hz, kFundamentalBandHi * f0_nominal_hz);
  if (!fund) throw Error(ErrorCode::NoFundamental, "no peak within the fundamental window");
  HarmonicSet hs;
  hs.fundamental = *fund;
  if (const Peak* p = strongest_in(sorted, kSecondBandLo * f0_nominal_hz, kSecondBandHi * f0_nominal_hz, false)) {
    hs.second = *p;
  }
  if (const Peak* p = strongest_in(sorted, kThirdBandLo * f0_nominal_hz, kThirdBandHi * f0_nominal_hz)) {
    hs.third = *p;
  }
  if (const Peak* p = strongest_in(sorted, 0.0, kSubharmonicLimit * fund->freq, false)) hs.subharmonic = *p;
  return hs;
}

double beta_full(double a1, double a2, double k, double x) {
  if (!(a1 > 0.0) || !(k > 0.0) || !(x > 0.0)) {
    throw Error(ErrorCode::NonPositiveInput, "A1, k and x must be positive");
  }
  return 8.0 * a2 / (a1 * a1 * k * k * x);
}

double beta(double a1, double a2) {
  if (!(a1 > 0.0)) throw Error(ErrorCode::NonPositiveFundamental, "A1 must be positive");
  if (a2 < 0.0) throw Error(ErrorCode::NonPositiveInput, "A2 must be non-negative");
  return a2 / (a1 * a1);
}

double gamma(double a1, double a3) {
  if (!(a1 > 0.0)) throw Error(ErrorCode::NonPositiveFundamental, "A1 must be positive");
  if (a3 < 0.0) throw Error(ErrorCode::NonPositiveInput, "A3 must be non-negative");
  return a3 / (a1 * a1 * a1);
}

NonlinearityIndex nonlinearity_index(const HarmonicSet& hs, int day, std::optional<double> caco3_pct) {
  NonlinearityIndex idx;
  idx.day = day;
  idx.caco3_pct = caco3_pct;
  if (hs.second) idx.beta = beta(hs.fundamental.amplitude, hs.second->amplitude);
  if (hs.third) idx.gamma = gamma(hs.fundamental.amplitude, hs.third->amplitude);
  return idx;
}

Fallible<ExponentialTrend> gamma_day_trend(std::span<const int> days, std::span<const double> gammas) {
  return attempt([&] {
    std::vector<double> x(days.begin(), days.end());
    ExponentialTrend t;
    t.fit = fit(ModelFamily::ExpDecay, x, gammas);
    t.amplitude = t.fit.params[0];
    t.rate = -t.fit.params[1];
    t.r_squared = t.fit.r_squared;
    return t;
  });
}

Fallible<LogLinearTrend> loggamma_caco3_trend(std::span<const double> caco3, std::span<const double> gammas) {
  return attempt([&] {
    if (caco3.size() < 3) throw Error(ErrorCode::TooFewPoints, "need three days with gamma and CaCO3");
    std::vector<double> lg(gammas.size());
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      if (!(gammas[i] > 0.0)) throw Error(ErrorCode::NonPositiveInput, "gamma must be positive for log10");
      lg[i] = std::log10(gammas[i]);
    }
    LogLinearTrend t;
    t.fit = linear_fit(caco3, lg);
    t.slope = t.fit.params[0];
    t.intercept = t.fit.params[1];
    t.pearson_r = t.fit.pearson_r;
    t.n = caco3.size();
    t.p_value = correlation_p_value(t.pearson_r, t.n);
    return t;
  });
}

NonlinearitySeries nonlinearity_series(std::span<const HarmonicDayRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].day <= records[i - 1].day) throw Error(ErrorCode::UnsortedDays, "days must be strictly increasing");
  }
  NonlinearitySeries s;
  std::vector<int> days;
  std::vector<double> gammas;
  std::vector<double> conc;
  std::vector<double> gammas_c;
  for (const auto& r : records) {
    s.indices.push_back(nonlinearity_index(r.harmonics, r.day, r.caco3_pct));
    const auto& idx = s.indices.back();
    if (!idx.gamma) continue;
    days.push_back(r.day);
    gammas.push_back(*idx.gamma);
    if (r.caco3_pct && std::isfinite(*r.caco3_pct)) {
      conc.push_back(*r.caco3_pct);
      gammas_c.push_back(*idx.gamma);
    }
  }
  if (days.size() < kMinGammaDays) {
    throw Error(ErrorCode::TooFewPoints, std::to_string(days.size()) + " days with gamma present");
  }
  s.gamma_vs_day = gamma_day_trend(days, gammas);
  s.loggamma_vs_caco3 = loggamma_caco3_trend(conc, gammas_c);
  return s;
}

}  // namespace carbosound
