#include "carbosound/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "carbosound/error.hpp"

namespace carbosound {

namespace {

double crossing_time(const CumulativeEnergyCurve& c, double level) {
  const auto it = std::lower_bound(c.values.begin(), c.values.end(), level);
  const auto i = static_cast<std::size_t>(it - c.values.begin());
  if (i == 0) return c.times.front();
  if (i >= c.values.size()) return c.times.back();
  const double v0 = c.values[i - 1];
  const double v1 = c.values[i];
  if (v1 == v0) return c.times[i];
  return c.times[i - 1] + (level - v0) / (v1 - v0) * (c.times[i] - c.times[i - 1]);
}

}  // namespace

double signal_energy(const Waveform& w) {
  double e = 0.0;
  for (double s : w.samples()) e += s * s;
  return e;
}

double scaled_energy(const Waveform& w, double impedance_ohm) {
  if (!(impedance_ohm > 0.0) || !std::isfinite(impedance_ohm)) {
    throw Error(ErrorCode::NonPositiveImpedance, "impedance must be positive");
  }
  return w.dt() * signal_energy(w) / impedance_ohm;
}

CumulativeEnergyCurve cumulative_energy(const Waveform& w) {
  const double total = signal_energy(w);
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroEnergySignal, "signal energy is zero");
  CumulativeEnergyCurve c;
  c.times.resize(w.size());
  c.values.resize(w.size());
  double run = 0.0;
  const auto s = w.samples();
  for (std::size_t i = 0; i < s.size(); ++i) {
    run += s[i] * s[i];
    c.times[i] = w.time_at(i);
    c.values[i] = std::min(run / total, 1.0);
  }
  c.values.back() = 1.0;
  return c;
}

MuFit fit_mu(const CumulativeEnergyCurve& curve) {
  if (curve.values.size() < 8 || curve.times.size() != curve.values.size()) {
    throw Error(ErrorCode::TooFewPoints, "cumulative curve needs at least 8 points");
  }
  const auto first = std::find_if(curve.values.begin(), curve.values.end(), [](double v) { return v > kOnsetLevel; });
  const auto start = static_cast<std::size_t>(first - curve.values.begin());
  MuFit out;
  if (start >= curve.values.size()) throw Error(ErrorCode::TooFewPoints, "cumulative curve never passes onset");
  out.t_onset = curve.times[start];
  // Rescaling by the level reached at onset keeps the model exact for a curve
  // that is itself exponential (1 - F is memoryless).
  const double f_on = curve.values[start];
  const double span = 1.0 - f_on;
  std::vector<double> x;
  std::vector<double> y;
  x.reserve(curve.values.size() - start);
  y.reserve(curve.values.size() - start);
  for (std::size_t i = start; i < curve.values.size(); ++i) {
    x.push_back(curve.times[i] - out.t_onset);
    y.push_back(span > 0.0 ? (curve.values[i] - f_on) / span : 1.0);
  }
  if (x.size() < 2) throw Error(ErrorCode::TooFewPoints, "cumulative curve has no points after onset");
  out.fit = fit(ModelFamily::Saturation, x, y);
  out.mu = out.fit.params[0];
  out.r_squared = out.fit.r_squared;
  if (!(out.mu > 0.0)) throw Error(ErrorCode::FitDiverged, "fitted mu is not positive");
  return out;
}

double delta_t(const CumulativeEnergyCurve& curve, double lo, double hi) {
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) throw Error(ErrorCode::InvalidArgument, "need 0 < lo < hi < 1");
  if (curve.values.empty()) throw Error(ErrorCode::InvalidArgument, "empty cumulative curve");
  return crossing_time(curve, hi) - crossing_time(curve, lo);
}

double coefficient_of_variation(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorCode::TooFewValues, "need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (mean == 0.0) throw Error(ErrorCode::ZeroMean, "mean is zero");
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0)) / mean;
}

}  // namespace carbosound
