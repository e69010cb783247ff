#pragma once

#include <span>
#include <vector>

#include "carbosound/regression.hpp"
#include "carbosound/waveform.hpp"

namespace carbosound {

// Running sum of squared samples normalised by the total; non-decreasing and
// ending at exactly 1.
struct CumulativeEnergyCurve {
  std::vector<double> times;
  std::vector<double> values;
};

// Sum of squared samples (V^2 * samples).
double signal_energy(const Waveform& w);

// Rectangle-rule (dt / Z) * sum(x^2), in joules for a load of Z ohms.
double scaled_energy(const Waveform& w, double impedance_ohm);

CumulativeEnergyCurve cumulative_energy(const Waveform& w);

// Level above which the cumulative curve is considered to have started.
inline constexpr double kOnsetLevel = 0.01;

struct MuFit {
  double mu{0.0};
  double r_squared{0.0};
  double t_onset{0.0};
  FitResult fit;
};

// Fits 1 - exp(-mu (t - t_onset)) to the curve from its onset on.
MuFit fit_mu(const CumulativeEnergyCurve& curve);

// Time between the lo and hi crossings of the curve, each located by linear
// interpolation between samples.
double delta_t(const CumulativeEnergyCurve& curve, double lo = 0.05, double hi = 0.95);

// Sample standard deviation (n - 1) over the mean.
double coefficient_of_variation(std::span<const double> values);

}  // namespace carbosound
