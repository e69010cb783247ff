#pragma once

#include <optional>
#include <span>
#include <vector>

#include "carbosound/error.hpp"
#include "carbosound/regression.hpp"
#include "carbosound/spectral.hpp"

namespace carbosound {

struct Peak {
  double freq{0.0};       // Hz
  double amplitude{0.0};  // V, sqrt of the power inside the -3 dB band
  double bandwidth{0.0};  // Hz, interpolated -3 dB width, at least df
  double prominence{0.0}; // relative to the spectrum's global maximum
  double height{0.0};     // V^2/Hz at the peak bin
};

struct HarmonicSet {
  Peak fundamental;
  std::optional<Peak> second;
  std::optional<Peak> third;
  std::optional<Peak> subharmonic;
};

struct NonlinearityIndex {
  int day{0};
  std::optional<double> caco3_pct;
  std::optional<double> beta;
  std::optional<double> gamma;
};

inline constexpr double kDefaultMinProminence = 0.01;
// A peak must also stand this far above the median PSD level. Keeps the
// largest bin of a pure-noise spectrum, whose topographic prominence is
// always close to the global maximum, from being reported.
inline constexpr double kMinPeakToMedian = 100.0;

// Search windows, as multiples of the transducer's nominal frequency for the
// fundamental and the higher harmonics, and of the detected fundamental for
// the subharmonic.
inline constexpr double kFundamentalBandLo = 0.3;
inline constexpr double kFundamentalBandHi = 1.2;
inline constexpr double kSecondBandLo = 1.5;
inline constexpr double kSecondBandHi = 2.5;
inline constexpr double kThirdBandLo = 2.5;
inline constexpr double kThirdBandHi = 3.5;
inline constexpr double kSubharmonicLimit = 0.6;

// Interior local maxima with topographic prominence >= min_prominence * max
// and height >= kMinPeakToMedian * median, sorted by frequency.
std::vector<Peak> detect_peaks(const PowerSpectrum& ps, double min_prominence = kDefaultMinProminence);

// Throws NoFundamental when nothing lies in the fundamental window. Ties go to
// the larger amplitude, then the lower frequency.
HarmonicSet classify_harmonics(std::span<const Peak> peaks, double f0_nominal_hz);

// 8 A2 / (A1^2 k^2 x)
double beta_full(double a1, double a2, double k, double x);
// A2 / A1^2
double beta(double a1, double a2);
// A3 / A1^3
double gamma(double a1, double a3);

// beta/gamma for one analysed day; absent harmonics give absent parameters.
NonlinearityIndex nonlinearity_index(const HarmonicSet& hs, int day, std::optional<double> caco3_pct);

struct HarmonicDayRecord {
  int day{0};
  HarmonicSet harmonics;
  std::optional<double> caco3_pct;
};

struct ExponentialTrend {
  double amplitude{0.0};  // A in A exp(b x)
  double rate{0.0};       // b, signed
  double r_squared{0.0};
  FitResult fit;
};

struct LogLinearTrend {
  double slope{0.0};
  double intercept{0.0};
  double pearson_r{0.0};
  double p_value{0.0};
  std::size_t n{0};
  FitResult fit;
};

struct NonlinearitySeries {
  std::vector<NonlinearityIndex> indices;
  Fallible<ExponentialTrend> gamma_vs_day;
  Fallible<LogLinearTrend> loggamma_vs_caco3;
};

inline constexpr std::size_t kMinGammaDays = 4;

// Throws UnsortedDays, and TooFewPoints when fewer than four days carry a
// gamma value.
NonlinearitySeries nonlinearity_series(std::span<const HarmonicDayRecord> records);

// Exponential trend of gamma against day and the log10(gamma)-vs-CaCO3 line,
// from already computed indices (used for group-mean series as well).
Fallible<ExponentialTrend> gamma_day_trend(std::span<const int> days, std::span<const double> gammas);
Fallible<LogLinearTrend> loggamma_caco3_trend(std::span<const double> caco3, std::span<const double> gammas);

}  // namespace carbosound
