#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "carbosound/manifest.hpp"
#include "carbosound/waveform.hpp"

namespace carbosound {

// SplitMix64 (Steele, Lea, Flood 2014): state += 0x9E3779B97F4A7C15, then the
// 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB finaliser. Uniforms take the top 53
// bits; normals come from Box-Muller, cosine branch first, sine branch cached.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double normal();   // N(0, 1)

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

// Order-dependent mix of several integers into one seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

struct SubharmonicSpec {
  double freq{0.0};       // Hz
  double amplitude{0.0};  // V
  double bandwidth{0.0};  // Hz, -3 dB width of its PSD peak
};

struct PulseSpec {
  double carrier_f{5.0e5};  // Hz
  double delay{50e-6};      // s, envelope centre
  double sigma{3e-6};       // s, Gaussian envelope exp(-t^2 / (2 sigma^2))
  double a1{1.0};
  double a2{0.0};
  double a3{0.0};
  std::optional<double> third_f;  // defaults to 3 * carrier_f
  std::optional<SubharmonicSpec> sub;
  // When set, the envelope after the centre is exp(-mu t / 2), so the energy
  // tail decays as exp(-mu t).
  std::optional<double> decay_mu;
  double noise_std{0.0};
  std::uint64_t seed{0};
  double dt{1e-7};
  std::size_t n{8192};
};

inline constexpr double kDefaultSynthDt = 1e-7;
inline constexpr std::size_t kDefaultSynthN = 8192;

// x(t) = env(t - delay) [A1 sin(2 pi f (t - delay)) + A2 sin(4 pi f (t - delay))
//        + A3 sin(2 pi f3 (t - delay))] + sub + noise.
// Every component is odd about the envelope centre, so the phase spectrum is
// exactly -2 pi f delay - pi/2. Throws AliasedHarmonic, InvalidArgument.
Waveform synth_pulse(const PulseSpec& spec);

// A^2 sigma sqrt(pi) / 2: energy of a Gaussian-windowed tone.
double gaussian_tone_energy(double amplitude, double sigma);

// Square root of the periodogram power inside the -3 dB band of one
// Gaussian-windowed tone, evaluated from its closed-form spectrum on the
// (n, dt) bin grid. Matches what peak detection measures on a clean signal.
double band_amplitude(double amplitude, double freq, double sigma, double dt, std::size_t n);

// A3 such that band(A3) / band(A1)^3 equals gamma for this pulse.
double third_amplitude_for_gamma(const PulseSpec& spec, double gamma);

// Frequency rounded to the nearest bin of an (n, dt) grid.
double snap_to_bin(double f, double dt, std::size_t n);

// 5%-95% cumulative-energy span of a sample sequence (independent of the
// energy module; used to calibrate the profile).
double energy_span(const std::vector<double>& x, double dt, double lo = 0.05, double hi = 0.95);

struct GroupProfile {
  double wc_ratio{0.0};
  double energy_b{0.0};        // 1/day, total energy A exp(-b day)
  double phase_c{0.0};         // 1/day, phase slope A - B exp(-c day)
  double cv_delta_t{0.0};      // coefficient of variation of delta t over days
  double loggamma_slope{0.0};  // d log10(gamma) / d CaCO3
  double loggamma_r{0.0};      // Pearson r of log10(gamma) vs CaCO3
  double fundamental_hz[3]{};  // days 0, 28, 120
  double third_hz[2]{};        // days 0, 28
  double caco3_base{0.0};      // % wt at day 0
  double caco3_span{0.0};      // saturation gain
};

struct PaperProfile {
  std::vector<int> days{0, 1, 3, 5, 7, 14, 28, 56, 120};
  std::vector<GroupProfile> groups;
  int specimens_per_group{2};
  int shots_per_day{4};
  double dt{kDefaultSynthDt};
  std::size_t n{16384};
  double nominal_f0_hz{5.0e5};
  double impedance_ohm{1.0};
  double delay_inf{200e-6};    // s, long-term travel time
  double delay_excess{2e-6};   // s, extra travel time at day 0
  double sigma0{3e-6};         // s, day-0 envelope width
  double energy0{2.5e-6};      // J, day-0 total energy
  double third_ratio0{0.2};    // A3 / A1 at day 0
  int last_third_day{28};      // third harmonic injected up to this day
  double caco3_rate{0.1};      // 1/day
  int last_caco3_day{56};      // later days carry no concentration
  double sub_amp_first{0.05};  // subharmonic amplitude / A1, first day
  double sub_amp_last{0.2};
  double sub_bw_first{22e3};   // Hz, subharmonic -3 dB width, first day
  double sub_bw_last{53e3};
  double noise_rel{1e-11};      // noise std / A1
  std::uint64_t seed{20240611};

  static PaperProfile paper();
};

// Everything the generator needs for one group/day; shared by all specimens
// of the group.
struct DayPlan {
  int day{0};
  std::optional<double> caco3_pct;
  std::optional<double> gamma;  // designed band-amplitude gamma
  double target_energy{0.0};
  double target_delta_t{0.0};
  PulseSpec pulse;  // noise_std set, seed left at 0
};

std::vector<DayPlan> plan_group(const PaperProfile& profile, const GroupProfile& group);

std::string specimen_id(const GroupProfile& group, int index);

// Writes CSW1 waveform files under out_dir/waveforms and out_dir/manifest.json.
// Throws IoFailure.
DatasetManifest synth_dataset(const PaperProfile& profile, const std::filesystem::path& out_dir);

}  // namespace carbosound
