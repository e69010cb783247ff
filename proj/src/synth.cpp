#include "carbosound/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <numeric>

#include <boost/math/tools/roots.hpp>

#include "carbosound/error.hpp"

namespace carbosound {

namespace {

constexpr double kPi = std::numbers::pi;

double lerp(double a, double b, double t) { return a + (b - a) * t; }

// Piecewise-linear in day through (0, v0), (28, v28), (120, v120).
double table_interp(const double* v, int n_points, int day) {
  static constexpr int kAnchors[3] = {0, 28, 120};
  if (day <= kAnchors[0]) return v[0];
  for (int i = 1; i < n_points; ++i) {
    if (day <= kAnchors[i]) {
      const double t = static_cast<double>(day - kAnchors[i - 1]) / (kAnchors[i] - kAnchors[i - 1]);
      return lerp(v[i - 1], v[i], t);
    }
  }
  return v[n_points - 1];
}

std::vector<double> render(const PulseSpec& spec, bool with_noise) {
  const double f3 = spec.third_f.value_or(3.0 * spec.carrier_f);
  const double inv2s2 = 1.0 / (2.0 * spec.sigma * spec.sigma);
  double sub_inv2s2 = 0.0;
  if (spec.sub) {
    const double s = std::sqrt(std::numbers::ln2) / (kPi * spec.sub->bandwidth);
    sub_inv2s2 = 1.0 / (2.0 * s * s);
  }
  std::vector<double> x(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double tau = static_cast<double>(i) * spec.dt - spec.delay;
    double env = std::exp(-tau * tau * inv2s2);
    if (spec.decay_mu && tau > 0.0) env = std::exp(-0.5 * *spec.decay_mu * tau);
    double v = spec.a1 * std::sin(2.0 * kPi * spec.carrier_f * tau);
    if (spec.a2 != 0.0) v += spec.a2 * std::sin(4.0 * kPi * spec.carrier_f * tau);
    if (spec.a3 != 0.0) v += spec.a3 * std::sin(2.0 * kPi * f3 * tau);
    v *= env;
    if (spec.sub) v += spec.sub->amplitude * std::exp(-tau * tau * sub_inv2s2) * std::sin(2.0 * kPi * spec.sub->freq * tau);
    x[i] = v;
  }
  if (with_noise && spec.noise_std > 0.0) {
    SplitMix64 rng(spec.seed);
    for (double& v : x) v += spec.noise_std * rng.normal();
  }
  return x;
}

double energy_of(const std::vector<double>& x, double dt, double z) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s * dt / z;
}

}  // namespace

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix64::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  return r * std::cos(2.0 * kPi * u2);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t p : parts) {
    SplitMix64 g(h ^ p);
    h = g.next();
  }
  return h;
}

Waveform synth_pulse(const PulseSpec& spec) {
  if (spec.n < 2) throw Error(ErrorCode::InvalidArgument, "n must be at least 2");
  if (!(spec.dt > 0.0) || !(spec.sigma > 0.0) || !(spec.carrier_f > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dt, sigma and carrier_f must be positive");
  }
  if (spec.noise_std < 0.0) throw Error(ErrorCode::InvalidArgument, "noise_std must be non-negative");
  if (spec.decay_mu && !(*spec.decay_mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "decay_mu must be positive");
  if (spec.sub && (!(spec.sub->freq > 0.0) || !(spec.sub->bandwidth > 0.0))) {
    throw Error(ErrorCode::InvalidArgument, "subharmonic frequency and bandwidth must be positive");
  }
  const double nyquist = 0.5 / spec.dt;
  double top = spec.carrier_f;
  if (spec.a2 != 0.0) top = std::max(top, 2.0 * spec.carrier_f);
  if (spec.a3 != 0.0) top = std::max(top, spec.third_f.value_or(3.0 * spec.carrier_f));
  if (!(top < nyquist)) {
    throw Error(ErrorCode::AliasedHarmonic, "component at " + std::to_string(top) + " Hz reaches Nyquist");
  }
  return Waveform(render(spec, true), spec.dt);
}

double gaussian_tone_energy(double amplitude, double sigma) {
  return amplitude * amplitude * sigma * std::sqrt(kPi) / 2.0;
}

double band_amplitude(double amplitude, double freq, double sigma, double dt, std::size_t n) {
  const double df = 1.0 / (static_cast<double>(n) * dt);
  const double mag0 = 0.5 * std::abs(amplitude) * sigma * std::sqrt(2.0 * kPi) / dt;
  auto psd = [&](long k) {
    const double d = static_cast<double>(k) * df - freq;
    const double m = mag0 * std::exp(-2.0 * kPi * kPi * sigma * sigma * d * d);
    return 2.0 * dt / static_cast<double>(n) * m * m;
  };
  const long k0 = std::lround(freq / df);
  const double half = 0.5 * psd(k0);
  const long k_max = static_cast<long>(n / 2);
  long l = k0;
  while (l > 1 && psd(l - 1) >= half) --l;
  long r = k0;
  while (r + 1 < k_max && psd(r + 1) >= half) ++r;
  double power = 0.0;
  for (long k = l; k <= r; ++k) power += psd(k) * df;
  return std::sqrt(power);
}

double third_amplitude_for_gamma(const PulseSpec& spec, double gamma) {
  const double f3 = spec.third_f.value_or(3.0 * spec.carrier_f);
  const double c1 = band_amplitude(spec.a1, spec.carrier_f, spec.sigma, spec.dt, spec.n);
  const double c3 = band_amplitude(1.0, f3, spec.sigma, spec.dt, spec.n);
  return gamma * c1 * c1 * c1 / c3;
}

double snap_to_bin(double f, double dt, std::size_t n) {
  const double df = 1.0 / (static_cast<double>(n) * dt);
  return std::round(f / df) * df;
}

double energy_span(const std::vector<double>& x, double dt, double lo, double hi) {
  std::vector<double> c(x.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * x[i];
    c[i] = acc;
  }
  auto crossing = [&](double level) {
    const double target = level * acc;
    std::size_t i = 0;
    while (c[i] < target) ++i;
    if (i == 0) return 0.0;
    const double frac = (target - c[i - 1]) / (c[i] - c[i - 1]);
    return (static_cast<double>(i - 1) + frac) * dt;
  };
  return crossing(hi) - crossing(lo);
}

PaperProfile PaperProfile::paper() {
  PaperProfile p;
  GroupProfile g04;
  g04.wc_ratio = 0.4;
  g04.energy_b = 0.3204;
  g04.phase_c = 0.53;
  g04.cv_delta_t = 0.3038;
  g04.loggamma_slope = -0.43;
  g04.loggamma_r = -0.9477;
  g04.fundamental_hz[0] = 420e3;
  g04.fundamental_hz[1] = 370e3;
  g04.fundamental_hz[2] = 210e3;
  g04.third_hz[0] = 1530e3;
  g04.third_hz[1] = 1510e3;
  g04.caco3_base = 0.8;
  g04.caco3_span = 3.5;

  GroupProfile g05;
  g05.wc_ratio = 0.5;
  g05.energy_b = 0.3480;
  g05.phase_c = 0.83;
  g05.cv_delta_t = 0.6623;
  g05.loggamma_slope = -0.10;
  g05.loggamma_r = -0.9508;
  g05.fundamental_hz[0] = 390e3;
  g05.fundamental_hz[1] = 360e3;
  g05.fundamental_hz[2] = 340e3;
  g05.third_hz[0] = 1560e3;
  g05.third_hz[1] = 1550e3;
  g05.caco3_base = 1.2;
  g05.caco3_span = 9.0;

  GroupProfile g06;
  g06.wc_ratio = 0.6;
  g06.energy_b = 0.3212;
  g06.phase_c = 2.03;
  g06.cv_delta_t = 0.9657;
  g06.loggamma_slope = -0.06;
  g06.loggamma_r = -0.9698;
  g06.fundamental_hz[0] = 340e3;
  g06.fundamental_hz[1] = 334e3;
  g06.fundamental_hz[2] = 320e3;
  g06.third_hz[0] = 1560e3;
  g06.third_hz[1] = 1530e3;
  g06.caco3_base = 1.5;
  g06.caco3_span = 14.0;

  p.groups = {g04, g05, g06};
  return p;
}

std::string specimen_id(const GroupProfile& group, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "wc%03d-%c", static_cast<int>(std::lround(group.wc_ratio * 100)), 'a' + index);
  return buf;
}

std::vector<DayPlan> plan_group(const PaperProfile& profile, const GroupProfile& group) {
  const auto& days = profile.days;
  const std::size_t nd = days.size();
  if (nd < 2) throw Error(ErrorCode::InvalidArgument, "profile needs at least two days");
  if (profile.last_third_day > profile.last_caco3_day) {
    throw Error(ErrorCode::InvalidArgument, "third-harmonic days must carry a concentration");
  }

  // Delta t grows linearly, dt0 (1 + k day); k is chosen so the sample CV of
  // the series equals the target.
  const double mean_d = std::accumulate(days.begin(), days.end(), 0.0) / static_cast<double>(nd);
  double ss = 0.0;
  for (int d : days) ss += (d - mean_d) * (d - mean_d);
  const double sd_d = std::sqrt(ss / static_cast<double>(nd - 1));
  const double denom = sd_d - group.cv_delta_t * mean_d;
  if (!(denom > 0.0)) throw Error(ErrorCode::InvalidArgument, "CV target unreachable with a linear spread");
  const double k_spread = group.cv_delta_t / denom;

  std::vector<DayPlan> plans(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    const int d = days[i];
    const double frac = static_cast<double>(i) / static_cast<double>(nd - 1);
    DayPlan& p = plans[i];
    p.day = d;
    if (d <= profile.last_caco3_day) {
      p.caco3_pct = group.caco3_base + group.caco3_span * (1.0 - std::exp(-profile.caco3_rate * d));
    }
    p.target_energy = profile.energy0 * std::exp(-group.energy_b * d);
    PulseSpec& s = p.pulse;
    s.dt = profile.dt;
    s.n = profile.n;
    s.sigma = profile.sigma0;
    s.carrier_f = snap_to_bin(table_interp(group.fundamental_hz, 3, d), s.dt, s.n);
    if (d <= profile.last_third_day) s.third_f = snap_to_bin(table_interp(group.third_hz, 2, d), s.dt, s.n);
    s.delay = profile.delay_inf + profile.delay_excess * std::exp(-group.phase_c * d);
    SubharmonicSpec sub;
    sub.freq = snap_to_bin(0.5 * s.carrier_f, s.dt, s.n);
    sub.amplitude = lerp(profile.sub_amp_first, profile.sub_amp_last, frac);  // relative for now
    sub.bandwidth = lerp(profile.sub_bw_first, profile.sub_bw_last, frac);
    s.sub = sub;
  }

  // log10(gamma) over third-harmonic days: exact line in CaCO3 with slope s
  // plus a residual orthogonal to [1, x], sized so Pearson r hits the target.
  std::vector<std::size_t> tidx;
  for (std::size_t i = 0; i < nd; ++i) {
    if (plans[i].pulse.third_f) tidx.push_back(i);
  }
  std::vector<double> lg(tidx.size(), 0.0);
  if (tidx.size() >= 3) {
    const std::size_t m = tidx.size();
    std::vector<double> x(m);
    for (std::size_t j = 0; j < m; ++j) x[j] = *plans[tidx[j]].caco3_pct;
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
    double sxx = 0.0;
    for (double v : x) sxx += (v - xm) * (v - xm);
    std::vector<double> e(m);
    for (std::size_t j = 0; j < m; ++j) e[j] = ((j % 2 == 0) ? 1.0 : -1.0) * (1.0 + 0.1 * static_cast<double>(j));
    const double em = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(m);
    for (double& v : e) v -= em;
    double ex = 0.0;
    for (std::size_t j = 0; j < m; ++j) ex += e[j] * (x[j] - xm);
    for (std::size_t j = 0; j < m; ++j) e[j] -= ex / sxx * (x[j] - xm);
    double ee = 0.0;
    for (double v : e) ee += v * v;
    const double r = group.loggamma_r;
    const double target_norm = std::abs(group.loggamma_slope) * std::sqrt(sxx * (1.0 / (r * r) - 1.0));
    for (std::size_t j = 0; j < m; ++j) {
      lg[j] = group.loggamma_slope * (x[j] - xm) + e[j] * target_norm / std::sqrt(ee);
    }
  }

  const double z = profile.impedance_ohm;
  // Pulse for a given envelope width; A1 solved for the target energy, A3
  // either a fixed fraction of A1 (day 0) or set from the designed gamma.
  auto build = [&](DayPlan& p, double sigma, double sub_rel, std::optional<double> third_ratio) {
    PulseSpec s = p.pulse;
    s.sigma = sigma;
    s.a1 = std::sqrt(p.target_energy * z / (s.sigma * std::sqrt(kPi) / 2.0));
    for (int it = 0; it < 200; ++it) {
      s.sub->amplitude = sub_rel * s.a1;
      if (s.third_f) s.a3 = third_ratio ? *third_ratio * s.a1 : third_amplitude_for_gamma(s, *p.gamma);
      const double e = energy_of(render(s, false), s.dt, z);
      const double scale = std::sqrt(p.target_energy / e);
      s.a1 *= scale;
      if (std::abs(scale - 1.0) < 1e-15) break;
    }
    s.sub->amplitude = sub_rel * s.a1;
    if (s.third_f) s.a3 = third_ratio ? *third_ratio * s.a1 : third_amplitude_for_gamma(s, *p.gamma);
    return s;
  };
  auto span_of = [&](const PulseSpec& s) { return energy_span(render(s, false), s.dt); };

  // Day 0 fixes the Delta t scale and the gamma offset.
  const double sub_rel0 = plans[0].pulse.sub->amplitude;
  std::optional<double> ratio0;
  if (plans[0].pulse.third_f) ratio0 = profile.third_ratio0;
  plans[0].pulse = build(plans[0], profile.sigma0, sub_rel0, ratio0);
  const double dt0 = span_of(plans[0].pulse);
  plans[0].target_delta_t = dt0;
  double lg_offset = 0.0;
  if (plans[0].pulse.third_f && !tidx.empty() && tidx[0] == 0) {
    const PulseSpec& s = plans[0].pulse;
    const double g0 = band_amplitude(s.a3, *s.third_f, s.sigma, s.dt, s.n) /
                      std::pow(band_amplitude(s.a1, s.carrier_f, s.sigma, s.dt, s.n), 3);
    plans[0].gamma = g0;
    lg_offset = std::log10(g0) - lg[0];
  }
  for (std::size_t j = 1; j < tidx.size(); ++j) plans[tidx[j]].gamma = std::pow(10.0, lg[j] + lg_offset);

  double sigma_prev = profile.sigma0;
  for (std::size_t i = 1; i < nd; ++i) {
    DayPlan& p = plans[i];
    const double sub_rel = p.pulse.sub->amplitude;
    p.target_delta_t = dt0 * (1.0 + k_spread * p.day);
    if (p.pulse.third_f && !p.gamma) throw Error(ErrorCode::InvalidArgument, "third harmonic without designed gamma");
    // Delta t grows with sigma; bracket from the previous day's width.
    auto resid = [&](double sg) { return span_of(build(p, sg, sub_rel, std::nullopt)) - p.target_delta_t; };
    const double guess = sigma_prev * p.target_delta_t / plans[i - 1].target_delta_t;
    std::uintmax_t max_iter = 100;
    const auto [lo, hi] = boost::math::tools::bracket_and_solve_root(
        resid, guess, 1.1, true, boost::math::tools::eps_tolerance<double>(50), max_iter);
    const double fl = std::abs(resid(lo));
    const double fh = std::abs(resid(hi));
    const double sg = fl <= fh ? lo : hi;
    if (max_iter >= 100) throw Error(ErrorCode::InvalidArgument, "no envelope width reaches the Delta t target");
    p.pulse = build(p, sg, sub_rel, std::nullopt);
    sigma_prev = sg;
  }
  for (auto& p : plans) p.pulse.noise_std = profile.noise_rel * p.pulse.a1;
  return plans;
}

DatasetManifest synth_dataset(const PaperProfile& profile, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "waveforms", ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + (out_dir / "waveforms").string() + ": " + ec.message());

  DatasetManifest m;
  m.nominal_f0_hz = profile.nominal_f0_hz;
  m.impedance_ohm = profile.impedance_ohm;
  m.base_dir = out_dir;
  for (std::size_t g = 0; g < profile.groups.size(); ++g) {
    const GroupProfile& group = profile.groups[g];
    const auto plans = plan_group(profile, group);
    for (int sp = 0; sp < profile.specimens_per_group; ++sp) {
      const std::string id = specimen_id(group, sp);
      for (const DayPlan& plan : plans) {
        SpecimenRecord rec;
        rec.id = id;
        rec.wc_ratio = group.wc_ratio;
        rec.day = plan.day;
        rec.caco3_pct = plan.caco3_pct;
        for (int shot = 0; shot < profile.shots_per_day; ++shot) {
          PulseSpec spec = plan.pulse;
          spec.seed = mix_seed({profile.seed, g, static_cast<std::uint64_t>(sp), static_cast<std::uint64_t>(plan.day),
                                static_cast<std::uint64_t>(shot)});
          char name[64];
          std::snprintf(name, sizeof name, "%s_d%03d_s%d.csw", id.c_str(), plan.day, shot);
          const fs::path rel = fs::path("waveforms") / name;
          save_waveform_binary(synth_pulse(spec), out_dir / rel);
          rec.waveform_paths.push_back(rel);
        }
        m.specimens.push_back(std::move(rec));
      }
    }
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

}  // namespace carbosound
