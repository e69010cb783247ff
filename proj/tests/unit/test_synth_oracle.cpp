#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "carbosound/energy.hpp"
#include "carbosound/error.hpp"
#include "carbosound/harmonics.hpp"
#include "carbosound/manifest.hpp"
#include "carbosound/spectral.hpp"
#include "carbosound/synth.hpp"
#include "support.hpp"

using namespace carbosound;
using testsupport::TempDir;

namespace {

constexpr double kPi = std::numbers::pi;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("synth_oracle") {
  TEST_CASE("splitmix64 reference outputs") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFull);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ull);
    CHECK(rng.next() == 0x06C45D188009454Full);
  }

  TEST_CASE("uniform and normal moments") {
    SplitMix64 rng(42);
    double su = 0.0;
    double sn = 0.0;
    double sn2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      su += u;
    }
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      sn += z;
      sn2 += z * z;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("seed mixing is order dependent") {
    CHECK(mix_seed({1, 2, 3}) == mix_seed({1, 2, 3}));
    CHECK(mix_seed({1, 2, 3}) != mix_seed({3, 2, 1}));
    CHECK(mix_seed({1, 2}) != mix_seed({1, 2, 0}));
  }

  TEST_CASE("same spec and seed give identical waveforms") {
    PulseSpec s;
    s.a3 = 0.01;
    s.noise_std = 0.05;
    s.seed = 99;
    s.sub = SubharmonicSpec{2.5e5, 0.1, 30e3};
    CHECK(synth_pulse(s) == synth_pulse(s));
    PulseSpec t = s;
    t.seed = 100;
    CHECK_FALSE(synth_pulse(s) == synth_pulse(t));
  }

  TEST_CASE("aliased or invalid specs are rejected") {
    PulseSpec s;
    s.carrier_f = 2e6;
    s.a3 = 0.1;
    CHECK_THROWS_AS(synth_pulse(s), Error);
    PulseSpec z;
    z.sigma = 0.0;
    CHECK_THROWS_AS(synth_pulse(z), Error);
  }

  TEST_CASE("clean tone has one peak at the carrier") {
    PulseSpec s;
    s.carrier_f = 4.1e5;
    const PowerSpectrum ps = power_spectral_density(synth_pulse(s));
    const auto peaks = detect_peaks(ps);
    REQUIRE(peaks.size() == 1);
    CHECK(std::abs(peaks[0].freq - s.carrier_f) <= ps.df);
  }

  TEST_CASE("gamma round trip") {
    PulseSpec s;
    s.carrier_f = snap_to_bin(4e5, s.dt, s.n);
    s.a1 = 1.0;
    s.third_f = snap_to_bin(1.5e6, s.dt, s.n);
    s.a3 = third_amplitude_for_gamma(s, 1e-3);
    const PowerSpectrum ps = power_spectral_density(synth_pulse(s));
    const auto hs = classify_harmonics(detect_peaks(ps, 1e-14), 5e5);
    REQUIRE(hs.third.has_value());
    CHECK(gamma(hs.fundamental.amplitude, hs.third->amplitude) == doctest::Approx(1e-3).epsilon(0.03));
  }

  TEST_CASE("band amplitude matches the measured peak") {
    PulseSpec s;
    s.carrier_f = snap_to_bin(3.7e5, s.dt, s.n);
    for (double sigma : {2e-6, 4e-6}) {
      s.sigma = sigma;
      const PowerSpectrum ps = power_spectral_density(synth_pulse(s));
      const auto peaks = detect_peaks(ps);
      REQUIRE(peaks.size() == 1);
      CHECK(peaks[0].amplitude == doctest::Approx(band_amplitude(1.0, s.carrier_f, sigma, s.dt, s.n)).epsilon(1e-6));
    }
  }

  TEST_CASE("gaussian energy closed form") {
    PulseSpec s;
    s.a1 = 2.5;
    s.sigma = 4e-6;
    CHECK(testsupport::rel_err(scaled_energy(synth_pulse(s), 1.0), gaussian_tone_energy(2.5, 4e-6)) < 5e-3);
    CHECK(gaussian_tone_energy(2.5, 4e-6) == doctest::Approx(2.5 * 2.5 * 4e-6 * std::sqrt(kPi) / 2.0));
  }

  TEST_CASE("phase is -2 pi f delay - pi/2") {
    PulseSpec s;
    s.delay = 70e-6;
    s.a3 = 0.2;
    const Spectrum sp = dft(synth_pulse(s));
    for (std::size_t k = 0; k < sp.coeffs.size(); ++k) {
      const double f = sp.freqs[k];
      if (f < 3e5 || f > 7e5) continue;
      const double d = std::remainder(std::arg(sp.coeffs[k]) + 2.0 * kPi * f * s.delay + kPi / 2.0, 2.0 * kPi);
      CHECK(std::abs(d) < 1e-6);
    }
  }

  TEST_CASE("energy span agrees with the energy module") {
    PulseSpec s;
    s.decay_mu = 3e5;
    s.noise_std = 1e-3;
    s.seed = 4;
    const Waveform w = synth_pulse(s);
    std::vector<double> x(w.samples().begin(), w.samples().end());
    CHECK(energy_span(x, w.dt()) == doctest::Approx(delta_t(cumulative_energy(w))).epsilon(1e-12));
  }

  TEST_CASE("snap to bin") {
    const double df = 1.0 / (8192 * 1e-7);
    CHECK(snap_to_bin(5e5, 1e-7, 8192) == doctest::Approx(std::round(5e5 / df) * df));
  }

  TEST_CASE("paper profile plans") {
    const PaperProfile p = PaperProfile::paper();
    CHECK(p.days == std::vector<int>{0, 1, 3, 5, 7, 14, 28, 56, 120});
    REQUIRE(p.groups.size() == 3);
    const double df = 1.0 / (static_cast<double>(p.n) * p.dt);
    for (const auto& g : p.groups) {
      CAPTURE(g.wc_ratio);
      const auto plans = plan_group(p, g);
      REQUIRE(plans.size() == p.days.size());
      for (std::size_t i = 0; i < plans.size(); ++i) {
        CHECK(std::isfinite(plans[i].target_energy));
        CHECK(std::isfinite(plans[i].target_delta_t));
        if (i > 0) {
          CHECK(plans[i].target_energy < plans[i - 1].target_energy);
          REQUIRE(plans[i].pulse.sub.has_value());
          CHECK(plans[i].pulse.sub->bandwidth >= plans[i - 1].pulse.sub->bandwidth);
        }
        CHECK(plans[i].pulse.third_f.has_value() == (plans[i].day <= p.last_third_day));
        CHECK(plans[i].caco3_pct.has_value() == (plans[i].day <= p.last_caco3_day));
      }
      CHECK(std::abs(plans[0].pulse.carrier_f - g.fundamental_hz[0]) <= df);
      CHECK(std::abs(plans.back().pulse.carrier_f - g.fundamental_hz[2]) <= df);
    }
    CHECK(std::abs(plan_group(p, p.groups[2])[0].pulse.carrier_f - 340e3) <= df);
  }

  TEST_CASE("dataset files are deterministic") {
    PaperProfile p = PaperProfile::paper();
    p.specimens_per_group = 1;
    p.shots_per_day = 1;
    p.groups.resize(1);
    TempDir a;
    TempDir b;
    const DatasetManifest ma = synth_dataset(p, a.path());
    synth_dataset(p, b.path());
    CHECK(ma.specimens.size() == p.days.size());
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    for (const auto& rec : ma.specimens) {
      for (const auto& w : rec.waveform_paths) CHECK(slurp(a.path() / w) == slurp(b.path() / w));
    }
    DatasetManifest reloaded = load_manifest(a / "manifest.json");
    CHECK(validate_manifest(reloaded).ok());
    CHECK(specimen_id(p.groups[0], 0) == "wc040-a");
  }
}
