#include <doctest.h>

#include <cmath>

#include "carbosound/energy.hpp"
#include "carbosound/error.hpp"
#include "carbosound/spectral.hpp"
#include "carbosound/synth.hpp"
#include "support.hpp"

using namespace carbosound;

namespace {

CumulativeEnergyCurve saturation_curve(double mu, double t_max, std::size_t n) {
  CumulativeEnergyCurve c;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t_max * static_cast<double>(i) / static_cast<double>(n - 1);
    c.times.push_back(t);
    c.values.push_back(1.0 - std::exp(-mu * t));
  }
  return c;
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (auto& s : v) s = rng.normal();
  return v;
}

}  // namespace

TEST_SUITE("energy_metrics") {
  TEST_CASE("signal energy") {
    CHECK(signal_energy(Waveform({0, 0, 0}, 1.0)) == 0.0);
    CHECK(signal_energy(Waveform({1, 2, 2}, 1.0)) == 9.0);
  }

  TEST_CASE("signal energy equals the spectral integral") {
    const auto x = random_signal(300, 3);
    const Waveform w(x, 1e-6);
    const PowerSpectrum ps = power_spectral_density(w);
    double integral = 0.0;
    for (double p : ps.psd) integral += p * ps.df;
    CHECK(testsupport::rel_err(signal_energy(w), integral * static_cast<double>(x.size())) < 1e-9);
  }

  TEST_CASE("scaled energy") {
    const Waveform w({1, 1}, 0.5);
    CHECK(scaled_energy(w, 1.0) == 1.0);
    CHECK(scaled_energy(w, 2.0) == 0.5);
    CHECK_THROWS_AS(scaled_energy(w, 0.0), Error);
    CHECK_THROWS_AS(scaled_energy(w, -1.0), Error);

    const Waveform r(random_signal(77, 4), 3e-7);
    CHECK(scaled_energy(r, 4.0) == r.dt() * signal_energy(r) / 4.0);
  }

  TEST_CASE("energy is amplitude quadratic") {
    const Waveform w(random_signal(64, 5), 1e-6);
    for (double a : {0.5, 2.0, -3.0}) {
      CHECK(testsupport::rel_err(scaled_energy(w.scaled(a), 1.0), a * a * scaled_energy(w, 1.0)) < 1e-14);
    }
  }

  TEST_CASE("gaussian burst energy matches the closed form") {
    PulseSpec spec;
    spec.n = 8192;
    for (double sigma : {2e-6, 3e-6, 6e-6}) {
      spec.sigma = sigma;
      spec.a1 = 0.7;
      const Waveform w = synth_pulse(spec);
      const double analytic = 0.7 * 0.7 * sigma * std::sqrt(std::numbers::pi) / 2.0;
      CHECK(testsupport::rel_err(scaled_energy(w, 1.0), analytic) < 1e-3);
      CHECK(testsupport::rel_err(scaled_energy(w, 50.0), analytic / 50.0) < 1e-3);
    }
  }

  TEST_CASE("cumulative curve") {
    const auto c = cumulative_energy(Waveform({0, 1, 0}, 1.0));
    CHECK(c.values == std::vector<double>{0, 1, 1});
    CHECK(c.times == std::vector<double>{0, 1, 2});

    const std::size_t n = 10;
    const auto k = cumulative_energy(Waveform(std::vector<double>(n, -2.0), 1.0));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(k.values[i] == doctest::Approx(static_cast<double>(i + 1) / n).epsilon(1e-15));
    }

    CHECK_THROWS_AS(cumulative_energy(Waveform({0, 0}, 1.0)), Error);
  }

  TEST_CASE("cumulative curve is monotone and ends at one") {
    const auto c = cumulative_energy(Waveform(random_signal(500, 6), 1.0));
    CHECK(c.values.back() == 1.0);
    for (std::size_t i = 1; i < c.values.size(); ++i) CHECK(c.values[i] >= c.values[i - 1]);
  }

  TEST_CASE("exponential envelope gives a saturation-shaped curve") {
    const double mu = 2e5;
    const double dt = 1e-7;
    std::vector<double> x(4096);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(i) * dt;
      x[i] = std::exp(-mu * t / 2.0) * std::sin(2.0 * std::numbers::pi * 5e5 * t + 0.3);
    }
    const MuFit f = fit_mu(cumulative_energy(Waveform(x, dt)));
    CHECK(f.r_squared > 0.99);
    CHECK(f.mu == doctest::Approx(mu).epsilon(0.05));
  }

  TEST_CASE("mu from noiseless and noisy saturation curves") {
    const auto clean = saturation_curve(2.0, 10.0, 2001);
    CHECK(std::abs(fit_mu(clean).mu - 2.0) < 1e-6);

    auto noisy = clean;
    SplitMix64 rng(2024);
    for (auto& v : noisy.values) v += 0.01 * rng.normal();
    CHECK(fit_mu(noisy).mu == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("mu recovery holds for any rate in the family") {
    for (double mu : {0.25, 1.0, 3.7, 12.0}) {
      const auto c = saturation_curve(mu, 15.0 / mu, 1500);
      CHECK(std::abs(fit_mu(c).mu - mu) <= 1e-6 * mu);
    }
  }

  TEST_CASE("delta t on analytic curves") {
    for (double mu : {0.5, 1.0, 2.0}) {
      const auto c = saturation_curve(mu, 12.0 / mu, 200001);
      CHECK(std::abs(delta_t(c) - std::log(19.0) / mu) < 1e-4);
    }
    CHECK(std::abs(delta_t(saturation_curve(1.0, 12.0, 200001)) - 2.944439) < 1e-4);
    CHECK(std::abs(delta_t(saturation_curve(2.0, 6.0, 200001)) - 1.472219) < 1e-4);

    CumulativeEnergyCurve ramp;
    const double T = 7.0;
    for (int i = 0; i <= 70; ++i) {
      ramp.times.push_back(T * i / 70.0);
      ramp.values.push_back(i / 70.0);
    }
    CHECK(delta_t(ramp) == doctest::Approx(0.9 * T).epsilon(1e-12));
    CHECK_THROWS_AS(delta_t(ramp, 0.9, 0.1), Error);
  }

  TEST_CASE("delta t is invariant to amplitude scaling") {
    PulseSpec spec;
    spec.n = 4096;
    spec.noise_std = 0.01;
    spec.seed = 8;
    const Waveform w = synth_pulse(spec);
    const double ref = delta_t(cumulative_energy(w));
    for (double a : {1e-6, 0.3, 7.0, 1e6}) {
      CHECK(testsupport::rel_err(delta_t(cumulative_energy(w.scaled(a))), ref) < 1e-9);
    }
  }

  TEST_CASE("coefficient of variation") {
    const std::vector<double> constant{3, 3, 3, 3};
    CHECK(coefficient_of_variation(constant) == 0.0);
    const std::vector<double> pair{1, 3};
    CHECK(coefficient_of_variation(pair) == doctest::Approx(0.70711).epsilon(1e-5));
    const std::vector<double> one{1};
    CHECK_THROWS_AS(coefficient_of_variation(one), Error);
    const std::vector<double> zero_mean{-1, 1};
    CHECK_THROWS_AS(coefficient_of_variation(zero_mean), Error);
  }
}
