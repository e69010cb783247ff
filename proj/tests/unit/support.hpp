#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

namespace testsupport {

// O(N^2) transform straight from the definition.
inline std::vector<std::complex<double>> brute_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce k*j mod n first so the angle stays small and exact.
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("carbosound-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace testsupport

#include "carbosound/regression.hpp"
#include "carbosound/synth.hpp"

namespace testsupport {

// One in-range parameter set per model family on a grid that resolves it.
struct FamilyFixture {
  carbosound::ModelFamily family;
  std::vector<double> params;
  double x_max;
  std::size_t n;
  double noiseless_tol;
};

inline std::vector<FamilyFixture> family_fixtures() {
  using carbosound::ModelFamily;
  return {
      {ModelFamily::Linear, {-0.43, 2.0}, 10.0, 41, 1e-6},
      {ModelFamily::ExpDecay, {5.0, 0.3204}, 20.0, 41, 1e-6},
      {ModelFamily::ExpOffset, {2.0, 1.5, 0.83}, 10.0, 41, 1e-6},
      {ModelFamily::TwoTerm, {1.0, -3.85, 0.5, -0.3}, 5.0, 41, 1e-3},
      {ModelFamily::Saturation, {2.0}, 3.0, 41, 1e-6},
  };
}

inline void fixture_data(const FamilyFixture& f, double noise_rel, std::uint64_t seed, std::vector<double>& x,
                         std::vector<double>& y) {
  carbosound::SplitMix64 rng(seed);
  x.clear();
  y.clear();
  for (std::size_t i = 0; i < f.n; ++i) {
    const double xi = f.x_max * static_cast<double>(i) / static_cast<double>(f.n - 1);
    const double yi = carbosound::evaluate(f.family, f.params, xi);
    x.push_back(xi);
    // Proportional noise keeps every decade of an exponential informative.
    y.push_back(noise_rel > 0.0 ? yi * (1.0 + noise_rel * rng.normal()) : yi);
  }
}

inline double worst_param_error(const std::vector<double>& got, const std::vector<double>& want) {
  double worst = 0.0;
  for (std::size_t j = 0; j < want.size(); ++j) worst = std::max(worst, rel_err(got[j], want[j]));
  return worst;
}

}  // namespace testsupport
