#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace carbosound {

// Specimen height used when a waveform carries no propagation distance.
inline constexpr double kDefaultDistanceM = 0.057;

// Uniformly sampled voltage record. Immutable; the constructor enforces
// dt > 0, at least one sample and finite samples.
class Waveform {
 public:
  Waveform(std::vector<double> samples, double dt, double t0 = 0.0,
           std::optional<double> distance = std::nullopt);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double dt() const noexcept { return dt_; }
  double t0() const noexcept { return t0_; }
  std::optional<double> distance() const noexcept { return distance_; }
  double duration() const noexcept {
    return static_cast<double>(samples_.size() - 1) * dt_;
  }
  double time_at(std::size_t i) const noexcept {
    return t0_ + static_cast<double>(i) * dt_;
  }

  Waveform scaled(double a) const;

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  std::vector<double> samples_;
  double dt_;
  double t0_;
  std::optional<double> distance_;
};

// Reads either the binary CSW1 format (detected by its magic) or a
// `time_s,voltage_v` CSV. A single-column CSV is accepted when dt_hint is
// given. dt for CSV input is the median timestamp gap; any gap further than
// 1e-6 relative from it is rejected.
Waveform load_waveform(const std::filesystem::path& path,
                       std::optional<double> dt_hint = std::nullopt);

// CSW1: "CSW1", u64 count, f64 dt, f64 t0, f64 distance (NaN when absent),
// then count f64 samples, all little-endian.
void save_waveform_binary(const Waveform& w, const std::filesystem::path& path);
void save_waveform_csv(const Waveform& w, const std::filesystem::path& path);

// Pointwise mean; every input must share dt, t0 and length.
Waveform average_waveforms(std::span<const Waveform> waveforms);

}  // namespace carbosound
