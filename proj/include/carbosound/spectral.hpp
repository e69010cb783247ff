#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carbosound/waveform.hpp"

namespace carbosound {

enum class Window { Rectangular, Hann };

Window parse_window(std::string_view name);  // throws UnknownWindow
std::string_view to_string(Window w);

// One-sided DFT: bins 0..floor(M/2) of an M-point transform, where M is the
// sample count or, with padding, the next power of two.
struct Spectrum {
  std::vector<double> freqs;
  std::vector<std::complex<double>> coeffs;
  double df{0.0};
  std::size_t n{0};        // samples in the source waveform
  std::size_t n_fft{0};    // transform length (== n unless padded)
  double dt{0.0};
};

struct PowerSpectrum {
  std::vector<double> freqs;
  std::vector<double> psd;  // V^2/Hz
  double df{0.0};
  Window window{Window::Rectangular};
};

// Unwrapped phase over the bins that pass the amplitude floor. `bins` holds
// the DFT bin index of every retained point so gaps stay visible.
struct PhaseCurve {
  std::vector<double> freqs;
  std::vector<double> phase;
  std::vector<std::size_t> bins;
};

// Relative magnitude below which a bin's phase is discarded.
inline constexpr double kPhaseAmplitudeFloor = 1e-4;

Spectrum dft(const Waveform& w, bool pad_pow2 = false);

// Raw transform of a real sequence, all M bins. Exposed for tests and the
// synthesizer.
std::vector<std::complex<double>> fft_real(std::span<const double> x);
std::vector<double> ifft_real(std::span<const std::complex<double>> full_spectrum);

// Single-segment periodogram. psd[k] = |X_k|^2 * dt / (N * U) with U the mean
// squared window value; interior one-sided bins are doubled, so sum(psd) * df
// is the mean-square value of the (windowed, power-normalised) signal.
PowerSpectrum power_spectral_density(const Waveform& w, Window window = Window::Rectangular,
                                     bool pad_pow2 = false);

std::vector<double> unwrap_phase(std::span<const double> wrapped);

PhaseCurve phase_spectrum(const Spectrum& s);

void write_spectrum_csv(const Spectrum& s, const std::filesystem::path& path);
void write_psd_csv(const PowerSpectrum& ps, const std::filesystem::path& path);

}  // namespace carbosound
