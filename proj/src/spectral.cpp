#include "carbosound/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "carbosound/error.hpp"

namespace carbosound {

namespace {

std::vector<double> window_values(Window window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (window == Window::Hann) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
  }
  return w;
}

std::size_t transform_length(std::size_t n, bool pad_pow2) {
  return pad_pow2 ? std::bit_ceil(n) : n;
}

}  // namespace

Window parse_window(std::string_view name) {
  if (name == "rectangular" || name == "rect" || name == "boxcar") return Window::Rectangular;
  if (name == "hann" || name == "hanning") return Window::Hann;
  throw Error(ErrorCode::UnknownWindow, std::string(name));
}

std::string_view to_string(Window w) {
  return w == Window::Hann ? "hann" : "rectangular";
}

std::vector<std::complex<double>> fft_real(std::span<const double> x) {
  // Eigen's kissfft backend handles arbitrary lengths; a fresh plan per call
  // keeps this reentrant.
  Eigen::FFT<double> fft;
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return out;
}

std::vector<double> ifft_real(std::span<const std::complex<double>> full_spectrum) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(full_spectrum.begin(), full_spectrum.end());
  std::vector<std::complex<double>> out;
  fft.inv(out, in);
  std::vector<double> re(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) re[i] = out[i].real();
  return re;
}

Spectrum dft(const Waveform& w, bool pad_pow2) {
  const std::size_t n = w.size();
  const std::size_t m = transform_length(n, pad_pow2);
  std::vector<double> x(m, 0.0);
  std::copy(w.samples().begin(), w.samples().end(), x.begin());
  auto full = fft_real(x);

  Spectrum s;
  s.n = n;
  s.n_fft = m;
  s.dt = w.dt();
  s.df = 1.0 / (static_cast<double>(m) * w.dt());
  const std::size_t bins = m / 2 + 1;
  s.freqs.resize(bins);
  s.coeffs.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(bins));
  for (std::size_t k = 0; k < bins; ++k) s.freqs[k] = static_cast<double>(k) * s.df;
  return s;
}

PowerSpectrum power_spectral_density(const Waveform& w, Window window, bool pad_pow2) {
  const std::size_t n = w.size();
  const std::size_t m = transform_length(n, pad_pow2);
  const auto win = window_values(window, n);
  double u = 0.0;
  for (double v : win) u += v * v;
  u /= static_cast<double>(n);

  std::vector<double> x(m, 0.0);
  const auto samples = w.samples();
  for (std::size_t i = 0; i < n; ++i) x[i] = samples[i] * win[i];
  const auto full = fft_real(x);

  PowerSpectrum ps;
  ps.window = window;
  ps.df = 1.0 / (static_cast<double>(m) * w.dt());
  const std::size_t bins = m / 2 + 1;
  ps.freqs.resize(bins);
  ps.psd.resize(bins);
  const double scale = w.dt() / (static_cast<double>(n) * u);
  for (std::size_t k = 0; k < bins; ++k) {
    ps.freqs[k] = static_cast<double>(k) * ps.df;
    double p = std::norm(full[k]) * scale;
    const bool nyquist = (m % 2 == 0) && k == m / 2;
    if (k != 0 && !nyquist) p *= 2.0;
    ps.psd[k] = p;
  }
  return ps;
}

std::vector<double> unwrap_phase(std::span<const double> wrapped) {
  std::vector<double> out(wrapped.size());
  if (wrapped.empty()) return out;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  out[0] = wrapped[0];
  for (std::size_t i = 1; i < wrapped.size(); ++i) {
    double d = std::remainder(wrapped[i] - wrapped[i - 1], two_pi);
    if (d <= -std::numbers::pi) d += two_pi;
    out[i] = out[i - 1] + d;
  }
  return out;
}

PhaseCurve phase_spectrum(const Spectrum& s) {
  double peak = 0.0;
  for (const auto& c : s.coeffs) peak = std::max(peak, std::abs(c));
  const double floor = kPhaseAmplitudeFloor * peak;

  PhaseCurve pc;
  std::vector<double> wrapped;
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
    if (peak > 0.0 && std::abs(s.coeffs[k]) >= floor) {
      pc.freqs.push_back(s.freqs[k]);
      pc.bins.push_back(k);
      wrapped.push_back(std::arg(s.coeffs[k]));
    }
  }
  if (pc.freqs.empty()) throw Error(ErrorCode::AllBelowFloor, "no spectral bin above the amplitude floor");
  pc.phase = unwrap_phase(wrapped);
  return pc;
}

void write_spectrum_csv(const Spectrum& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out << "freq_hz,re,im\n";
  char buf[96];
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
    const int len = std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", s.freqs[k], s.coeffs[k].real(),
                                  s.coeffs[k].imag());
    out.write(buf, len);
  }
}

void write_psd_csv(const PowerSpectrum& ps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out << "freq_hz,psd\n";
  char buf[64];
  for (std::size_t k = 0; k < ps.psd.size(); ++k) {
    const int len = std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", ps.freqs[k], ps.psd[k]);
    out.write(buf, len);
  }
}

}  // namespace carbosound
