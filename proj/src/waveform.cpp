#include "carbosound/waveform.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "carbosound/error.hpp"

namespace carbosound {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'S', 'W', '1'};
constexpr double kUniformityTol = 1e-6;
constexpr double kGridTol = 1e-9;

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), b.size());
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::span<const char> b) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
  return v;
}

double get_f64(std::span<const char> b) { return std::bit_cast<double>(get_u64(b)); }

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::UnreadableFile, path.string());
  return ss.str();
}

Waveform parse_binary(const std::string& bytes, const std::filesystem::path& path) {
  constexpr std::size_t header = 4 + 8 * 4;
  if (bytes.size() < header) throw Error(ErrorCode::UnreadableFile, path.string() + ": truncated header");
  std::span<const char> b(bytes.data(), bytes.size());
  const std::uint64_t count = get_u64(b.subspan(4, 8));
  const double dt = get_f64(b.subspan(12, 8));
  const double t0 = get_f64(b.subspan(20, 8));
  const double dist = get_f64(b.subspan(28, 8));
  if (count > (bytes.size() - header) / 8 || bytes.size() != header + count * 8) {
    throw Error(ErrorCode::UnreadableFile, path.string() + ": sample count does not match file size");
  }
  if (count < 2) throw Error(ErrorCode::EmptySignal, path.string());
  std::vector<double> samples(count);
  for (std::size_t i = 0; i < count; ++i) samples[i] = get_f64(b.subspan(header + 8 * i, 8));
  std::optional<double> distance;
  if (!std::isnan(dist)) distance = dist;
  try {
    return Waveform(std::move(samples), dt, t0, distance);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.context());
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

Waveform parse_csv(const std::string& text, const std::filesystem::path& path,
                   std::optional<double> dt_hint) {
  std::vector<double> times;
  std::vector<double> volts;
  bool single_column = false;
  std::size_t line_no = 0;
  std::string_view rest(text);
  if (rest.starts_with("\xEF\xBB\xBF")) rest.remove_prefix(3);
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    std::string_view line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    double a = 0.0;
    double v = 0.0;
    if (comma == std::string_view::npos) {
      if (!parse_double(line, a)) {
        if (times.empty() && volts.empty()) continue;  // header
        throw Error(ErrorCode::UnreadableFile, path.string() + ": bad value on line " + std::to_string(line_no));
      }
      if (!times.empty()) throw Error(ErrorCode::UnreadableFile, path.string() + ": mixed column counts");
      single_column = true;
      volts.push_back(a);
      continue;
    }
    const bool ok = parse_double(line.substr(0, comma), a) && parse_double(line.substr(comma + 1), v);
    if (!ok) {
      if (times.empty() && volts.empty()) continue;  // header
      throw Error(ErrorCode::UnreadableFile, path.string() + ": bad row on line " + std::to_string(line_no));
    }
    if (single_column) throw Error(ErrorCode::UnreadableFile, path.string() + ": mixed column counts");
    times.push_back(a);
    volts.push_back(v);
  }
  if (volts.size() < 2) throw Error(ErrorCode::EmptySignal, path.string() + ": fewer than 2 samples");

  if (single_column) {
    if (!dt_hint) throw Error(ErrorCode::UnreadableFile, path.string() + ": single-column CSV needs a dt hint");
    return Waveform(std::move(volts), *dt_hint, 0.0);
  }

  std::vector<double> gaps(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) gaps[i] = times[i + 1] - times[i];
  std::vector<double> sorted = gaps;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  double dt = *mid;
  if (sorted.size() % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), mid);
    dt = 0.5 * (dt + lower);
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::NonUniformSampling, path.string() + ": non-increasing timestamps");
  }
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (std::abs(gaps[i] - dt) > kUniformityTol * dt) {
      throw Error(ErrorCode::NonUniformSampling,
                  path.string() + ": gap " + std::to_string(i) + " deviates from median dt");
    }
  }
  return Waveform(std::move(volts), dt, times.front());
}

}  // namespace

Waveform::Waveform(std::vector<double> samples, double dt, double t0,
                   std::optional<double> distance)
    : samples_(std::move(samples)), dt_(dt), t0_(t0), distance_(distance) {
  if (samples_.empty()) throw Error(ErrorCode::EmptySignal, "waveform has no samples");
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw Error(ErrorCode::InvalidWaveform, "dt must be positive and finite");
  if (!std::isfinite(t0_)) throw Error(ErrorCode::InvalidWaveform, "t0 must be finite");
  if (distance_ && (!std::isfinite(*distance_) || *distance_ <= 0.0)) {
    throw Error(ErrorCode::InvalidWaveform, "distance must be positive and finite");
  }
  for (double s : samples_) {
    if (!std::isfinite(s)) throw Error(ErrorCode::InvalidWaveform, "non-finite sample");
  }
}

Waveform Waveform::scaled(double a) const {
  std::vector<double> out(samples_.begin(), samples_.end());
  for (double& s : out) s *= a;
  return Waveform(std::move(out), dt_, t0_, distance_);
}

Waveform load_waveform(const std::filesystem::path& path, std::optional<double> dt_hint) {
  const std::string bytes = read_all(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic.data(), 4) == 0) {
    return parse_binary(bytes, path);
  }
  return parse_csv(bytes, path, dt_hint);
}

void save_waveform_binary(const Waveform& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, w.size());
  put_f64(out, w.dt());
  put_f64(out, w.t0());
  put_f64(out, w.distance().value_or(std::numeric_limits<double>::quiet_NaN()));
  for (double s : w.samples()) put_f64(out, s);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void save_waveform_csv(const Waveform& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out << "time_s,voltage_v\n";
  char buf[64];
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int n = std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", w.time_at(i), w.samples()[i]);
    out.write(buf, n);
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Waveform average_waveforms(std::span<const Waveform> waveforms) {
  if (waveforms.empty()) throw Error(ErrorCode::EmptySignal, "no waveforms to average");
  const Waveform& ref = waveforms.front();
  std::vector<double> acc(ref.size(), 0.0);
  for (const Waveform& w : waveforms) {
    const bool same = w.size() == ref.size() &&
                      std::abs(w.dt() - ref.dt()) <= kGridTol * ref.dt() &&
                      std::abs(w.t0() - ref.t0()) <= kGridTol * ref.dt();
    if (!same) throw Error(ErrorCode::MismatchedGrids, "waveforms differ in dt, t0 or length");
    const auto s = w.samples();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s[i];
  }
  const double inv = 1.0 / static_cast<double>(waveforms.size());
  for (double& v : acc) v *= inv;
  return Waveform(std::move(acc), ref.dt(), ref.t0(), ref.distance());
}

}  // namespace carbosound
