#include "carbosound/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "carbosound/error.hpp"
#include "carbosound/pipeline.hpp"

namespace carbosound {

namespace {

using Json = nlohmann::json;

constexpr const char* kColors[] = {"#1f4fd1", "#d12a1f", "#1f9d3a", "#c77c02", "#7a3fb0", "#138c8c", "#555555"};
constexpr double kW = 640.0;
constexpr double kH = 420.0;
constexpr double kLeft = 78.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 56.0;

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string g4(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

std::string px(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::vector<double> json_numbers(const Json& a) {
  std::vector<double> v;
  if (!a.is_array()) return v;
  for (const auto& e : a) v.push_back(e.is_number() ? e.get<double>() : std::numeric_limits<double>::quiet_NaN());
  return v;
}

std::string wc_label(double wc) {
  char b[32];
  std::snprintf(b, sizeof b, "w/c = %.2g", wc);
  return b;
}

}  // namespace

std::string svg_line_plot(const PlotSpec& spec) {
  auto ty = [&](double y) { return spec.log_y ? (y > 0.0 ? std::log10(y) : std::numeric_limits<double>::quiet_NaN()) : y; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double y = ty(s.y[i]);
      if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0.0;
    x1 = 1.0;
    y0 = 0.0;
    y1 = 1.0;
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
    << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(spec.title)
    << "</text>\n";
  o << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(pw) << "\" height=\"" << px(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0;
    const double yv = y0 + (y1 - y0) * i / 5.0;
    o << "<line x1=\"" << px(sx(xv)) << "\" y1=\"" << px(kTop + ph) << "\" x2=\"" << px(sx(xv)) << "\" y2=\""
      << px(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(sx(xv)) << "\" y=\"" << px(kTop + ph + 18) << "\" text-anchor=\"middle\">" << g4(xv)
      << "</text>\n";
    o << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(sy(yv)) << "\" x2=\"" << px(kLeft) << "\" y2=\""
      << px(sy(yv)) << "\" stroke=\"black\"/>\n";
    const std::string label = spec.log_y ? "1e" + g4(yv) : g4(yv);
    o << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(sy(yv) + 4) << "\" text-anchor=\"end\">" << label
      << "</text>\n";
  }
  o << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"" << px(kH - 14) << "\" text-anchor=\"middle\">"
    << esc(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(16 " << px(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << esc(spec.log_y ? spec.y_label + " (log)" : spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string pts;
    std::string dots;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double y = ty(s.y[i]);
      if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
      pts += px(sx(s.x[i])) + "," + px(sy(y)) + " ";
      if (spec.markers) {
        dots += "<circle cx=\"" + px(sx(s.x[i])) + "\" cy=\"" + px(sy(y)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
    }
    if (!pts.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
    }
    o << dots;
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << px(kW - kRight + 12) << "\" y1=\"" << px(ly - 4) << "\" x2=\"" << px(kW - kRight + 32)
      << "\" y2=\"" << px(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << px(kW - kRight + 38) << "\" y=\"" << px(ly) << "\">" << esc(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::filesystem::path> write_plots(const std::filesystem::path& report_json,
                                               const std::filesystem::path& out_dir) {
  std::ifstream in(report_json);
  if (!in) throw Error(ErrorCode::UnreadableFile, report_json.string());
  Json rep;
  try {
    rep = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, report_json.string() + ": " + e.what());
  }
  if (!rep.contains("groups") || !rep.contains("specimens")) {
    throw Error(ErrorCode::InvalidManifest, report_json.string() + ": not a report (missing groups/specimens)");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string());

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const PlotSpec& spec) {
    const auto path = out_dir / name;
    write_text_file(svg_line_plot(spec), path);
    written.push_back(path);
  };

  // Cumulative energy curves per group (first specimen), one line per day.
  for (const auto& g : rep["groups"]) {
    const double wc = g.value("wc_ratio", 0.0);
    if (!g.contains("specimens") || g["specimens"].empty()) continue;
    const std::string first = g["specimens"][0].get<std::string>();
    for (const auto& s : rep["specimens"]) {
      if (s.value("id", std::string()) != first) continue;
      PlotSpec p;
      p.title = "Normalized cumulative energy, " + wc_label(wc) + " (" + first + ")";
      p.x_label = "time (us)";
      p.y_label = "normalized cumulative energy";
      p.markers = false;
      for (const auto& d : s["days"]) {
        if (!d.contains("cumulative") || d["cumulative"].is_null()) continue;
        PlotSeries ps;
        ps.label = "day " + std::to_string(d.value("day", 0));
        ps.x = json_numbers(d["cumulative"]["times_s"]);
        for (double& t : ps.x) t *= 1e6;
        ps.y = json_numbers(d["cumulative"]["values"]);
        p.series.push_back(std::move(ps));
      }
      char name[64];
      std::snprintf(name, sizeof name, "cumulative_energy_wc%03d.svg", static_cast<int>(std::lround(wc * 100)));
      emit(name, p);
    }
  }

  struct Fig {
    const char* file;
    const char* title;
    const char* x_key;
    const char* y_key;
    const char* x_label;
    const char* y_label;
    bool log_y;
    bool log10_values;
  };
  static constexpr Fig kFigs[] = {
      {"energy_vs_day.svg", "Total signal energy vs carbonation day", "days", "total_j", "carbonation day",
       "energy (J)", true, false},
      {"energy_vs_caco3.svg", "Total signal energy vs CaCO3", "caco3_pct", "total_j", "CaCO3 (% wt)", "energy (J)",
       true, false},
      {"delta_t_vs_caco3.svg", "Duration (5%-95% energy) vs CaCO3", "caco3_pct", "delta_t_s", "CaCO3 (% wt)",
       "delta t (s)", false, false},
      {"mu_vs_day.svg", "Cumulative-energy rate mu vs carbonation day", "days", "mu", "carbonation day", "mu (1/s)",
       false, false},
      {"phase_slope_vs_day.svg", "Phase slope vs carbonation day", "days", "phase_slope_rad_per_hz",
       "carbonation day", "slope (rad/Hz)", false, false},
      {"phase_slope_vs_caco3.svg", "Phase slope vs CaCO3", "caco3_pct", "phase_slope_rad_per_hz", "CaCO3 (% wt)",
       "slope (rad/Hz)", false, false},
      {"gamma_vs_day.svg", "Non-linearity parameter vs carbonation day", "days", "gamma", "carbonation day", "gamma",
       true, false},
      {"loggamma_vs_caco3.svg", "log10(gamma) vs CaCO3", "caco3_pct", "gamma", "CaCO3 (% wt)", "log10 gamma", false,
       true},
  };
  for (const Fig& f : kFigs) {
    PlotSpec p;
    p.title = f.title;
    p.x_label = f.x_label;
    p.y_label = f.y_label;
    p.log_y = f.log_y;
    for (const auto& g : rep["groups"]) {
      const auto& s = g["series"];
      PlotSeries ps;
      ps.label = wc_label(g.value("wc_ratio", 0.0));
      ps.x = json_numbers(s[f.x_key]);
      ps.y = json_numbers(s[f.y_key]);
      if (f.log10_values) {
        for (double& v : ps.y) v = v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
      }
      // Concentration axes are plotted in increasing order.
      std::vector<std::size_t> idx(std::min(ps.x.size(), ps.y.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const bool fa = std::isfinite(ps.x[a]);
        const bool fb = std::isfinite(ps.x[b]);
        if (fa != fb) return fa;
        return fa && ps.x[a] < ps.x[b];
      });
      PlotSeries sorted;
      sorted.label = ps.label;
      for (std::size_t i : idx) {
        sorted.x.push_back(ps.x[i]);
        sorted.y.push_back(ps.y[i]);
      }
      p.series.push_back(std::move(sorted));
    }
    emit(f.file, p);
  }
  return written;
}

}  // namespace carbosound
