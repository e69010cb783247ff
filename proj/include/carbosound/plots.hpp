#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace carbosound {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // non-finite points are skipped
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool log_y{false};
  bool markers{true};
};

// Self-contained SVG document.
std::string svg_line_plot(const PlotSpec& spec);

// Renders the figure set from a report.json into out_dir (created if
// needed). Returns the written paths in a fixed order. Throws IoFailure,
// UnreadableFile, InvalidManifest (malformed report).
std::vector<std::filesystem::path> write_plots(const std::filesystem::path& report_json,
                                               const std::filesystem::path& out_dir);

}  // namespace carbosound
