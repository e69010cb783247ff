#include "carbosound/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "carbosound/energy.hpp"
#include "carbosound/pipeline.hpp"
#include "carbosound/plots.hpp"
#include "carbosound/regression.hpp"
#include "carbosound/synth.hpp"

namespace carbosound {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": not a number list: " + s);
    }
  }
  return v;
}

// x,y pairs; blank lines, '#' comments and a non-numeric header are skipped.
void read_xy(const std::filesystem::path& path, std::vector<double>& x, std::vector<double>& y) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::UnreadableFile, path.string() + ": expected x,y on line " + std::to_string(line_no));
    char* end = nullptr;
    const std::string xs = line.substr(0, comma);
    const std::string ys = line.substr(comma + 1);
    const double xv = std::strtod(xs.c_str(), &end);
    const bool x_ok = end != xs.c_str() && *end == '\0';
    const double yv = std::strtod(ys.c_str(), &end);
    const bool y_ok = end != ys.c_str() && *end == '\0';
    if (!x_ok || !y_ok) {
      if (x.empty() && line_no == 1) continue;  // header
      throw Error(ErrorCode::UnreadableFile, path.string() + ": bad value on line " + std::to_string(line_no));
    }
    x.push_back(xv);
    y.push_back(yv);
  }
}

struct CommonFlags {
  std::string window{"rectangular"};
  std::string band;
  double min_prominence{kDefaultMinProminence};
  std::optional<double> impedance;
  bool exclude_outliers{false};
  unsigned workers{1};
};

void add_analysis_flags(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--window", f.window, "rectangular or hann")->capture_default_str();
  sub->add_option("--band", f.band, "phase band override LO,HI in Hz");
  sub->add_option("--min-prominence", f.min_prominence, "peak prominence threshold, fraction of the PSD maximum")
      ->capture_default_str();
  sub->add_option("--impedance", f.impedance, "impedance in ohm (overrides the manifest)");
}

AnalysisSettings to_settings(const CommonFlags& f) {
  AnalysisSettings s;
  try {
    s.window = parse_window(f.window);
  } catch (const Error& e) {
    throw UsageError("--window: " + e.context());
  }
  if (!f.band.empty()) {
    const auto v = parse_list(f.band, "--band");
    if (v.size() != 2) throw UsageError("--band needs LO,HI");
    s.band = FrequencyBand{v[0], v[1]};
  }
  s.min_prominence = f.min_prominence;
  s.impedance_ohm = f.impedance;
  s.exclude_outliers = f.exclude_outliers;
  s.workers = f.workers;
  try {
    validate_settings(s);
  } catch (const Error& e) {
    throw UsageError(e.context());
  }
  return s;
}

void print_error(std::ostream& err, const std::string& code, const std::string& context) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["context"] = context;
  err << j.dump() << '\n';
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CARBOSOUND_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw UsageError(std::string("CARBOSOUND_SEED is not an unsigned integer: ") + env);
    return v;
  }
  return fallback;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ultrasonic carbonation indices: energy, phase slope and harmonic non-linearity."};
  app.name("carbosound");
  app.require_subcommand(1, 1);

  CommonFlags analyze_flags;
  std::string analyze_file;
  std::optional<double> analyze_dt;
  double analyze_f0 = kDefaultNominalF0Hz;
  auto* analyze = app.add_subcommand("analyze", "Indices of a single waveform file, JSON to stdout");
  analyze->add_option("file", analyze_file, "waveform (CSV or CSW1 binary)")->required();
  analyze->add_option("--dt", analyze_dt, "sample interval for single-column CSV");
  analyze->add_option("--nominal-f0", analyze_f0, "transducer nominal frequency in Hz")->capture_default_str();
  add_analysis_flags(analyze, analyze_flags);

  CommonFlags batch_flags;
  std::string batch_manifest;
  std::string batch_out;
  bool batch_plots = false;
  auto* batch = app.add_subcommand("batch", "Analyse a manifest into report.json, report.csv and optional plots");
  batch->add_option("manifest", batch_manifest, "manifest JSON")->required();
  batch->add_option("-o,--out", batch_out, "output directory")->required();
  add_analysis_flags(batch, batch_flags);
  batch->add_flag("--exclude-outliers", batch_flags.exclude_outliers, "refit phase-vs-day without flagged outliers");
  batch->add_option("--workers", batch_flags.workers, "parallel workers")->capture_default_str();
  batch->add_flag("--plots", batch_plots, "write SVG figures to OUT/plots");

  std::string fit_family;
  std::string fit_file;
  std::string fit_init;
  std::size_t fit_multistart = 0;
  std::uint64_t fit_seed = 0;
  auto* fitc = app.add_subcommand("fit", "Fit a model family to x,y CSV data, FitResult JSON to stdout");
  fitc->add_option("--family", fit_family, "linear, exp_decay, exp_offset, two_term or saturation")->required();
  fitc->add_option("data", fit_file, "CSV with x,y columns")->required();
  fitc->add_option("--init", fit_init, "initial parameters P1,P2,...");
  fitc->add_option("--multistart", fit_multistart, "extra seeded random starts")->capture_default_str();
  fitc->add_option("--seed", fit_seed, "multistart seed")->capture_default_str();

  std::string synth_profile;
  std::string synth_out;
  std::optional<std::uint64_t> synth_seed;
  int synth_specimens = 0;
  int synth_shots = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (waveforms + manifest.json)");
  synth->add_option("--profile", synth_profile, "dataset profile (paper)")->required();
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "noise seed (default: CARBOSOUND_SEED or built-in)");
  synth->add_option("--specimens", synth_specimens, "specimens per w/c group");
  synth->add_option("--shots", synth_shots, "waveforms averaged per specimen-day");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Regenerate SVG figures from DIR/report.json into DIR/plots");
  report->add_option("dir", report_dir, "batch output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*analyze) {
      const AnalysisSettings s = to_settings(analyze_flags);
      if (!(analyze_f0 > 0.0)) throw UsageError("--nominal-f0 must be positive");
      if (analyze_dt && !(*analyze_dt > 0.0)) throw UsageError("--dt must be positive");
      const Waveform w = load_waveform(analyze_file, analyze_dt);
      if (signal_energy(w) == 0.0) throw Error(ErrorCode::ZeroEnergySignal, analyze_file + ": all samples are zero");
      const DayBundle b = analyze_waveform(w, analyze_f0, s.impedance_ohm.value_or(kDefaultImpedanceOhm), s);
      out << day_to_json(b);
    } else if (*batch) {
      const AnalysisSettings s = to_settings(batch_flags);
      const DatasetManifest m = load_manifest(batch_manifest);
      const CarbonationReport rep = build_report(m, s);
      const std::filesystem::path dir(batch_out);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
      write_text_file(report_to_json(rep), dir / "report.json");
      write_report_csv(rep, dir / "report.csv");
      for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
      out << (dir / "report.json").string() << '\n' << (dir / "report.csv").string() << '\n';
      if (batch_plots) {
        for (const auto& p : write_plots(dir / "report.json", dir / "plots")) out << p.string() << '\n';
      }
    } else if (*fitc) {
      ModelFamily fam;
      try {
        fam = parse_family(fit_family);
      } catch (const Error& e) {
        throw UsageError("--family: " + e.context());
      }
      std::optional<std::vector<double>> init;
      if (!fit_init.empty()) {
        init = parse_list(fit_init, "--init");
        if (init->size() != param_count(fam)) throw UsageError("--init needs " + std::to_string(param_count(fam)) + " values");
      }
      std::vector<double> x;
      std::vector<double> y;
      read_xy(fit_file, x, y);
      FitOptions opts;
      opts.multistart = fit_multistart;
      opts.multistart_seed = fit_seed;
      const FitResult r = fam == ModelFamily::Linear && !init ? linear_fit(x, y) : fit(fam, x, y, init, opts);
      out << fit_to_json(r);
    } else if (*synth) {
      if (synth_profile != "paper") throw UsageError("--profile: unknown profile '" + synth_profile + "' (known: paper)");
      PaperProfile p = PaperProfile::paper();
      if (synth_specimens < 0 || synth_shots < 0) throw UsageError("--specimens and --shots must be positive");
      if (synth_specimens > 0) p.specimens_per_group = synth_specimens;
      if (synth_shots > 0) p.shots_per_day = synth_shots;
      p.seed = resolve_seed(synth_seed, p.seed);
      synth_dataset(p, synth_out);
      out << (std::filesystem::path(synth_out) / "manifest.json").string() << '\n';
    } else if (*report) {
      const std::filesystem::path dir(report_dir);
      for (const auto& p : write_plots(dir / "report.json", dir / "plots")) out << p.string() << '\n';
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, std::string(to_string(e.code())), e.context());
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_error(err, "IoFailure", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace carbosound
