#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "carbosound/cli.hpp"
#include "carbosound/synth.hpp"
#include "carbosound/waveform.hpp"
#include "support.hpp"

using namespace carbosound;
using testsupport::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "carbosound");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One specimen, one shot: the smallest full-profile dataset.
const std::filesystem::path& tiny_dataset() {
  static TempDir dir;
  static const bool made = [] {
    const Outcome o = run_cli({"synth", "--profile", "paper", "-o", dir.path().string(), "--specimens", "1", "--shots", "1"});
    REQUIRE(o.code == kExitOk);
    return true;
  }();
  (void)made;
  return dir.path();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 2") {
    CHECK(run_cli({}).code == kExitUsage);
    CHECK(run_cli({"bogus"}).code == kExitUsage);
    CHECK(run_cli({"fit", "--family", "cubic", "x.csv"}).code == kExitUsage);
    CHECK(run_cli({"analyze", "x.csv", "--window", "kaiser"}).code == kExitUsage);
    CHECK(run_cli({"analyze", "x.csv", "--band", "1e5"}).code == kExitUsage);
    CHECK(run_cli({"synth", "--profile", "other", "-o", "/tmp/unused"}).code == kExitUsage);
  }

  TEST_CASE("flags are validated before any file is read") {
    const Outcome o = run_cli({"batch", "/nonexistent/manifest.json", "-o", "/nonexistent/out", "--min-prominence", "2"});
    CHECK(o.code == kExitUsage);
    CHECK(o.err.find("usage error") != std::string::npos);
  }

  TEST_CASE("help exits 0") {
    const Outcome o = run_cli({"--help"});
    CHECK(o.code == kExitOk);
    CHECK(o.out.find("analyze") != std::string::npos);
  }

  TEST_CASE("analyze zero signal") {
    TempDir tmp;
    save_waveform_binary(Waveform(std::vector<double>(256, 0.0), 1e-7), tmp / "z.csw");
    const Outcome o = run_cli({"analyze", (tmp / "z.csw").string()});
    CHECK(o.code == kExitRuntime);
    const auto j = nlohmann::json::parse(o.err);
    CHECK(j["error"] == "ZeroEnergySignal");
    CHECK(j.contains("context"));
  }

  TEST_CASE("analyze missing file") {
    const Outcome o = run_cli({"analyze", "/nonexistent/w.csv"});
    CHECK(o.code == kExitRuntime);
    CHECK(nlohmann::json::parse(o.err)["error"] == "UnreadableFile");
  }

  TEST_CASE("analyze a pulse") {
    TempDir tmp;
    PulseSpec s;
    s.carrier_f = snap_to_bin(4e5, s.dt, s.n);
    s.third_f = snap_to_bin(1.5e6, s.dt, s.n);
    s.a3 = 0.2;
    save_waveform_csv(synth_pulse(s), tmp / "p.csv");
    const Outcome o = run_cli({"analyze", (tmp / "p.csv").string()});
    REQUIRE(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["energy"]["total_j"].get<double>() > 0.0);
    CHECK(j["phase"]["travel_time_s"].get<double>() == doctest::Approx(s.delay).epsilon(1e-3));
    CHECK(j["harmonics"]["fundamental_hz"].get<double>() == doctest::Approx(s.carrier_f).epsilon(1e-9));
    CHECK(j["harmonics"].contains("gamma"));
  }

  TEST_CASE("fit exp_decay") {
    TempDir tmp;
    {
      std::ofstream out(tmp / "d.csv");
      out << std::setprecision(17) << "day,energy\n";
      for (int d : {0, 1, 3, 5, 7, 14, 28, 56, 120}) out << d << ',' << 5.0 * std::exp(-0.3204 * d) << '\n';
    }
    const Outcome o = run_cli({"fit", "--family", "exp_decay", (tmp / "d.csv").string()});
    REQUIRE(o.code == kExitOk);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["family"] == "exp_decay");
    CHECK(j["b"].get<double>() == doctest::Approx(0.3204).epsilon(1e-9));
    CHECK(j["converged"] == true);
    CHECK(run_cli({"fit", "--family", "exp_decay", (tmp / "d.csv").string(), "--init", "1"}).code == kExitUsage);
  }

  TEST_CASE("synth, batch and report") {
    const auto& fx = tiny_dataset();
    TempDir out;
    const Outcome b = run_cli({"batch", (fx / "manifest.json").string(), "-o", out.path().string(), "--min-prominence",
                               "1e-14", "--workers", "4", "--plots"});
    REQUIRE(b.code == kExitOk);
    CHECK(std::filesystem::exists(out / "report.json"));
    CHECK(std::filesystem::exists(out / "report.csv"));
    CHECK(std::filesystem::exists(out / "plots/energy_vs_day.svg"));
    CHECK(std::filesystem::exists(out / "plots/cumulative_energy_wc040.svg"));

    const auto j = nlohmann::json::parse(slurp(out / "report.json"));
    REQUIRE(j["groups"].size() == 3);
    for (const auto& g : j["groups"]) {
      const auto& f = g["fits"];
      for (const char* key : {"mu_vs_day", "energy_vs_day", "phase_vs_day", "gamma_vs_day", "loggamma_vs_caco3"}) {
        CAPTURE(key);
        CHECK(f[key].is_object());
      }
      CHECK(f["cv_delta_t"].is_number());
    }

    std::filesystem::remove_all(out / "plots");
    const Outcome r = run_cli({"report", out.path().string()});
    CHECK(r.code == kExitOk);
    CHECK(std::filesystem::exists(out / "plots/loggamma_vs_caco3.svg"));
    CHECK(slurp(out / "plots/loggamma_vs_caco3.svg").rfind("<svg", 0) == 0);
  }

  TEST_CASE("repeated batch runs are byte identical") {
    const auto& fx = tiny_dataset();
    TempDir a;
    TempDir b;
    REQUIRE(run_cli({"batch", (fx / "manifest.json").string(), "-o", a.path().string(), "--workers", "1"}).code == kExitOk);
    REQUIRE(run_cli({"batch", (fx / "manifest.json").string(), "-o", b.path().string(), "--workers", "6"}).code == kExitOk);
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
    CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
  }

  TEST_CASE("seed from the environment") {
    TempDir a;
    TempDir b;
    ::setenv("CARBOSOUND_SEED", "777", 1);
    const Outcome oa = run_cli({"synth", "--profile", "paper", "-o", a.path().string(), "--specimens", "1", "--shots", "1"});
    ::unsetenv("CARBOSOUND_SEED");
    const Outcome ob = run_cli({"synth", "--profile", "paper", "-o", b.path().string(), "--specimens", "1", "--shots", "1",
                                "--seed", "777"});
    REQUIRE(oa.code == kExitOk);
    REQUIRE(ob.code == kExitOk);
    const std::string f = "waveforms/wc060-a_d028_s0.csw";
    REQUIRE(std::filesystem::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK_FALSE(slurp(a / f) == slurp(tiny_dataset() / f));

    ::setenv("CARBOSOUND_SEED", "abc", 1);
    CHECK(run_cli({"synth", "--profile", "paper", "-o", a.path().string()}).code == kExitUsage);
    ::unsetenv("CARBOSOUND_SEED");
  }

  TEST_CASE("empty manifest warns and succeeds") {
    TempDir tmp;
    {
      std::ofstream out(tmp / "m.json");
      out << R"({"nominal_f0_hz": 500000, "impedance_ohm": 1, "specimens": []})";
    }
    const Outcome o = run_cli({"batch", (tmp / "m.json").string(), "-o", (tmp / "out").string()});
    CHECK(o.code == kExitOk);
    CHECK(o.err.find("warning") != std::string::npos);
  }
}
