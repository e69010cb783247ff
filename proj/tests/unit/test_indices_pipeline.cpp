#include <doctest.h>

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "carbosound/error.hpp"
#include "carbosound/pipeline.hpp"
#include "carbosound/synth.hpp"
#include "support.hpp"

using namespace carbosound;
using testsupport::TempDir;

namespace {

// Small paper-profile dataset shared by the cases below: two specimens per
// group, one shot per day.
const DatasetManifest& small_dataset() {
  static TempDir dir;
  static const DatasetManifest m = [] {
    PaperProfile p = PaperProfile::paper();
    p.specimens_per_group = 2;
    p.shots_per_day = 1;
    synth_dataset(p, dir.path());
    return load_manifest(dir / "manifest.json");
  }();
  return m;
}

AnalysisSettings profile_settings(unsigned workers = 1) {
  AnalysisSettings s;
  s.min_prominence = 1e-14;
  s.workers = workers;
  return s;
}

const CarbonationReport& small_report() {
  static const CarbonationReport r = build_report(small_dataset(), profile_settings(4));
  return r;
}

Waveform render(const PulseSpec& spec, std::uint64_t seed) {
  PulseSpec s = spec;
  s.seed = seed;
  return synth_pulse(s);
}

}  // namespace

TEST_SUITE("indices_pipeline") {
  TEST_CASE("settings validation") {
    AnalysisSettings s;
    CHECK_NOTHROW(validate_settings(s));
    s.min_prominence = 0.0;
    CHECK_THROWS_AS(validate_settings(s), Error);
    s = {};
    s.band = FrequencyBand{5e5, 1e5};
    CHECK_THROWS_AS(validate_settings(s), Error);
    s = {};
    s.impedance_ohm = -1.0;
    CHECK_THROWS_AS(validate_settings(s), Error);
    s = {};
    s.workers = 0;
    CHECK_THROWS_AS(validate_settings(s), Error);
  }

  TEST_CASE("day-0 fixture has a third harmonic, day-120 does not") {
    const PaperProfile p = PaperProfile::paper();
    const auto plans = plan_group(p, p.groups[0]);
    AnalysisSettings s;
    const DayBundle d0 = analyze_waveform(render(plans.front().pulse, 1), p.nominal_f0_hz, 1.0, s);
    REQUIRE(d0.harmonics.has_value());
    CHECK(d0.harmonics->set.third.has_value());
    CHECK(d0.harmonics->index.gamma.has_value());

    const DayBundle d120 = analyze_waveform(render(plans.back().pulse, 2), p.nominal_f0_hz, 1.0, profile_settings());
    REQUIRE(d120.harmonics.has_value());
    CHECK_FALSE(d120.harmonics->set.third.has_value());
    CHECK_FALSE(d120.harmonics->index.gamma.has_value());
    REQUIRE(d120.energy.has_value());
    CHECK(d120.energy->total_j == doctest::Approx(plans.back().target_energy).epsilon(1e-6));
  }

  TEST_CASE("zero-energy waveform") {
    const DayBundle b = analyze_waveform(Waveform(std::vector<double>(512, 0.0), 1e-7), 5e5, 1.0, AnalysisSettings{});
    CHECK_FALSE(b.energy.has_value());
    CHECK(b.energy.reason == "ZeroEnergySignal");
    CHECK_FALSE(b.phase.has_value());
    CHECK_FALSE(b.harmonics.has_value());
  }

  TEST_CASE("unreadable waveform marks every index absent") {
    DatasetManifest m;
    m.base_dir = "/nonexistent";
    SpecimenRecord rec{"x", 0.5, 0, std::nullopt, {"missing.csw"}};
    const DayBundle b = analyze_specimen_day(rec, m, AnalysisSettings{});
    CHECK_FALSE(b.energy.has_value());
    CHECK(b.energy.reason == "UnreadableFile");
    CHECK(b.phase.reason == "UnreadableFile");
    CHECK(b.harmonics.reason == "UnreadableFile");
  }

  TEST_CASE("empty manifest") {
    const CarbonationReport r = build_report(DatasetManifest{}, AnalysisSettings{});
    CHECK(r.specimens.empty());
    CHECK(r.groups.empty());
    CHECK_FALSE(r.warnings.empty());
    const auto j = nlohmann::json::parse(report_to_json(r));
    CHECK(j["specimens"].empty());
  }

  TEST_CASE("profile report structure") {
    const CarbonationReport& r = small_report();
    REQUIRE(r.specimens.size() == 6);
    REQUIRE(r.groups.size() == 3);
    CHECK(r.warnings.empty());
    CHECK(r.specimens[0].id == "wc040-a");
    CHECK(r.specimens[1].id == "wc040-b");
    for (const auto& sp : r.specimens) {
      CHECK(sp.days.size() == 9);
      for (const auto& d : sp.days) {
        CHECK(d.energy.has_value());
        CHECK(d.phase.has_value());
        CHECK(d.harmonics.has_value());
      }
    }
  }

  TEST_CASE("mu decreases with day in every group") {
    for (const auto& g : small_report().groups) {
      CAPTURE(g.wc_ratio);
      const auto& mu = g.mean_series.mu;
      for (std::size_t i = 1; i < mu.size(); ++i) CHECK(mu[i] < mu[i - 1]);
    }
  }

  TEST_CASE("delta t spread grows with w/c ratio") {
    const auto& gs = small_report().groups;
    REQUIRE(gs[0].fits.cv_delta_t.has_value());
    REQUIRE(gs[1].fits.cv_delta_t.has_value());
    REQUIRE(gs[2].fits.cv_delta_t.has_value());
    CHECK(*gs[0].fits.cv_delta_t < *gs[1].fits.cv_delta_t);
    CHECK(*gs[1].fits.cv_delta_t < *gs[2].fits.cv_delta_t);
  }

  TEST_CASE("missing concentrations only leave the concentration fits") {
    const auto& g = small_report().groups[0];
    REQUIRE(g.fits.loggamma_vs_caco3.has_value());
    CHECK(g.fits.loggamma_vs_caco3->n == 7);
    REQUIRE(g.fits.energy_vs_day.has_value());
    CHECK(g.fits.energy_vs_day->params.size() == 2);
    CHECK(std::isnan(g.mean_series.caco3.back()));
  }

  TEST_CASE("fit entries carry the required fields") {
    const auto j = nlohmann::json::parse(report_to_json(small_report()));
    for (const auto& g : j["groups"]) {
      for (const char* key : {"mu_vs_day", "energy_vs_day", "phase_vs_day"}) {
        const auto& f = g["fits"][key];
        REQUIRE(f.is_object());
        for (const char* field : {"family", "params", "r2", "pearson_r", "converged"}) CHECK(f.contains(field));
      }
    }
  }

  TEST_CASE("report does not depend on worker count") {
    const std::string one = report_to_json(build_report(small_dataset(), profile_settings(1)));
    CHECK(one == report_to_json(small_report()));
    CHECK(one == report_to_json(build_report(small_dataset(), profile_settings(3))));
  }

  TEST_CASE("removing a specimen only touches it and its group") {
    DatasetManifest m = small_dataset();
    std::erase_if(m.specimens, [](const SpecimenRecord& r) { return r.id == "wc050-b"; });
    const auto full = nlohmann::json::parse(report_to_json(small_report()));
    const auto part = nlohmann::json::parse(report_to_json(build_report(m, profile_settings(2))));
    REQUIRE(part["specimens"].size() == 5);
    std::size_t k = 0;
    for (const auto& s : full["specimens"]) {
      if (s["id"] == "wc050-b") continue;
      CHECK(s == part["specimens"][k]);
      ++k;
    }
    CHECK(full["groups"][0] == part["groups"][0]);
    CHECK(full["groups"][2] == part["groups"][2]);
    CHECK_FALSE(full["groups"][1] == part["groups"][1]);
  }

  TEST_CASE("csv export has one row per specimen-day") {
    TempDir tmp;
    write_report_csv(small_report(), tmp / "r.csv");
    std::ifstream in(tmp / "r.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    CHECK(line.rfind("id,", 0) == 0);
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 54);
  }
}
