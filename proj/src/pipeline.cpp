#include "carbosound/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

#include <json.hpp>

namespace carbosound {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kCurvePoints = 200;

template <class T>
void mark_failed(Fallible<T>& f, const Error& e) {
  f.value.reset();
  f.reason = std::string(to_string(e.code()));
  f.context = e.context();
}

// Pairs (x[i], y[i]) with both finite.
void collect(std::span<const double> x, std::span<const double> y, std::vector<double>& xo, std::vector<double>& yo) {
  xo.clear();
  yo.clear();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      xo.push_back(x[i]);
      yo.push_back(y[i]);
    }
  }
}

void require_points(std::size_t n, const char* what) {
  if (n < kMinSeriesDays) {
    throw Error(ErrorCode::TooFewPoints, std::string(what) + ": " + std::to_string(n) + " usable days");
  }
}

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json opt(const std::optional<double>& v) { return v ? num(*v) : Json(nullptr); }

Json fit_json(const FitResult& f) {
  Json j;
  j["family"] = std::string(to_string(f.family));
  j["params"] = f.params;
  const auto& p = f.params;
  switch (f.family) {
    case ModelFamily::Linear:
      j["slope"] = p[0];
      j["intercept"] = p[1];
      break;
    case ModelFamily::ExpDecay:
      j["A"] = p[0];
      j["b"] = p[1];
      break;
    case ModelFamily::ExpOffset:
      j["A"] = p[0];
      j["B"] = p[1];
      j["c"] = p[2];
      break;
    case ModelFamily::TwoTerm:
      j["A"] = p[0];
      j["b"] = p[1];
      j["C"] = p[2];
      j["d"] = p[3];
      j["dominant_rate"] = dominant_rate(f);
      break;
    case ModelFamily::Saturation:
      j["mu"] = p[0];
      break;
  }
  j["r2"] = num(f.r_squared);
  j["pearson_r"] = num(f.pearson_r);
  j["converged"] = f.converged;
  j["degenerate"] = f.degenerate;
  j["n_iter"] = f.n_iter;
  return j;
}

struct AbsentList {
  Json items = Json::array();
  void add(const std::string& index, const std::string& reason, const std::string& context) {
    Json a;
    a["index"] = index;
    a["reason"] = reason;
    if (!context.empty()) a["context"] = context;
    items.push_back(std::move(a));
  }
  template <class T>
  Json take(const std::string& index, const Fallible<T>& f, Json value) {
    if (f.has_value()) return value;
    add(index, f.reason, f.context);
    return nullptr;
  }
};

Json day_json(const DayBundle& d) {
  Json j;
  j["day"] = d.day;
  j["caco3_pct"] = opt(d.caco3_pct);
  j["n_waveforms"] = d.n_waveforms;
  AbsentList absent;

  Json energy = nullptr;
  Json curve = nullptr;
  if (d.energy.has_value()) {
    const EnergyBundle& e = *d.energy;
    energy["total_j"] = num(e.total_j);
    energy["mu"] = e.mu.has_value() ? num(e.mu->mu) : Json(nullptr);
    energy["r2_mu"] = e.mu.has_value() ? num(e.mu->r_squared) : Json(nullptr);
    energy["t_onset_s"] = e.mu.has_value() ? num(e.mu->t_onset) : Json(nullptr);
    energy["delta_t_s"] = num(e.delta_t_s);
    if (!e.mu.has_value()) absent.add("energy.mu", e.mu.reason, e.mu.context);
    const std::size_t n = e.curve.times.size();
    const std::size_t step = std::max<std::size_t>(1, (n + kCurvePoints - 1) / kCurvePoints);
    curve["times_s"] = Json::array();
    curve["values"] = Json::array();
    for (std::size_t i = 0; i < n; i += step) {
      curve["times_s"].push_back(e.curve.times[i]);
      curve["values"].push_back(e.curve.values[i]);
    }
    if (n > 0 && (n - 1) % step != 0) {
      curve["times_s"].push_back(e.curve.times[n - 1]);
      curve["values"].push_back(e.curve.values[n - 1]);
    }
  }
  j["energy"] = absent.take("energy", d.energy, energy);

  Json phase = nullptr;
  if (d.phase.has_value()) {
    const PhaseBundle& p = *d.phase;
    phase["slope_rad_per_hz"] = num(p.index.slope);
    phase["intercept_rad"] = num(p.index.intercept);
    phase["pearson_r"] = num(p.index.pearson_r);
    phase["band_hz"] = Json::array({p.index.band.lo, p.index.band.hi});
    phase["n_bins"] = p.index.n_bins;
    phase["travel_time_s"] = num(p.travel_time_s);
    phase["delta_vs_benchmark"] = opt(p.delta_vs_benchmark);
  }
  j["phase"] = absent.take("phase", d.phase, phase);

  Json harm = nullptr;
  if (d.harmonics.has_value()) {
    const HarmonicBundle& h = *d.harmonics;
    harm["fundamental_hz"] = h.set.fundamental.freq;
    harm["fundamental_amplitude"] = h.set.fundamental.amplitude;
    harm["fundamental_bw_hz"] = h.set.fundamental.bandwidth;
    if (h.set.second) {
      harm["second_hz"] = h.set.second->freq;
      harm["second_amplitude"] = h.set.second->amplitude;
    }
    if (h.set.third) {
      harm["third_hz"] = h.set.third->freq;
      harm["third_amplitude"] = h.set.third->amplitude;
    } else {
      absent.add("harmonics.third", "NotDetected", "no peak in the third-harmonic window");
    }
    if (h.set.subharmonic) {
      harm["sub_hz"] = h.set.subharmonic->freq;
      harm["sub_bw_hz"] = h.set.subharmonic->bandwidth;
      harm["sub_amplitude"] = h.set.subharmonic->amplitude;
    }
    if (h.index.beta) harm["beta"] = *h.index.beta;
    if (h.index.gamma) harm["gamma"] = *h.index.gamma;
    harm["n_peaks"] = h.n_peaks;
  }
  j["harmonics"] = absent.take("harmonics", d.harmonics, harm);
  j["absent"] = absent.items;
  if (d.default_distance) j["distance_defaulted_m"] = kDefaultDistanceM;
  j["cumulative"] = curve;
  return j;
}

Json series_json(const SeriesInput& s) {
  Json j;
  j["days"] = s.days;
  auto arr = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
  };
  j["caco3_pct"] = arr(s.caco3);
  j["total_j"] = arr(s.energy);
  j["mu"] = arr(s.mu);
  j["delta_t_s"] = arr(s.delta_t);
  j["phase_slope_rad_per_hz"] = arr(s.slope);
  j["gamma"] = arr(s.gamma);
  return j;
}

Json fits_json(const SeriesFits& f) {
  Json j;
  AbsentList absent;
  j["mu_vs_day"] = absent.take("mu_vs_day", f.mu_vs_day, f.mu_vs_day.has_value() ? fit_json(*f.mu_vs_day) : Json());
  j["energy_vs_day"] =
      absent.take("energy_vs_day", f.energy_vs_day, f.energy_vs_day.has_value() ? fit_json(*f.energy_vs_day) : Json());
  j["energy_vs_caco3"] = absent.take("energy_vs_caco3", f.energy_vs_caco3,
                                     f.energy_vs_caco3.has_value() ? fit_json(*f.energy_vs_caco3) : Json());
  Json pd = nullptr;
  Json pc = nullptr;
  if (f.phase.has_value()) {
    const PhaseSlopeSeries& ps = *f.phase;
    if (ps.fit_vs_day.has_value()) {
      pd = fit_json(*ps.fit_vs_day);
      pd["outlier_days"] = ps.outlier_days;
      pd["outliers_excluded"] = ps.outliers_excluded;
    } else {
      absent.add("phase_vs_day", ps.fit_vs_day.reason, ps.fit_vs_day.context);
    }
    if (ps.fit_vs_caco3.has_value()) {
      pc = fit_json(*ps.fit_vs_caco3);
    } else {
      absent.add("phase_vs_caco3", ps.fit_vs_caco3.reason, ps.fit_vs_caco3.context);
    }
  } else {
    absent.add("phase_vs_day", f.phase.reason, f.phase.context);
    absent.add("phase_vs_caco3", f.phase.reason, f.phase.context);
  }
  j["phase_vs_day"] = pd;
  j["phase_vs_caco3"] = pc;

  Json gd = nullptr;
  if (f.gamma_vs_day.has_value()) {
    gd["A"] = f.gamma_vs_day->amplitude;
    gd["b"] = f.gamma_vs_day->rate;
    gd["r2"] = num(f.gamma_vs_day->r_squared);
    gd["fit"] = fit_json(f.gamma_vs_day->fit);
  }
  j["gamma_vs_day"] = absent.take("gamma_vs_day", f.gamma_vs_day, gd);
  Json gc = nullptr;
  if (f.loggamma_vs_caco3.has_value()) {
    const LogLinearTrend& t = *f.loggamma_vs_caco3;
    gc["slope"] = t.slope;
    gc["intercept"] = t.intercept;
    gc["pearson_r"] = num(t.pearson_r);
    gc["p_value"] = num(t.p_value);
    gc["n"] = t.n;
  }
  j["loggamma_vs_caco3"] = absent.take("loggamma_vs_caco3", f.loggamma_vs_caco3, gc);
  j["cv_delta_t"] = absent.take("cv_delta_t", f.cv_delta_t, f.cv_delta_t.has_value() ? num(*f.cv_delta_t) : Json());
  j["absent"] = absent.items;
  return j;
}

Json settings_json(const CarbonationReport& r) {
  Json j;
  j["window"] = std::string(to_string(r.settings.window));
  j["band_hz"] = r.settings.band ? Json::array({r.settings.band->lo, r.settings.band->hi}) : Json(nullptr);
  j["min_prominence"] = r.settings.min_prominence;
  j["impedance_ohm"] = r.impedance_ohm;
  j["nominal_f0_hz"] = r.nominal_f0_hz;
  j["exclude_outliers"] = r.settings.exclude_outliers;
  j["multistart"] = 0;
  return j;
}

SeriesInput series_of(const std::vector<DayBundle>& days) {
  SeriesInput s;
  for (const DayBundle& d : days) {
    s.days.push_back(d.day);
    s.caco3.push_back(d.caco3_pct.value_or(kNaN));
    const bool e = d.energy.has_value();
    s.energy.push_back(e ? d.energy->total_j : kNaN);
    s.delta_t.push_back(e ? d.energy->delta_t_s : kNaN);
    s.mu.push_back(e && d.energy->mu.has_value() ? d.energy->mu->mu : kNaN);
    s.slope.push_back(d.phase.has_value() ? d.phase->index.slope : kNaN);
    s.gamma.push_back(d.harmonics.has_value() && d.harmonics->index.gamma ? *d.harmonics->index.gamma : kNaN);
  }
  return s;
}

double mean_finite(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : kNaN;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void validate_settings(const AnalysisSettings& s) {
  if (!(s.min_prominence > 0.0 && s.min_prominence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "min_prominence must lie in (0, 1]");
  }
  if (s.band && !(s.band->lo < s.band->hi && s.band->lo >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "band must satisfy 0 <= f_lo < f_hi");
  }
  if (s.impedance_ohm && !(*s.impedance_ohm > 0.0)) {
    throw Error(ErrorCode::NonPositiveImpedance, "impedance must be positive");
  }
  if (s.workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be at least 1");
}

DayBundle analyze_waveform(const Waveform& w, double nominal_f0_hz, double impedance_ohm,
                           const AnalysisSettings& settings) {
  DayBundle b;
  b.n_waveforms = 1;
  b.default_distance = !w.distance().has_value();
  b.energy = attempt([&] {
    EnergyBundle e;
    e.total_j = scaled_energy(w, impedance_ohm);
    e.curve = cumulative_energy(w);
    e.delta_t_s = delta_t(e.curve);
    e.mu = attempt([&] { return fit_mu(e.curve); });
    return e;
  });

  const PowerSpectrum ps = power_spectral_density(w, settings.window);
  b.harmonics = attempt([&] {
    HarmonicBundle h;
    const auto peaks = detect_peaks(ps, settings.min_prominence);
    h.n_peaks = peaks.size();
    h.set = classify_harmonics(peaks, nominal_f0_hz);
    h.index = nonlinearity_index(h.set, 0, std::nullopt);
    return h;
  });

  b.phase = attempt([&] {
    FrequencyBand band;
    if (settings.band) {
      band = *settings.band;
    } else {
      double f_peak = 0.0;
      if (b.harmonics.has_value()) {
        f_peak = b.harmonics->set.fundamental.freq;
      } else {
        const auto it = std::max_element(ps.psd.begin(), ps.psd.end());
        f_peak = ps.freqs[static_cast<std::size_t>(it - ps.psd.begin())];
      }
      if (!(f_peak > 0.0)) throw Error(ErrorCode::InsufficientBins, "no spectral peak to centre the phase band on");
      band = default_phase_band(f_peak);
    }
    const PhaseCurve pc = phase_spectrum(dft(w));
    PhaseBundle p;
    p.index = phase_slope(pc, band);
    p.travel_time_s = travel_time(p.index);
    return p;
  });
  return b;
}

DayBundle analyze_specimen_day(const SpecimenRecord& rec, const DatasetManifest& manifest,
                               const AnalysisSettings& settings) {
  DayBundle out;
  try {
    if (rec.waveform_paths.empty()) throw Error(ErrorCode::EmptySignal, rec.id + ": no waveforms listed");
    std::vector<Waveform> ws;
    ws.reserve(rec.waveform_paths.size());
    for (const auto& p : rec.waveform_paths) ws.push_back(load_waveform(manifest.resolve(p)));
    const Waveform avg = average_waveforms(ws);
    out = analyze_waveform(avg, manifest.nominal_f0_hz, settings.impedance_ohm.value_or(manifest.impedance_ohm),
                           settings);
    out.n_waveforms = ws.size();
  } catch (const Error& e) {
    mark_failed(out.energy, e);
    mark_failed(out.phase, e);
    mark_failed(out.harmonics, e);
    out.n_waveforms = 0;
  }
  out.id = rec.id;
  out.wc_ratio = rec.wc_ratio;
  out.day = rec.day;
  out.caco3_pct = rec.caco3_pct;
  return out;
}

SeriesFits fit_series(const SeriesInput& in, bool exclude_outliers) {
  SeriesFits f;
  std::vector<double> days(in.days.begin(), in.days.end());
  std::vector<double> x;
  std::vector<double> y;

  f.mu_vs_day = attempt([&] {
    collect(days, in.mu, x, y);
    require_points(x.size(), "mu");
    return linear_fit(x, y);
  });
  f.energy_vs_day = attempt([&] {
    collect(days, in.energy, x, y);
    require_points(x.size(), "energy");
    return fit(ModelFamily::ExpDecay, x, y);
  });
  f.energy_vs_caco3 = attempt([&] {
    collect(in.caco3, in.energy, x, y);
    require_points(x.size(), "energy vs CaCO3");
    return fit(ModelFamily::TwoTerm, x, y);
  });
  f.phase = attempt([&] {
    std::vector<PhaseDayRecord> recs;
    for (std::size_t i = 0; i < in.days.size(); ++i) {
      if (!std::isfinite(in.slope[i])) continue;
      PhaseDayRecord r;
      r.day = in.days[i];
      r.index.slope = in.slope[i];
      if (std::isfinite(in.caco3[i])) r.caco3_pct = in.caco3[i];
      recs.push_back(r);
    }
    require_points(recs.size(), "phase slope");
    return phase_slope_series(recs, exclude_outliers);
  });

  std::vector<int> gdays;
  std::vector<double> gvals;
  for (std::size_t i = 0; i < in.days.size(); ++i) {
    if (std::isfinite(in.gamma[i])) {
      gdays.push_back(in.days[i]);
      gvals.push_back(in.gamma[i]);
    }
  }
  if (gdays.size() < kMinGammaDays) {
    const Error e(ErrorCode::TooFewPoints, std::to_string(gdays.size()) + " days with gamma present");
    mark_failed(f.gamma_vs_day, e);
    mark_failed(f.loggamma_vs_caco3, e);
  } else {
    f.gamma_vs_day = gamma_day_trend(gdays, gvals);
    collect(in.caco3, in.gamma, x, y);
    f.loggamma_vs_caco3 = loggamma_caco3_trend(x, y);
  }
  f.cv_delta_t = attempt([&] {
    std::vector<double> v;
    for (double d : in.delta_t) {
      if (std::isfinite(d)) v.push_back(d);
    }
    return coefficient_of_variation(v);
  });
  return f;
}

CarbonationReport build_report(const DatasetManifest& manifest, const AnalysisSettings& settings) {
  validate_settings(settings);
  CarbonationReport rep;
  rep.settings = settings;
  rep.nominal_f0_hz = manifest.nominal_f0_hz;
  rep.impedance_ohm = settings.impedance_ohm.value_or(manifest.impedance_ohm);
  for (const Finding& f : validate_manifest(manifest).findings) {
    rep.warnings.push_back(to_string(f.kind) + ": " + f.subject);
  }
  if (manifest.specimens.empty()) {
    rep.warnings.push_back("manifest lists no specimens");
    return rep;
  }

  // Specimens keyed by id; wc_ratio taken from the first record.
  std::map<std::string, std::vector<const SpecimenRecord*>> by_id;
  for (const auto& r : manifest.specimens) by_id[r.id].push_back(&r);
  std::vector<std::pair<double, std::string>> keys;
  for (auto& [id, recs] : by_id) {
    std::stable_sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->day < b->day; });
    keys.emplace_back(recs.front()->wc_ratio, id);
  }
  std::sort(keys.begin(), keys.end());

  struct Task {
    std::size_t specimen;
    const SpecimenRecord* rec;
  };
  std::vector<Task> tasks;
  rep.specimens.resize(keys.size());
  for (std::size_t s = 0; s < keys.size(); ++s) {
    rep.specimens[s].wc_ratio = keys[s].first;
    rep.specimens[s].id = keys[s].second;
    for (const SpecimenRecord* r : by_id[keys[s].second]) tasks.push_back({s, r});
  }

  std::vector<DayBundle> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      results[i] = analyze_specimen_day(*tasks[i].rec, manifest, settings);
    }
  };
  const unsigned n_threads = std::min<unsigned>(settings.workers, static_cast<unsigned>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) rep.specimens[tasks[i].specimen].days.push_back(std::move(results[i]));

  for (SpecimenReport& sp : rep.specimens) {
    // Benchmark: the earliest day with a phase slope.
    std::optional<double> bench;
    for (DayBundle& d : sp.days) {
      if (!d.phase.has_value()) continue;
      if (!bench) bench = d.phase->index.slope;
      d.phase.value->delta_vs_benchmark = d.phase->index.slope - *bench;
    }
    sp.series = series_of(sp.days);
    sp.fits = fit_series(sp.series, settings.exclude_outliers);
  }

  // Groups by w/c ratio; mean of each index over specimens per day.
  std::size_t i = 0;
  while (i < rep.specimens.size()) {
    std::size_t j = i;
    GroupReport g;
    g.wc_ratio = rep.specimens[i].wc_ratio;
    while (j < rep.specimens.size() && rep.specimens[j].wc_ratio == g.wc_ratio) {
      g.specimen_ids.push_back(rep.specimens[j].id);
      ++j;
    }
    std::vector<int> days;
    for (std::size_t k = i; k < j; ++k) {
      for (int d : rep.specimens[k].series.days) days.push_back(d);
    }
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    SeriesInput& m = g.mean_series;
    m.days = days;
    for (int d : days) {
      std::vector<double> c, e, mu, dt, sl, ga;
      for (std::size_t k = i; k < j; ++k) {
        const SeriesInput& s = rep.specimens[k].series;
        for (std::size_t q = 0; q < s.days.size(); ++q) {
          if (s.days[q] != d) continue;
          c.push_back(s.caco3[q]);
          e.push_back(s.energy[q]);
          mu.push_back(s.mu[q]);
          dt.push_back(s.delta_t[q]);
          sl.push_back(s.slope[q]);
          ga.push_back(s.gamma[q]);
        }
      }
      m.caco3.push_back(mean_finite(c));
      m.energy.push_back(mean_finite(e));
      m.mu.push_back(mean_finite(mu));
      m.delta_t.push_back(mean_finite(dt));
      m.slope.push_back(mean_finite(sl));
      m.gamma.push_back(mean_finite(ga));
    }
    g.fits = fit_series(m, settings.exclude_outliers);
    rep.groups.push_back(std::move(g));
    i = j;
  }
  return rep;
}

std::string report_to_json(const CarbonationReport& r) {
  Json j;
  j["settings"] = settings_json(r);
  j["warnings"] = r.warnings;
  j["specimens"] = Json::array();
  for (const SpecimenReport& s : r.specimens) {
    Json js;
    js["id"] = s.id;
    js["wc_ratio"] = s.wc_ratio;
    js["days"] = Json::array();
    for (const DayBundle& d : s.days) js["days"].push_back(day_json(d));
    js["fits"] = fits_json(s.fits);
    j["specimens"].push_back(std::move(js));
  }
  j["groups"] = Json::array();
  for (const GroupReport& g : r.groups) {
    Json jg;
    jg["wc_ratio"] = g.wc_ratio;
    jg["specimens"] = g.specimen_ids;
    jg["series"] = series_json(g.mean_series);
    jg["fits"] = fits_json(g.fits);
    j["groups"].push_back(std::move(jg));
  }
  return j.dump(2) + "\n";
}

std::string day_to_json(const DayBundle& d) {
  Json j = day_json(d);
  j.erase("day");
  j.erase("caco3_pct");
  return j.dump(2) + "\n";
}

std::string fit_to_json(const FitResult& f) { return fit_json(f).dump(2) + "\n"; }

void write_report_csv(const CarbonationReport& r, const std::filesystem::path& path) {
  std::string out =
      "id,wc_ratio,day,caco3_pct,total_j,mu,r2_mu,delta_t_s,phase_slope_rad_per_hz,phase_pearson_r,travel_time_s,"
      "delta_vs_benchmark,fundamental_hz,third_hz,sub_hz,sub_bw_hz,beta,gamma\n";
  for (const SpecimenReport& s : r.specimens) {
    for (const DayBundle& d : s.days) {
      std::vector<std::string> f;
      f.push_back(csv_field(s.id));
      f.push_back(fmt(s.wc_ratio));
      f.push_back(std::to_string(d.day));
      f.push_back(d.caco3_pct ? fmt(*d.caco3_pct) : "");
      const bool e = d.energy.has_value();
      const bool m = e && d.energy->mu.has_value();
      f.push_back(e ? fmt(d.energy->total_j) : "");
      f.push_back(m ? fmt(d.energy->mu->mu) : "");
      f.push_back(m ? fmt(d.energy->mu->r_squared) : "");
      f.push_back(e ? fmt(d.energy->delta_t_s) : "");
      const bool p = d.phase.has_value();
      f.push_back(p ? fmt(d.phase->index.slope) : "");
      f.push_back(p ? fmt(d.phase->index.pearson_r) : "");
      f.push_back(p ? fmt(d.phase->travel_time_s) : "");
      f.push_back(p && d.phase->delta_vs_benchmark ? fmt(*d.phase->delta_vs_benchmark) : "");
      const bool h = d.harmonics.has_value();
      f.push_back(h ? fmt(d.harmonics->set.fundamental.freq) : "");
      f.push_back(h && d.harmonics->set.third ? fmt(d.harmonics->set.third->freq) : "");
      f.push_back(h && d.harmonics->set.subharmonic ? fmt(d.harmonics->set.subharmonic->freq) : "");
      f.push_back(h && d.harmonics->set.subharmonic ? fmt(d.harmonics->set.subharmonic->bandwidth) : "");
      f.push_back(h && d.harmonics->index.beta ? fmt(*d.harmonics->index.beta) : "");
      f.push_back(h && d.harmonics->index.gamma ? fmt(*d.harmonics->index.gamma) : "");
      for (std::size_t k = 0; k < f.size(); ++k) {
        if (k) out += ',';
        out += f[k];
      }
      out += '\n';
    }
  }
  write_text_file(out, path);
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  o << text;
  if (!o) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace carbosound
