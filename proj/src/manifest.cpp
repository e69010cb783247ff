#include "carbosound/manifest.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "carbosound/error.hpp"

namespace carbosound {

using nlohmann::json;

std::filesystem::path DatasetManifest::resolve(const std::filesystem::path& p) const {
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::string to_string(FindingKind kind) {
  switch (kind) {
    case FindingKind::MissingFile: return "MissingFile";
    case FindingKind::DuplicateId: return "DuplicateId";
    case FindingKind::NonMonotoneDays: return "NonMonotoneDays";
    case FindingKind::NonFiniteConcentration: return "NonFiniteConcentration";
    case FindingKind::NegativeConcentration: return "NegativeConcentration";
    case FindingKind::NegativeDay: return "NegativeDay";
    case FindingKind::InvalidWcRatio: return "InvalidWcRatio";
    case FindingKind::InconsistentWcRatio: return "InconsistentWcRatio";
    case FindingKind::NoWaveforms: return "NoWaveforms";
    case FindingKind::InvalidNominalFrequency: return "InvalidNominalFrequency";
    case FindingKind::InvalidImpedance: return "InvalidImpedance";
  }
  return "Unknown";
}

ValidationReport validate_manifest(const DatasetManifest& manifest) {
  ValidationReport report;
  auto add = [&](FindingKind k, const std::string& subject) { report.findings.push_back({k, subject}); };

  if (!(manifest.nominal_f0_hz > 0.0) || !std::isfinite(manifest.nominal_f0_hz)) {
    add(FindingKind::InvalidNominalFrequency, "nominal_f0_hz");
  }
  if (!(manifest.impedance_ohm > 0.0) || !std::isfinite(manifest.impedance_ohm)) {
    add(FindingKind::InvalidImpedance, "impedance_ohm");
  }

  std::set<std::pair<std::string, int>> seen;
  std::map<std::string, int> last_day;
  std::map<std::string, double> ratio;
  std::set<std::string> reported_order;
  for (const SpecimenRecord& r : manifest.specimens) {
    if (!seen.insert({r.id, r.day}).second) add(FindingKind::DuplicateId, r.id);
    if (r.day < 0) add(FindingKind::NegativeDay, r.id);
    if (!(r.wc_ratio > 0.0 && r.wc_ratio < 1.0)) add(FindingKind::InvalidWcRatio, r.id);
    if (r.caco3_pct) {
      if (!std::isfinite(*r.caco3_pct)) {
        add(FindingKind::NonFiniteConcentration, r.id);
      } else if (*r.caco3_pct < 0.0) {
        add(FindingKind::NegativeConcentration, r.id);
      }
    }
    if (auto it = ratio.find(r.id); it != ratio.end()) {
      if (it->second != r.wc_ratio) add(FindingKind::InconsistentWcRatio, r.id);
    } else {
      ratio.emplace(r.id, r.wc_ratio);
    }
    if (auto it = last_day.find(r.id); it != last_day.end()) {
      if (r.day < it->second && reported_order.insert(r.id).second) {
        add(FindingKind::NonMonotoneDays, r.id);
      }
      it->second = std::max(it->second, r.day);
    } else {
      last_day.emplace(r.id, r.day);
    }
    if (r.waveform_paths.empty()) add(FindingKind::NoWaveforms, r.id);
    for (const auto& p : r.waveform_paths) {
      std::error_code ec;
      if (!std::filesystem::is_regular_file(manifest.resolve(p), ec)) add(FindingKind::MissingFile, p.string());
    }
  }
  return report;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.base_dir = path.parent_path();
  try {
    m.nominal_f0_hz = doc.value("nominal_f0_hz", kDefaultNominalF0Hz);
    m.impedance_ohm = doc.value("impedance_ohm", kDefaultImpedanceOhm);
    for (const json& s : doc.at("specimens")) {
      SpecimenRecord r;
      r.id = s.at("id").get<std::string>();
      r.wc_ratio = s.at("wc_ratio").get<double>();
      const json& day = s.at("day");
      if (!day.is_number_integer()) throw Error(ErrorCode::InvalidManifest, r.id + ": day must be an integer");
      r.day = day.get<int>();
      if (auto it = s.find("caco3_pct"); it != s.end() && !it->is_null()) r.caco3_pct = it->get<double>();
      for (const json& p : s.at("waveforms")) r.waveform_paths.emplace_back(p.get<std::string>());
      m.specimens.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, path.string() + ": " + e.what());
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["nominal_f0_hz"] = manifest.nominal_f0_hz;
  doc["impedance_ohm"] = manifest.impedance_ohm;
  json specimens = json::array();
  for (const SpecimenRecord& r : manifest.specimens) {
    json s;
    s["id"] = r.id;
    s["wc_ratio"] = r.wc_ratio;
    s["day"] = r.day;
    s["caco3_pct"] = r.caco3_pct ? json(*r.caco3_pct) : json(nullptr);
    json paths = json::array();
    for (const auto& p : r.waveform_paths) paths.push_back(p.generic_string());
    s["waveforms"] = std::move(paths);
    specimens.push_back(std::move(s));
  }
  doc["specimens"] = std::move(specimens);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace carbosound
