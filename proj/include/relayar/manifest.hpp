#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relayar/classify.hpp"
#include "relayar/strings.hpp"
#include "relayar/waveform.hpp"

namespace relayar::manifest {

/// Label string <-> class-index mapping per task. The label domains are fixed
/// regardless of which labels a particular corpus realizes.
inline const std::vector<std::string>& label_set(classify::Task task) {
  static const std::vector<std::string> detection = {"nonfault", "fault"};
  static const std::vector<std::string> region = {"internal", "forward", "reverse"};
  static const std::vector<std::string> location = {"loc1", "loc2", "loc3", "loc4", "loc5", "loc6", "loc7", "loc8"};
  static const std::vector<std::string> phase = {"a", "b", "c", "ab", "bc", "ca", "abc"};
  static const std::vector<std::string> faulttype = {"ag", "bg", "cg", "ab", "bc", "ca", "abg", "bcg", "cag", "abcg"};
  switch (task) {
    case classify::Task::detection: return detection;
    case classify::Task::region: return region;
    case classify::Task::location: return location;
    case classify::Task::phase: return phase;
    case classify::Task::faulttype: return faulttype;
  }
  throw std::logic_error("label_set: bad task");
}

inline int label_to_index(classify::Task task, std::string_view label) {
  const auto& set = label_set(task);
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set[i] == label) return static_cast<int>(i);
  throw std::invalid_argument("unknown " + std::string(classify::to_string(task)) + " label: " + std::string(label));
}

inline const std::string& index_to_label(classify::Task task, int index) {
  const auto& set = label_set(task);
  if (index < 0 || static_cast<std::size_t>(index) >= set.size())
    throw std::out_of_range("label index out of range");
  return set[static_cast<std::size_t>(index)];
}

/// One corpus case: record path(s), the event spec that produced it, the true
/// onset sample, and per-task labels (empty when a task does not apply).
struct ManifestRow {
  std::string case_id;
  std::string record_wf;               ///< wind-farm end record path
  std::string record_grid;             ///< grid end record path; empty for single-end
  waveform::EventSpec spec;
  std::optional<std::size_t> onset_sample;
  std::string label_detection, label_region, label_location, label_phase, label_faulttype;

  std::optional<int> label(classify::Task task) const {
    const std::string* s = nullptr;
    switch (task) {
      case classify::Task::detection: s = &label_detection; break;
      case classify::Task::region: s = &label_region; break;
      case classify::Task::location: s = &label_location; break;
      case classify::Task::phase: s = &label_phase; break;
      case classify::Task::faulttype: s = &label_faulttype; break;
    }
    if (s == nullptr || s->empty()) return std::nullopt;
    return label_to_index(task, *s);
  }
};

struct Manifest {
  std::vector<ManifestRow> rows;
};

inline const char* csv_header() {
  return "case_id,record_wf,record_grid,kind,fault_type,inception_angle_deg,resistance_class,off_nominal_hz,"
         "dc_decay_tau_s,snr_db,ct_sat_level,sync_delay_ms,location,transformer,onset_sample,"
         "label_detection,label_region,label_location,label_phase,label_faulttype";
}

inline void write_csv(const Manifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("manifest write: cannot open " + path);
  out << csv_header() << '\n';
  const auto opt = [](const std::optional<double>& v) { return v ? strings::g17(*v) : std::string(); };
  for (const auto& r : m.rows) {
    out << r.case_id << ',' << r.record_wf << ',' << r.record_grid << ',' << waveform::to_string(r.spec.kind) << ','
        << waveform::to_string(r.spec.fault_type) << ',' << strings::g17(r.spec.inception_angle_deg) << ','
        << waveform::to_string(r.spec.resistance) << ',' << strings::g17(r.spec.off_nominal_hz) << ','
        << strings::g17(r.spec.dc_decay_tau) << ',' << opt(r.spec.snr_db) << ',' << opt(r.spec.ct_sat_level) << ','
        << opt(r.spec.sync_delay_ms) << ',' << r.spec.location << ',' << r.spec.transformer << ','
        << (r.onset_sample ? std::to_string(*r.onset_sample) : std::string()) << ',' << r.label_detection << ','
        << r.label_region << ',' << r.label_location << ',' << r.label_phase << ',' << r.label_faulttype << '\n';
  }
  if (!out) throw std::runtime_error("manifest write: write failed for " + path);
}

/// Load and validate: unique case ids, labels from the task domains, and
/// (optionally) referenced record files present on disk.
inline Manifest load_csv(const std::string& path, bool check_files = true) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest load: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("manifest load: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw std::runtime_error("manifest load: unexpected header in " + path);

  Manifest m;
  std::set<std::string> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strings::trim(line).empty()) continue;
    const auto f = strings::split(line, ',');
    if (f.size() != 20)
      throw std::runtime_error("manifest load: line " + std::to_string(lineno) + ": expected 20 fields");
    ManifestRow r;
    r.case_id = std::string(f[0]);
    r.record_wf = std::string(f[1]);
    r.record_grid = std::string(f[2]);
    r.spec.kind = waveform::parse_event_kind(f[3]);
    r.spec.fault_type = waveform::parse_fault_type(f[4]);
    r.spec.inception_angle_deg = *strings::to_double(f[5]);
    r.spec.resistance = waveform::parse_resistance_class(f[6]);
    r.spec.off_nominal_hz = *strings::to_double(f[7]);
    r.spec.dc_decay_tau = *strings::to_double(f[8]);
    if (!strings::trim(f[9]).empty()) r.spec.snr_db = *strings::to_double(f[9]);
    if (!strings::trim(f[10]).empty()) r.spec.ct_sat_level = *strings::to_double(f[10]);
    if (!strings::trim(f[11]).empty()) r.spec.sync_delay_ms = *strings::to_double(f[11]);
    r.spec.location = static_cast<int>(*strings::to_ll(f[12]));
    r.spec.transformer = static_cast<int>(*strings::to_ll(f[13]));
    if (!strings::trim(f[14]).empty()) r.onset_sample = static_cast<std::size_t>(*strings::to_ll(f[14]));
    r.label_detection = std::string(f[15]);
    r.label_region = std::string(f[16]);
    r.label_location = std::string(f[17]);
    r.label_phase = std::string(f[18]);
    r.label_faulttype = std::string(f[19]);

    if (!seen.insert(r.case_id).second)
      throw std::runtime_error("manifest load: duplicate case_id " + r.case_id);
    for (auto task : {classify::Task::detection, classify::Task::region, classify::Task::location,
                      classify::Task::phase, classify::Task::faulttype})
      (void)r.label(task);  // throws on labels outside the task domain
    if (check_files) {
      const auto base = std::filesystem::path(path).parent_path();
      for (const auto* p : {&r.record_wf, &r.record_grid}) {
        if (p->empty()) continue;
        const auto resolved = std::filesystem::path(*p).is_absolute() ? std::filesystem::path(*p) : base / *p;
        if (!std::filesystem::exists(resolved))
          throw std::runtime_error("manifest load: missing record file " + *p);
      }
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

}  // namespace relayar::manifest
