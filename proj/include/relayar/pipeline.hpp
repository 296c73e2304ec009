#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "relayar/classify.hpp"
#include "relayar/config.hpp"
#include "relayar/detector.hpp"
#include "relayar/features.hpp"
#include "relayar/fuzzy.hpp"
#include "relayar/manifest.hpp"
#include "relayar/mrmr.hpp"
#include "relayar/strings.hpp"
#include "relayar/waveform.hpp"

namespace relayar::pipeline {

/// Index-addressed parallel map; results land in caller-owned slots so the
/// output is independent of scheduling.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::atomic<bool> failed{false};
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          failed.store(true);
          throw;  // terminates; corpus work is all-or-nothing
        }
      }
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Scenario grids
// ---------------------------------------------------------------------------

/// Cartesian scenario grid mirroring the simulation-parameter tables: fault
/// axes crossed in full, plus switching-event axes for the non-fault classes.
struct GridSpec {
  double fs = 7680.0;
  double f0 = 60.0;
  double duration_cycles = 12.0;
  std::uint64_t master_seed = 1;
  bool double_end = false;
  std::optional<double> snr_db;
  std::optional<double> ct_sat_level;
  std::optional<double> sync_delay_ms;
  double fault_tau = 0.02;

  std::vector<waveform::FaultType> fault_types;
  std::vector<waveform::ResistanceClass> resistances;
  std::vector<double> inception_angles;
  std::vector<int> transformers;
  std::vector<double> off_nominals;
  std::vector<int> locations;

  std::vector<waveform::EventKind> nonfault_kinds;
  std::vector<double> nonfault_angles;
  int nonfault_variants = 0;

  std::size_t fault_count() const {
    return fault_types.size() * resistances.size() * inception_angles.size() * transformers.size() *
           off_nominals.size() * locations.size();
  }

  std::size_t nonfault_count() const {
    return nonfault_kinds.size() * nonfault_angles.size() * static_cast<std::size_t>(nonfault_variants);
  }

  static GridSpec from(const config::KvConfig& kv) {
    GridSpec g;
    g.fs = kv.get_double("grid", "fs", g.fs);
    g.f0 = kv.get_double("grid", "f0", g.f0);
    g.duration_cycles = kv.get_double("grid", "duration_cycles", g.duration_cycles);
    g.master_seed = static_cast<std::uint64_t>(kv.get_int("grid", "master_seed", 1));
    g.double_end = kv.get_string("grid", "end_mode", "single") == "double";
    if (kv.has("grid", "snr_db")) g.snr_db = kv.get_double("grid", "snr_db", 0.0);
    if (kv.has("grid", "ct_sat_level")) g.ct_sat_level = kv.get_double("grid", "ct_sat_level", 0.0);
    if (kv.has("grid", "sync_delay_ms")) g.sync_delay_ms = kv.get_double("grid", "sync_delay_ms", 0.0);
    g.fault_tau = kv.get_double("grid", "fault_tau", g.fault_tau);

    const auto list = [&](const char* section, const char* key, const char* fallback) {
      const std::string raw = kv.get_string(section, key, fallback);
      std::vector<std::string> out;
      for (auto part : strings::split(raw, ',')) {
        const auto t = strings::trim(part);
        if (!t.empty()) out.emplace_back(t);
      }
      return out;
    };
    for (const auto& s : list("faults", "types", "ag,bg,cg,ab,bc,ca,abg,bcg,cag,abcg"))
      g.fault_types.push_back(waveform::parse_fault_type(s));
    for (const auto& s : list("faults", "resistances", "low,mid,high"))
      g.resistances.push_back(waveform::parse_resistance_class(s));
    for (const auto& s : list("faults", "inception_angles", "0,60,120,180,240,300"))
      g.inception_angles.push_back(*strings::to_double(s));
    for (const auto& s : list("faults", "transformers", "0"))
      g.transformers.push_back(static_cast<int>(*strings::to_ll(s)));
    for (const auto& s : list("faults", "off_nominal_hz", "48,72"))
      g.off_nominals.push_back(*strings::to_double(s));
    for (const auto& s : list("faults", "locations", "2,5,7"))
      g.locations.push_back(static_cast<int>(*strings::to_ll(s)));
    for (const auto& s : list("nonfaults", "kinds", "capacitor_switch,load_switch"))
      g.nonfault_kinds.push_back(waveform::parse_event_kind(s));
    for (const auto& s : list("nonfaults", "angles", ""))
      g.nonfault_angles.push_back(*strings::to_double(s));
    if (g.nonfault_angles.empty())
      for (int a = 0; a < 360; a += 15) g.nonfault_angles.push_back(a);
    g.nonfault_variants = static_cast<int>(kv.get_int("nonfaults", "variants", 4));

    if (g.fault_count() == 0 && g.nonfault_count() == 0)
      throw std::invalid_argument("grid: empty scenario grid (an axis has no values)");
    if (!g.fault_types.empty() &&
        (g.resistances.empty() || g.inception_angles.empty() || g.transformers.empty() || g.off_nominals.empty() ||
         g.locations.empty()))
      throw std::invalid_argument("grid: a fault axis is empty");
    return g;
  }
};

inline std::string phase_label_of(waveform::FaultType t) {
  switch (t) {
    case waveform::FaultType::ag: return "a";
    case waveform::FaultType::bg: return "b";
    case waveform::FaultType::cg: return "c";
    case waveform::FaultType::ab: case waveform::FaultType::abg: return "ab";
    case waveform::FaultType::bc: case waveform::FaultType::bcg: return "bc";
    case waveform::FaultType::ca: case waveform::FaultType::cag: return "ca";
    case waveform::FaultType::abcg: return "abc";
  }
  return "?";
}

inline std::string region_label_of(int location) {
  const int r = waveform::detail::region_of_location(location);
  return r == 0 ? "internal" : (r == 1 ? "forward" : "reverse");
}

/// Enumerate the grid into manifest rows (paths unset) with per-cell seeds
/// derived from the master seed and cell index.
inline manifest::Manifest enumerate_grid(const GridSpec& g) {
  manifest::Manifest m;
  const std::size_t onset = waveform::synth_event_sample(g.fs, g.duration_cycles / g.f0);
  std::size_t cell = 0;
  char buf[32];
  for (auto type : g.fault_types)
    for (auto res : g.resistances)
      for (double angle : g.inception_angles)
        for (int xfmr : g.transformers)
          for (double off : g.off_nominals)
            for (int loc : g.locations) {
              manifest::ManifestRow r;
              std::snprintf(buf, sizeof(buf), "f%06zu", cell);
              r.case_id = buf;
              r.spec.kind = waveform::EventKind::fault;
              r.spec.fault_type = type;
              r.spec.inception_angle_deg = angle;
              r.spec.resistance = res;
              r.spec.off_nominal_hz = off;
              r.spec.dc_decay_tau = g.fault_tau;
              r.spec.snr_db = g.snr_db;
              r.spec.ct_sat_level = g.ct_sat_level;
              r.spec.sync_delay_ms = g.sync_delay_ms;
              r.spec.location = loc;
              r.spec.transformer = xfmr;
              r.onset_sample = onset;
              r.label_detection = "fault";
              r.label_region = region_label_of(loc);
              r.label_location = "loc" + std::to_string(loc);
              r.label_phase = phase_label_of(type);
              r.label_faulttype = waveform::to_string(type);
              m.rows.push_back(std::move(r));
              ++cell;
            }
  std::size_t ncell = 0;
  for (auto kind : g.nonfault_kinds)
    for (double angle : g.nonfault_angles)
      for (int variant = 0; variant < g.nonfault_variants; ++variant) {
        manifest::ManifestRow r;
        std::snprintf(buf, sizeof(buf), "n%06zu", ncell);
        r.case_id = buf;
        r.spec.kind = kind;
        r.spec.inception_angle_deg = angle;
        r.spec.off_nominal_hz = 60.0;
        r.spec.dc_decay_tau = g.fault_tau;
        r.spec.snr_db = g.snr_db;
        r.spec.sync_delay_ms = g.sync_delay_ms;
        r.spec.location = 5;
        r.onset_sample = onset;
        r.label_detection = "nonfault";
        m.rows.push_back(std::move(r));
        (void)variant;
        ++ncell;
      }
  return m;
}

inline std::uint64_t case_seed(const GridSpec& g, std::size_t index) {
  return seed_combine(g.master_seed, 0xCA5E + index);
}

/// One realized corpus case: the manifest row plus its synthesized records.
struct CorpusCase {
  manifest::ManifestRow row;
  waveform::Record3Ph wf;
  std::optional<waveform::Record3Ph> grid;
};

inline std::vector<CorpusCase> build_corpus(const GridSpec& g, int jobs = 1) {
  auto m = enumerate_grid(g);
  std::vector<CorpusCase> cases(m.rows.size());
  const double duration = g.duration_cycles / g.f0;
  parallel_for(m.rows.size(), jobs, [&](std::size_t i) {
    cases[i].row = m.rows[i];
    const auto seed = case_seed(g, i);
    cases[i].wf = waveform::synthesize(cases[i].row.spec, g.fs, duration, seed, g.f0, waveform::TerminalEnd::wind_farm);
    if (g.double_end)
      cases[i].grid =
          waveform::synthesize(cases[i].row.spec, g.fs, duration, seed, g.f0, waveform::TerminalEnd::grid);
  });
  return cases;
}

/// Write a corpus to disk (records/ subdirectory + manifest.csv); returns the
/// manifest with paths relative to the output directory.
inline manifest::Manifest write_corpus(const GridSpec& g, const std::string& out_dir, int jobs = 1) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "records");
  auto cases = build_corpus(g, jobs);
  parallel_for(cases.size(), jobs, [&](std::size_t i) {
    auto& c = cases[i];
    c.row.record_wf = "records/" + c.row.case_id + "_wf.csv";
    waveform::write_csv(c.wf, (fs::path(out_dir) / c.row.record_wf).string());
    if (c.grid) {
      c.row.record_grid = "records/" + c.row.case_id + "_grid.csv";
      waveform::write_csv(*c.grid, (fs::path(out_dir) / c.row.record_grid).string());
    }
  });
  manifest::Manifest m;
  for (auto& c : cases) m.rows.push_back(c.row);
  manifest::write_csv(m, (fs::path(out_dir) / "manifest.csv").string());
  return m;
}

/// Load records referenced by a manifest; relative paths resolve against the
/// manifest's directory.
inline std::vector<CorpusCase> load_corpus(const std::string& manifest_path, int jobs = 1) {
  namespace fs = std::filesystem;
  const auto base = fs::path(manifest_path).parent_path();
  const auto m = manifest::load_csv(manifest_path, false);
  std::vector<CorpusCase> cases(m.rows.size());
  parallel_for(m.rows.size(), jobs, [&](std::size_t i) {
    cases[i].row = m.rows[i];
    const auto resolve = [&](const std::string& p) {
      return fs::path(p).is_absolute() ? p : (base / p).string();
    };
    cases[i].wf = waveform::load_csv(resolve(m.rows[i].record_wf));
    cases[i].wf.f0 = 60.0;
    if (!m.rows[i].record_grid.empty()) {
      cases[i].grid = waveform::load_csv(resolve(m.rows[i].record_grid));
      cases[i].grid->f0 = 60.0;
    }
  });
  return cases;
}

// ---------------------------------------------------------------------------
// Feature rows and datasets
// ---------------------------------------------------------------------------

inline detector::DetectorConfig detector_config_for(const config::PipelineConfig& cfg, const waveform::Record3Ph& rec) {
  detector::DetectorConfig d;
  d.beta = cfg.beta;
  d.half_cycle_samples = static_cast<std::size_t>(std::llround(rec.fs / (2.0 * rec.f0)));
  return d;
}

/// Detection-anchored analysis window: the earliest triggering sample starts
/// the recorded window, clamped so the window fits inside the record.
inline std::optional<waveform::SampleWindow> triggered_window(const waveform::Record3Ph& rec,
                                                              const config::PipelineConfig& cfg) {
  const auto detections = detector::detect(rec, detector_config_for(cfg, rec));
  const auto onset = detector::event_onset(detections);
  if (!onset) return std::nullopt;
  const auto w = waveform::window_length(cfg.window_cycles, rec.fs, rec.f0);
  if (w > rec.size()) return std::nullopt;
  const std::size_t start = std::min(*onset, rec.size() - w);
  return waveform::window_at_index(rec, start, cfg.window_cycles);
}

inline std::vector<std::string> feature_row_names(const config::PipelineConfig& cfg) {
  static constexpr const char* phases[] = {"a", "b", "c"};
  std::vector<std::string> names;
  const auto add_end = [&](const char* end) {
    for (const auto* p : phases)
      for (int id : cfg.selected_features)
        names.push_back(std::string(end) + ":" + p + ":" + features::registry::name(id));
  };
  add_end("w");
  if (cfg.double_end) add_end("g");
  return names;
}

/// Classifier input row for one case: selected features per phase from the
/// wind-farm end, grid end appended in double-end mode. Undefined features
/// impute 0. Cases whose detector never triggers yield nullopt.
inline std::optional<std::vector<double>> case_feature_row(const CorpusCase& c, const config::PipelineConfig& cfg) {
  std::vector<double> row;
  const auto append_end = [&](const waveform::Record3Ph& rec) {
    const auto win = triggered_window(rec, cfg);
    if (!win) return false;
    const auto vectors = features::extract(*win, cfg.selected_features);
    for (const auto& vec : vectors)
      for (int id : cfg.selected_features) row.push_back(vec.value_or(id, 0.0));
    return true;
  };
  if (!append_end(c.wf)) return std::nullopt;
  if (cfg.double_end) {
    if (!c.grid) return std::nullopt;
    if (!append_end(*c.grid)) return std::nullopt;
  }
  return row;
}

struct BuiltDataset {
  classify::Dataset data;
  std::vector<std::size_t> case_indices;  ///< corpus index per dataset row
};

inline BuiltDataset build_dataset(std::span<const CorpusCase> corpus, classify::Task task,
                                  const config::PipelineConfig& cfg, int jobs = 1) {
  BuiltDataset out;
  out.data.task = task;
  out.data.feature_names = feature_row_names(cfg);
  std::vector<std::optional<std::vector<double>>> rows(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    if (corpus[i].row.label(task)) rows[i] = case_feature_row(corpus[i], cfg);
  });
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto label = corpus[i].row.label(task);
    if (!label || !rows[i]) continue;
    out.data.X.push_back(std::move(*rows[i]));
    out.data.y.push_back(*label);
    out.case_indices.push_back(i);
  }
  return out;
}

struct Split {
  std::vector<std::size_t> train, test;
};

/// Stratified split: within each class, a seeded shuffle sends the first
/// round(fraction*n) rows to the test side.
inline Split stratified_split(std::span<const int> y, double test_fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> per_class;
  for (std::size_t i = 0; i < y.size(); ++i) per_class[y[i]].push_back(i);
  Split split;
  for (auto& [label, idx] : per_class) {
    Rng rng(seed_combine(seed, 0x517 + static_cast<std::uint64_t>(label)));
    for (std::size_t i = idx.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(i));
      std::swap(idx[i - 1], idx[j]);
    }
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < n_test ? split.test : split.train).push_back(idx[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

inline classify::Dataset take_rows(const classify::Dataset& d, std::span<const std::size_t> rows) {
  classify::Dataset out;
  out.task = d.task;
  out.feature_names = d.feature_names;
  for (std::size_t r : rows) {
    out.X.push_back(d.X[r]);
    out.y.push_back(d.y[r]);
  }
  return out;
}

/// Per-task ensemble: the first members train one per configured kind on the
/// full (optionally SMOTE-balanced) train set; extra members are seeded
/// bootstrap variants cycling through the kinds.
inline std::vector<classify::TrainedModel> train_task_ensemble(const classify::Dataset& train_set,
                                                               const config::PipelineConfig& cfg,
                                                               std::uint64_t task_seed) {
  classify::Dataset balanced = train_set;
  if (cfg.smote_enabled) balanced = classify::smote(train_set, cfg.smote_k, seed_combine(task_seed, 0x5307E));
  std::vector<classify::TrainedModel> models;
  for (int q = 0; q < cfg.ensemble_size; ++q) {
    const auto kind = cfg.classifiers[static_cast<std::size_t>(q) % cfg.classifiers.size()];
    if (static_cast<std::size_t>(q) < cfg.classifiers.size()) {
      models.push_back(classify::train(kind, balanced));
    } else {
      auto boot = classify::train_ensemble(kind, balanced, 1, seed_combine(task_seed, 0xB007 + static_cast<std::uint64_t>(q)));
      models.push_back(std::move(boot.front()));
    }
  }
  return models;
}

// ---------------------------------------------------------------------------
// Reports and CSV interchange
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json report_json(const classify::EvalReport& rep, classify::Task task,
                                          std::uint64_t config_hash) {
  nlohmann::ordered_json j;
  j["task"] = classify::to_string(task);
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "0x%016llx", static_cast<unsigned long long>(config_hash));
  j["config_hash"] = hash_buf;
  j["accuracy"] = rep.accuracy;
  j["ci_lo"] = rep.ci_lo;
  j["ci_hi"] = rep.ci_hi;
  j["n_test"] = rep.n_test;
  j["labels"] = manifest::label_set(task);
  j["per_class_recall"] = rep.per_class_recall;
  j["confusion"] = rep.confusion;
  return j;
}

inline void write_confusion_csv(const classify::EvalReport& rep, classify::Task task, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_confusion_csv: cannot open " + path);
  const auto& labels = manifest::label_set(task);
  out << "true\\pred";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t r = 0; r < rep.confusion.size(); ++r) {
    out << labels[r];
    for (std::size_t c = 0; c < rep.confusion[r].size(); ++c) out << ',' << rep.confusion[r][c];
    out << '\n';
  }
}

/// Feature matrix CSV: one row per (case, phase), undefined cells left empty.
inline void write_features_csv(std::span<const CorpusCase> corpus, const config::PipelineConfig& cfg,
                               std::span<const int> ids, const std::string& path, int jobs = 1) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_features_csv: cannot open " + path);
  out << "case_id,phase";
  for (int id : ids) out << ',' << features::registry::name(id);
  out << '\n';
  std::vector<std::string> chunks(corpus.size());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const auto win = triggered_window(corpus[i].wf, cfg);
    if (!win) return;
    std::vector<int> idvec(ids.begin(), ids.end());
    const auto vectors = features::extract(*win, idvec);
    std::ostringstream chunk;
    static constexpr const char* phases[] = {"a", "b", "c"};
    for (int p = 0; p < 3; ++p) {
      chunk << corpus[i].row.case_id << ',' << phases[p];
      for (int id : ids) {
        const auto& fv = vectors[static_cast<std::size_t>(p)].at(id);
        chunk << ',';
        if (fv.defined) chunk << strings::g17(fv.value);
      }
      chunk << '\n';
    }
    chunks[i] = chunk.str();
  });
  for (const auto& c : chunks) out << c;
}

struct FeatureTable {
  std::vector<std::string> names;                                        ///< registry names
  std::vector<std::string> case_ids;                                     ///< row order of first appearance
  std::map<std::string, std::array<std::vector<std::optional<double>>, 3>> by_case;
  std::size_t imputed = 0;
};

inline FeatureTable read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_features_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_features_csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = strings::split(line, ',');
  if (header.size() < 3 || header[0] != "case_id" || header[1] != "phase")
    throw std::runtime_error("read_features_csv: unexpected header");
  FeatureTable table;
  for (std::size_t i = 2; i < header.size(); ++i) table.names.emplace_back(header[i]);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strings::trim(line).empty()) continue;
    auto f = strings::split(line, ',');
    if (f.size() != header.size()) throw std::runtime_error("read_features_csv: ragged row");
    const std::string case_id(f[0]);
    const auto phase_s = f[1];
    const int p = phase_s == "a" ? 0 : (phase_s == "b" ? 1 : (phase_s == "c" ? 2 : -1));
    if (p < 0) throw std::runtime_error("read_features_csv: bad phase " + std::string(phase_s));
    auto [it, inserted] = table.by_case.try_emplace(case_id);
    if (inserted) {
      table.case_ids.push_back(case_id);
      for (auto& v : it->second) v.assign(table.names.size(), std::nullopt);
    }
    for (std::size_t c = 2; c < f.size(); ++c) {
      if (strings::trim(f[c]).empty()) continue;
      it->second[static_cast<std::size_t>(p)][c - 2] = *strings::to_double(f[c]);
    }
  }
  return table;
}

/// Phase-expanded feature matrix for mRMR: one column per (feature, phase),
/// rows are cases with a label for the task; undefined values impute 0 and
/// are counted.
inline mrmr::FeatureMatrix feature_matrix_for(FeatureTable& table, const manifest::Manifest& m,
                                              classify::Task task, std::vector<std::string>* col_names = nullptr) {
  mrmr::FeatureMatrix fm;
  const std::size_t nf = table.names.size();
  fm.columns.assign(nf * 3, {});
  static constexpr const char* phases[] = {"a", "b", "c"};
  for (std::size_t f = 0; f < nf; ++f)
    for (int p = 0; p < 3; ++p) {
      fm.feature_ids.push_back(static_cast<int>(f) * 3 + p + 1);
      if (col_names != nullptr) col_names->push_back(std::string(phases[p]) + ":" + table.names[f]);
    }
  for (const auto& row : m.rows) {
    const auto label = row.label(task);
    if (!label) continue;
    auto it = table.by_case.find(row.case_id);
    if (it == table.by_case.end()) continue;
    fm.target.push_back(*label);
    for (std::size_t f = 0; f < nf; ++f)
      for (int p = 0; p < 3; ++p) {
        const auto& cell = it->second[static_cast<std::size_t>(p)][f];
        if (!cell) ++table.imputed;
        fm.columns[f * 3 + static_cast<std::size_t>(p)].push_back(cell.value_or(0.0));
      }
  }
  return fm;
}

inline void write_ranking_csv(const mrmr::MrmrRanking& ranking, std::span<const std::string> col_names,
                              std::span<const int> col_ids, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ranking_csv: cannot open " + path);
  out << "rank,feature,relevance,redundancy,score\n";
  std::map<int, std::string> name_of;
  for (std::size_t i = 0; i < col_ids.size(); ++i) name_of[col_ids[i]] = col_names[i];
  for (std::size_t i = 0; i < ranking.steps.size(); ++i) {
    const auto& s = ranking.steps[i];
    out << (i + 1) << ',' << name_of.at(s.feature_id) << ',' << strings::g17(s.relevance) << ','
        << strings::g17(s.redundancy) << ',' << strings::g17(s.score) << '\n';
  }
}

}  // namespace relayar::pipeline
