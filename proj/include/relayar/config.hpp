#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relayar/classify.hpp"
#include "relayar/detector.hpp"
#include "relayar/features.hpp"
#include "relayar/fuzzy.hpp"
#include "relayar/strings.hpp"

namespace relayar::config {

/// Plain-text `key = value` sections. Canonical serialization (sorted
/// sections/keys) backs the config hash that reports embed for provenance.
class KvConfig {
 public:
  void set(const std::string& section, const std::string& key, const std::string& value) {
    data_[section][key] = value;
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    return s != data_.end() && s->second.count(key) > 0;
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    auto s = data_.find(section);
    if (s == data_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

  std::string require(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v) throw std::invalid_argument("config: missing [" + section + "] " + key);
    return *v;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    auto d = strings::to_double(*v);
    if (!d) throw std::invalid_argument("config: [" + section + "] " + key + " is not a number: " + *v);
    return *d;
  }

  long long get_int(const std::string& section, const std::string& key, long long fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    auto d = strings::to_ll(*v);
    if (!d) throw std::invalid_argument("config: [" + section + "] " + key + " is not an integer: " + *v);
    return *d;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    const auto s = strings::lower(strings::trim(*v));
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    throw std::invalid_argument("config: [" + section + "] " + key + " is not a boolean: " + *v);
  }

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    auto v = get(section, key);
    return v ? *v : fallback;
  }

  static KvConfig parse_string(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto s = strings::trim(line);
      if (auto hash = s.find('#'); hash != std::string_view::npos) s = strings::trim(s.substr(0, hash));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw std::invalid_argument("config parse error at line " + std::to_string(lineno) + ": unterminated section");
        section = std::string(strings::trim(s.substr(1, s.size() - 2)));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string_view::npos)
        throw std::invalid_argument("config parse error at line " + std::to_string(lineno) + ": expected key = value");
      cfg.set(section, std::string(strings::trim(s.substr(0, eq))), std::string(strings::trim(s.substr(eq + 1))));
    }
    return cfg;
  }

  static KvConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [section, kv] : data_) {
      out << '[' << section << "]\n";
      for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
    }
    return out.str();
  }

  std::uint64_t hash() const { return strings::fnv1a(serialize()); }

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

/// Resolved settings shared across the pipeline commands.
struct PipelineConfig {
  double fs = 7680.0;
  double f0 = 60.0;
  double window_cycles = 0.5;
  double beta = 0.05;
  int ar_lag = 10;
  std::vector<int> selected_features;  ///< registry ids used as classifier inputs
  bool double_end = false;
  std::uint64_t seed = 1;
  bool smote_enabled = true;
  int smote_k = 5;
  double test_fraction = 0.3;
  std::vector<classify::ModelKind> classifiers;
  int ensemble_size = 3;
  detector::GwoConfig gwo;
  fuzzy::GaConfig ga;
  int fuzzy_input_sets = 3;
  int fuzzy_output_sets = 3;
  int fuzzy_rules = 12;
  int mrmr_bins = 0;  ///< 0 = default max(2, floor(sqrt(n)))

  std::uint64_t config_hash = 0;

  static PipelineConfig from(const KvConfig& kv) {
    PipelineConfig c;
    c.fs = kv.get_double("pipeline", "fs", c.fs);
    c.f0 = kv.get_double("pipeline", "f0", c.f0);
    c.window_cycles = kv.get_double("pipeline", "window_cycles", c.window_cycles);
    c.beta = kv.get_double("pipeline", "beta", c.beta);
    c.ar_lag = static_cast<int>(kv.get_int("pipeline", "ar_lag", c.ar_lag));
    c.seed = static_cast<std::uint64_t>(kv.get_int("pipeline", "seed", 1));
    c.smote_enabled = kv.get_bool("pipeline", "smote", c.smote_enabled);
    c.smote_k = static_cast<int>(kv.get_int("pipeline", "smote_k", c.smote_k));
    c.test_fraction = kv.get_double("pipeline", "test_fraction", c.test_fraction);
    c.ensemble_size = static_cast<int>(kv.get_int("pipeline", "ensemble_size", c.ensemble_size));
    const auto end_mode = kv.get_string("pipeline", "end_mode", "single");
    if (end_mode == "single") c.double_end = false;
    else if (end_mode == "double") c.double_end = true;
    else throw std::invalid_argument("config: end_mode must be single or double");

    const auto features = kv.get_string("features", "selected", "ar_coeff_2, ar_coeff_5, ar_coeff_6");
    for (auto part : strings::split(features, ',')) {
      const auto name = strings::trim(part);
      if (name.empty()) continue;
      c.selected_features.push_back(features::registry::id(name));
    }
    if (c.selected_features.empty()) throw std::invalid_argument("config: [features] selected must be non-empty");

    const auto kinds = kv.get_string("pipeline", "classifiers", "knn, decision_tree, gaussian_nb");
    for (auto part : strings::split(kinds, ',')) {
      const auto name = strings::trim(part);
      if (name.empty()) continue;
      c.classifiers.push_back(classify::parse_model_kind(name));
    }
    if (c.classifiers.empty()) throw std::invalid_argument("config: classifiers must be non-empty");

    c.gwo.population = static_cast<int>(kv.get_int("gwo", "population", 30));
    c.gwo.dim = 1;
    c.gwo.lower = kv.get_double("gwo", "lower", 0.0);
    c.gwo.upper = kv.get_double("gwo", "upper", 1.0);
    c.gwo.max_iter = static_cast<int>(kv.get_int("gwo", "max_iter", 100));
    c.gwo.seed = seed_combine(c.seed, 0x6F0);

    c.ga.population = static_cast<int>(kv.get_int("ga", "population", 40));
    c.ga.generations = static_cast<int>(kv.get_int("ga", "generations", 60));
    c.ga.crossover_rate = kv.get_double("ga", "crossover_rate", 0.8);
    c.ga.mutation_rate = kv.get_double("ga", "mutation_rate", 0.15);
    c.ga.elitism_count = static_cast<int>(kv.get_int("ga", "elitism", 2));
    c.ga.seed = seed_combine(c.seed, 0x6A);
    c.fuzzy_input_sets = static_cast<int>(kv.get_int("ga", "input_sets", c.fuzzy_input_sets));
    c.fuzzy_output_sets = static_cast<int>(kv.get_int("ga", "output_sets", c.fuzzy_output_sets));
    c.fuzzy_rules = static_cast<int>(kv.get_int("ga", "rules", c.fuzzy_rules));

    c.mrmr_bins = static_cast<int>(kv.get_int("mrmr", "bins", 0));
    c.config_hash = kv.hash();
    return c;
  }
};

}  // namespace relayar::config
