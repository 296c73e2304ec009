#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relayar/rng.hpp"
#include "relayar/strings.hpp"

namespace relayar::fuzzy {

/// Trapezoidal membership: 0 outside [a,d], 1 on [b,c], linear ramps between.
/// Degenerate ramps (a==b or c==d) act as steps.
struct Trapezoid {
  double a = 0, b = 0, c = 0, d = 0;

  void validate() const {
    if (!(a <= b && b <= c && c <= d)) throw std::invalid_argument("Trapezoid: breakpoints must satisfy a<=b<=c<=d");
  }

  double membership(double x) const {
    if (x < a || x > d) return 0.0;
    if (x >= b && x <= c) return 1.0;
    if (x < b) return a == b ? 1.0 : (x - a) / (b - a);
    return c == d ? 1.0 : (d - x) / (d - c);
  }
};

struct FuzzySet {
  std::string label;
  Trapezoid shape;
};

struct FuzzyVariable {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<FuzzySet> sets;

  int set_index(std::string_view label) const {
    for (std::size_t i = 0; i < sets.size(); ++i)
      if (sets[i].label == label) return static_cast<int>(i);
    throw std::invalid_argument("FuzzyVariable: unknown set label " + std::string(label));
  }
};

struct FuzzyRule {
  std::vector<int> antecedent;  ///< one set index per input variable; -1 = any
  int consequent = 0;           ///< output set index
};

struct InferenceResult {
  double score = 0.5;
  bool no_rule_fired = false;
  bool input_clamped = false;
};

/// Mamdani system: min AND, min implication, max aggregation, centroid
/// defuzzification on a 1001-point grid over the [0,1] output universe.
class FuzzySystem {
 public:
  std::vector<FuzzyVariable> inputs;
  FuzzyVariable output;  // universe fixed to [0,1]
  std::vector<FuzzyRule> rules;

  void validate() const {
    if (inputs.empty()) throw std::invalid_argument("FuzzySystem: needs at least one input variable");
    if (rules.empty()) throw std::invalid_argument("FuzzySystem: needs at least one rule");
    if (output.sets.empty()) throw std::invalid_argument("FuzzySystem: output needs at least one set");
    for (const auto& var : inputs) {
      if (!(var.lo < var.hi)) throw std::invalid_argument("FuzzySystem: variable universe must be non-empty");
      if (var.sets.empty()) throw std::invalid_argument("FuzzySystem: every input needs at least one set");
      for (const auto& s : var.sets) s.shape.validate();
      // coverage: max membership >= 0.5 everywhere on the universe
      for (int i = 0; i <= 200; ++i) {
        const double x = std::min(var.lo + (var.hi - var.lo) * i / 200.0, var.hi);
        double best = 0.0;
        for (const auto& s : var.sets) best = std::max(best, s.shape.membership(x));
        if (best < 0.5)
          throw std::invalid_argument("FuzzySystem: input universe of " + var.name + " not covered at x=" +
                                      strings::g17(x));
      }
    }
    for (const auto& s : output.sets) s.shape.validate();
    for (const auto& r : rules) {
      if (r.antecedent.size() != inputs.size())
        throw std::invalid_argument("FuzzySystem: rule antecedent arity mismatch");
      for (std::size_t i = 0; i < r.antecedent.size(); ++i)
        if (r.antecedent[i] < -1 || r.antecedent[i] >= static_cast<int>(inputs[i].sets.size()))
          throw std::invalid_argument("FuzzySystem: rule references a missing input set");
      if (r.consequent < 0 || r.consequent >= static_cast<int>(output.sets.size()))
        throw std::invalid_argument("FuzzySystem: rule references a missing output set");
    }
  }

  /// Centroid of the max-aggregated, min-clipped output given rule strengths.
  double defuzz_centroid(std::span<const double> strengths, bool* any_fired = nullptr) const {
    constexpr int kGrid = 1001;
    double num = 0.0, den = 0.0;
    bool fired = false;
    for (double s : strengths)
      if (s > 0.0) fired = true;
    if (any_fired != nullptr) *any_fired = fired;
    if (!fired) return 0.5;
    for (int i = 0; i < kGrid; ++i) {
      const double z = static_cast<double>(i) / (kGrid - 1);
      double mu = 0.0;
      for (std::size_t r = 0; r < rules.size(); ++r) {
        if (strengths[r] <= 0.0) continue;
        mu = std::max(mu, std::min(strengths[r], output.sets[static_cast<std::size_t>(rules[r].consequent)].shape.membership(z)));
      }
      num += z * mu;
      den += mu;
    }
    return den == 0.0 ? 0.5 : num / den;
  }

  InferenceResult infer(std::span<const double> x) const {
    if (x.size() != inputs.size()) throw std::invalid_argument("infer: input arity mismatch");
    InferenceResult out;
    std::vector<double> clamped(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      clamped[i] = std::clamp(x[i], inputs[i].lo, inputs[i].hi);
      if (clamped[i] != x[i]) out.input_clamped = true;
    }
    std::vector<double> strengths(rules.size(), 0.0);
    for (std::size_t r = 0; r < rules.size(); ++r) {
      double s = 1.0;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const int a = rules[r].antecedent[i];
        if (a < 0) continue;  // unconstrained term
        s = std::min(s, inputs[i].sets[static_cast<std::size_t>(a)].shape.membership(clamped[i]));
      }
      strengths[r] = s;
    }
    bool fired = false;
    out.score = defuzz_centroid(strengths, &fired);
    out.no_rule_fired = !fired;
    if (out.no_rule_fired) out.score = 0.5;
    return out;
  }
};

/// Fault verdict: defuzzified score >= 0.5, boundary inclusive.
inline bool decide(const FuzzySystem& sys, std::span<const double> x) { return sys.infer(x).score >= 0.5; }

// ---------------------------------------------------------------------------
// Serialization (versioned, round-trippable)
// ---------------------------------------------------------------------------

inline std::string serialize(const FuzzySystem& sys) {
  std::ostringstream out;
  out << "relayar-fuzzy v1\n";
  const auto write_var = [&](const char* tag, const FuzzyVariable& v) {
    out << tag << ' ' << v.name << ' ' << strings::g17(v.lo) << ' ' << strings::g17(v.hi) << ' ' << v.sets.size()
        << '\n';
    for (const auto& s : v.sets)
      out << "set " << s.label << ' ' << strings::g17(s.shape.a) << ' ' << strings::g17(s.shape.b) << ' '
          << strings::g17(s.shape.c) << ' ' << strings::g17(s.shape.d) << '\n';
  };
  for (const auto& v : sys.inputs) write_var("input", v);
  write_var("output", sys.output);
  out << "rules " << sys.rules.size() << '\n';
  for (const auto& r : sys.rules) {
    out << "rule";
    for (std::size_t i = 0; i < r.antecedent.size(); ++i) {
      if (r.antecedent[i] < 0) out << " *";
      else out << ' ' << sys.inputs[i].sets[static_cast<std::size_t>(r.antecedent[i])].label;
    }
    out << " => " << sys.output.sets[static_cast<std::size_t>(r.consequent)].label << '\n';
  }
  return out.str();
}

inline FuzzySystem parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  const auto next = [&]() {
    while (std::getline(in, line)) {
      if (!strings::trim(line).empty()) return true;
    }
    return false;
  };
  if (!next() || strings::trim(line) != "relayar-fuzzy v1")
    throw std::invalid_argument("fuzzy parse: bad header (expected 'relayar-fuzzy v1')");

  FuzzySystem sys;
  const auto parse_var = [&](std::span<const std::string_view> tok) {
    FuzzyVariable v;
    v.name = std::string(tok[1]);
    v.lo = *strings::to_double(tok[2]);
    v.hi = *strings::to_double(tok[3]);
    const auto nsets = *strings::to_ll(tok[4]);
    for (long long i = 0; i < nsets; ++i) {
      if (!next()) throw std::invalid_argument("fuzzy parse: truncated set list");
      std::istringstream ls{line};
      std::string kw, label;
      double a, b, c, d;
      if (!(ls >> kw >> label >> a >> b >> c >> d) || kw != "set")
        throw std::invalid_argument("fuzzy parse: bad set line: " + line);
      v.sets.push_back({label, {a, b, c, d}});
    }
    return v;
  };

  bool have_output = false;
  while (next()) {
    auto raw = strings::split(strings::trim(line), ' ');
    std::vector<std::string_view> tok;
    for (auto t : raw)
      if (!t.empty()) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok[0] == "input") {
      if (tok.size() != 5) throw std::invalid_argument("fuzzy parse: bad input line: " + line);
      sys.inputs.push_back(parse_var(tok));
    } else if (tok[0] == "output") {
      if (tok.size() != 5) throw std::invalid_argument("fuzzy parse: bad output line: " + line);
      sys.output = parse_var(tok);
      have_output = true;
    } else if (tok[0] == "rules") {
      const auto nrules = *strings::to_ll(tok[1]);
      for (long long r = 0; r < nrules; ++r) {
        if (!next()) throw std::invalid_argument("fuzzy parse: truncated rule list");
        auto rraw = strings::split(strings::trim(line), ' ');
        std::vector<std::string_view> rtok;
        for (auto t : rraw)
          if (!t.empty()) rtok.push_back(t);
        if (rtok.size() != sys.inputs.size() + 3 || rtok[0] != "rule" || rtok[rtok.size() - 2] != "=>")
          throw std::invalid_argument("fuzzy parse: bad rule line: " + line);
        FuzzyRule rule;
        for (std::size_t i = 0; i < sys.inputs.size(); ++i)
          rule.antecedent.push_back(rtok[1 + i] == "*" ? -1 : sys.inputs[i].set_index(rtok[1 + i]));
        rule.consequent = sys.output.set_index(rtok.back());
        sys.rules.push_back(rule);
      }
    } else {
      throw std::invalid_argument("fuzzy parse: unexpected line: " + line);
    }
  }
  if (!have_output) throw std::invalid_argument("fuzzy parse: missing output variable");
  sys.validate();
  return sys;
}

inline void save(const FuzzySystem& sys, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("fuzzy save: cannot open " + path);
  out << serialize(sys);
}

inline FuzzySystem load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("fuzzy load: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

// ---------------------------------------------------------------------------
// Adaptive re-tune trigger
// ---------------------------------------------------------------------------

/// Extremes of the tracked coefficients over the previous time frame.
struct AdaptiveState {
  std::array<double, 2> a_min{};  // [A2, A5]
  std::array<double, 2> a_max{};
  bool initialized = false;
};

/// Frame extremes vs the previous frame's: re-tune when the new frame escapes
/// the previous envelope. The first frame ever bootstraps (returns true).
/// State always becomes the current frame's extremes.
inline std::pair<bool, AdaptiveState> adaptive_check(const AdaptiveState& prev,
                                                     std::span<const std::array<double, 2>> frame) {
  if (frame.empty()) throw std::invalid_argument("adaptive_check: frame must be non-empty");
  AdaptiveState cur;
  cur.initialized = true;
  cur.a_min = frame[0];
  cur.a_max = frame[0];
  for (const auto& pt : frame)
    for (int i = 0; i < 2; ++i) {
      cur.a_min[static_cast<std::size_t>(i)] = std::min(cur.a_min[static_cast<std::size_t>(i)], pt[static_cast<std::size_t>(i)]);
      cur.a_max[static_cast<std::size_t>(i)] = std::max(cur.a_max[static_cast<std::size_t>(i)], pt[static_cast<std::size_t>(i)]);
    }
  bool retune = !prev.initialized;
  if (prev.initialized)
    for (int i = 0; i < 2; ++i)
      retune = retune || cur.a_min[static_cast<std::size_t>(i)] < prev.a_min[static_cast<std::size_t>(i)] ||
               cur.a_max[static_cast<std::size_t>(i)] > prev.a_max[static_cast<std::size_t>(i)];
  return {retune, cur};
}

// ---------------------------------------------------------------------------
// Genetic tuning
// ---------------------------------------------------------------------------

struct GaConfig {
  int population = 40;
  int generations = 60;
  double crossover_rate = 0.8;
  double mutation_rate = 0.15;
  int elitism_count = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (population < 4) throw std::invalid_argument("GaConfig: population must be >= 4");
    if (generations < 0) throw std::invalid_argument("GaConfig: generations must be >= 0");
    if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 || mutation_rate > 1)
      throw std::invalid_argument("GaConfig: rates must be in [0,1]");
    if (elitism_count < 0 || elitism_count >= population)
      throw std::invalid_argument("GaConfig: elitism_count must be in [0, population)");
  }
};

struct VariableTemplate {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  int sets = 3;
};

/// Structural skeleton the GA fills with numbers: set counts per variable and
/// the rule count. Membership functions decode as a sorted-knot partition so
/// every chromosome yields a covered universe.
struct FuzzyTemplate {
  std::vector<VariableTemplate> inputs;
  int output_sets = 2;
  int rules = 8;

  std::size_t knot_genes(int sets) const { return static_cast<std::size_t>(2 * sets - 2); }

  std::size_t genome_length() const {
    std::size_t g = 0;
    for (const auto& v : inputs) g += knot_genes(v.sets);
    g += knot_genes(output_sets);
    g += static_cast<std::size_t>(rules) * (inputs.size() + 1);
    return g;
  }
};

namespace detail {

inline std::vector<FuzzySet> partition_sets(double lo, double hi, int nsets, std::span<const double> knots,
                                            const char* prefix) {
  std::vector<double> k(knots.begin(), knots.end());
  for (auto& v : k) v = std::clamp(v, lo, hi);
  std::sort(k.begin(), k.end());
  std::vector<FuzzySet> sets;
  for (int i = 0; i < nsets; ++i) {
    Trapezoid t;
    if (nsets == 1) {
      t = {lo, lo, hi, hi};
    } else if (i == 0) {
      t = {lo, lo, k[0], k[1]};
    } else if (i == nsets - 1) {
      t = {k[static_cast<std::size_t>(2 * i - 2)], k[static_cast<std::size_t>(2 * i - 1)], hi, hi};
    } else {
      t = {k[static_cast<std::size_t>(2 * i - 2)], k[static_cast<std::size_t>(2 * i - 1)],
           k[static_cast<std::size_t>(2 * i)], k[static_cast<std::size_t>(2 * i + 1)]};
    }
    sets.push_back({std::string(prefix) + std::to_string(i), t});
  }
  return sets;
}

}  // namespace detail

inline FuzzySystem decode_chromosome(const FuzzyTemplate& tmpl, std::span<const double> genes) {
  if (genes.size() != tmpl.genome_length()) throw std::invalid_argument("decode_chromosome: genome length mismatch");
  FuzzySystem sys;
  std::size_t at = 0;
  for (const auto& vt : tmpl.inputs) {
    FuzzyVariable v;
    v.name = vt.name;
    v.lo = vt.lo;
    v.hi = vt.hi;
    const auto nk = tmpl.knot_genes(vt.sets);
    v.sets = detail::partition_sets(vt.lo, vt.hi, vt.sets, genes.subspan(at, nk), "m");
    at += nk;
    sys.inputs.push_back(std::move(v));
  }
  sys.output.name = "score";
  sys.output.lo = 0.0;
  sys.output.hi = 1.0;
  const auto nko = tmpl.knot_genes(tmpl.output_sets);
  sys.output.sets = detail::partition_sets(0.0, 1.0, tmpl.output_sets, genes.subspan(at, nko), "o");
  at += nko;
  for (int r = 0; r < tmpl.rules; ++r) {
    FuzzyRule rule;
    for (std::size_t i = 0; i < tmpl.inputs.size(); ++i) {
      // index tmpl.inputs[i].sets encodes the "any" wildcard
      const auto idx = std::clamp(static_cast<int>(std::llround(genes[at++])), 0, tmpl.inputs[i].sets);
      rule.antecedent.push_back(idx == tmpl.inputs[i].sets ? -1 : idx);
    }
    const auto cdx = static_cast<int>(std::llround(genes[at++]));
    rule.consequent = std::clamp(cdx, 0, tmpl.output_sets - 1);
    sys.rules.push_back(std::move(rule));
  }
  return sys;
}

/// Inverse of decode_chromosome for systems in partition form.
inline std::vector<double> encode_chromosome(const FuzzyTemplate& tmpl, const FuzzySystem& sys) {
  std::vector<double> genes;
  const auto encode_var = [&](const FuzzyVariable& v) {
    for (std::size_t i = 0; i + 1 < v.sets.size(); ++i) {
      genes.push_back(v.sets[i].shape.c);
      genes.push_back(v.sets[i].shape.d);
    }
  };
  for (const auto& v : sys.inputs) encode_var(v);
  encode_var(sys.output);
  for (const auto& r : sys.rules) {
    for (std::size_t i = 0; i < r.antecedent.size(); ++i)
      genes.push_back(r.antecedent[i] < 0 ? static_cast<double>(tmpl.inputs[i].sets)
                                          : static_cast<double>(r.antecedent[i]));
    genes.push_back(static_cast<double>(r.consequent));
  }
  if (genes.size() != tmpl.genome_length()) throw std::invalid_argument("encode_chromosome: system/template mismatch");
  return genes;
}

struct LabeledInputs {
  std::vector<double> x;
  bool is_fault = false;
};

/// Template with per-input universes spanning the corpus's central 95%
/// (2.5/97.5 quantiles plus a 5% pad). Rare ill-conditioned coefficient
/// spikes would otherwise stretch min/max universes by orders of magnitude
/// and flatten every membership function; infer() clamps such outliers.
inline FuzzyTemplate make_template(std::span<const LabeledInputs> corpus, std::span<const std::string> names,
                                   int input_sets, int output_sets, int rules) {
  if (corpus.empty()) throw std::invalid_argument("make_template: empty corpus");
  for (const auto& c : corpus)
    if (c.x.size() != names.size()) throw std::invalid_argument("make_template: arity mismatch");
  FuzzyTemplate tmpl;
  tmpl.output_sets = output_sets;
  tmpl.rules = rules;
  for (std::size_t v = 0; v < names.size(); ++v) {
    std::vector<double> col;
    col.reserve(corpus.size());
    for (const auto& c : corpus) col.push_back(c.x[v]);
    std::sort(col.begin(), col.end());
    const auto at = [&](double p) {
      const auto idx = static_cast<std::size_t>(p * static_cast<double>(col.size() - 1) + 0.5);
      return col[std::min(idx, col.size() - 1)];
    };
    const double lo = at(0.025);
    const double hi = at(0.975);
    const double pad = 0.05 * (hi - lo) + 1e-9;
    tmpl.inputs.push_back({names[v], lo - pad, hi + pad, input_sets});
  }
  return tmpl;
}

/// Mean of per-class recalls under decide(); robust to class imbalance.
inline double balanced_accuracy(const FuzzySystem& sys, std::span<const LabeledInputs> corpus) {
  std::array<std::size_t, 2> total{0, 0}, correct{0, 0};
  for (const auto& c : corpus) {
    const auto cls = static_cast<std::size_t>(c.is_fault ? 1 : 0);
    ++total[cls];
    if (decide(sys, c.x) == c.is_fault) ++correct[cls];
  }
  double acc = 0.0;
  int classes = 0;
  for (int i = 0; i < 2; ++i)
    if (total[static_cast<std::size_t>(i)] > 0) {
      acc += static_cast<double>(correct[static_cast<std::size_t>(i)]) / static_cast<double>(total[static_cast<std::size_t>(i)]);
      ++classes;
    }
  return classes == 0 ? 0.0 : acc / classes;
}

namespace detail {

/// GA fitness: balanced accuracy plus a margin bonus bounded at 0.005, small
/// enough that it never outweighs a single recall step on corpora of up to
/// a hundred cases per class. The bonus gives the otherwise step-shaped
/// landscape a slope toward correctly-signed scores.
inline double tuning_fitness(const FuzzySystem& sys, std::span<const LabeledInputs> corpus) {
  std::array<std::size_t, 2> total{0, 0}, correct{0, 0};
  double margin = 0.0;
  for (const auto& c : corpus) {
    const auto cls = static_cast<std::size_t>(c.is_fault ? 1 : 0);
    ++total[cls];
    const double score = sys.infer(c.x).score;
    if ((score >= 0.5) == c.is_fault) ++correct[cls];
    margin += std::clamp((c.is_fault ? 1.0 : -1.0) * (score - 0.5) / 0.5, -1.0, 1.0);
  }
  double acc = 0.0;
  int classes = 0;
  for (int i = 0; i < 2; ++i)
    if (total[static_cast<std::size_t>(i)] > 0) {
      acc += static_cast<double>(correct[static_cast<std::size_t>(i)]) / static_cast<double>(total[static_cast<std::size_t>(i)]);
      ++classes;
    }
  acc = classes == 0 ? 0.0 : acc / classes;
  return acc + 0.005 * margin / static_cast<double>(corpus.size());
}

}  // namespace detail

struct GaTuneResult {
  FuzzySystem system;
  double train_balanced_accuracy = 0.0;
  std::vector<double> fitness_trace;  ///< best fitness after each generation
};

/// Tune membership breakpoints and rules by a genetic algorithm: tournament
/// selection (size 3), one-point crossover, Gaussian mutation, elitism.
/// Deterministic per seed. generations == 0 returns the best of the random
/// initial population.
inline GaTuneResult ga_tune(std::span<const LabeledInputs> train, const FuzzyTemplate& tmpl, const GaConfig& cfg) {
  cfg.validate();
  if (tmpl.inputs.empty() || tmpl.rules < 1 || tmpl.output_sets < 1)
    throw std::invalid_argument("ga_tune: degenerate template");
  bool has_fault = false, has_ok = false;
  for (const auto& c : train) {
    has_fault |= c.is_fault;
    has_ok |= !c.is_fault;
    if (c.x.size() != tmpl.inputs.size()) throw std::invalid_argument("ga_tune: corpus arity mismatch");
  }
  if (!has_fault || !has_ok) throw std::invalid_argument("ga_tune: both classes must be present");

  Rng rng(seed_combine(cfg.seed, 0x6A));
  const std::size_t genome = tmpl.genome_length();
  const auto pop_size = static_cast<std::size_t>(cfg.population);

  const auto random_genome = [&]() {
    std::vector<double> g(genome);
    std::size_t at = 0;
    for (const auto& vt : tmpl.inputs)
      for (std::size_t i = 0; i < tmpl.knot_genes(vt.sets); ++i) g[at++] = rng.uniform(vt.lo, vt.hi);
    for (std::size_t i = 0; i < tmpl.knot_genes(tmpl.output_sets); ++i) g[at++] = rng.uniform();
    for (int r = 0; r < tmpl.rules; ++r) {
      // sparse-biased antecedents: half the terms start as wildcards, so
      // single-feature rules exist in the initial population
      for (const auto& vt : tmpl.inputs)
        g[at++] = rng.uniform() < 0.5 ? static_cast<double>(vt.sets)
                                      : rng.uniform(0.0, static_cast<double>(vt.sets));
      g[at++] = rng.uniform(0.0, static_cast<double>(tmpl.output_sets));
    }
    return g;
  };

  // Structured starting points: edge-isolating input partitions, a thin
  // low-output set, one always-firing low rule, and single-antecedent
  // extreme-detector rules. The GA refines these instead of having to
  // assemble the whole architecture from noise.
  const auto heuristic_genome = [&]() {
    std::vector<double> g(genome);
    std::size_t at = 0;
    for (const auto& vt : tmpl.inputs) {
      const double range = vt.hi - vt.lo;
      const auto nk = tmpl.knot_genes(vt.sets);
      std::vector<double> knots(nk);
      for (std::size_t i = 0; i < nk; ++i)
        knots[i] = i < nk / 2 ? rng.uniform(vt.lo, vt.lo + 0.45 * range) : rng.uniform(vt.hi - 0.45 * range, vt.hi);
      std::sort(knots.begin(), knots.end());
      for (double k : knots) g[at++] = k;
    }
    {
      // thin low set, right-concentrated high set
      const auto nk = tmpl.knot_genes(tmpl.output_sets);
      std::vector<double> knots(nk);
      for (std::size_t i = 0; i < nk; ++i)
        knots[i] = i < nk / 2 ? rng.uniform(0.02, 0.25) : rng.uniform(0.6, 0.95);
      std::sort(knots.begin(), knots.end());
      for (double k : knots) g[at++] = k;
    }
    for (int r = 0; r < tmpl.rules; ++r) {
      // rule 0 is the always-fire low baseline; the rest cycle through the
      // inputs as single-antecedent extreme detectors, alternating which
      // edge set they watch on each pass
      const auto n_in = static_cast<int>(tmpl.inputs.size());
      const int focus = r == 0 ? -1 : (r - 1) % n_in;
      const int pass = r == 0 ? 0 : (r - 1) / n_in;
      for (int i = 0; i < n_in; ++i) {
        if (i != focus) {
          g[at++] = static_cast<double>(tmpl.inputs[static_cast<std::size_t>(i)].sets);  // wildcard
        } else {
          const bool low_edge = pass % 2 == 0;
          g[at++] = low_edge ? 0.0 : static_cast<double>(tmpl.inputs[static_cast<std::size_t>(i)].sets - 1);
        }
      }
      g[at++] = r == 0 ? 0.0 : static_cast<double>(tmpl.output_sets - 1);
    }
    return g;
  };

  const auto fitness_of = [&](const std::vector<double>& g) {
    return detail::tuning_fitness(decode_chromosome(tmpl, g), train);
  };

  std::vector<std::vector<double>> pop(pop_size);
  std::vector<double> fit(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) {
    pop[i] = i % 4 == 0 ? heuristic_genome() : random_genome();
    fit[i] = fitness_of(pop[i]);
  }

  const auto rank_order = [&]() {
    std::vector<std::size_t> order(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    return order;
  };

  GaTuneResult result;
  for (int gen = 0; gen < cfg.generations; ++gen) {
    const auto order = rank_order();
    std::vector<std::vector<double>> next;
    next.reserve(pop_size);
    for (int e = 0; e < cfg.elitism_count; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);

    const auto tournament = [&]() -> const std::vector<double>& {
      std::size_t best = rng.uniform_int(pop_size);
      for (int t = 1; t < 3; ++t) {
        const std::size_t c = rng.uniform_int(pop_size);
        if (fit[c] > fit[best]) best = c;
      }
      return pop[best];
    };

    while (next.size() < pop_size) {
      auto child_a = tournament();
      auto child_b = tournament();
      std::vector<double> a = child_a, b = child_b;
      if (rng.uniform() < cfg.crossover_rate && genome >= 2) {
        const std::size_t cut = 1 + rng.uniform_int(genome - 1);
        for (std::size_t i = cut; i < genome; ++i) std::swap(a[i], b[i]);
      }
      const auto mutate = [&](std::vector<double>& g) {
        std::size_t at = 0;
        for (const auto& vt : tmpl.inputs)
          for (std::size_t i = 0; i < tmpl.knot_genes(vt.sets); ++i, ++at)
            if (rng.uniform() < cfg.mutation_rate) g[at] += rng.gaussian(0.0, 0.08 * (vt.hi - vt.lo));
        for (std::size_t i = 0; i < tmpl.knot_genes(tmpl.output_sets); ++i, ++at)
          if (rng.uniform() < cfg.mutation_rate) g[at] += rng.gaussian(0.0, 0.08);
        // rule genes are index-valued: mutate by uniform re-draw so the rule
        // base explores combinations instead of random-walking
        for (int r = 0; r < tmpl.rules; ++r) {
          for (const auto& vt : tmpl.inputs) {
            if (rng.uniform() < cfg.mutation_rate) g[at] = rng.uniform(0.0, static_cast<double>(vt.sets) + 1.0);
            ++at;
          }
          if (rng.uniform() < cfg.mutation_rate) g[at] = rng.uniform(0.0, static_cast<double>(tmpl.output_sets));
          ++at;
        }
      };
      mutate(a);
      next.push_back(std::move(a));
      if (next.size() < pop_size) {
        mutate(b);
        next.push_back(std::move(b));
      }
    }
    pop = std::move(next);
    for (std::size_t i = 0; i < pop_size; ++i) fit[i] = fitness_of(pop[i]);
    const auto order2 = rank_order();
    result.fitness_trace.push_back(fit[order2[0]]);
  }

  const auto order = rank_order();
  result.system = decode_chromosome(tmpl, pop[order[0]]);
  result.train_balanced_accuracy = balanced_accuracy(result.system, train);
  result.system.validate();
  return result;
}

}  // namespace relayar::fuzzy
