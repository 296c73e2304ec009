#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "relayar/fuzzy.hpp"
#include "relayar/rng.hpp"
#include "relayar/strings.hpp"

namespace relayar::classify {

enum class Task { detection, region, location, phase, faulttype };

inline int task_cardinality(Task t) {
  switch (t) {
    case Task::detection: return 2;
    case Task::region: return 3;
    case Task::location: return 8;
    case Task::phase: return 7;
    case Task::faulttype: return 10;
  }
  return 0;
}

inline const char* to_string(Task t) {
  switch (t) {
    case Task::detection: return "detection";
    case Task::region: return "region";
    case Task::location: return "location";
    case Task::phase: return "phase";
    case Task::faulttype: return "faulttype";
  }
  return "?";
}

inline Task parse_task(std::string_view s) {
  if (s == "detection") return Task::detection;
  if (s == "region") return Task::region;
  if (s == "location") return Task::location;
  if (s == "phase") return Task::phase;
  if (s == "faulttype") return Task::faulttype;
  throw std::invalid_argument("unknown task: " + std::string(s));
}

inline std::uint64_t schema_hash(std::span<const std::string> feature_names) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : feature_names) {
    h = strings::fnv1a(n, h);
    h = strings::fnv1a("\x1f", h);
  }
  return h;
}

struct Dataset {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  Task task = Task::detection;
  std::vector<std::string> feature_names;

  std::size_t n_rows() const { return X.size(); }
  std::uint64_t schema() const { return schema_hash(feature_names); }

  void validate() const {
    if (X.size() != y.size()) throw std::invalid_argument("Dataset: X/y size mismatch");
    const int c = task_cardinality(task);
    for (int label : y)
      if (label < 0 || label >= c) throw std::invalid_argument("Dataset: label outside task cardinality");
    for (const auto& row : X) {
      if (row.size() != feature_names.size()) throw std::invalid_argument("Dataset: row width mismatch");
      for (double v : row)
        if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature value");
    }
  }
};

struct Hyper {
  int knn_k = 5;
  int dt_max_depth = 12;
  int dt_min_leaf = 2;
  double nb_var_floor_rel = 1e-9;
};

enum class ModelKind { knn, decision_tree, gaussian_nb };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::knn: return "knn";
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::gaussian_nb: return "gaussian_nb";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "knn") return ModelKind::knn;
  if (s == "decision_tree" || s == "dt") return ModelKind::decision_tree;
  if (s == "gaussian_nb" || s == "nb") return ModelKind::gaussian_nb;
  throw std::invalid_argument("unknown classifier kind: " + std::string(s));
}

namespace detail {

struct KnnModel {
  int k = 5;
  std::vector<std::vector<double>> X;
  std::vector<int> y;
};

struct TreeNode {
  bool leaf = true;
  int feature = -1;
  double threshold = 0.0;
  int left = -1, right = -1;
  std::vector<double> class_freq;  // for leaves
};

struct TreeModel {
  std::vector<TreeNode> nodes;
};

struct NbModel {
  std::vector<double> log_prior;                 // per class
  std::vector<std::vector<double>> mean, var;    // [class][feature]
  std::vector<bool> class_present;
};

}  // namespace detail

/// A trained supervisory classifier; predictions reject feature schemas whose
/// hash differs from the training schema.
struct TrainedModel {
  ModelKind kind = ModelKind::knn;
  Task task = Task::detection;
  int classes = 2;
  std::uint64_t schema = 0;
  std::variant<detail::KnnModel, detail::TreeModel, detail::NbModel> impl;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

inline double gini(std::span<const std::size_t> counts, std::size_t total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    g -= p * p;
  }
  return g;
}

inline int build_tree(TreeModel& tree, const Dataset& d, std::vector<std::size_t> rows, int depth,
                      const Hyper& hyper, int classes) {
  TreeNode node;
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
  for (std::size_t r : rows) ++counts[static_cast<std::size_t>(d.y[r])];
  node.class_freq.resize(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c)
    node.class_freq[static_cast<std::size_t>(c)] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(rows.size());

  const bool pure = *std::max_element(counts.begin(), counts.end()) == rows.size();
  if (pure || depth >= hyper.dt_max_depth || rows.size() < 2 * static_cast<std::size_t>(hyper.dt_min_leaf)) {
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  const double parent_gini = gini(counts, rows.size());
  double best_gain = 0.0;
  int best_feature = -1;
  double best_threshold = 0.0;
  const std::size_t n_features = d.feature_names.size();
  for (std::size_t f = 0; f < n_features; ++f) {
    std::vector<std::size_t> order = rows;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return d.X[a][f] < d.X[b][f]; });
    std::vector<std::size_t> left_counts(static_cast<std::size_t>(classes), 0);
    std::vector<std::size_t> right_counts = counts;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const auto cls = static_cast<std::size_t>(d.y[order[i]]);
      ++left_counts[cls];
      --right_counts[cls];
      const double v = d.X[order[i]][f], vn = d.X[order[i + 1]][f];
      if (v == vn) continue;
      const std::size_t nl = i + 1, nr = order.size() - nl;
      if (nl < static_cast<std::size_t>(hyper.dt_min_leaf) || nr < static_cast<std::size_t>(hyper.dt_min_leaf))
        continue;
      const double w = static_cast<double>(rows.size());
      const double gain = parent_gini - (static_cast<double>(nl) / w) * gini(left_counts, nl) -
                          (static_cast<double>(nr) / w) * gini(right_counts, nr);
      // strictly-greater keeps the lowest (feature, threshold) on ties
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        best_threshold = (v + vn) / 2.0;
      }
    }
  }

  if (best_feature < 0) {
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  std::vector<std::size_t> left_rows, right_rows;
  for (std::size_t r : rows)
    (d.X[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_rows : right_rows).push_back(r);
  node.leaf = false;
  node.feature = best_feature;
  node.threshold = best_threshold;
  tree.nodes.push_back(std::move(node));
  const auto self = static_cast<int>(tree.nodes.size()) - 1;
  const int left = build_tree(tree, d, std::move(left_rows), depth + 1, hyper, classes);
  const int right = build_tree(tree, d, std::move(right_rows), depth + 1, hyper, classes);
  tree.nodes[static_cast<std::size_t>(self)].left = left;
  tree.nodes[static_cast<std::size_t>(self)].right = right;
  return self;
}

}  // namespace detail

inline TrainedModel train(ModelKind kind, const Dataset& d, const Hyper& hyper = {}) {
  d.validate();
  const int classes = task_cardinality(d.task);
  std::vector<std::size_t> per_class(static_cast<std::size_t>(classes), 0);
  for (int label : d.y) ++per_class[static_cast<std::size_t>(label)];
  int present = 0;
  for (std::size_t c : per_class)
    if (c > 0) ++present;
  if (present < 2) throw std::invalid_argument("train: need at least 2 classes present");
  for (std::size_t c : per_class)
    if (c > 0 && c < 5) throw std::invalid_argument("train: every present class needs >= 5 rows");

  TrainedModel model;
  model.kind = kind;
  model.task = d.task;
  model.classes = classes;
  model.schema = d.schema();
  switch (kind) {
    case ModelKind::knn:
      model.impl = detail::KnnModel{hyper.knn_k, d.X, d.y};
      break;
    case ModelKind::decision_tree: {
      detail::TreeModel tree;
      std::vector<std::size_t> rows(d.n_rows());
      std::iota(rows.begin(), rows.end(), 0);
      detail::build_tree(tree, d, std::move(rows), 0, hyper, classes);
      model.impl = std::move(tree);
      break;
    }
    case ModelKind::gaussian_nb: {
      detail::NbModel nb;
      const std::size_t nf = d.feature_names.size();
      nb.log_prior.assign(static_cast<std::size_t>(classes), -std::numeric_limits<double>::infinity());
      nb.mean.assign(static_cast<std::size_t>(classes), std::vector<double>(nf, 0.0));
      nb.var.assign(static_cast<std::size_t>(classes), std::vector<double>(nf, 0.0));
      nb.class_present.assign(static_cast<std::size_t>(classes), false);
      for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const auto c = static_cast<std::size_t>(d.y[i]);
        for (std::size_t f = 0; f < nf; ++f) nb.mean[c][f] += d.X[i][f];
      }
      for (int c = 0; c < classes; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        if (per_class[cc] == 0) continue;
        nb.class_present[cc] = true;
        nb.log_prior[cc] = std::log(static_cast<double>(per_class[cc]) / static_cast<double>(d.n_rows()));
        for (std::size_t f = 0; f < nf; ++f) nb.mean[cc][f] /= static_cast<double>(per_class[cc]);
      }
      for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const auto c = static_cast<std::size_t>(d.y[i]);
        for (std::size_t f = 0; f < nf; ++f) {
          const double dv = d.X[i][f] - nb.mean[c][f];
          nb.var[c][f] += dv * dv;
        }
      }
      double max_var = 0.0;
      for (int c = 0; c < classes; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        if (per_class[cc] == 0) continue;
        for (std::size_t f = 0; f < nf; ++f) {
          nb.var[cc][f] /= static_cast<double>(per_class[cc]);
          max_var = std::max(max_var, nb.var[cc][f]);
        }
      }
      const double floor_v = std::max(hyper.nb_var_floor_rel * max_var, 1e-300);
      for (int c = 0; c < classes; ++c)
        for (auto& v : nb.var[static_cast<std::size_t>(c)]) v = std::max(v, floor_v);
      model.impl = std::move(nb);
      break;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> knn_proba(const KnnModel& m, std::span<const double> row, int classes) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(m.X.size());
  for (std::size_t i = 0; i < m.X.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t f = 0; f < row.size(); ++f) {
      const double dv = m.X[i][f] - row[f];
      d2 += dv * dv;
    }
    dist.emplace_back(d2, i);
  }
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(m.k), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<double> proba(static_cast<std::size_t>(classes), 0.0);
  for (std::size_t i = 0; i < k; ++i) proba[static_cast<std::size_t>(m.y[dist[i].second])] += 1.0 / static_cast<double>(k);
  return proba;
}

inline std::vector<double> tree_proba(const TreeModel& m, std::span<const double> row) {
  int at = 0;
  while (!m.nodes[static_cast<std::size_t>(at)].leaf) {
    const auto& node = m.nodes[static_cast<std::size_t>(at)];
    at = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return m.nodes[static_cast<std::size_t>(at)].class_freq;
}

inline std::vector<double> nb_proba(const NbModel& m, std::span<const double> row, int classes) {
  std::vector<double> logp(static_cast<std::size_t>(classes), -std::numeric_limits<double>::infinity());
  double best = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < classes; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    if (!m.class_present[cc]) continue;
    double lp = m.log_prior[cc];
    for (std::size_t f = 0; f < row.size(); ++f) {
      const double v = m.var[cc][f];
      const double dv = row[f] - m.mean[cc][f];
      lp += -0.5 * (std::log(2.0 * std::numbers::pi * v) + dv * dv / v);
    }
    logp[cc] = lp;
    best = std::max(best, lp);
  }
  std::vector<double> proba(static_cast<std::size_t>(classes), 0.0);
  double sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    if (!m.class_present[cc]) continue;
    proba[cc] = std::exp(logp[cc] - best);
    sum += proba[cc];
  }
  for (auto& p : proba) p /= sum;
  return proba;
}

}  // namespace detail

/// Per-row probability vectors over the task's label set; rows sum to 1.
inline std::vector<std::vector<double>> predict_proba(const TrainedModel& m, const Dataset& d) {
  if (d.schema() != m.schema) throw std::invalid_argument("predict_proba: feature schema mismatch");
  std::vector<std::vector<double>> out;
  out.reserve(d.n_rows());
  for (const auto& row : d.X) {
    switch (m.kind) {
      case ModelKind::knn: out.push_back(detail::knn_proba(std::get<detail::KnnModel>(m.impl), row, m.classes)); break;
      case ModelKind::decision_tree: out.push_back(detail::tree_proba(std::get<detail::TreeModel>(m.impl), row)); break;
      case ModelKind::gaussian_nb: out.push_back(detail::nb_proba(std::get<detail::NbModel>(m.impl), row, m.classes)); break;
    }
  }
  return out;
}

inline int argmax_label(std::span<const double> proba) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(proba.size()); ++c)
    if (proba[static_cast<std::size_t>(c)] > proba[static_cast<std::size_t>(best)]) best = c;
  return best;
}

inline std::vector<int> predict(const TrainedModel& m, const Dataset& d) {
  std::vector<int> out;
  for (const auto& proba : predict_proba(m, d)) out.push_back(argmax_label(proba));
  return out;
}

/// Probability averaging across n models sharing one task and label set.
inline std::vector<std::vector<double>> ensemble_proba(std::span<const TrainedModel> models, const Dataset& d) {
  if (models.empty()) throw std::invalid_argument("ensemble_proba: empty model list");
  for (const auto& m : models)
    if (m.task != models.front().task || m.classes != models.front().classes)
      throw std::invalid_argument("ensemble_proba: models disagree on task/label set");
  if (models.front().task != d.task) throw std::invalid_argument("ensemble_proba: dataset task mismatch");
  std::vector<std::vector<double>> acc(d.n_rows(),
                                       std::vector<double>(static_cast<std::size_t>(models.front().classes), 0.0));
  for (const auto& m : models) {
    const auto proba = predict_proba(m, d);
    for (std::size_t r = 0; r < proba.size(); ++r)
      for (std::size_t c = 0; c < proba[r].size(); ++c) acc[r][c] += proba[r][c] / static_cast<double>(models.size());
  }
  return acc;
}

inline std::vector<int> ensemble_predict(std::span<const TrainedModel> models, const Dataset& d) {
  std::vector<int> out;
  for (const auto& proba : ensemble_proba(models, d)) out.push_back(argmax_label(proba));
  return out;
}

/// Bootstrap-resampled model variants of one kind; realizes the "n random
/// models" whose probabilities the ensemble averages.
inline std::vector<TrainedModel> train_ensemble(ModelKind kind, const Dataset& d, int n, std::uint64_t seed,
                                                const Hyper& hyper = {}) {
  if (n < 1) throw std::invalid_argument("train_ensemble: n must be >= 1");
  std::vector<TrainedModel> models;
  for (int q = 0; q < n; ++q) {
    Rng rng(seed_combine(seed, 0xB00 + static_cast<std::uint64_t>(q)));
    Dataset boot;
    boot.task = d.task;
    boot.feature_names = d.feature_names;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
      const auto pick = static_cast<std::size_t>(rng.uniform_int(d.n_rows()));
      boot.X.push_back(d.X[pick]);
      boot.y.push_back(d.y[pick]);
    }
    models.push_back(train(kind, boot, hyper));
  }
  return models;
}

// ---------------------------------------------------------------------------
// SMOTE
// ---------------------------------------------------------------------------

/// Oversample every minority class up to the majority count by interpolating
/// toward within-class nearest neighbors. Original rows are preserved and
/// synthetic rows are appended.
inline Dataset smote(const Dataset& d, int k, std::uint64_t seed) {
  d.validate();
  if (k < 1) throw std::invalid_argument("smote: k must be >= 1");
  const int classes = task_cardinality(d.task);
  std::vector<std::vector<std::size_t>> rows_of(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < d.n_rows(); ++i) rows_of[static_cast<std::size_t>(d.y[i])].push_back(i);
  std::size_t majority = 0;
  for (const auto& rows : rows_of) majority = std::max(majority, rows.size());

  Dataset out = d;
  Rng root(seed_combine(seed, 0x5307E));
  for (int c = 0; c < classes; ++c) {
    const auto& rows = rows_of[static_cast<std::size_t>(c)];
    if (rows.empty() || rows.size() == majority) continue;
    if (rows.size() < static_cast<std::size_t>(k) + 1)
      throw std::invalid_argument("smote: minority class smaller than k+1 rows");
    Rng rng = root.substream(static_cast<std::uint64_t>(c));
    // within-class k nearest neighbor table
    std::vector<std::vector<std::size_t>> nn(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<std::pair<double, std::size_t>> dist;
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (i == j) continue;
        double d2 = 0.0;
        for (std::size_t f = 0; f < d.feature_names.size(); ++f) {
          const double dv = d.X[rows[i]][f] - d.X[rows[j]][f];
          d2 += dv * dv;
        }
        dist.emplace_back(d2, j);
      }
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      for (int t = 0; t < k; ++t) nn[i].push_back(dist[static_cast<std::size_t>(t)].second);
    }
    for (std::size_t s = rows.size(); s < majority; ++s) {
      const auto base = static_cast<std::size_t>(rng.uniform_int(rows.size()));
      const auto nb = nn[base][static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(k)))];
      const double u = rng.uniform();
      std::vector<double> row(d.feature_names.size());
      for (std::size_t f = 0; f < row.size(); ++f) {
        const double x = d.X[rows[base]][f];
        row[f] = x + u * (d.X[rows[nb]][f] - x);
      }
      out.X.push_back(std::move(row));
      out.y.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Wald interval half-width Z*sqrt(eta*(1-eta)/n).
inline double ci_half_width(double eta, std::size_t n_test, double z = 1.96) {
  return z * std::sqrt(eta * (1.0 - eta) / static_cast<double>(n_test));
}

struct EvalReport {
  double accuracy = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  std::size_t n_test = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<double> per_class_recall;             // 0 support -> 0
};

inline EvalReport evaluate(std::span<const TrainedModel> models, const Dataset& test) {
  if (test.n_rows() == 0) throw std::invalid_argument("evaluate: empty test set");
  const auto predictions = ensemble_predict(models, test);
  const int classes = task_cardinality(test.task);
  EvalReport rep;
  rep.n_test = test.n_rows();
  rep.confusion.assign(static_cast<std::size_t>(classes), std::vector<std::size_t>(static_cast<std::size_t>(classes), 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.n_rows(); ++i) {
    ++rep.confusion[static_cast<std::size_t>(test.y[i])][static_cast<std::size_t>(predictions[i])];
    if (predictions[i] == test.y[i]) ++correct;
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.n_test);
  const double hw = ci_half_width(rep.accuracy, rep.n_test);
  rep.ci_lo = rep.accuracy - hw;
  rep.ci_hi = rep.accuracy + hw;
  rep.per_class_recall.assign(static_cast<std::size_t>(classes), 0.0);
  for (int c = 0; c < classes; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    std::size_t support = 0;
    for (std::size_t p = 0; p < static_cast<std::size_t>(classes); ++p) support += rep.confusion[cc][p];
    if (support > 0) rep.per_class_recall[cc] = static_cast<double>(rep.confusion[cc][cc]) / static_cast<double>(support);
  }
  return rep;
}

inline EvalReport evaluate(const TrainedModel& model, const Dataset& test) {
  return evaluate(std::span<const TrainedModel>(&model, 1), test);
}

// ---------------------------------------------------------------------------
// Staged decision pipeline
// ---------------------------------------------------------------------------

/// Per-stage ensembles; the optional fuzzy system is the adaptive detector
/// whose verdict the supervisory ensemble arbitrates when no rule fires.
struct StagedModels {
  std::vector<TrainedModel> detection, region, location, phase, faulttype;
  std::optional<fuzzy::FuzzySystem> fuzzy_detector;
};

inline constexpr int kRegionInternal = 0;
inline constexpr int kRegionForward = 1;
inline constexpr int kRegionReverse = 2;

struct CaseDecision {
  bool fault = false;
  bool trip = false;
  std::optional<int> region;
  std::optional<int> location;
  std::optional<int> phase_sel;
  std::optional<int> fault_type;
  std::optional<double> fuzzy_score;
  bool fuzzy_no_rule = false;
};

/// Detection -> region -> (internal: trip + location) -> phase -> fault type,
/// with a non-fault verdict short-circuiting everything downstream and the
/// trip flag raised only for internal faults.
inline CaseDecision staged_pipeline(const StagedModels& models, const Dataset& single_row,
                                    std::span<const double> fuzzy_in = {}) {
  if (single_row.n_rows() != 1) throw std::invalid_argument("staged_pipeline: expects exactly one case row");
  if (models.detection.empty()) throw std::invalid_argument("staged_pipeline: missing detection stage model");
  CaseDecision out;

  Dataset row = single_row;
  row.task = Task::detection;
  bool supervisor_fault = ensemble_predict(models.detection, row)[0] == 1;
  if (models.fuzzy_detector && !fuzzy_in.empty()) {
    const auto res = models.fuzzy_detector->infer(fuzzy_in);
    out.fuzzy_score = res.score;
    out.fuzzy_no_rule = res.no_rule_fired;
    // fuzzy verdict stands when its rules fire; the supervisor arbitrates the
    // 0.5 fallback
    out.fault = res.no_rule_fired ? supervisor_fault : res.score >= 0.5;
  } else {
    out.fault = supervisor_fault;
  }
  if (!out.fault) return out;

  if (models.region.empty()) throw std::invalid_argument("staged_pipeline: missing region stage model");
  row.task = Task::region;
  out.region = ensemble_predict(models.region, row)[0];
  if (*out.region == kRegionInternal) {
    out.trip = true;
    if (models.location.empty()) throw std::invalid_argument("staged_pipeline: missing location stage model");
    row.task = Task::location;
    out.location = ensemble_predict(models.location, row)[0];
  }
  if (models.phase.empty()) throw std::invalid_argument("staged_pipeline: missing phase stage model");
  row.task = Task::phase;
  out.phase_sel = ensemble_predict(models.phase, row)[0];
  if (models.faulttype.empty()) throw std::invalid_argument("staged_pipeline: missing faulttype stage model");
  row.task = Task::faulttype;
  out.fault_type = ensemble_predict(models.faulttype, row)[0];
  return out;
}

// ---------------------------------------------------------------------------
// Model container (versioned text format with schema hash)
// ---------------------------------------------------------------------------

inline void serialize_models(std::ostream& out, std::span<const TrainedModel> models) {
  out << "relayar-models v1\n";
  out << "count " << models.size() << '\n';
  for (const auto& m : models) {
    out << "model " << to_string(m.kind) << ' ' << to_string(m.task) << ' ' << m.classes << " 0x" << std::hex
        << m.schema << std::dec << '\n';
    switch (m.kind) {
      case ModelKind::knn: {
        const auto& knn = std::get<detail::KnnModel>(m.impl);
        out << "knn " << knn.k << ' ' << knn.X.size() << ' ' << (knn.X.empty() ? 0 : knn.X[0].size()) << '\n';
        for (std::size_t i = 0; i < knn.X.size(); ++i) {
          out << knn.y[i];
          for (double v : knn.X[i]) out << ' ' << strings::g17(v);
          out << '\n';
        }
        break;
      }
      case ModelKind::decision_tree: {
        const auto& tree = std::get<detail::TreeModel>(m.impl);
        out << "tree " << tree.nodes.size() << '\n';
        for (const auto& n : tree.nodes) {
          if (n.leaf) {
            out << "leaf";
            for (double v : n.class_freq) out << ' ' << strings::g17(v);
            out << '\n';
          } else {
            out << "split " << n.feature << ' ' << strings::g17(n.threshold) << ' ' << n.left << ' ' << n.right
                << '\n';
          }
        }
        break;
      }
      case ModelKind::gaussian_nb: {
        const auto& nb = std::get<detail::NbModel>(m.impl);
        out << "nb " << nb.mean.size() << ' ' << (nb.mean.empty() ? 0 : nb.mean[0].size()) << '\n';
        for (std::size_t c = 0; c < nb.mean.size(); ++c) {
          out << (nb.class_present[c] ? 1 : 0) << ' ' << strings::g17(nb.class_present[c] ? nb.log_prior[c] : 0.0);
          for (double v : nb.mean[c]) out << ' ' << strings::g17(v);
          for (double v : nb.var[c]) out << ' ' << strings::g17(v);
          out << '\n';
        }
        break;
      }
    }
  }
  out << "end\n";
}

inline std::vector<TrainedModel> parse_models(std::istream& in) {
  std::string line;
  const auto next_line = [&]() {
    if (!std::getline(in, line)) throw std::invalid_argument("models parse: truncated file");
    return line;
  };
  if (next_line() != "relayar-models v1") throw std::invalid_argument("models parse: bad header");
  std::istringstream hs{next_line()};
  std::string kw;
  std::size_t count = 0;
  if (!(hs >> kw >> count) || kw != "count") throw std::invalid_argument("models parse: bad count line");
  std::vector<TrainedModel> models;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream ms{next_line()};
    std::string mkw, kind_s, task_s, schema_s;
    int classes = 0;
    if (!(ms >> mkw >> kind_s >> task_s >> classes >> schema_s) || mkw != "model")
      throw std::invalid_argument("models parse: bad model line");
    TrainedModel m;
    m.kind = parse_model_kind(kind_s);
    m.task = parse_task(task_s);
    m.classes = classes;
    m.schema = std::stoull(schema_s.substr(2), nullptr, 16);
    std::istringstream ps{next_line()};
    std::string tag;
    ps >> tag;
    if (tag == "knn") {
      detail::KnnModel knn;
      std::size_t rows = 0, cols = 0;
      ps >> knn.k >> rows >> cols;
      for (std::size_t r = 0; r < rows; ++r) {
        std::istringstream rs{next_line()};
        int label = 0;
        rs >> label;
        std::vector<double> row(cols);
        for (auto& v : row) rs >> v;
        if (!rs) throw std::invalid_argument("models parse: bad knn row");
        knn.y.push_back(label);
        knn.X.push_back(std::move(row));
      }
      m.impl = std::move(knn);
    } else if (tag == "tree") {
      detail::TreeModel tree;
      std::size_t nodes = 0;
      ps >> nodes;
      for (std::size_t n = 0; n < nodes; ++n) {
        std::istringstream ns{next_line()};
        std::string ntag;
        ns >> ntag;
        detail::TreeNode node;
        if (ntag == "leaf") {
          node.leaf = true;
          double v = 0.0;
          while (ns >> v) node.class_freq.push_back(v);
        } else if (ntag == "split") {
          node.leaf = false;
          ns >> node.feature >> node.threshold >> node.left >> node.right;
          if (!ns) throw std::invalid_argument("models parse: bad split node");
        } else {
          throw std::invalid_argument("models parse: bad tree node");
        }
        tree.nodes.push_back(std::move(node));
      }
      m.impl = std::move(tree);
    } else if (tag == "nb") {
      detail::NbModel nb;
      std::size_t classes_n = 0, cols = 0;
      ps >> classes_n >> cols;
      for (std::size_t c = 0; c < classes_n; ++c) {
        std::istringstream cs{next_line()};
        int present = 0;
        double prior = 0.0;
        cs >> present >> prior;
        std::vector<double> mean(cols), var(cols);
        for (auto& v : mean) cs >> v;
        for (auto& v : var) cs >> v;
        if (!cs) throw std::invalid_argument("models parse: bad nb class row");
        nb.class_present.push_back(present != 0);
        nb.log_prior.push_back(present != 0 ? prior : -std::numeric_limits<double>::infinity());
        nb.mean.push_back(std::move(mean));
        nb.var.push_back(std::move(var));
      }
      m.impl = std::move(nb);
    } else {
      throw std::invalid_argument("models parse: unknown model payload " + tag);
    }
    models.push_back(std::move(m));
  }
  if (next_line() != "end") throw std::invalid_argument("models parse: missing end marker");
  return models;
}

inline void save_models(std::span<const TrainedModel> models, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_models: cannot open " + path);
  serialize_models(out, models);
}

inline std::vector<TrainedModel> load_models(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_models: cannot open " + path);
  return parse_models(in);
}

}  // namespace relayar::classify
