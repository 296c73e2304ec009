#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace relayar::mrmr {

/// Rows are cases, columns are (possibly phase-expanded) features; target is
/// the class label per row. Undefined values must be imputed upstream.
struct FeatureMatrix {
  std::vector<std::vector<double>> columns;
  std::vector<int> feature_ids;
  std::vector<int> target;

  std::size_t n_rows() const { return target.size(); }
  std::size_t n_cols() const { return columns.size(); }

  void validate() const {
    if (columns.size() != feature_ids.size())
      throw std::invalid_argument("FeatureMatrix: feature_ids must match columns");
    if (target.size() < 2) throw std::invalid_argument("FeatureMatrix: need at least 2 rows");
    for (const auto& col : columns) {
      if (col.size() != target.size()) throw std::invalid_argument("FeatureMatrix: ragged columns");
      for (double v : col)
        if (!std::isfinite(v)) throw std::invalid_argument("FeatureMatrix: non-finite value (impute upstream)");
    }
    std::vector<int> classes = target;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw std::invalid_argument("FeatureMatrix: need at least 2 classes");
  }
};

inline int default_bins(std::size_t n_rows) {
  return std::max(2, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_rows)))));
}

/// Equal-frequency discretization by rank, with stable row-index ordering of
/// ties; duplicates are split across bins rather than collapsed. Invariant
/// under strictly monotone transforms of the column.
inline std::vector<int> equal_frequency_bins(std::span<const double> x, int bins) {
  if (bins < 2) throw std::invalid_argument("equal_frequency_bins: bins must be >= 2");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<int> bin(n, 0);
  for (std::size_t rank = 0; rank < n; ++rank)
    bin[order[rank]] = static_cast<int>(rank * static_cast<std::size_t>(bins) / n);
  return bin;
}

/// MI in nats between two discrete variables given per-row codes.
inline double mutual_information_binned(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("mutual_information: size mismatch");
  const auto n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
    pab[{a[i], b[i]}] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [key, cnt] : pab) {
    const double pj = cnt / n;
    mi += pj * std::log(pj / ((pa[key.first] / n) * (pb[key.second] / n)));
  }
  return std::max(mi, 0.0);  // clamp rounding residue
}

/// MI between a real-valued column (equal-frequency discretized) and labels.
/// A constant column carries no information and yields 0.
inline double mutual_information(std::span<const double> x, std::span<const int> y, int bins) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("mutual_information: size mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("mutual_information: non-finite value");
  const auto codes = equal_frequency_bins(x, bins);
  return mutual_information_binned(codes, y);
}

struct MrmrStep {
  int feature_id = 0;
  double relevance = 0.0;
  double redundancy = 0.0;
  double score = 0.0;
};

struct MrmrRanking {
  std::vector<MrmrStep> steps;

  std::vector<int> ordered_ids() const {
    std::vector<int> ids;
    ids.reserve(steps.size());
    for (const auto& s : steps) ids.push_back(s.feature_id);
    return ids;
  }
};

/// Greedy maximum-relevance minimum-redundancy ranking in the difference form:
/// each pick maximizes I(f;y) - mean over selected g of I(f;g). Ties break
/// toward the lower feature id.
inline MrmrRanking rank(const FeatureMatrix& m, int k, int bins) {
  m.validate();
  if (k < 1 || static_cast<std::size_t>(k) > m.n_cols()) throw std::invalid_argument("rank: k out of range");
  if (bins < 2) throw std::invalid_argument("rank: bins must be >= 2");

  const std::size_t n_cols = m.n_cols();
  std::vector<std::vector<int>> codes(n_cols);
  std::vector<double> relevance(n_cols);
  for (std::size_t j = 0; j < n_cols; ++j) {
    codes[j] = equal_frequency_bins(m.columns[j], bins);
    relevance[j] = mutual_information_binned(codes[j], m.target);
  }

  // candidate order by feature id resolves ties deterministically
  std::vector<std::size_t> by_id(n_cols);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::stable_sort(by_id.begin(), by_id.end(),
                   [&](std::size_t a, std::size_t b) { return m.feature_ids[a] < m.feature_ids[b]; });

  std::vector<bool> selected(n_cols, false);
  std::vector<std::size_t> picks;
  // pairwise MI against already-selected columns, computed lazily
  std::vector<std::vector<double>> red_terms(n_cols);

  MrmrRanking out;
  for (int step = 0; step < k; ++step) {
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_j = n_cols;
    double best_rel = 0.0, best_red = 0.0;
    for (std::size_t j : by_id) {
      if (selected[j]) continue;
      double red = 0.0;
      if (!picks.empty()) {
        while (red_terms[j].size() < picks.size())
          red_terms[j].push_back(mutual_information_binned(codes[j], codes[picks[red_terms[j].size()]]));
        for (double v : red_terms[j]) red += v;
        red /= static_cast<double>(picks.size());
      }
      const double score = relevance[j] - red;
      if (score > best_score) {
        best_score = score;
        best_j = j;
        best_rel = relevance[j];
        best_red = red;
      }
    }
    selected[best_j] = true;
    picks.push_back(best_j);
    out.steps.push_back({m.feature_ids[best_j], best_rel, best_red, best_score});
  }
  return out;
}

}  // namespace relayar::mrmr
