#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "relayar/rng.hpp"
#include "relayar/waveform.hpp"

namespace relayar::detector {

struct DetectorConfig {
  double beta = 0.05;
  std::size_t half_cycle_samples = 64;

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("DetectorConfig: beta must be in (0,1)");
    if (half_cycle_samples < 6) throw std::invalid_argument("DetectorConfig: half_cycle_samples must be >= 6");
  }
};

struct Detection {
  int phase = 0;
  std::size_t sample_index = 0;
  double dd_value = 0.0;
};

/// Fractional increase between the |current| sums of two successive half
/// cycles, per phase: DD(t) = (S_cur - S_prev) / S_cur with S_cur the sum over
/// (t-H, t] and S_prev over (t-2H, t-H]. Zero S_cur yields DD = 0 (a dead line
/// is not a transient). Entries before t = 2H-1 are 0.
inline std::array<std::vector<double>, 3> dd_series(const waveform::Record3Ph& rec, const DetectorConfig& cfg) {
  cfg.validate();
  rec.validate();
  const std::size_t h = cfg.half_cycle_samples;
  const std::size_t n = rec.size();
  if (n < 2 * h) throw std::invalid_argument("dd_series: record shorter than one cycle");
  std::array<std::vector<double>, 3> out;
  for (int p = 0; p < 3; ++p) {
    const auto x = rec.phase(p);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + std::abs(x[i]);
    auto& dd = out[static_cast<std::size_t>(p)];
    dd.assign(n, 0.0);
    for (std::size_t t = 2 * h - 1; t < n; ++t) {
      const double s_cur = prefix[t + 1] - prefix[t + 1 - h];
      const double s_prev = prefix[t + 1 - h] - prefix[t + 1 - 2 * h];
      dd[t] = s_cur == 0.0 ? 0.0 : (s_cur - s_prev) / s_cur;
    }
  }
  return out;
}

/// Threshold crossings DD(t) >= beta per phase, with a one-cycle hold-off
/// before a phase re-arms. Any phase triggering declares a disturbance; the
/// earliest sample anchors the analysis window (see event_onset).
inline std::vector<Detection> detect(const waveform::Record3Ph& rec, const DetectorConfig& cfg) {
  const auto dd = dd_series(rec, cfg);
  const std::size_t hold_off = 2 * cfg.half_cycle_samples;
  std::vector<Detection> out;
  for (int p = 0; p < 3; ++p) {
    const auto& series = dd[static_cast<std::size_t>(p)];
    std::size_t armed_at = 0;
    for (std::size_t t = 2 * cfg.half_cycle_samples - 1; t < series.size(); ++t) {
      if (t < armed_at) continue;
      if (series[t] >= cfg.beta) {
        out.push_back({p, t, series[t]});
        armed_at = t + hold_off;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return a.sample_index != b.sample_index ? a.sample_index < b.sample_index : a.phase < b.phase;
  });
  return out;
}

inline std::optional<std::size_t> event_onset(std::span<const Detection> detections) {
  if (detections.empty()) return std::nullopt;
  std::size_t best = detections.front().sample_index;
  for (const auto& d : detections) best = std::min(best, d.sample_index);
  return best;
}

// ---------------------------------------------------------------------------
// Grey wolf optimizer
// ---------------------------------------------------------------------------

struct GwoConfig {
  int population = 30;
  int dim = 1;
  double lower = 0.0;
  double upper = 1.0;
  int max_iter = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (population < 3) throw std::invalid_argument("GwoConfig: population must be >= 3 (alpha/beta/delta)");
    if (dim < 1) throw std::invalid_argument("GwoConfig: dim must be >= 1");
    if (!(lower < upper)) throw std::invalid_argument("GwoConfig: lower must be < upper");
    if (max_iter < 1) throw std::invalid_argument("GwoConfig: max_iter must be >= 1");
  }
};

struct GwoResult {
  std::vector<double> best_x;
  double best_f = 0.0;
  std::vector<double> best_trace;  ///< best-so-far fitness after each iteration
};

/// Canonical grey wolf optimization: the pack follows the alpha/beta/delta
/// leaders with the exploration coefficient decaying linearly 2 -> 0 over
/// max_iter. Deterministic for a fixed seed; ties broken first-found.
inline GwoResult gwo_minimize(const std::function<double(std::span<const double>)>& objective,
                              const GwoConfig& cfg) {
  cfg.validate();
  Rng rng(seed_combine(cfg.seed, 0x6F0));
  const auto pop = static_cast<std::size_t>(cfg.population);
  const auto dim = static_cast<std::size_t>(cfg.dim);

  const auto eval = [&](std::span<const double> x) {
    const double f = objective(x);
    if (!std::isfinite(f)) throw std::runtime_error("gwo_minimize: objective returned a non-finite value");
    return f;
  };

  std::vector<std::vector<double>> wolves(pop, std::vector<double>(dim));
  std::vector<double> fitness(pop);
  for (std::size_t i = 0; i < pop; ++i) {
    for (std::size_t d = 0; d < dim; ++d) wolves[i][d] = rng.uniform(cfg.lower, cfg.upper);
    fitness[i] = eval(wolves[i]);
  }

  // indices of the three leaders, best first; first-found wins ties
  const auto leaders = [&]() {
    std::array<std::size_t, 3> idx = {0, 0, 0};
    std::array<double, 3> f = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < pop; ++i) {
      if (fitness[i] < f[0]) {
        f[2] = f[1]; idx[2] = idx[1];
        f[1] = f[0]; idx[1] = idx[0];
        f[0] = fitness[i]; idx[0] = i;
      } else if (fitness[i] < f[1]) {
        f[2] = f[1]; idx[2] = idx[1];
        f[1] = fitness[i]; idx[1] = i;
      } else if (fitness[i] < f[2]) {
        f[2] = fitness[i]; idx[2] = i;
      }
    }
    return idx;
  };

  GwoResult result;
  {
    const auto lead = leaders();
    result.best_x = wolves[lead[0]];
    result.best_f = fitness[lead[0]];
  }

  for (int it = 0; it < cfg.max_iter; ++it) {
    const double a = 2.0 - 2.0 * static_cast<double>(it) / static_cast<double>(cfg.max_iter);
    const auto lead = leaders();
    const auto alpha = wolves[lead[0]];
    const auto beta = wolves[lead[1]];
    const auto delta = wolves[lead[2]];
    for (std::size_t i = 0; i < pop; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        double acc = 0.0;
        for (const auto* leader : {&alpha, &beta, &delta}) {
          const double coef_a = 2.0 * a * rng.uniform() - a;
          const double coef_c = 2.0 * rng.uniform();
          const double dist = std::abs(coef_c * (*leader)[d] - wolves[i][d]);
          acc += (*leader)[d] - coef_a * dist;
        }
        wolves[i][d] = std::clamp(acc / 3.0, cfg.lower, cfg.upper);
      }
      fitness[i] = eval(wolves[i]);
      if (fitness[i] < result.best_f) {
        result.best_f = fitness[i];
        result.best_x = wolves[i];
      }
    }
    result.best_trace.push_back(result.best_f);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Threshold tuning
// ---------------------------------------------------------------------------

/// Record with its true event onset; steady records carry no onset and count
/// every detection as outside the disturbance zone.
struct AnnotatedRecord {
  waveform::Record3Ph rec;
  std::optional<std::size_t> onset;
};

/// Fraction of detections falling outside the one-cycle disturbance zone,
/// minimized over beta. Guarded to 0 when nothing is detected at all.
inline double tune_objective(std::span<const AnnotatedRecord> corpus, double beta) {
  std::size_t total = 0, in_zone = 0;
  for (const auto& ann : corpus) {
    DetectorConfig cfg;
    cfg.beta = beta;
    cfg.half_cycle_samples = static_cast<std::size_t>(std::llround(ann.rec.fs / (2.0 * ann.rec.f0)));
    const auto detections = detect(ann.rec, cfg);
    const std::size_t cycle = 2 * cfg.half_cycle_samples;
    for (const auto& d : detections) {
      ++total;
      if (ann.onset && d.sample_index >= *ann.onset && d.sample_index <= *ann.onset + cycle) ++in_zone;
    }
  }
  if (total == 0) return 0.0;
  return 1.0 - static_cast<double>(in_zone) / static_cast<double>(total);
}

inline double tune_beta(std::span<const AnnotatedRecord> corpus, const GwoConfig& gwo) {
  if (corpus.empty()) throw std::invalid_argument("tune_beta: empty corpus");
  const auto objective = [&](std::span<const double> x) {
    const double beta = std::clamp(x[0], 1e-6, 1.0 - 1e-6);
    return tune_objective(corpus, beta);
  };
  const auto result = gwo_minimize(objective, gwo);
  return std::clamp(result.best_x[0], 1e-6, 1.0 - 1e-6);
}

}  // namespace relayar::detector
