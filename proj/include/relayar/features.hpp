#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "relayar/ar.hpp"
#include "relayar/waveform.hpp"

namespace relayar::features {

/// A feature value; `defined` is false for degenerate cases (zero variance,
/// zero mean, window too short) instead of poisoning downstream math with NaN.
struct FeatureValue {
  double value = 0.0;
  bool defined = true;
};

class FeatureVector {
 public:
  int phase = 0;  // 0=a, 1=b, 2=c
  std::map<int, FeatureValue> values;

  const FeatureValue& at(int id) const {
    auto it = values.find(id);
    if (it == values.end()) throw std::out_of_range("FeatureVector: feature id not extracted");
    return it->second;
  }

  /// Imputation accessor: undefined values fall back to `fallback`.
  double value_or(int id, double fallback = 0.0) const {
    const auto& fv = at(id);
    return fv.defined ? fv.value : fallback;
  }
};

// ---------------------------------------------------------------------------
// Registry: ids 1..144 with stable canonical names.
// ---------------------------------------------------------------------------

namespace registry {

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> table = [] {
    std::vector<std::string> n(145);
    n[1] = "abs_energy";
    n[2] = "abs_sum_changes";
    for (int k = 1; k <= 10; ++k) n[2 + k] = "ar_coeff_" + std::to_string(k);
    n[13] = "mean_abs_changes";
    n[14] = "std_dev";
    for (int l = 1; l <= 5; ++l) n[14 + l] = "autocorr_lag_" + std::to_string(l);
    n[20] = "kurtosis";
    for (int k = 1; k <= 20; ++k) {
      const int base = 21 + 4 * (k - 1);
      n[base + 0] = "fft_real_" + std::to_string(k);
      n[base + 1] = "fft_imag_" + std::to_string(k);
      n[base + 2] = "fft_abs_" + std::to_string(k);
      n[base + 3] = "fft_angle_" + std::to_string(k);
    }
    const int widths[3] = {5, 10, 20};
    for (int w = 0; w < 3; ++w)
      for (int pos = 0; pos < 10; ++pos)
        n[101 + 10 * w + pos] = "ricker_w" + std::to_string(widths[w]) + "_p" + std::to_string(pos);
    n[131] = "sample_entropy";
    n[132] = "first_max_pos";
    n[133] = "last_max_pos";
    n[134] = "minimum";
    n[135] = "quantile_25";
    n[136] = "median";
    n[137] = "quantile_75";
    n[138] = "maximum";
    n[139] = "skewness";
    n[140] = "variation_coeff";
    n[141] = "cid_complexity";
    n[142] = "zero_seq_mag";
    n[143] = "pos_seq_mag";
    n[144] = "neg_seq_mag";
    return n;
  }();
  return table;
}

inline constexpr int count() { return 144; }

inline const std::string& name(int id) {
  if (id < 1 || id > count()) throw std::out_of_range("feature registry: id must be 1..144");
  return names()[static_cast<std::size_t>(id)];
}

inline int id(std::string_view name_) {
  static const std::map<std::string, int, std::less<>> index = [] {
    std::map<std::string, int, std::less<>> m;
    for (int i = 1; i <= count(); ++i) m[names()[static_cast<std::size_t>(i)]] = i;
    return m;
  }();
  auto it = index.find(name_);
  if (it == index.end()) throw std::out_of_range("feature registry: unknown name " + std::string(name_));
  return it->second;
}

inline const std::vector<int>& all_ids() {
  static const std::vector<int> ids = [] {
    std::vector<int> v(count());
    for (int i = 0; i < count(); ++i) v[static_cast<std::size_t>(i)] = i + 1;
    return v;
  }();
  return ids;
}

}  // namespace registry

// ---------------------------------------------------------------------------
// Fortescue sequence components
// ---------------------------------------------------------------------------

/// Magnitudes (|I0|, |I1|, |I2|) of the symmetrical components of a phasor
/// triple, with the rotation operator alpha = e^{j*2pi/3}.
inline std::array<double, 3> sequence_components(const std::array<std::complex<double>, 3>& ph) {
  using cd = std::complex<double>;
  const cd alpha = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  const cd a2 = alpha * alpha;
  const cd i0 = (ph[0] + ph[1] + ph[2]) / 3.0;
  const cd i1 = (ph[0] + alpha * ph[1] + a2 * ph[2]) / 3.0;
  const cd i2 = (ph[0] + a2 * ph[1] + alpha * ph[2]) / 3.0;
  return {std::abs(i0), std::abs(i1), std::abs(i2)};
}

namespace detail {

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

struct Moments {
  double mu, sigma, m2, m3, m4;
};

inline Moments moments(std::span<const double> x) {
  const double mu = mean(x);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double d = v - mu;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const auto n = static_cast<double>(x.size());
  m2 /= n; m3 /= n; m4 /= n;
  return {mu, std::sqrt(m2), m2, m3, m4};
}

/// Linear-interpolation quantile at h = (n-1)p over a sorted copy.
inline double quantile(std::vector<double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::complex<double> dft_bin(std::span<const double> x, int k) {
  const auto n = static_cast<double>(x.size());
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) * k / n;
    acc += x[m] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return acc;
}

/// Mexican-hat (Ricker) wavelet response at width a centered at c, using the
/// scipy normalization 2/(sqrt(3a) pi^{1/4}).
inline double ricker_response(std::span<const double> x, double a, double c) {
  const double norm = 2.0 / (std::sqrt(3.0 * a) * std::pow(std::numbers::pi, 0.25));
  double acc = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double u = (static_cast<double>(m) - c) / a;
    acc += x[m] * norm * (1.0 - u * u) * std::exp(-0.5 * u * u);
  }
  return acc;
}

/// Sample entropy (m=2, r=0.2*sigma), Richman-Moorman conventions: Chebyshev
/// distance <= r, pairs i<j over the common template range.
inline FeatureValue sample_entropy(std::span<const double> x, double sigma) {
  constexpr std::size_t m = 2;
  if (sigma == 0.0 || x.size() < m + 2) return {0.0, false};
  const double r = 0.2 * sigma;
  const std::size_t count = x.size() - m;  // templates of length m and m+1 share this range
  std::size_t b_count = 0, a_count = 0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      double dmax = 0.0;
      for (std::size_t t = 0; t < m; ++t) dmax = std::max(dmax, std::abs(x[i + t] - x[j + t]));
      if (dmax <= r) {
        ++b_count;
        if (std::abs(x[i + m] - x[j + m]) <= r) ++a_count;
      }
    }
  }
  if (a_count == 0 || b_count == 0) return {0.0, false};
  return {-std::log(static_cast<double>(a_count) / static_cast<double>(b_count)), true};
}

/// Full-cycle DFT phasor over the first round(fs/f0) samples.
inline std::complex<double> cycle_phasor(std::span<const double> x, double fs, double f0) {
  const auto n1 = static_cast<std::size_t>(std::llround(fs / f0));
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t m = 0; m < n1; ++m) {
    const double ang = -2.0 * std::numbers::pi * f0 * static_cast<double>(m) / fs;
    acc += x[m] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return 2.0 * acc / static_cast<double>(n1);
}

/// Per-phase scratch shared across the requested ids.
struct PhaseContext {
  std::span<const double> x;
  std::optional<Moments> mom;
  std::optional<ar::ArModel> model;
  bool ar_failed = false;

  const Moments& get_moments() {
    if (!mom) mom = moments(x);
    return *mom;
  }

  const ar::ArModel* get_ar() {
    if (!model && !ar_failed) {
      if (x.size() < 12) {
        ar_failed = true;
      } else {
        model = ar::ar_fit(x, 10);
      }
    }
    return model ? &*model : nullptr;
  }
};

inline FeatureValue compute_feature(int id, PhaseContext& ctx, const std::array<double, 3>& seq_mags,
                                    bool seq_defined) {
  const auto x = ctx.x;
  const auto n = x.size();
  switch (id) {
    case 1: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return {s, true};
    }
    case 2: case 13: {
      double s = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) s += std::abs(x[i + 1] - x[i]);
      return id == 2 ? FeatureValue{s, true} : FeatureValue{s / static_cast<double>(n - 1), true};
    }
    case 14:
      return {ctx.get_moments().sigma, true};
    case 20: {
      const auto& m = ctx.get_moments();
      if (m.sigma == 0.0) return {0.0, false};
      return {m.m4 / (m.m2 * m.m2), true};
    }
    case 131:
      return sample_entropy(x, ctx.get_moments().sigma);
    case 132: case 133: {
      std::size_t first = 0, last = 0;
      double best = x[0];
      for (std::size_t i = 1; i < n; ++i) {
        if (x[i] > best) { best = x[i]; first = i; last = i; }
        else if (x[i] == best) last = i;
      }
      const auto idx = id == 132 ? first : last;
      return {static_cast<double>(idx) / static_cast<double>(n), true};
    }
    case 134: case 135: case 136: case 137: case 138: {
      std::vector<double> sorted(x.begin(), x.end());
      std::sort(sorted.begin(), sorted.end());
      const double ps[] = {0.0, 0.25, 0.5, 0.75, 1.0};
      return {quantile(std::move(sorted), ps[id - 134]), true};
    }
    case 139: {
      const auto& m = ctx.get_moments();
      if (m.sigma == 0.0) return {0.0, false};
      return {m.m3 / (m.sigma * m.sigma * m.sigma), true};
    }
    case 140: {
      const auto& m = ctx.get_moments();
      if (m.mu == 0.0) return {0.0, false};
      return {m.sigma / m.mu, true};
    }
    case 141: {
      double s = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) s += (x[i + 1] - x[i]) * (x[i + 1] - x[i]);
      return {std::sqrt(s), true};
    }
    case 142: case 143: case 144:
      return {seq_mags[static_cast<std::size_t>(id - 142)], seq_defined};
    default:
      break;
  }
  if (id >= 3 && id <= 12) {
    const auto* model = ctx.get_ar();
    if (model == nullptr) return {0.0, false};
    return {model->coeffs[static_cast<std::size_t>(id - 3)], true};
  }
  if (id >= 15 && id <= 19) {
    const auto& m = ctx.get_moments();
    const auto lag = static_cast<std::size_t>(id - 14);
    if (m.sigma == 0.0 || n <= lag) return {0.0, false};
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - m.mu) * (x[i + lag] - m.mu);
    return {s / ((static_cast<double>(n) - 1.0) * m.m2), true};
  }
  if (id >= 21 && id <= 100) {
    const int k = (id - 21) / 4 + 1;
    const int attr = (id - 21) % 4;
    const auto f = dft_bin(x, k);
    switch (attr) {
      case 0: return {f.real(), true};
      case 1: return {f.imag(), true};
      case 2: return {std::abs(f), true};
      default: return {std::abs(f) == 0.0 ? 0.0 : std::arg(f), true};
    }
  }
  if (id >= 101 && id <= 130) {
    const int widths[3] = {5, 10, 20};
    const int w = (id - 101) / 10;
    const int pos = (id - 101) % 10;
    const double c = (pos + 0.5) * static_cast<double>(n) / 10.0;
    return {ricker_response(x, widths[w], c), true};
  }
  throw std::out_of_range("extract: unknown feature id " + std::to_string(id));
}

}  // namespace detail

/// Extract the requested features for each phase of a window. Sequence
/// component ids (142-144) need window_cycles >= 1 and are flagged undefined
/// otherwise; they are shared across the three per-phase vectors.
inline std::array<FeatureVector, 3> extract(const waveform::SampleWindow& win, std::span<const int> which) {
  if (win.size() == 0) throw std::invalid_argument("extract: empty window");
  for (int id : which) registry::name(id);  // validates ids

  bool want_seq = false;
  for (int id : which) want_seq |= id >= 142;
  std::array<double, 3> seq_mags{0.0, 0.0, 0.0};
  bool seq_defined = false;
  if (want_seq && win.window_cycles >= 1.0 &&
      win.size() >= static_cast<std::size_t>(std::llround(win.fs / win.f0))) {
    std::array<std::complex<double>, 3> phasors;
    for (int p = 0; p < 3; ++p) phasors[static_cast<std::size_t>(p)] = detail::cycle_phasor(win.phases[static_cast<std::size_t>(p)], win.fs, win.f0);
    seq_mags = sequence_components(phasors);
    seq_defined = true;
  }

  std::array<FeatureVector, 3> out;
  for (int p = 0; p < 3; ++p) {
    detail::PhaseContext ctx{win.phases[static_cast<std::size_t>(p)], std::nullopt, std::nullopt, false};
    out[static_cast<std::size_t>(p)].phase = p;
    for (int id : which)
      out[static_cast<std::size_t>(p)].values[id] = detail::compute_feature(id, ctx, seq_mags, seq_defined);
  }
  return out;
}

inline std::array<FeatureVector, 3> extract_all(const waveform::SampleWindow& win) {
  return extract(win, registry::all_ids());
}

/// Per-phase maxima of A2 and A5 (lag-10 fit) over a set of windows; the
/// fuzzy detector's inputs.
struct PhaseMaxCoeffs {
  std::array<double, 3> max_a2{};
  std::array<double, 3> max_a5{};
};

inline PhaseMaxCoeffs fuzzy_inputs(std::span<const waveform::SampleWindow> windows) {
  if (windows.empty()) throw std::invalid_argument("fuzzy_inputs: need at least one window");
  PhaseMaxCoeffs out;
  bool first = true;
  for (const auto& win : windows) {
    for (int p = 0; p < 3; ++p) {
      const auto model = ar::ar_fit(win.phases[static_cast<std::size_t>(p)], 10);
      const double a2 = model.coeffs[1];
      const double a5 = model.coeffs[4];
      auto& m2 = out.max_a2[static_cast<std::size_t>(p)];
      auto& m5 = out.max_a5[static_cast<std::size_t>(p)];
      if (first) { m2 = a2; m5 = a5; }
      else { m2 = std::max(m2, a2); m5 = std::max(m5, a5); }
    }
    first = false;
  }
  return out;
}

}  // namespace relayar::features
