#pragma once

// Independent naive oracles for the feature catalog and a few analytic
// helpers. Everything here is deliberately written as a direct, slow
// evaluation of the defining formulas, separate from the library code paths
// it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Value {
  double v = 0.0;
  bool defined = true;
};

inline double mean(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double population_sigma(std::span<const double> x) {
  const double mu = mean(x);
  double s = 0;
  for (double v : x) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline double abs_energy(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return s;
}

inline double abs_sum_changes(std::span<const double> x) {
  double s = 0;
  for (std::size_t i = 1; i < x.size(); ++i) s += std::fabs(x[i] - x[i - 1]);
  return s;
}

inline Value autocorrelation(std::span<const double> x, std::size_t lag) {
  const double mu = mean(x);
  const double sigma = population_sigma(x);
  if (sigma == 0.0 || x.size() <= lag) return {0.0, false};
  double s = 0;
  for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mu) * (x[i + lag] - mu);
  return {s / ((static_cast<double>(x.size()) - 1.0) * sigma * sigma), true};
}

inline Value kurtosis(std::span<const double> x) {
  const double mu = mean(x);
  const double sigma = population_sigma(x);
  if (sigma == 0.0) return {0.0, false};
  double m4 = 0;
  for (double v : x) m4 += std::pow(v - mu, 4.0);
  m4 /= static_cast<double>(x.size());
  return {m4 / std::pow(sigma, 4.0), true};
}

inline Value skewness(std::span<const double> x) {
  const double mu = mean(x);
  const double sigma = population_sigma(x);
  if (sigma == 0.0) return {0.0, false};
  double m3 = 0;
  for (double v : x) m3 += std::pow(v - mu, 3.0);
  m3 /= static_cast<double>(x.size());
  return {m3 / std::pow(sigma, 3.0), true};
}

inline std::complex<double> dft_bin(std::span<const double> x, int k) {
  std::complex<double> acc{0, 0};
  const auto n = static_cast<double>(x.size());
  for (std::size_t m = 0; m < x.size(); ++m)
    acc += x[m] * std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * k * static_cast<double>(m) / n));
  return acc;
}

inline double ricker(std::span<const double> x, double width, double center) {
  double acc = 0;
  const double norm = 2.0 / (std::sqrt(3.0 * width) * std::pow(std::numbers::pi, 0.25));
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double u = (static_cast<double>(m) - center) / width;
    acc += x[m] * norm * (1.0 - u * u) * std::exp(-u * u / 2.0);
  }
  return acc;
}

inline Value sample_entropy(std::span<const double> x) {
  const std::size_t m = 2;
  const double sigma = population_sigma(x);
  if (sigma == 0.0 || x.size() < m + 2) return {0.0, false};
  const double r = 0.2 * sigma;
  const std::size_t count = x.size() - m;
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i + 1; j < count; ++j) {
      bool close_m = true;
      for (std::size_t t = 0; t < m; ++t)
        if (std::fabs(x[i + t] - x[j + t]) > r) close_m = false;
      if (!close_m) continue;
      ++b;
      if (std::fabs(x[i + m] - x[j + m]) <= r) ++a;
    }
  if (a == 0 || b == 0) return {0.0, false};
  return {-std::log(static_cast<double>(a) / static_cast<double>(b)), true};
}

inline double quantile(std::span<const double> x, double p) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - std::floor(h)) * (s[hi] - s[lo]);
}

inline double first_max_pos(std::span<const double> x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i] > x[best]) best = i;
  return static_cast<double>(best) / static_cast<double>(x.size());
}

inline double last_max_pos(std::span<const double> x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i] >= x[best]) best = i;
  return static_cast<double>(best) / static_cast<double>(x.size());
}

inline double cid_complexity(std::span<const double> x) {
  double s = 0;
  for (std::size_t i = 1; i < x.size(); ++i) s += (x[i] - x[i - 1]) * (x[i] - x[i - 1]);
  return std::sqrt(s);
}

/// AR least squares via normal equations (the closed-form full-rank estimate)
/// and long-double Gauss-Jordan elimination. Only defined where the normal
/// matrix is invertible, so callers restrict it to comfortably overdetermined
/// windows.
inline std::vector<double> ar_normal_equations(std::span<const double> x, int p) {
  const std::size_t n = x.size();
  const auto cols = static_cast<std::size_t>(p);
  const std::size_t rows = n - cols;
  if (rows <= cols) throw std::runtime_error("oracle: window too short for the full-rank AR estimate");
  std::vector<std::vector<long double>> s(rows, std::vector<long double>(cols));
  std::vector<long double> target(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) s[i][k] = x[i + cols - 1 - k];
    target[i] = x[i + cols];
  }
  std::vector<std::vector<long double>> ata(cols, std::vector<long double>(cols + 1, 0.0L));
  for (std::size_t a = 0; a < cols; ++a) {
    for (std::size_t b = 0; b < cols; ++b)
      for (std::size_t i = 0; i < rows; ++i) ata[a][b] += s[i][a] * s[i][b];
    for (std::size_t i = 0; i < rows; ++i) ata[a][cols] += s[i][a] * target[i];
  }
  for (std::size_t col = 0; col < cols; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < cols; ++r)
      if (std::fabs(static_cast<double>(ata[r][col])) > std::fabs(static_cast<double>(ata[pivot][col]))) pivot = r;
    std::swap(ata[col], ata[pivot]);
    if (ata[col][col] == 0.0L) throw std::runtime_error("oracle: singular normal equations");
    for (std::size_t r = 0; r < cols; ++r) {
      if (r == col) continue;
      const long double f = ata[r][col] / ata[col][col];
      for (std::size_t c = col; c <= cols; ++c) ata[r][c] -= f * ata[col][c];
    }
  }
  std::vector<double> coeffs(cols);
  for (std::size_t c = 0; c < cols; ++c) coeffs[c] = static_cast<double>(ata[c][cols] / ata[c][c]);
  return coeffs;
}

/// Exact-recurrence certificate for short windows where the closed-form
/// estimate is undefined: the fitted coefficients must reproduce the samples
/// (the underdetermined random system is consistent) with minimal residual.
inline double ar_recurrence_residual(std::span<const double> x, std::span<const double> coeffs) {
  const std::size_t p = coeffs.size();
  long double acc = 0.0L, scale = 0.0L;
  for (std::size_t t = p; t < x.size(); ++t) {
    long double pred = 0.0L;
    for (std::size_t k = 1; k <= p; ++k) pred += coeffs[k - 1] * x[t - k];
    const long double d = pred - x[t];
    acc += d * d;
    scale += static_cast<long double>(x[t]) * x[t];
  }
  return static_cast<double>(std::sqrt(static_cast<double>(acc)) / (1.0 + std::sqrt(static_cast<double>(scale))));
}

inline std::array<double, 3> sequence_components(std::complex<double> ia, std::complex<double> ib,
                                                 std::complex<double> ic) {
  const std::complex<double> a = std::exp(std::complex<double>(0.0, 2.0 * std::numbers::pi / 3.0));
  return {std::abs((ia + ib + ic) / 3.0), std::abs((ia + a * ib + a * a * ic) / 3.0),
          std::abs((ia + a * a * ib + a * ic) / 3.0)};
}

/// Analog Butterworth magnitude response |H(j2*pi*f)| for a low-pass of the
/// given order and cutoff.
inline double butterworth_magnitude(int order, double fc, double f) {
  return 1.0 / std::sqrt(1.0 + std::pow(f / fc, 2.0 * order));
}

/// Exact centroid of a trapezoid membership clipped at height h, by piecewise
/// integration of z*mu(z) and mu(z).
inline double clipped_trapezoid_centroid(double a, double b, double c, double d, double h) {
  if (h <= 0.0) throw std::invalid_argument("clip height must be positive");
  // clip turns the ramps into ramps up to h: full membership between
  // b' = a + h*(b-a) and c' = d - h*(d-c)
  const double bp = a + h * (b - a);
  const double cp = d - h * (d - c);
  const auto ramp_up = [&](double x0, double x1, bool moment) {
    // mu = (z-a)/(b-a) on [x0,x1]
    if (x1 <= x0) return 0.0;
    const double k = 1.0 / (b - a);
    if (moment) {
      // integral z*(z-a)k dz
      return k * ((x1 * x1 * x1 - x0 * x0 * x0) / 3.0 - a * (x1 * x1 - x0 * x0) / 2.0);
    }
    return k * ((x1 * x1 - x0 * x0) / 2.0 - a * (x1 - x0));
  };
  const auto ramp_down = [&](double x0, double x1, bool moment) {
    // mu = (d-z)/(d-c) on [x0,x1]
    if (x1 <= x0) return 0.0;
    const double k = 1.0 / (d - c);
    if (moment) {
      return k * (d * (x1 * x1 - x0 * x0) / 2.0 - (x1 * x1 * x1 - x0 * x0 * x0) / 3.0);
    }
    return k * (d * (x1 - x0) - (x1 * x1 - x0 * x0) / 2.0);
  };
  const auto flat = [&](double x0, double x1, bool moment) {
    if (x1 <= x0) return 0.0;
    return moment ? h * (x1 * x1 - x0 * x0) / 2.0 : h * (x1 - x0);
  };
  double num = 0.0, den = 0.0;
  if (b > a) {
    num += ramp_up(a, bp, true);
    den += ramp_up(a, bp, false);
  }
  num += flat(bp, cp, true);
  den += flat(bp, cp, false);
  if (d > c) {
    num += ramp_down(cp, d, true);
    den += ramp_down(cp, d, false);
  }
  return num / den;
}

/// Direct-count MI in nats over two discrete code vectors.
inline double naive_mi(std::span<const int> a, std::span<const int> b) {
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<double> pa(static_cast<std::size_t>(ka), 0.0), pb(static_cast<std::size_t>(kb), 0.0);
  std::vector<std::vector<double>> pab(static_cast<std::size_t>(ka), std::vector<double>(static_cast<std::size_t>(kb), 0.0));
  const auto n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[static_cast<std::size_t>(a[i])] += 1.0 / n;
    pb[static_cast<std::size_t>(b[i])] += 1.0 / n;
    pab[static_cast<std::size_t>(a[i])][static_cast<std::size_t>(b[i])] += 1.0 / n;
  }
  double mi = 0.0;
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      const double pj = pab[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (pj > 0.0) mi += pj * std::log(pj / (pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)]));
    }
  return mi;
}

}  // namespace oracle
