#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace relayar::ar {

/// Autoregressive model s_t = sum_{k=1..p} coeffs[k-1] * s_{t-k} + noise.
struct ArModel {
  int p = 0;
  std::vector<double> coeffs;
  double residual_var = 0.0;
};

namespace detail {

/// Minimum-norm least squares for a dense row-major system via one-sided
/// Jacobi SVD. Singular values below 1e-12 of the largest are treated as zero,
/// which yields the minimum-norm solution for rank-deficient systems.
inline std::vector<double> lstsq_min_norm(const std::vector<double>& a, std::size_t rows, std::size_t cols,
                                          std::span<const double> b, double* residual2 = nullptr) {
  std::vector<double> g = a;                 // columns get orthogonalized in place
  std::vector<double> v(cols * cols, 0.0);   // accumulated right rotations
  for (std::size_t j = 0; j < cols; ++j) v[j * cols + j] = 1.0;

  const int max_sweeps = 40;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < cols; ++i) {
      for (std::size_t j = i + 1; j < cols; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          const double gi = g[r * cols + i], gj = g[r * cols + j];
          alpha += gi * gi;
          beta += gj * gj;
          gamma += gi * gj;
        }
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const double gi = g[r * cols + i], gj = g[r * cols + j];
          g[r * cols + i] = c * gi - s * gj;
          g[r * cols + j] = s * gi + c * gj;
        }
        for (std::size_t r = 0; r < cols; ++r) {
          const double vi = v[r * cols + i], vj = v[r * cols + j];
          v[r * cols + i] = c * vi - s * vj;
          v[r * cols + j] = s * vi + c * vj;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(cols, 0.0);
  double sigma_max = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    double norm2 = 0.0;
    for (std::size_t r = 0; r < rows; ++r) norm2 += g[r * cols + j] * g[r * cols + j];
    sigma[j] = std::sqrt(norm2);
    sigma_max = std::max(sigma_max, sigma[j]);
  }
  const double cut = sigma_max * 1e-12;

  std::vector<double> x(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    if (sigma[j] <= cut) continue;
    double utb = 0.0;  // (u_j . b) with u_j = g_j / sigma_j
    for (std::size_t r = 0; r < rows; ++r) utb += g[r * cols + j] * b[r];
    const double w = utb / (sigma[j] * sigma[j]);
    for (std::size_t r = 0; r < cols; ++r) x[r] += v[r * cols + j] * w;
  }

  if (residual2 != nullptr) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      double pred = 0.0;
      for (std::size_t cidx = 0; cidx < cols; ++cidx) pred += a[r * cols + cidx] * x[cidx];
      const double d = pred - b[r];
      acc += d * d;
    }
    *residual2 = acc;
  }
  return x;
}

}  // namespace detail

/// Least-squares AR(p) fit over the lagged-row system: row i predicts
/// x[i+p] from x[i+p-1..i], so coeffs[k-1] multiplies s_{t-k}. Rank-deficient
/// systems (pure tones, constants) get the minimum-norm solution.
inline ArModel ar_fit(std::span<const double> x, int p) {
  if (p < 1) throw std::invalid_argument("ar_fit: lag order must be >= 1");
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(p) + 2) throw std::invalid_argument("ar_fit: window shorter than p+2");
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("ar_fit: non-finite input");

  const std::size_t rows = n - static_cast<std::size_t>(p);
  const auto cols = static_cast<std::size_t>(p);
  std::vector<double> a(rows * cols);
  std::vector<double> b(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) a[i * cols + k] = x[i + cols - 1 - k];
    b[i] = x[i + cols];
  }

  ArModel model;
  model.p = p;
  double r2 = 0.0;
  model.coeffs = detail::lstsq_min_norm(a, rows, cols, b, &r2);
  model.residual_var = r2 / static_cast<double>(rows);
  return model;
}

}  // namespace relayar::ar
