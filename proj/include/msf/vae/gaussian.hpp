#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "msf/tensor/matrix.hpp"

namespace msf {

inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 20.0;

// Batch of diagonal Gaussians, one per row: N(mu, diag(exp(log_var))).
struct GaussianParams {
  Matrix<double> mu;
  Matrix<double> log_var;

  std::size_t batch() const noexcept { return mu.rows(); }
  std::size_t latent_dim() const noexcept { return mu.cols(); }
};

inline double clamp_log_var(double v) { return std::clamp(v, kLogVarMin, kLogVarMax); }

// z = mu + exp(0.5 log_var) * eps. log_var = -inf is allowed and yields z = mu.
inline Matrix<double> reparameterize(const GaussianParams& g, const Matrix<double>& eps) {
  require_same_shape(g.mu, g.log_var, "reparameterize(mu, log_var)");
  require_same_shape(g.mu, eps, "reparameterize(mu, eps)");
  Matrix<double> z(g.mu.rows(), g.mu.cols());
  auto mu = g.mu.values();
  auto lv = g.log_var.values();
  auto e = eps.values();
  auto out = z.values();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = mu[k] + std::exp(0.5 * lv[k]) * e[k];
  return z;
}

// KL(N(mu, diag(exp(log_var))) || N(0, I)) for a single Gaussian.
inline double kl_to_standard_normal(std::span<const double> mu, std::span<const double> log_var) {
  if (mu.size() != log_var.size()) throw ShapeError("kl_to_standard_normal: length mismatch");
  double kl = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    kl += 0.5 * (mu[d] * mu[d] + std::exp(log_var[d]) - 1.0 - log_var[d]);
  }
  return kl;
}

// Mean over the batch of the per-row KL.
inline double kl_to_standard_normal(const GaussianParams& g) {
  require_same_shape(g.mu, g.log_var, "kl_to_standard_normal");
  if (g.batch() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < g.batch(); ++i) total += kl_to_standard_normal(g.mu.row(i), g.log_var.row(i));
  return total / static_cast<double>(g.batch());
}

}  // namespace msf
