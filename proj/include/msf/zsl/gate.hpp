#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msf/error.hpp"
#include "msf/tensor/matrix.hpp"

namespace msf {

// Binary logistic model P(unseen | x) = sigmoid(w . x + b).
struct GateModel {
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.5;

  std::size_t dim() const noexcept { return weights.size(); }

  double probability_unseen(std::span<const double> x) const {
    if (x.size() != weights.size()) throw ShapeError("gate: feature width mismatch");
    double s = bias;
    for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
    return 1.0 / (1.0 + std::exp(-s));
  }

  bool routes_to_unseen(std::span<const double> x) const { return probability_unseen(x) > threshold; }

  friend bool operator==(const GateModel&, const GateModel&) = default;
};

struct GateTrainConfig {
  // Inverse regularization strength: objective = 0.5 ||w||^2 + C * sum log-loss.
  // The intercept is not penalized.
  double c = 1.0;
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 1000;
  std::size_t history = 10;
  double threshold = 0.5;
  // Starting point (w..., b); zeros when empty.
  std::vector<double> initial;
};

struct GateFitReport {
  std::size_t iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

namespace detail {

inline double log1p_exp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// Regularized logistic objective and gradient over theta = (w, b).
inline double logistic_objective(const Matrix<double>& x, std::span<const int> y, double c,
                                 std::span<const double> theta, std::span<double> grad) {
  const std::size_t d = x.cols();
  double f = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    f += 0.5 * theta[j] * theta[j];
    grad[j] = theta[j];
  }
  grad[d] = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    double s = theta[d];
    for (std::size_t j = 0; j < d; ++j) s += theta[j] * xi[j];
    const double sign = y[i] ? 1.0 : -1.0;
    const double margin = sign * s;
    f += c * log1p_exp(-margin);
    // d/ds log(1 + exp(-sign*s)) = -sign * sigmoid(-margin)
    const double coef = -c * sign / (1.0 + std::exp(margin));
    for (std::size_t j = 0; j < d; ++j) grad[j] += coef * xi[j];
    grad[d] += coef;
  }
  return f;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace detail

// L2-regularized logistic regression fit by L-BFGS with Armijo backtracking.
// `is_unseen[i]` is the binary target of row i.
inline GateModel train_gate(const Matrix<double>& features, std::span<const int> is_unseen,
                            const GateTrainConfig& cfg = {}, GateFitReport* report = nullptr) {
  if (features.rows() != is_unseen.size()) throw ShapeError("train_gate: label count mismatch");
  std::size_t positives = 0;
  for (int v : is_unseen) positives += v ? 1 : 0;
  if (positives == 0 || positives == is_unseen.size()) {
    throw DegenerateDataError("train_gate needs both seen and unseen examples");
  }
  if (!(cfg.c > 0.0)) throw ConfigError("gate regularization C must be positive");

  const std::size_t d = features.cols();
  const std::size_t n = d + 1;
  std::vector<double> theta(n, 0.0);
  if (!cfg.initial.empty()) {
    if (cfg.initial.size() != n) throw ShapeError("train_gate: initial point has wrong length");
    theta = cfg.initial;
  }
  std::vector<double> grad(n), next(n), next_grad(n), direction(n);
  double f = detail::logistic_objective(features, is_unseen, cfg.c, theta, grad);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  GateFitReport rep;
  for (rep.iterations = 0; rep.iterations < cfg.max_iterations; ++rep.iterations) {
    rep.gradient_norm = std::sqrt(detail::dot(grad, grad));
    if (rep.gradient_norm < cfg.gradient_tolerance) {
      rep.converged = true;
      break;
    }
    // Two-loop recursion for direction = -H * grad.
    std::vector<double> q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * detail::dot(s_hist[k], q);
      for (std::size_t j = 0; j < n; ++j) q[j] -= alpha[k] * y_hist[k][j];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = detail::dot(s_hist.back(), y_hist.back()) / detail::dot(y_hist.back(), y_hist.back());
    for (double& v : q) v *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * detail::dot(y_hist[k], q);
      for (std::size_t j = 0; j < n; ++j) q[j] += (alpha[k] - beta) * s_hist[k][j];
    }
    for (std::size_t j = 0; j < n; ++j) direction[j] = -q[j];
    double slope = detail::dot(grad, direction);
    if (slope >= 0.0) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < n; ++j) direction[j] = -grad[j];
      slope = -rep.gradient_norm * rep.gradient_norm;
    }

    double step = 1.0;
    double f_next = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t j = 0; j < n; ++j) next[j] = theta[j] + step * direction[j];
      f_next = detail::logistic_objective(features, is_unseen, cfg.c, next, next_grad);
      if (f_next <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(n), yv(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = next[j] - theta[j];
      yv[j] = next_grad[j] - grad[j];
    }
    const double sy = detail::dot(s, yv);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > cfg.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(next);
    grad.swap(next_grad);
    f = f_next;
  }
  rep.objective = f;
  rep.gradient_norm = std::sqrt(detail::dot(grad, grad));
  rep.converged = rep.gradient_norm < cfg.gradient_tolerance;
  if (!std::isfinite(f)) throw NumericError("gate training produced a non-finite objective");
  if (report) *report = rep;

  GateModel gate;
  gate.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
  gate.bias = theta[d];
  gate.threshold = cfg.threshold;
  return gate;
}

}  // namespace msf
