#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "msf/error.hpp"

namespace msf {

template <typename T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  // One moment buffer per parameter buffer, allocated on the first step.
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  AdamState() = default;
  explicit AdamState(double learning_rate) : lr(learning_rate) {}
};

// One bias-corrected Adam update over every parameter buffer. `params[i]` and
// `grads[i]` must have the same length, and the buffer layout must not change
// between steps.
template <typename T>
void adam_step(const std::vector<std::span<T>>& params, const std::vector<std::span<const T>>& grads,
               AdamState<T>& state) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].size(), T{0});
      state.v[i].assign(params[i].size(), T{0});
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: buffer count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || state.m[i].size() != params[i].size()) {
      throw ShapeError("adam_step: buffer " + std::to_string(i) + " shape mismatch");
    }
  }

  ++state.t;
  const double step = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(state.beta1, step);
  const double bias2 = 1.0 - std::pow(state.beta2, step);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i];
    auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (T{1} - b1) * g[k];
      v[k] = b2 * v[k] + (T{1} - b2) * g[k] * g[k];
      const double m_hat = static_cast<double>(m[k]) / bias1;
      const double v_hat = static_cast<double>(v[k]) / bias2;
      p[k] -= static_cast<T>(state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

// Single-buffer convenience overload.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state) {
  adam_step<T>(std::vector<std::span<T>>{params}, std::vector<std::span<const T>>{grads}, state);
}

}  // namespace msf
