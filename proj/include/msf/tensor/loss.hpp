#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "msf/tensor/matrix.hpp"

namespace msf {

template <typename T>
struct LossAndGrad {
  T loss{};
  Matrix<T> grad;
};

// Numerically stable softmax of one row, written into `out`.
template <typename T>
void softmax_row(std::span<const T> logits, std::span<T> out) {
  const T peak = *std::max_element(logits.begin(), logits.end());
  T total{0};
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out[c] = std::exp(logits[c] - peak);
    total += out[c];
  }
  for (auto& p : out) p /= total;
}

template <typename T>
Matrix<T> softmax(const Matrix<T>& logits) {
  Matrix<T> probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) softmax_row<T>(logits.row(i), probs.row(i));
  return probs;
}

// Mean cross-entropy over the batch; grad = (softmax - onehot) / B.
template <typename T>
LossAndGrad<T> softmax_xent(const Matrix<T>& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  const std::size_t batch = logits.rows();
  const std::size_t classes = logits.cols();
  LossAndGrad<T> result{T{0}, Matrix<T>(batch, classes)};
  if (batch == 0) return result;
  const T inv_batch = T{1} / static_cast<T>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    if (labels[i] >= classes) {
      throw IndexError("softmax_xent: label " + std::to_string(labels[i]) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    auto row = logits.row(i);
    const T peak = *std::max_element(row.begin(), row.end());
    T total{0};
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - peak);
    const T log_norm = peak + std::log(total);
    result.loss += (log_norm - row[labels[i]]) * inv_batch;
    for (std::size_t c = 0; c < classes; ++c) {
      const T p = std::exp(row[c] - log_norm);
      result.grad(i, c) = (p - (c == labels[i] ? T{1} : T{0})) * inv_batch;
    }
  }
  return result;
}

// Shannon entropy in nats with 0 log 0 = 0.
template <typename T>
T entropy(std::span<const T> probs) {
  T h{0};
  for (T p : probs) {
    if (p > T{0}) h -= p * std::log(p);
  }
  return h;
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
  return static_cast<std::size_t>(
      std::distance(values.begin(), std::max_element(values.begin(), values.end())));
}

}  // namespace msf
