#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msf/error.hpp"
#include "msf/semantic/fusion.hpp"
#include "msf/tensor/adam.hpp"
#include "msf/tensor/dense.hpp"
#include "msf/tensor/loss.hpp"

namespace msf {

// Linear softmax classifier; row r of the weight matrix scores class_ids[r].
struct ClassifierHead {
  DenseLayer<double> layer;
  std::vector<ClassId> class_ids;

  std::size_t num_classes() const noexcept { return class_ids.size(); }
  std::size_t in_dim() const { return layer.in_dim(); }

  Matrix<double> logits(const Matrix<double>& x) const { return linear_forward(x, layer); }
  Matrix<double> probabilities(const Matrix<double>& x) const { return softmax(logits(x)); }

  std::vector<ClassId> predict(const Matrix<double>& x) const {
    const Matrix<double> scores = logits(x);
    std::vector<ClassId> out(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) out[i] = class_ids[argmax(scores.row(i))];
    return out;
  }

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

struct HeadConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Cross-entropy training with Adam from zero weights. Starting at zero keeps
// the fit equivariant under any relabeling of the classes.
inline ClassifierHead train_softmax_head(const Matrix<double>& x, std::span<const ClassId> labels,
                                         const HeadConfig& cfg) {
  if (labels.size() != x.rows()) throw ShapeError("classifier: label count mismatch");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  std::vector<ClassId> ids(labels.begin(), labels.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) {
    throw DegenerateDataError("classifier needs at least two classes, got " + std::to_string(ids.size()));
  }
  std::map<ClassId, std::size_t> local;
  for (std::size_t i = 0; i < ids.size(); ++i) local.emplace(ids[i], i);
  std::vector<std::size_t> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) targets[i] = local.at(labels[i]);

  ClassifierHead head{DenseLayer<double>(x.cols(), ids.size()), ids};
  DenseLayer<double> grad = zeros_like(head.layer);
  AdamState<double> adam(cfg.learning_rate);
  std::vector<std::span<double>> params;
  append_parameters(head.layer, params);
  std::vector<std::span<double>> grad_bufs;
  append_parameters(grad, grad_bufs);
  const std::vector<std::span<const double>> grads(grad_bufs.begin(), grad_bufs.end());

  std::mt19937_64 rng(cfg.seed);
  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> batch_targets;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Matrix<double> xb = x.gather_rows(rows);
      batch_targets.clear();
      for (std::size_t r : rows) batch_targets.push_back(targets[r]);
      const Matrix<double> logits = linear_forward(xb, head.layer);
      const auto loss = softmax_xent(logits, std::span<const std::size_t>(batch_targets));
      if (!std::isfinite(loss.loss)) throw NumericError("classifier training produced a non-finite loss");
      for (auto buf : grad_bufs) std::fill(buf.begin(), buf.end(), 0.0);
      linear_backward(xb, head.layer, logits, loss.grad, grad);
      adam_step(params, grads, adam);
    }
  }
  return head;
}

inline ClassifierHead train_seen_classifier(const Matrix<double>& skeleton_features,
                                            std::span<const ClassId> labels, const HeadConfig& cfg) {
  return train_softmax_head(skeleton_features, labels, cfg);
}

inline ClassifierHead train_unseen_classifier(const Matrix<double>& latents, std::span<const ClassId> labels,
                                              const HeadConfig& cfg) {
  return train_softmax_head(latents, labels, cfg);
}

}  // namespace msf
