#pragma once

#include <algorithm>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "msf/tensor/loss.hpp"
#include "msf/vae/alignment.hpp"
#include "msf/zsl/classifier.hpp"
#include "msf/zsl/gate.hpp"

namespace msf {

enum class GateFeatureMode {
  // [max p_seen, H(p_seen), max p_unseen, H(p_unseen)]
  summary,
  // Both probability vectors sorted in descending order, each zero-padded to a
  // fixed width so heads with different class counts share one gate.
  sorted_probabilities,
};

inline std::string_view to_string(GateFeatureMode m) {
  return m == GateFeatureMode::summary ? "summary" : "sorted_probabilities";
}

struct GateFeatureSpec {
  GateFeatureMode mode = GateFeatureMode::summary;
  std::size_t seen_width = 0;    // only for sorted_probabilities
  std::size_t unseen_width = 0;  // only for sorted_probabilities

  std::size_t dim() const { return mode == GateFeatureMode::summary ? 4 : seen_width + unseen_width; }
};

// Everything needed at inference time.
struct GzslModel {
  AlignmentModule alignment;
  ClassifierHead seen_head;
  ClassifierHead unseen_head;
  GateModel gate;
  GateFeatureSpec gate_features;
};

namespace detail {

inline void append_distribution_features(std::span<const double> probs, const GateFeatureSpec& spec,
                                         std::size_t width, std::vector<double>& out) {
  if (spec.mode == GateFeatureMode::summary) {
    out.push_back(*std::max_element(probs.begin(), probs.end()));
    out.push_back(entropy(probs));
    return;
  }
  std::vector<double> sorted(probs.begin(), probs.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  sorted.resize(width, 0.0);
  out.insert(out.end(), sorted.begin(), sorted.end());
}

}  // namespace detail

// Gate inputs for a batch of skeleton features: the seen head scores the raw
// features, the unseen head scores their latent embedding.
inline Matrix<double> gate_features(const ClassifierHead& seen_head, const ClassifierHead& unseen_head,
                                    const AlignmentModule& alignment, const Matrix<double>& skeleton_features,
                                    const GateFeatureSpec& spec = {}) {
  if (spec.mode == GateFeatureMode::sorted_probabilities &&
      (seen_head.num_classes() > spec.seen_width || unseen_head.num_classes() > spec.unseen_width)) {
    throw ShapeError("gate feature width smaller than a head's class count");
  }
  const Matrix<double> p_seen = seen_head.probabilities(skeleton_features);
  const Matrix<double> p_unseen = unseen_head.probabilities(embed_skeleton(alignment, skeleton_features));
  Matrix<double> out(skeleton_features.rows(), spec.dim());
  std::vector<double> row;
  for (std::size_t i = 0; i < skeleton_features.rows(); ++i) {
    row.clear();
    detail::append_distribution_features(p_seen.row(i), spec, spec.seen_width, row);
    detail::append_distribution_features(p_unseen.row(i), spec, spec.unseen_width, row);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

// ZSL prediction: argmax of the unseen head on the skeleton embedding.
inline std::vector<ClassId> classify_zsl(const AlignmentModule& alignment, const ClassifierHead& unseen_head,
                                         const Matrix<double>& skeleton_features) {
  return unseen_head.predict(embed_skeleton(alignment, skeleton_features));
}

// Per-sample gate decision, true when routed to the unseen head.
inline std::vector<bool> gate_decisions(const GzslModel& model, const Matrix<double>& skeleton_features) {
  const Matrix<double> feats = gate_features(model.seen_head, model.unseen_head, model.alignment,
                                             skeleton_features, model.gate_features);
  std::vector<bool> unseen(feats.rows());
  for (std::size_t i = 0; i < feats.rows(); ++i) unseen[i] = model.gate.routes_to_unseen(feats.row(i));
  return unseen;
}

// Routes each sample with the given decisions; exposed so an oracle routing
// can be evaluated against the learned gate on identical head outputs.
inline std::vector<ClassId> classify_routed(const GzslModel& model, const Matrix<double>& skeleton_features,
                                            const std::vector<bool>& route_unseen) {
  if (route_unseen.size() != skeleton_features.rows()) throw ShapeError("one routing decision per sample");
  const std::vector<ClassId> seen = model.seen_head.predict(skeleton_features);
  const std::vector<ClassId> unseen = classify_zsl(model.alignment, model.unseen_head, skeleton_features);
  std::vector<ClassId> out(seen.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = route_unseen[i] ? unseen[i] : seen[i];
  return out;
}

inline std::vector<ClassId> classify_gzsl(const GzslModel& model, const Matrix<double>& skeleton_features) {
  return classify_routed(model, skeleton_features, gate_decisions(model, skeleton_features));
}

// Gate-free baseline: one decision over the union of both heads' classes,
// picking the class with the highest softmax probability from either head.
inline std::vector<ClassId> classify_without_gate(const GzslModel& model, const Matrix<double>& skeleton_features) {
  const Matrix<double> p_seen = model.seen_head.probabilities(skeleton_features);
  const Matrix<double> p_unseen =
      model.unseen_head.probabilities(embed_skeleton(model.alignment, skeleton_features));
  std::vector<ClassId> out(skeleton_features.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t s = argmax(p_seen.row(i));
    const std::size_t u = argmax(p_unseen.row(i));
    out[i] = p_unseen(i, u) > p_seen(i, s) ? model.unseen_head.class_ids[u] : model.seen_head.class_ids[s];
  }
  return out;
}

}  // namespace msf
