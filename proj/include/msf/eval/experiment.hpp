#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "msf/error.hpp"
#include "msf/eval/metrics.hpp"
#include "msf/eval/partition.hpp"
#include "msf/eval/split.hpp"
#include "msf/semantic/fusion.hpp"
#include "msf/util/parallel.hpp"
#include "msf/util/seed.hpp"
#include "msf/vae/alignment.hpp"
#include "msf/zsl/classifier.hpp"
#include "msf/zsl/classify.hpp"
#include "msf/zsl/gate.hpp"

namespace msf {

struct Dataset {
  Matrix<double> skeleton;
  std::vector<ClassId> labels;
  SemanticBundle semantics;
};

struct ExperimentConfig {
  SemanticMode semantic_mode = SemanticMode::lb_ad_md;
  FusionOptions fusion;
  AlignmentConfig alignment;
  HeadConfig seen_head{100, 64, 1e-3, 0};
  HeadConfig unseen_head{300, 64, 1e-3, 0};
  std::size_t n_per_class = 500;
  GateTrainConfig gate;
  GateFeatureMode gate_feature_mode = GateFeatureMode::summary;
  double seen_test_fraction = 0.2;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
};

// Stage failure wrapper naming the stage that raised.
struct ExperimentStageError : Error {
  ExperimentStageError(std::string stage_name, const std::string& what)
      : Error("stage '" + stage_name + "' failed: " + what), stage(std::move(stage_name)) {}
  std::string stage;
};

// Per-stage seed streams.
enum class SeedStream : std::uint64_t {
  seen_test_split = 1,
  seen_head = 2,
  validation_partition = 3,
  inner_seen_head = 4,
  inner_alignment = 5,
  inner_synthesis = 6,
  inner_unseen_head = 7,
  final_alignment = 8,
  final_synthesis = 9,
  final_unseen_head = 10,
};

inline std::uint64_t stage_seed(std::uint64_t seed, SeedStream s) {
  return derive_seed(seed, static_cast<std::uint64_t>(s));
}

struct SeenTestSplit {
  std::vector<std::size_t> train;  // seen-class rows used for training
  std::vector<std::size_t> test;   // seen-class rows held out, plus every unseen-class row
};

// Stratified split: a `test_fraction` slice of each seen class is held out;
// all unseen-class rows are test rows.
inline SeenTestSplit split_train_test(std::span<const ClassId> labels, const SplitSpec& split, double test_fraction,
                                      std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("seen_test_fraction must be in (0, 1)");
  std::map<ClassId, std::vector<std::size_t>> rows_by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!split.is_seen(labels[i]) && !split.is_unseen(labels[i])) {
      throw LookupError("sample class " + std::to_string(labels[i]) + " is not in the split");
    }
    rows_by_class[labels[i]].push_back(i);
  }
  std::mt19937_64 rng(seed);
  SeenTestSplit out;
  for (auto& [id, rows] : rows_by_class) {
    if (split.is_unseen(id)) {
      out.test.insert(out.test.end(), rows.begin(), rows.end());
      continue;
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    std::size_t held = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    held = std::clamp<std::size_t>(held, rows.size() >= 2 ? 1 : 0, rows.size() - 1);
    out.test.insert(out.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(held));
    out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(held), rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline std::vector<ClassId> gather_labels(std::span<const ClassId> labels, std::span<const std::size_t> rows) {
  std::vector<ClassId> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

struct EvaluationResult {
  GzslMetrics gated;
  GzslMetrics oracle_gate;  // routing by the true seen/unseen flag
  GzslMetrics no_gate;      // single decision over both heads
  double zsl_acc = 0.0;     // unseen head alone on unseen-class samples
  double gate_accuracy = 0.0;
  std::vector<ClassId> truths;
  std::vector<ClassId> predictions;
  std::vector<ClassId> zsl_predictions;  // for unseen-class test rows, in order
};

// Runs `fn` over row chunks of `x` in parallel, concatenating per-row outputs.
template <typename Out, typename Fn>
std::vector<Out> map_rows(const Matrix<double>& x, Fn&& fn) {
  std::vector<Out> out(x.rows());
  parallel_for_chunks(x.rows(), [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> rows(end - begin);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = begin + i;
    const auto chunk = fn(x.gather_rows(rows));
    std::copy(chunk.begin(), chunk.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return out;
}

inline EvaluationResult evaluate_model(const GzslModel& model, const Matrix<double>& features,
                                       std::span<const ClassId> truths, const SplitSpec& split) {
  if (features.rows() != truths.size()) throw ShapeError("evaluate_model: label count mismatch");
  EvaluationResult r;
  r.truths.assign(truths.begin(), truths.end());
  const auto route = map_rows<char>(features, [&](const Matrix<double>& chunk) {
    const auto d = gate_decisions(model, chunk);
    return std::vector<char>(d.begin(), d.end());
  });
  const std::vector<bool> learned(route.begin(), route.end());
  std::vector<bool> oracle(truths.size());
  std::size_t gate_correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    oracle[i] = split.is_unseen(truths[i]);
    gate_correct += oracle[i] == learned[i] ? 1 : 0;
  }
  const auto seen_pred = map_rows<ClassId>(features, [&](const Matrix<double>& c) { return model.seen_head.predict(c); });
  const auto unseen_pred =
      map_rows<ClassId>(features, [&](const Matrix<double>& c) { return classify_zsl(model.alignment, model.unseen_head, c); });
  auto routed = [&](const std::vector<bool>& to_unseen) {
    std::vector<ClassId> out(truths.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_unseen[i] ? unseen_pred[i] : seen_pred[i];
    return out;
  };
  r.predictions = routed(learned);
  r.gated = gzsl_metrics(r.predictions, truths, split);
  r.oracle_gate = gzsl_metrics(routed(oracle), truths, split);
  const auto no_gate = map_rows<ClassId>(features, [&](const Matrix<double>& c) { return classify_without_gate(model, c); });
  r.no_gate = gzsl_metrics(no_gate, truths, split);
  r.gate_accuracy = 100.0 * static_cast<double>(gate_correct) / static_cast<double>(truths.size());

  std::vector<ClassId> unseen_truth;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!oracle[i]) continue;
    unseen_truth.push_back(truths[i]);
    r.zsl_predictions.push_back(unseen_pred[i]);
  }
  r.zsl_acc = zsl_accuracy(r.zsl_predictions, unseen_truth);
  return r;
}

struct ExperimentResult {
  GzslModel model;
  EvaluationResult evaluation;
  std::size_t fused_dim = 0;
  std::vector<EpochLoss> inner_alignment_trace;
  std::vector<EpochLoss> final_alignment_trace;
  std::vector<ClassId> pseudo_unseen;
  GateFitReport gate_fit;
  SeenTestSplit rows;
};

namespace detail {

template <typename Fn>
auto run_stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ExperimentStageError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExperimentStageError(name, e.what());
  }
}

}  // namespace detail

struct TrainedPipeline {
  GzslModel model;
  std::size_t fused_dim = 0;
  std::vector<EpochLoss> inner_alignment_trace;
  std::vector<EpochLoss> final_alignment_trace;
  std::vector<ClassId> pseudo_unseen;
  GateFitReport gate_fit;
  SeenTestSplit rows;
};

// Training stages only: seen head, inner pipeline on pseudo-unseen classes to
// fit the gate, then alignment and unseen head on the true split.
inline TrainedPipeline train_pipeline(const Dataset& data, const SplitSpec& split, const ExperimentConfig& cfg) {
  TrainedPipeline out;
  const std::set<ClassId> present(data.labels.begin(), data.labels.end());
  detail::run_stage("validate", [&] {
    validate_split(split);
    if (data.labels.size() != data.skeleton.rows()) throw ShapeError("dataset label count mismatch");
    for (ClassId id : split.all_ids()) {
      if (!present.contains(id)) throw ConfigError("no skeleton samples for class " + std::to_string(id));
    }
    return 0;
  });
  const PrototypeTable prototypes =
      detail::run_stage("fusion", [&] { return fuse_semantics(data.semantics, cfg.semantic_mode, cfg.fusion); });
  out.fused_dim = prototypes.dim();
  out.rows = split_train_test(data.labels, split, cfg.seen_test_fraction, stage_seed(cfg.seed, SeedStream::seen_test_split));
  const Matrix<double> train_x = data.skeleton.gather_rows(out.rows.train);
  const std::vector<ClassId> train_y = gather_labels(data.labels, out.rows.train);

  auto head_cfg = [&](HeadConfig h, SeedStream s) {
    h.seed = stage_seed(cfg.seed, s);
    return h;
  };

  out.model.seen_head = detail::run_stage("seen-classifier", [&] {
    return train_seen_classifier(train_x, train_y, head_cfg(cfg.seen_head, SeedStream::seen_head));
  });

  // Inner pipeline: pseudo-unseen classes stand in for the unseen ones.
  const ValidationPartition part = detail::run_stage("validation-partition", [&] {
    return partition_validation(train_y, split, stage_seed(cfg.seed, SeedStream::validation_partition),
                                cfg.holdout_fraction);
  });
  out.pseudo_unseen = part.pseudo_unseen;
  const Matrix<double> inner_x = train_x.gather_rows(part.inner_train);
  const std::vector<ClassId> inner_y = gather_labels(train_y, part.inner_train);
  const Matrix<double> gate_x = train_x.gather_rows(part.gate_val);

  GateFeatureSpec feature_spec{cfg.gate_feature_mode, split.seen.size(), split.unseen.size()};
  detail::run_stage("gate", [&] {
    const ClassifierHead inner_seen =
        train_seen_classifier(inner_x, inner_y, head_cfg(cfg.seen_head, SeedStream::inner_seen_head));
    AlignmentTrainResult inner = train_alignment(inner_x, inner_y, prototypes, cfg.alignment,
                                                 stage_seed(cfg.seed, SeedStream::inner_alignment));
    out.inner_alignment_trace = std::move(inner.trace);
    const LatentSet latents = synthesize_latents(inner.module, prototypes, part.pseudo_unseen, cfg.n_per_class,
                                                 stage_seed(cfg.seed, SeedStream::inner_synthesis));
    const ClassifierHead inner_unseen = train_unseen_classifier(
        latents.z, latents.labels, head_cfg(cfg.unseen_head, SeedStream::inner_unseen_head));
    const Matrix<double> feats = gate_features(inner_seen, inner_unseen, inner.module, gate_x, feature_spec);
    out.model.gate = train_gate(feats, part.gate_val_is_unseen, cfg.gate, &out.gate_fit);
    out.model.gate_features = feature_spec;
    return 0;
  });

  detail::run_stage("alignment", [&] {
    AlignmentTrainResult final_run = train_alignment(train_x, train_y, prototypes, cfg.alignment,
                                                     stage_seed(cfg.seed, SeedStream::final_alignment));
    out.final_alignment_trace = std::move(final_run.trace);
    out.model.alignment = std::move(final_run.module);
    return 0;
  });

  out.model.unseen_head = detail::run_stage("unseen-classifier", [&] {
    const auto unseen = split.unseen_ids();
    const LatentSet latents = synthesize_latents(out.model.alignment, prototypes, unseen, cfg.n_per_class,
                                                 stage_seed(cfg.seed, SeedStream::final_synthesis));
    return train_unseen_classifier(latents.z, latents.labels,
                                   head_cfg(cfg.unseen_head, SeedStream::final_unseen_head));
  });
  return out;
}

// Full four-stage run followed by gated evaluation on the held-out rows.
inline ExperimentResult run_gzssar_experiment(const Dataset& data, const SplitSpec& split, const ExperimentConfig& cfg) {
  TrainedPipeline trained = train_pipeline(data, split, cfg);
  ExperimentResult result;
  result.evaluation = detail::run_stage("evaluation", [&] {
    const Matrix<double> test_x = data.skeleton.gather_rows(trained.rows.test);
    const std::vector<ClassId> test_y = gather_labels(data.labels, trained.rows.test);
    return evaluate_model(trained.model, test_x, test_y, split);
  });
  result.model = std::move(trained.model);
  result.fused_dim = trained.fused_dim;
  result.inner_alignment_trace = std::move(trained.inner_alignment_trace);
  result.final_alignment_trace = std::move(trained.final_alignment_trace);
  result.pseudo_unseen = std::move(trained.pseudo_unseen);
  result.gate_fit = trained.gate_fit;
  result.rows = std::move(trained.rows);
  return result;
}

}  // namespace msf
