#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "msf/eval/experiment.hpp"
#include "msf/io/synthetic.hpp"
#include "support/benchmark.hpp"
#include "support/oracles.hpp"

using msf::ClassId;
using msf::SplitSpec;

namespace {

SplitSpec split_of(std::set<ClassId> seen, std::set<ClassId> unseen) { return {std::move(seen), std::move(unseen), ""}; }

SplitSpec contiguous_split(ClassId n_seen, ClassId n_unseen) {
  SplitSpec s;
  for (ClassId i = 0; i < n_seen; ++i) s.seen.insert(i);
  for (ClassId i = 0; i < n_unseen; ++i) s.unseen.insert(n_seen + i);
  return s;
}

}  // namespace

TEST(ZslAccuracy, AllCorrect) {
  const std::vector<ClassId> y = {1, 2, 3};
  EXPECT_EQ(msf::zsl_accuracy(y, y), 100.0);
}

TEST(ZslAccuracy, NoneCorrect) {
  const std::vector<ClassId> p = {2, 3, 1}, y = {1, 2, 3};
  EXPECT_EQ(msf::zsl_accuracy(p, y), 0.0);
}

TEST(ZslAccuracy, ThreeOfFour) {
  const std::vector<ClassId> p = {1, 2, 3, 9}, y = {1, 2, 3, 4};
  EXPECT_EQ(msf::zsl_accuracy(p, y), 75.0);
}

TEST(ZslAccuracy, EmptyInputIsAnError) {
  EXPECT_THROW(msf::zsl_accuracy({}, {}), msf::EmptyInputError);
}

TEST(HarmonicMean, PublishedPairReproduces) { EXPECT_NEAR(msf::harmonic_mean(71.73, 66.15), 68.83, 0.01); }

TEST(HarmonicMean, EqualInputsAndZero) {
  EXPECT_DOUBLE_EQ(msf::harmonic_mean(42.5, 42.5), 42.5);
  EXPECT_EQ(msf::harmonic_mean(80.0, 0.0), 0.0);
  EXPECT_EQ(msf::harmonic_mean(0.0, 0.0), 0.0);
}

TEST(GzslMetrics, PerPartitionAccuracies) {
  const auto split = split_of({0, 1}, {2});
  const std::vector<ClassId> truth = {0, 0, 1, 1, 2, 2, 2, 2};
  const std::vector<ClassId> pred = {0, 2, 1, 1, 2, 2, 0, 1};
  const auto m = msf::gzsl_metrics(pred, truth, split);
  EXPECT_DOUBLE_EQ(m.acc_s, 75.0);
  EXPECT_DOUBLE_EQ(m.acc_u, 50.0);
  EXPECT_NEAR(m.h, oracle::harmonic(75.0, 50.0), 1e-9);
  EXPECT_NEAR(m.h, 60.0, 1e-9);
}

TEST(GzslMetrics, ZeroUnseenAccuracyAnnihilatesH) {
  const auto split = split_of({0}, {1});
  const std::vector<ClassId> truth = {0, 1}, pred = {0, 0};
  EXPECT_EQ(msf::gzsl_metrics(pred, truth, split).h, 0.0);
}

TEST(GzslMetrics, HMatchesClosedFormOnRandomPredictions) {
  const auto split = contiguous_split(7, 3);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<ClassId> cls(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClassId> truth, pred;
    for (ClassId c = 0; c < 10; ++c) truth.push_back(c);
    for (int i = 0; i < 40; ++i) truth.push_back(cls(rng));
    for (std::size_t i = 0; i < truth.size(); ++i) pred.push_back(cls(rng));
    const auto m = msf::gzsl_metrics(pred, truth, split);
    EXPECT_NEAR(m.h, oracle::harmonic(m.acc_s, m.acc_u), 1e-9);
    EXPECT_LE(m.h, 2.0 * std::min(m.acc_s, m.acc_u) + 1e-9);
    EXPECT_GE(m.acc_s, 0.0);
    EXPECT_LE(m.acc_u, 100.0);
  }
}

TEST(GzslMetrics, EmptyPartitionIsAnError) {
  const auto split = split_of({0}, {1});
  const std::vector<ClassId> truth = {0, 0};
  EXPECT_THROW(msf::gzsl_metrics(truth, truth, split), msf::EmptyInputError);
}

TEST(GzslMetrics, ClassOutsideSplitIsLookupError) {
  const auto split = split_of({0}, {1});
  const std::vector<ClassId> truth = {0, 1, 5};
  EXPECT_THROW(msf::gzsl_metrics(truth, truth, split), msf::LookupError);
}

namespace {

std::vector<ClassId> rows_for(const SplitSpec& split, std::size_t per_class) {
  std::vector<ClassId> labels;
  for (ClassId c : split.seen) {
    for (std::size_t i = 0; i < per_class; ++i) labels.push_back(c);
  }
  return labels;
}

}  // namespace

TEST(PartitionValidation, Ntu60CountsMatchTheUnseenCount) {
  const auto split = contiguous_split(55, 5);
  const auto labels = rows_for(split, 20);
  const auto part = msf::partition_validation(labels, split, 3);
  EXPECT_EQ(part.pseudo_unseen.size(), 5u);
  std::set<ClassId> inner;
  for (auto r : part.inner_train) inner.insert(labels[r]);
  EXPECT_EQ(inner.size(), 50u);
  for (ClassId c : part.pseudo_unseen) EXPECT_FALSE(inner.contains(c));
}

TEST(PartitionValidation, DisjointAndCoveringByRowId) {
  const auto split = contiguous_split(12, 3);
  const auto labels = rows_for(split, 17);
  const auto part = msf::partition_validation(labels, split, 4);
  std::vector<std::size_t> all = part.inner_train;
  all.insert(all.end(), part.gate_val.begin(), part.gate_val.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
  ASSERT_EQ(all.size(), labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(PartitionValidation, GateLabelsFlagExactlyThePseudoUnseenRows) {
  const auto split = contiguous_split(12, 3);
  const auto labels = rows_for(split, 20);
  const auto part = msf::partition_validation(labels, split, 5, 0.1);
  const std::set<ClassId> pseudo(part.pseudo_unseen.begin(), part.pseudo_unseen.end());
  std::map<ClassId, std::size_t> held_seen;
  for (std::size_t i = 0; i < part.gate_val.size(); ++i) {
    const ClassId c = labels[part.gate_val[i]];
    EXPECT_EQ(part.gate_val_is_unseen[i], pseudo.contains(c) ? 1 : 0);
    if (!pseudo.contains(c)) ++held_seen[c];
  }
  EXPECT_EQ(held_seen.size(), 9u);
  for (const auto& [c, n] : held_seen) EXPECT_EQ(n, 2u) << c;
}

TEST(PartitionValidation, SameSeedSameDraw) {
  const auto split = contiguous_split(20, 4);
  const auto labels = rows_for(split, 5);
  const auto a = msf::partition_validation(labels, split, 77);
  const auto b = msf::partition_validation(labels, split, 77);
  EXPECT_EQ(a.pseudo_unseen, b.pseudo_unseen);
  EXPECT_EQ(a.gate_val, b.gate_val);
  EXPECT_EQ(a.inner_train, b.inner_train);
}

TEST(PartitionValidation, TooFewSeenClassesIsPartitionError) {
  const auto split = contiguous_split(3, 3);
  const auto labels = rows_for(split, 5);
  EXPECT_THROW(msf::partition_validation(labels, split, 1), msf::PartitionError);
}

TEST(SplitTrainTest, StratifiedAndDisjoint) {
  const auto split = contiguous_split(4, 2);
  std::vector<ClassId> labels;
  for (ClassId c = 0; c < 6; ++c) {
    for (int i = 0; i < 10; ++i) labels.push_back(c);
  }
  const auto s = msf::split_train_test(labels, split, 0.2, 9);
  std::map<ClassId, int> test_counts;
  for (auto r : s.test) ++test_counts[labels[r]];
  for (ClassId c = 0; c < 4; ++c) EXPECT_EQ(test_counts[c], 2);
  for (ClassId c = 4; c < 6; ++c) EXPECT_EQ(test_counts[c], 10);
  for (auto r : s.train) EXPECT_TRUE(split.is_seen(labels[r]));
  EXPECT_EQ(s.train.size() + s.test.size(), labels.size());
}

TEST(ValidateSplit, RejectsOverlapAndWrongNamedCounts) {
  auto s = split_of({0, 1}, {1});
  EXPECT_THROW(msf::validate_split(s), msf::ConfigError);
  auto named = contiguous_split(50, 10);
  named.name = "ntu60-55-5";
  EXPECT_THROW(msf::validate_split(named), msf::ConfigError);
  named = contiguous_split(55, 5);
  named.name = "ntu60-55-5";
  EXPECT_NO_THROW(msf::validate_split(named));
}

namespace {

// A small, quick configuration on a 10-class problem.
struct Tiny {
  msf::Dataset data;
  SplitSpec split;
  msf::ExperimentConfig cfg;
};

Tiny tiny(double noise = 0.1) {
  msf::SyntheticConfig sc;
  sc.n_classes = 10;
  sc.samples_per_class = 40;
  sc.skel_dim = 12;
  sc.text_dim = 3;
  sc.noise_sigma = noise;
  sc.seed = 3;
  const auto ds = msf::generate_synthetic(sc);
  Tiny t{{ds.skeleton, ds.labels, ds.semantics}, msf::make_synthetic_split(10, 2, 3), bench::experiment_config(5)};
  t.cfg.alignment.latent_dim = 6;
  t.cfg.alignment.epochs = 30;
  t.cfg.seen_head.epochs = 10;
  t.cfg.unseen_head.epochs = 10;
  t.cfg.n_per_class = 50;
  return t;
}

}  // namespace

TEST(Experiment, IdenticalSeedGivesIdenticalResults) {
  const auto t = tiny();
  const auto a = msf::run_gzssar_experiment(t.data, t.split, t.cfg);
  const auto b = msf::run_gzssar_experiment(t.data, t.split, t.cfg);
  EXPECT_EQ(a.evaluation.predictions, b.evaluation.predictions);
  EXPECT_EQ(a.evaluation.gated.h, b.evaluation.gated.h);
  EXPECT_TRUE(a.model.alignment == b.model.alignment);
  EXPECT_EQ(a.model.gate, b.model.gate);
}

TEST(Experiment, OracleGateBoundsLearnedGate) {
  const auto t = tiny();
  const auto r = msf::run_gzssar_experiment(t.data, t.split, t.cfg);
  EXPECT_GE(r.evaluation.oracle_gate.h, r.evaluation.gated.h);
  EXPECT_GE(r.evaluation.oracle_gate.acc_s, 0.0);
  EXPECT_EQ(r.fused_dim, 9u);
  EXPECT_EQ(r.pseudo_unseen.size(), 2u);
  for (ClassId c : r.pseudo_unseen) EXPECT_TRUE(t.split.is_seen(c));
}

TEST(Experiment, ArtifactsCoverEveryStage) {
  const auto t = tiny();
  const auto r = msf::run_gzssar_experiment(t.data, t.split, t.cfg);
  EXPECT_EQ(r.inner_alignment_trace.size(), t.cfg.alignment.epochs);
  EXPECT_EQ(r.final_alignment_trace.size(), t.cfg.alignment.epochs);
  EXPECT_EQ(r.model.seen_head.class_ids, t.split.seen_ids());
  EXPECT_EQ(r.model.unseen_head.class_ids, t.split.unseen_ids());
  EXPECT_EQ(r.model.gate.dim(), 4u);
}

TEST(Experiment, StageFailureNamesTheStage) {
  auto t = tiny();
  t.cfg.seen_head.batch_size = 0;
  try {
    msf::run_gzssar_experiment(t.data, t.split, t.cfg);
    FAIL() << "expected a stage error";
  } catch (const msf::ExperimentStageError& e) {
    EXPECT_EQ(e.stage, "seen-classifier");
    EXPECT_NE(std::string(e.what()).find("seen-classifier"), std::string::npos);
  }
}

TEST(Experiment, MissingClassSamplesFailValidation) {
  auto t = tiny();
  t.split.unseen.insert(99);
  try {
    msf::run_gzssar_experiment(t.data, t.split, t.cfg);
    FAIL() << "expected a stage error";
  } catch (const msf::ExperimentStageError& e) {
    EXPECT_EQ(e.stage, "validate");
  }
}

TEST(Experiment, NoiselessCorrelatedBenchmarkReachesOracleLevel) {
  auto b = bench::make_benchmark(1.0);
  b.cfg.noise_sigma = 0.0;
  b.data = msf::generate_synthetic(b.cfg);
  const auto r = msf::run_gzssar_experiment(b.dataset(), b.split, bench::experiment_config());
  const double oracle_acc = oracle::nearest_prototype_zsl_accuracy(b.data, b.cfg, b.split.unseen, r.rows.test);
  EXPECT_EQ(oracle_acc, 100.0);
  EXPECT_GE(r.evaluation.gated.acc_u, 95.0);
  EXPECT_GE(r.evaluation.gated.h, 80.0);
}
