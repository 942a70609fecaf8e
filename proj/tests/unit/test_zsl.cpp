#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "msf/zsl/classify.hpp"

using msf::ClassId;
using msf::ClassifierHead;
using msf::GateModel;
using msf::HeadConfig;
using msf::Matrix;

namespace {

// Gaussian blobs around well-separated centers, one per label.
struct Blobs {
  Matrix<double> x;
  std::vector<ClassId> y;
};

Blobs blobs(const std::vector<ClassId>& ids, std::size_t per_class, std::size_t dim, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Blobs b{Matrix<double>(ids.size() * per_class, dim), {}};
  std::size_t row = 0;
  for (std::size_t c = 0; c < ids.size(); ++c) {
    for (std::size_t s = 0; s < per_class; ++s, ++row) {
      for (std::size_t d = 0; d < dim; ++d) b.x(row, d) = (d == c % dim ? 5.0 : 0.0) + spread * n(rng);
      b.y.push_back(ids[c]);
    }
  }
  return b;
}

HeadConfig head_cfg(std::size_t epochs = 50, std::uint64_t seed = 1) { return {epochs, 16, 1e-2, seed}; }

double train_accuracy(const ClassifierHead& h, const Blobs& b) {
  const auto p = h.predict(b.x);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == b.y[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(p.size());
}

ClassifierHead fixed_head(Matrix<double> w, std::vector<double> b, std::vector<ClassId> ids) {
  return ClassifierHead{msf::DenseLayer<double>(std::move(w), std::move(b), msf::Activation::identity), std::move(ids)};
}

}  // namespace

TEST(SoftmaxHead, SeparableDataIsFitPerfectly) {
  const auto b = blobs({3, 8, 11}, 30, 3, 0.3, 1);
  const auto h = msf::train_seen_classifier(b.x, b.y, head_cfg());
  EXPECT_EQ(h.class_ids, (std::vector<ClassId>{3, 8, 11}));
  EXPECT_EQ(train_accuracy(h, b), 1.0);
}

TEST(SoftmaxHead, RelabelingPermutesPredictionsConsistently) {
  auto b = blobs({0, 1, 2}, 20, 3, 1.5, 2);
  const auto h1 = msf::train_softmax_head(b.x, b.y, head_cfg(20));
  // 0->7, 1->4, 2->9 keeps the sorted order of class ids.
  const std::map<ClassId, ClassId> relabel = {{0, 7}, {1, 4}, {2, 9}};
  std::vector<ClassId> y2;
  for (auto y : b.y) y2.push_back(relabel.at(y));
  const auto h2 = msf::train_softmax_head(b.x, y2, head_cfg(20));
  const auto p1 = h1.predict(b.x);
  const auto p2 = h2.predict(b.x);
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(relabel.at(p1[i]), p2[i]);
}

TEST(SoftmaxHead, SameSeedSameWeights) {
  const auto b = blobs({0, 1}, 25, 4, 1.0, 3);
  EXPECT_EQ(msf::train_softmax_head(b.x, b.y, head_cfg(5, 9)), msf::train_softmax_head(b.x, b.y, head_cfg(5, 9)));
}

TEST(SoftmaxHead, SingleClassIsDegenerate) {
  const auto b = blobs({4}, 10, 2, 1.0, 4);
  EXPECT_THROW(msf::train_softmax_head(b.x, b.y, head_cfg()), msf::DegenerateDataError);
}

TEST(SoftmaxHead, LabelCountMismatchIsShapeError) {
  const auto b = blobs({0, 1}, 5, 2, 1.0, 5);
  const std::vector<ClassId> short_labels(3, 0);
  EXPECT_THROW(msf::train_softmax_head(b.x, short_labels, head_cfg()), msf::ShapeError);
}

TEST(SoftmaxHead, UnseenHeadFitsWellSeparatedLatents) {
  msf::GaussianParams q{Matrix<double>::from_rows({{4, 0}, {0, 4}, {-4, -4}}), Matrix<double>(3, 2, std::log(0.1))};
  const std::vector<ClassId> ids = {20, 21, 22};
  const auto latents = msf::synthesize_from_posteriors(q, ids, 100, 6);
  const auto h = msf::train_unseen_classifier(latents.z, latents.labels, head_cfg(30));
  const auto p = h.predict(latents.z);
  EXPECT_EQ(p, latents.labels);
}

TEST(GateFeatures, ConfidentSeenHeadAndUniformUnseenHead) {
  // Seen head: huge logit for one class regardless of input. Unseen head:
  // all-zero weights over 10 classes, so its distribution is uniform.
  const auto seen = fixed_head(Matrix<double>(2, 1), {1000.0, 0.0}, {0, 1});
  std::vector<ClassId> unseen_ids;
  for (ClassId i = 0; i < 10; ++i) unseen_ids.push_back(100 + i);
  const auto unseen = fixed_head(Matrix<double>(10, 2), std::vector<double>(10, 0.0), unseen_ids);
  msf::AlignmentConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden = {};
  std::mt19937_64 rng(1);
  const auto align = msf::make_alignment_module(1, 3, cfg, rng);
  const auto f = msf::gate_features(seen, unseen, align, Matrix<double>(1, 1, 0.5));
  ASSERT_EQ(f.cols(), 4u);
  EXPECT_DOUBLE_EQ(f(0, 0), 1.0);
  EXPECT_NEAR(f(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(f(0, 2), 0.1, 1e-15);
  EXPECT_NEAR(f(0, 3), std::log(10.0), 1e-12);
}

TEST(GateFeatures, FiniteAndBoundedOnRandomInputs) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 30.0);
  Matrix<double> ws(5, 3), wu(4, 2), x(200, 3);
  for (auto& v : ws.values()) v = n(rng);
  for (auto& v : wu.values()) v = n(rng);
  for (auto& v : x.values()) v = n(rng);
  const auto seen = fixed_head(ws, std::vector<double>(5, 0.0), {0, 1, 2, 3, 4});
  const auto unseen = fixed_head(wu, std::vector<double>(4, 0.0), {5, 6, 7, 8});
  msf::AlignmentConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden = {};
  const auto align = msf::make_alignment_module(3, 3, cfg, rng);
  const auto f = msf::gate_features(seen, unseen, align, x);
  for (std::size_t i = 0; i < f.rows(); ++i) {
    for (double v : f.row(i)) EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(f(i, 0), 1.0 / 5 - 1e-12);
    EXPECT_LE(f(i, 1), std::log(5.0) + 1e-12);
    EXPECT_GE(f(i, 1), 0.0);
    EXPECT_LE(f(i, 3), std::log(4.0) + 1e-12);
  }
}

TEST(Gate, SeparableFeaturesAreClassifiedPerfectly) {
  const auto b = blobs({0, 1}, 50, 2, 0.5, 8);
  std::vector<int> y;
  for (auto c : b.y) y.push_back(static_cast<int>(c));
  const GateModel g = msf::train_gate(b.x, y);
  for (std::size_t i = 0; i < b.x.rows(); ++i) EXPECT_EQ(g.routes_to_unseen(b.x.row(i)), y[i] == 1);
}

TEST(Gate, SymmetricDataPutsTheBoundaryAtTheMidpoint) {
  const auto x = Matrix<double>::from_rows({{-2}, {-1}, {1}, {2}});
  const std::vector<int> y = {0, 0, 1, 1};
  const GateModel g = msf::train_gate(x, y);
  EXPECT_NEAR(g.bias, 0.0, 1e-6);
  const double p0 = g.probability_unseen(std::vector<double>{0.0});
  EXPECT_NEAR(p0, 0.5, 1e-6);
}

TEST(Gate, MatchesStationarityConditionsOfTheObjective) {
  // At the optimum: w + C * sum (p_i - y_i) x_i = 0 and sum (p_i - y_i) = 0.
  const auto b = blobs({0, 1}, 40, 3, 3.0, 9);
  std::vector<int> y;
  for (auto c : b.y) y.push_back(static_cast<int>(c));
  msf::GateTrainConfig cfg;
  cfg.c = 0.5;
  const GateModel g = msf::train_gate(b.x, y, cfg);
  std::vector<double> gw(g.weights);
  double gb = 0.0;
  for (std::size_t i = 0; i < b.x.rows(); ++i) {
    const double r = g.probability_unseen(b.x.row(i)) - y[i];
    for (std::size_t j = 0; j < 3; ++j) gw[j] += 0.5 * r * b.x(i, j);
    gb += 0.5 * r;
  }
  for (double v : gw) EXPECT_NEAR(v, 0.0, 1e-5);
  EXPECT_NEAR(gb, 0.0, 1e-5);
}

TEST(Gate, FlippingLabelsNegatesTheModel) {
  const auto b = blobs({0, 1}, 30, 2, 2.0, 10);
  std::vector<int> y, flipped;
  for (auto c : b.y) {
    y.push_back(static_cast<int>(c));
    flipped.push_back(1 - static_cast<int>(c));
  }
  const GateModel g1 = msf::train_gate(b.x, y);
  const GateModel g2 = msf::train_gate(b.x, flipped);
  for (std::size_t j = 0; j < g1.dim(); ++j) EXPECT_NEAR(g1.weights[j], -g2.weights[j], 1e-5);
  EXPECT_NEAR(g1.bias, -g2.bias, 1e-5);
}

TEST(Gate, ConvergesToTheSameOptimumFromDifferentStarts) {
  const auto b = blobs({0, 1}, 30, 2, 2.0, 11);
  std::vector<int> y;
  for (auto c : b.y) y.push_back(static_cast<int>(c));
  const GateModel g1 = msf::train_gate(b.x, y);
  msf::GateTrainConfig cfg;
  cfg.initial = {3.0, -4.0, 2.0};
  const GateModel g2 = msf::train_gate(b.x, y, cfg);
  for (std::size_t j = 0; j < g1.dim(); ++j) EXPECT_NEAR(g1.weights[j], g2.weights[j], 1e-4);
  EXPECT_NEAR(g1.bias, g2.bias, 1e-4);
}

TEST(Gate, OneClassLabelsAreDegenerate) {
  const auto x = Matrix<double>::from_rows({{1}, {2}});
  const std::vector<int> y = {1, 1};
  EXPECT_THROW(msf::train_gate(x, y), msf::DegenerateDataError);
}

namespace {

msf::GzslModel routing_model(double gate_bias) {
  msf::GzslModel m;
  msf::AlignmentConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden = {};
  std::mt19937_64 rng(3);
  m.alignment = msf::make_alignment_module(2, 3, cfg, rng);
  m.seen_head = fixed_head(Matrix<double>::from_rows({{1, 0}, {0, 1}}), {0, 0}, {0, 1});
  m.unseen_head = fixed_head(Matrix<double>::from_rows({{1, 1}, {-1, -1}}), {0, 0}, {2, 3});
  m.gate.weights.assign(4, 0.0);
  m.gate.bias = gate_bias;
  return m;
}

}  // namespace

TEST(Classify, GateForcedToSeenUsesTheSeenHead) {
  const auto m = routing_model(-50.0);
  const auto x = Matrix<double>::from_rows({{3, 0}, {0, 3}, {-1, 2}});
  EXPECT_EQ(msf::classify_gzsl(m, x), m.seen_head.predict(x));
}

TEST(Classify, GateForcedToUnseenUsesTheUnseenHead) {
  const auto m = routing_model(50.0);
  const auto x = Matrix<double>::from_rows({{3, 0}, {0, 3}, {-1, 2}});
  const auto out = msf::classify_gzsl(m, x);
  EXPECT_EQ(out, msf::classify_zsl(m.alignment, m.unseen_head, x));
  for (auto c : out) EXPECT_TRUE(c == 2 || c == 3);
}

TEST(Classify, RoutedPredictionFollowsTheDecisionPerRow) {
  const auto m = routing_model(0.0);
  const auto x = Matrix<double>::from_rows({{3, 0}, {0, 3}});
  const auto seen = m.seen_head.predict(x);
  const auto unseen = msf::classify_zsl(m.alignment, m.unseen_head, x);
  const auto out = msf::classify_routed(m, x, {true, false});
  EXPECT_EQ(out[0], unseen[0]);
  EXPECT_EQ(out[1], seen[1]);
  EXPECT_THROW(msf::classify_routed(m, x, {true}), msf::ShapeError);
}

TEST(Classify, SingleClassUnseenHeadAlwaysPredictsThatClass) {
  auto m = routing_model(0.0);
  m.unseen_head = fixed_head(Matrix<double>(1, 2), {0.0}, {42});
  const auto x = Matrix<double>::from_rows({{1, 2}, {-3, 4}, {0, 0}});
  for (auto c : msf::classify_zsl(m.alignment, m.unseen_head, x)) EXPECT_EQ(c, 42u);
}

TEST(Classify, ZslMatchesBruteForceArgmaxOverEmbeddings) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  msf::AlignmentConfig cfg;
  cfg.latent_dim = 3;
  cfg.hidden = {4};
  const auto align = msf::make_alignment_module(5, 6, cfg, rng);
  Matrix<double> w(4, 3), x(50, 5);
  for (auto& v : w.values()) v = n(rng);
  for (auto& v : x.values()) v = n(rng);
  const std::vector<double> bias = {0.1, -0.2, 0.3, 0.0};
  const auto head = fixed_head(w, bias, {9, 5, 7, 1});
  const auto z = msf::embed_skeleton(align, x);
  const auto got = msf::classify_zsl(align, head, x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t c = 0; c < 4; ++c) {
      double s = bias[c];
      for (std::size_t d = 0; d < 3; ++d) s += w(c, d) * z(i, d);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    EXPECT_EQ(got[i], head.class_ids[best]);
  }
}

TEST(Classify, NoGateBaselinePicksTheMoreConfidentHead) {
  auto m = routing_model(0.0);
  m.seen_head = fixed_head(Matrix<double>(2, 2), {5.0, 0.0}, {0, 1});
  m.unseen_head = fixed_head(Matrix<double>(2, 2), {0.0, 0.0}, {2, 3});
  const auto x = Matrix<double>::from_rows({{1, 1}});
  EXPECT_EQ(msf::classify_without_gate(m, x), (std::vector<ClassId>{0}));
  m.unseen_head = fixed_head(Matrix<double>(2, 2), {0.0, 9.0}, {2, 3});
  EXPECT_EQ(msf::classify_without_gate(m, x), (std::vector<ClassId>{3}));
}
