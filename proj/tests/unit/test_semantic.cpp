#include <unistd.h>

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "msf/io/feature_file.hpp"
#include "msf/semantic/fusion.hpp"

using msf::Matrix;
using msf::SemanticBundle;
using msf::SemanticMode;

namespace {

SemanticBundle random_bundle(std::size_t classes, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  auto m = [&] {
    Matrix<double> out(classes, k);
    for (auto& v : out.values()) v = n(rng);
    return out;
  };
  SemanticBundle b;
  for (std::size_t i = 0; i < classes; ++i) b.class_ids.push_back(static_cast<msf::ClassId>(10 + i));
  b.label = m();
  b.action_description = m();
  b.motion_description = m();
  return b;
}

}  // namespace

TEST(Fusion, FullModeTriplesTheChannelWidth) {
  const auto b = random_bundle(3, 512, 1);
  EXPECT_EQ(msf::fuse_semantics(b, SemanticMode::lb_ad_md).dim(), 1536u);
}

TEST(Fusion, FusedWidthForEveryMode) {
  const auto b = random_bundle(4, 512, 2);
  const std::pair<SemanticMode, std::size_t> expect[] = {{SemanticMode::lb, 512},
                                                         {SemanticMode::ad, 512},
                                                         {SemanticMode::md, 512},
                                                         {SemanticMode::ad_md, 1024},
                                                         {SemanticMode::lb_ad_md, 1536}};
  for (auto [mode, dim] : expect) {
    EXPECT_EQ(msf::fuse_semantics(b, mode).dim(), dim) << msf::to_string(mode);
    EXPECT_EQ(msf::fused_dim(b, mode), dim);
  }
}

TEST(Fusion, ConcatenatesLabelThenActionWithMotionOmitted) {
  SemanticBundle b;
  b.class_ids = {0};
  b.label = Matrix<double>::from_rows({{1, 2}});
  b.action_description = Matrix<double>::from_rows({{3}});
  const auto fused = msf::fuse_semantics(b, SemanticMode::lb);
  EXPECT_EQ(fused.values(), Matrix<double>::from_rows({{1, 2}}));
  const msf::Channel lb_ad[] = {msf::Channel::label, msf::Channel::action_description};
  EXPECT_EQ(msf::fuse_channels(b, lb_ad).values(), Matrix<double>::from_rows({{1, 2, 3}}));
}

TEST(Fusion, ChannelOrderIsFixedRegardlessOfRequestOrder) {
  SemanticBundle b;
  b.class_ids = {0};
  b.label = Matrix<double>::from_rows({{1}});
  b.action_description = Matrix<double>::from_rows({{2}});
  b.motion_description = Matrix<double>::from_rows({{3}});
  const msf::Channel reversed[] = {msf::Channel::motion_description, msf::Channel::label};
  EXPECT_EQ(msf::fuse_channels(b, reversed).values(), Matrix<double>::from_rows({{1, 3}}));
}

TEST(Fusion, AllZeroChannelsGiveAllZeroRow) {
  SemanticBundle b;
  b.class_ids = {5};
  b.label = Matrix<double>(1, 4);
  b.action_description = Matrix<double>(1, 4);
  b.motion_description = Matrix<double>(1, 4);
  const auto fused = msf::fuse_semantics(b, SemanticMode::lb_ad_md);
  EXPECT_EQ(fused.values(), Matrix<double>(1, 12));
}

TEST(Fusion, MissingChannelIsConfigError) {
  SemanticBundle b;
  b.class_ids = {0};
  b.label = Matrix<double>::from_rows({{1}});
  EXPECT_THROW(msf::fuse_semantics(b, SemanticMode::ad_md), msf::ConfigError);
}

TEST(Fusion, FirstColumnsOfFullFusionEqualLabelChannel) {
  const auto b = random_bundle(6, 8, 3);
  const auto fused = msf::fuse_semantics(b, SemanticMode::lb_ad_md);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      EXPECT_EQ(fused.values()(i, j), (*b.label)(i, j));
      EXPECT_EQ(fused.values()(i, 8 + j), (*b.action_description)(i, j));
      EXPECT_EQ(fused.values()(i, 16 + j), (*b.motion_description)(i, j));
    }
  }
}

TEST(Fusion, InjectiveWhenAChannelIsInjective) {
  auto b = random_bundle(5, 3, 4);
  // Make AD and MD identical across classes; LB alone distinguishes them.
  for (std::size_t i = 1; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      (*b.action_description)(i, j) = (*b.action_description)(0, j);
      (*b.motion_description)(i, j) = (*b.motion_description)(0, j);
    }
  }
  const auto fused = msf::fuse_semantics(b, SemanticMode::lb_ad_md);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = i + 1; k < 5; ++k) {
      EXPECT_NE(std::vector<double>(fused.values().row(i).begin(), fused.values().row(i).end()),
                std::vector<double>(fused.values().row(k).begin(), fused.values().row(k).end()));
    }
  }
}

TEST(Fusion, OptionalL2NormalizationScalesEachChannel) {
  SemanticBundle b;
  b.class_ids = {0};
  b.label = Matrix<double>::from_rows({{3, 4}});
  b.action_description = Matrix<double>::from_rows({{0, 2}});
  b.motion_description = Matrix<double>::from_rows({{0, 0}});
  const auto fused = msf::fuse_semantics(b, SemanticMode::lb_ad_md, {.l2_normalize_channels = true});
  EXPECT_EQ(fused.values(), Matrix<double>::from_rows({{0.6, 0.8, 0, 1, 0, 0}}));
}

TEST(Fusion, ParseModeNames) {
  for (auto m : msf::kAllSemanticModes) EXPECT_EQ(msf::parse_semantic_mode(msf::to_string(m)), m);
  EXPECT_EQ(msf::to_string(SemanticMode::ad_md), "AD+MD");
  EXPECT_THROW(msf::parse_semantic_mode("LB+MD"), msf::ConfigError);
}

TEST(Fusion, BundleValidationCatchesDuplicatesAndRowMismatch) {
  auto b = random_bundle(3, 2, 5);
  b.class_ids[2] = b.class_ids[0];
  EXPECT_THROW(b.validate(), msf::ConfigError);
  auto c = random_bundle(3, 2, 5);
  c.motion_description = Matrix<double>(2, 2);
  EXPECT_THROW(c.validate(), msf::ShapeError);
}

TEST(PrototypeFor, SingleClassReturnsItsRow) {
  SemanticBundle b;
  b.class_ids = {42};
  b.label = Matrix<double>::from_rows({{7, 8}});
  const auto t = msf::fuse_semantics(b, SemanticMode::lb);
  const auto row = msf::prototype_for(t, 42);
  EXPECT_EQ(std::vector<double>(row.begin(), row.end()), (std::vector<double>{7, 8}));
}

TEST(PrototypeFor, LookupIsByIdNotPosition) {
  const auto b = random_bundle(4, 3, 6);
  SemanticBundle permuted;
  const std::vector<std::size_t> order = {2, 0, 3, 1};
  for (std::size_t i : order) permuted.class_ids.push_back(b.class_ids[i]);
  permuted.label = b.label->gather_rows(order);
  permuted.action_description = b.action_description->gather_rows(order);
  permuted.motion_description = b.motion_description->gather_rows(order);
  const auto t1 = msf::fuse_semantics(b, SemanticMode::lb_ad_md);
  const auto t2 = msf::fuse_semantics(permuted, SemanticMode::lb_ad_md);
  for (msf::ClassId id : b.class_ids) {
    const auto r1 = msf::prototype_for(t1, id);
    const auto r2 = msf::prototype_for(t2, id);
    EXPECT_TRUE(std::equal(r1.begin(), r1.end(), r2.begin(), r2.end()));
  }
}

TEST(PrototypeFor, UnknownClassIsLookupError) {
  const auto t = msf::fuse_semantics(random_bundle(2, 2, 7), SemanticMode::lb);
  EXPECT_THROW(msf::prototype_for(t, 999), msf::LookupError);
}

TEST(PrototypeFor, RowSurvivesFileRoundTrip) {
  const auto b = random_bundle(3, 5, 8);
  const auto t = msf::fuse_semantics(b, SemanticMode::ad_md);
  const auto path = std::filesystem::temp_directory_path() / ("msf_test_prototypes_" + std::to_string(::getpid()) + ".msff");
  msf::write_features(path, t.values(), &t.class_ids());
  const auto back = msf::read_features(path);
  std::filesystem::remove(path);
  const msf::PrototypeTable t2(*back.labels, back.values);
  for (msf::ClassId id : b.class_ids) {
    const auto r1 = msf::prototype_for(t, id);
    const auto r2 = msf::prototype_for(t2, id);
    EXPECT_TRUE(std::equal(r1.begin(), r1.end(), r2.begin(), r2.end()));
  }
}
