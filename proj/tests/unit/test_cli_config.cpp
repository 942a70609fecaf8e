#include <gtest/gtest.h>

#include <filesystem>

#include "msf/cli/config.hpp"

namespace fs = std::filesystem;
using msf::ConfigError;
using msf::parse_run_config;

TEST(RunConfig, ParsesKeysCommentsAndBlankLines) {
  const auto cfg = parse_run_config(
      "# header comment\n"
      "name = demo   # trailing comment\n"
      "\n"
      "latent_dim = 32\n"
      "hidden = 64,32\n"
      "alpha = 0.5\n"
      "beta_warmup = true\n"
      "semantic_mode = AD+MD\n"
      "lr = 1e-4\n"
      "gate_features = sorted_probabilities\n"
      "synth.correlation = 0.25\n",
      "/base");
  EXPECT_EQ(cfg.name, "demo");
  EXPECT_EQ(cfg.experiment.alignment.latent_dim, 32u);
  EXPECT_EQ(cfg.experiment.alignment.hidden, (std::vector<std::size_t>{64, 32}));
  EXPECT_EQ(cfg.experiment.alignment.alpha, 0.5);
  EXPECT_TRUE(cfg.experiment.alignment.beta_warmup);
  EXPECT_EQ(cfg.experiment.semantic_mode, msf::SemanticMode::ad_md);
  EXPECT_EQ(cfg.experiment.alignment.learning_rate, 1e-4);
  EXPECT_EQ(cfg.experiment.gate_feature_mode, msf::GateFeatureMode::sorted_probabilities);
  EXPECT_EQ(cfg.synth.correlation, 0.25);
}

TEST(RunConfig, HiddenNoneMeansLinearBranches) {
  EXPECT_TRUE(parse_run_config("hidden = none\n", "/b").experiment.alignment.hidden.empty());
}

TEST(RunConfig, DefaultsFollowTheReferenceHyperparameters) {
  const auto cfg = parse_run_config("", "/b");
  EXPECT_EQ(cfg.experiment.alignment.epochs, 1900u);
  EXPECT_EQ(cfg.experiment.alignment.batch_size, 64u);
  EXPECT_EQ(cfg.experiment.semantic_mode, msf::SemanticMode::lb_ad_md);
  EXPECT_EQ(cfg.experiment.gate.threshold, 0.5);
}

TEST(RunConfig, RelativePathsResolveAgainstTheConfigDirectory) {
  const auto cfg = parse_run_config("data_dir = data/x\nout_dir = /abs/out\nsplit_manifest = s.txt\n", "/cfgdir");
  EXPECT_EQ(cfg.data_dir, fs::path("/cfgdir/data/x"));
  EXPECT_EQ(cfg.out_dir, fs::path("/abs/out"));
  EXPECT_EQ(cfg.data.split, fs::path("/cfgdir/s.txt"));
  EXPECT_EQ(cfg.data.skeleton, fs::path("/cfgdir/data/x/skeleton.msff"));
  EXPECT_EQ(cfg.checkpoint_path(), fs::path("/abs/out/model.ckpt"));
}

TEST(RunConfig, OverridesWinOverTheFile) {
  const auto cfg = parse_run_config("seed = 3\nsemantic_mode = LB\n", "/b", {{"seed", "9"}, {"semantic_mode", "MD"}});
  EXPECT_EQ(cfg.experiment.seed, 9u);
  EXPECT_EQ(cfg.experiment.semantic_mode, msf::SemanticMode::md);
}

TEST(RunConfig, UnknownKeyIsRejected) {
  EXPECT_THROW(parse_run_config("latnet_dim = 4\n", "/b"), ConfigError);
}

TEST(RunConfig, MalformedLineIsRejected) {
  EXPECT_THROW(parse_run_config("latent_dim 4\n", "/b"), ConfigError);
}

TEST(RunConfig, NumericValidation) {
  EXPECT_THROW(parse_run_config("synth.correlation = 2\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("latent_dim = 0\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("latent_dim = -3\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("alpha = abc\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("lr = nan\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("gate_threshold = 1\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("seen_test_fraction = 0\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("squared_align = maybe\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("semantic_mode = LB+MD\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("synth.n_unseen = 20\n", "/b"), ConfigError);
  EXPECT_THROW(parse_run_config("hidden = 8,0\n", "/b"), ConfigError);
}

TEST(RunConfig, MissingInputsAreIoErrors) {
  const auto cfg = parse_run_config("data_dir = /definitely/not/here\n", "/b");
  EXPECT_THROW(cfg.require_inputs(), msf::IoError);
  EXPECT_THROW(msf::load_run_config("/definitely/not/here.conf"), msf::IoError);
}

TEST(RunConfig, ShippedConfigsParse) {
  const fs::path root = fs::path(__FILE__).parent_path().parent_path().parent_path() / "configs";
  const auto syn = msf::load_run_config(root / "synthetic.conf");
  EXPECT_EQ(syn.synth.n_classes, 20u);
  EXPECT_EQ(syn.experiment.seed, 7u);
  EXPECT_TRUE(syn.experiment.alignment.hidden.empty());
  const auto ntu = msf::load_run_config(root / "ntu60-55-5.conf");
  EXPECT_EQ(ntu.experiment.alignment.epochs, 1900u);
  EXPECT_EQ(ntu.experiment.alignment.latent_dim, 100u);
}
