#pragma once

// Run configuration: one `key = value` per line, '#' starts a comment.
// Relative paths are resolved against the directory holding the config file.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msf/error.hpp"
#include "msf/eval/experiment.hpp"
#include "msf/io/atomic_file.hpp"
#include "msf/io/feature_file.hpp"
#include "msf/io/manifests.hpp"
#include "msf/io/synthetic.hpp"

namespace msf {

struct DataPaths {
  std::filesystem::path skeleton;     // feature file with labels
  std::filesystem::path label;        // per-channel semantic feature files, labels = class ids
  std::filesystem::path action;
  std::filesystem::path motion;
  std::filesystem::path split;        // split manifest
  std::filesystem::path class_names;  // optional
};

struct RunConfig {
  std::filesystem::path base_dir = ".";
  std::filesystem::path data_dir = "data";
  DataPaths data;
  std::filesystem::path out_dir = "run";
  std::filesystem::path checkpoint;  // defaults to out_dir/model.ckpt
  std::string name = "msf";

  SyntheticConfig synth;
  std::size_t synth_unseen = 4;
  Dtype synth_dtype = Dtype::f64;

  ExperimentConfig experiment;

  std::filesystem::path checkpoint_path() const { return checkpoint.empty() ? out_dir / "model.ckpt" : checkpoint; }

  void validate() const {
    synth.validate();
    const auto& a = experiment.alignment;
    if (a.latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (!(a.alpha >= 0.0) || !(a.beta >= 0.0)) throw ConfigError("alpha and beta must be >= 0");
    if (a.batch_size < 1 || experiment.seen_head.batch_size < 1 || experiment.unseen_head.batch_size < 1) {
      throw ConfigError("batch sizes must be >= 1");
    }
    if (!(a.learning_rate >= 0.0) || !(experiment.seen_head.learning_rate >= 0.0) ||
        !(experiment.unseen_head.learning_rate >= 0.0)) {
      throw ConfigError("learning rates must be >= 0");
    }
    if (!(a.warmup_fraction >= 0.0 && a.warmup_fraction <= 1.0)) throw ConfigError("beta_warmup_fraction must be in [0, 1]");
    if (experiment.n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
    if (!(experiment.gate.c > 0.0)) throw ConfigError("gate_c must be > 0");
    if (!(experiment.gate.threshold > 0.0 && experiment.gate.threshold < 1.0)) {
      throw ConfigError("gate_threshold must be in (0, 1)");
    }
    if (!(experiment.seen_test_fraction > 0.0 && experiment.seen_test_fraction < 1.0)) {
      throw ConfigError("seen_test_fraction must be in (0, 1)");
    }
    if (!(experiment.holdout_fraction > 0.0 && experiment.holdout_fraction < 1.0)) {
      throw ConfigError("holdout_fraction must be in (0, 1)");
    }
    if (synth_unseen < 1 || synth_unseen >= synth.n_classes) throw ConfigError("synth.n_unseen must be in [1, n_classes)");
  }

  // Input files for train/eval; each must exist.
  void require_inputs() const {
    for (const auto* p : {&data.skeleton, &data.label, &data.action, &data.motion, &data.split}) {
      if (!std::filesystem::exists(*p)) throw IoError("input file not found: " + p->string());
    }
  }
};

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      const std::string s(text);
      v = static_cast<T>(std::stod(s, &used));
      if (used != s.size() || !std::isfinite(v)) throw ConfigError("");
    } catch (const std::exception&) {
      throw ConfigError("config key '" + std::string(key) + "': not a finite number: '" + std::string(text) + "'");
    }
  } else {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw ConfigError("config key '" + std::string(key) + "': not a non-negative integer: '" + std::string(text) + "'");
    }
  }
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(text) + "'");
}

inline std::vector<std::size_t> parse_size_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  if (text == "none" || text.empty()) return out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const auto item = trim(text.substr(pos, comma - pos));
    const auto v = parse_number<std::size_t>(key, item);
    if (v < 1) throw ConfigError("config key '" + std::string(key) + "': widths must be >= 1");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

inline GateFeatureMode parse_gate_feature_mode(std::string_view text) {
  if (text == "summary") return GateFeatureMode::summary;
  if (text == "sorted_probabilities") return GateFeatureMode::sorted_probabilities;
  throw ConfigError("gate_features must be 'summary' or 'sorted_probabilities', got '" + std::string(text) + "'");
}

}  // namespace detail

// Applies one key. Unknown keys are errors so typos do not pass silently.
inline void apply_config_value(RunConfig& cfg, const std::string& key, std::string_view value) {
  using detail::parse_bool;
  using detail::parse_number;
  auto path = [&] { return cfg.base_dir / std::filesystem::path(std::string(value)); };
  auto& e = cfg.experiment;
  auto& a = e.alignment;
  auto& s = cfg.synth;

  if (key == "name") cfg.name = value;
  else if (key == "data_dir") {
    cfg.data_dir = path();
  } else if (key == "skeleton") cfg.data.skeleton = path();
  else if (key == "semantic_lb") cfg.data.label = path();
  else if (key == "semantic_ad") cfg.data.action = path();
  else if (key == "semantic_md") cfg.data.motion = path();
  else if (key == "split_manifest") cfg.data.split = path();
  else if (key == "class_names") cfg.data.class_names = path();
  else if (key == "out_dir") cfg.out_dir = path();
  else if (key == "checkpoint") cfg.checkpoint = path();
  else if (key == "seed") e.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "semantic_mode") e.semantic_mode = parse_semantic_mode(value);
  else if (key == "l2_normalize_channels") e.fusion.l2_normalize_channels = parse_bool(key, value);
  else if (key == "latent_dim") a.latent_dim = parse_number<std::size_t>(key, value);
  else if (key == "hidden") a.hidden = detail::parse_size_list(key, value);
  else if (key == "alpha") a.alpha = parse_number<double>(key, value);
  else if (key == "beta") a.beta = parse_number<double>(key, value);
  else if (key == "beta_warmup") a.beta_warmup = parse_bool(key, value);
  else if (key == "beta_warmup_fraction") a.warmup_fraction = parse_number<double>(key, value);
  else if (key == "squared_align") a.squared_align = parse_bool(key, value);
  else if (key == "epochs") a.epochs = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") a.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "lr") a.learning_rate = parse_number<double>(key, value);
  else if (key == "seen_epochs") e.seen_head.epochs = parse_number<std::size_t>(key, value);
  else if (key == "seen_batch_size") e.seen_head.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "seen_lr") e.seen_head.learning_rate = parse_number<double>(key, value);
  else if (key == "unseen_epochs") e.unseen_head.epochs = parse_number<std::size_t>(key, value);
  else if (key == "unseen_batch_size") e.unseen_head.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "unseen_lr") e.unseen_head.learning_rate = parse_number<double>(key, value);
  else if (key == "n_per_class") e.n_per_class = parse_number<std::size_t>(key, value);
  else if (key == "gate_c") e.gate.c = parse_number<double>(key, value);
  else if (key == "gate_threshold") e.gate.threshold = parse_number<double>(key, value);
  else if (key == "gate_max_iterations") e.gate.max_iterations = parse_number<std::size_t>(key, value);
  else if (key == "gate_features") e.gate_feature_mode = detail::parse_gate_feature_mode(value);
  else if (key == "seen_test_fraction") e.seen_test_fraction = parse_number<double>(key, value);
  else if (key == "holdout_fraction") e.holdout_fraction = parse_number<double>(key, value);
  else if (key == "synth.n_classes") s.n_classes = parse_number<std::size_t>(key, value);
  else if (key == "synth.samples_per_class") s.samples_per_class = parse_number<std::size_t>(key, value);
  else if (key == "synth.skel_dim") s.skel_dim = parse_number<std::size_t>(key, value);
  else if (key == "synth.text_dim") s.text_dim = parse_number<std::size_t>(key, value);
  else if (key == "synth.correlation") s.correlation = parse_number<double>(key, value);
  else if (key == "synth.noise_sigma") s.noise_sigma = parse_number<double>(key, value);
  else if (key == "synth.seed") s.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "synth.n_unseen") cfg.synth_unseen = parse_number<std::size_t>(key, value);
  else if (key == "synth.dtype") {
    if (value == "f32") cfg.synth_dtype = Dtype::f32;
    else if (value == "f64") cfg.synth_dtype = Dtype::f64;
    else throw ConfigError("synth.dtype must be f32 or f64");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

// Fills any data path not set explicitly with its default name in data_dir.
inline void apply_default_paths(RunConfig& cfg) {
  auto fill = [&](std::filesystem::path& p, const char* file) {
    if (p.empty()) p = cfg.data_dir / file;
  };
  fill(cfg.data.skeleton, "skeleton.msff");
  fill(cfg.data.label, "semantic_lb.msff");
  fill(cfg.data.action, "semantic_ad.msff");
  fill(cfg.data.motion, "semantic_md.msff");
  fill(cfg.data.split, "split.txt");
  fill(cfg.data.class_names, "classes.tsv");
}

// Parses config text. `overrides` are applied after the file, so flags win.
inline RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                                  const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.data_dir = base_dir / "data";
  cfg.out_dir = base_dir / "run";
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_config_value(cfg, std::string(detail::trim(line.substr(0, eq))), detail::trim(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : overrides) apply_config_value(cfg, k, v);
  apply_default_paths(cfg);
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path,
                                 const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_run_config(read_file(path), dir, overrides);
}

}  // namespace msf
