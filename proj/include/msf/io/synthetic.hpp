#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "msf/error.hpp"
#include "msf/eval/split.hpp"
#include "msf/semantic/fusion.hpp"
#include "msf/tensor/matrix.hpp"

namespace msf {

struct SyntheticConfig {
  std::size_t n_classes = 20;
  std::size_t samples_per_class = 200;
  std::size_t skel_dim = 32;
  std::size_t text_dim = 8;  // per semantic channel
  double correlation = 1.0;  // rho in [0, 1]
  double noise_sigma = 0.1;
  std::uint64_t seed = 7;

  void validate() const {
    if (n_classes < 1 || samples_per_class < 1) throw ConfigError("synthetic: counts must be >= 1");
    if (skel_dim < 1 || text_dim < 1) throw ConfigError("synthetic: dims must be >= 1");
    if (!(correlation >= 0.0 && correlation <= 1.0)) {
      throw ConfigError("synthetic: cross_modal_correlation must lie in [0, 1], got " + std::to_string(correlation));
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("synthetic: noise_sigma must be >= 0");
  }
};

struct SyntheticDataset {
  Matrix<double> skeleton;            // samples, grouped by class
  std::vector<ClassId> labels;        // class of each skeleton row
  SemanticBundle semantics;           // text prototypes, one row per class per channel
  Matrix<double> projection;          // skel_dim x (3 * text_dim), fixed text -> skeleton map
  Matrix<double> skeleton_prototypes; // class centers sigma_c
};

// Class c gets text prototypes tau_c ~ N(0, I) in each of the three channels
// and a skeleton center sigma_c = rho * P tau_c + sqrt(1 - rho^2) * eta_c, where
// tau_c is the LB, AD, MD concatenation, P has N(0, 1 / (3 * text_dim)) entries
// and eta_c ~ N(0, I). Samples are sigma_c + noise_sigma * N(0, I).
inline SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t c = cfg.n_classes;
  const std::size_t k = cfg.text_dim;
  const std::size_t fused = 3 * k;

  SyntheticDataset ds;
  ds.projection = Matrix<double>(cfg.skel_dim, fused);
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(fused));
  for (auto& v : ds.projection.values()) v = normal(rng) * proj_scale;

  Matrix<double> lb(c, k), ad(c, k), md(c, k);
  for (std::size_t i = 0; i < c; ++i) {
    for (auto* m : {&lb, &ad, &md}) {
      for (auto& v : m->row(i)) v = normal(rng);
    }
  }

  ds.skeleton_prototypes = Matrix<double>(c, cfg.skel_dim);
  const double rho = cfg.correlation;
  const double independent = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  std::vector<double> tau(fused);
  for (std::size_t i = 0; i < c; ++i) {
    std::copy(lb.row(i).begin(), lb.row(i).end(), tau.begin());
    std::copy(ad.row(i).begin(), ad.row(i).end(), tau.begin() + static_cast<std::ptrdiff_t>(k));
    std::copy(md.row(i).begin(), md.row(i).end(), tau.begin() + static_cast<std::ptrdiff_t>(2 * k));
    for (std::size_t d = 0; d < cfg.skel_dim; ++d) {
      double projected = 0.0;
      auto p = ds.projection.row(d);
      for (std::size_t j = 0; j < fused; ++j) projected += p[j] * tau[j];
      ds.skeleton_prototypes(i, d) = rho * projected + independent * normal(rng);
    }
  }

  ds.skeleton = Matrix<double>(c * cfg.samples_per_class, cfg.skel_dim);
  ds.labels.reserve(c * cfg.samples_per_class);
  std::size_t row = 0;
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t s = 0; s < cfg.samples_per_class; ++s, ++row) {
      auto out = ds.skeleton.row(row);
      auto center = ds.skeleton_prototypes.row(i);
      for (std::size_t d = 0; d < cfg.skel_dim; ++d) out[d] = center[d] + cfg.noise_sigma * normal(rng);
      ds.labels.push_back(static_cast<ClassId>(i));
    }
  }

  ds.semantics.class_ids.resize(c);
  for (std::size_t i = 0; i < c; ++i) ds.semantics.class_ids[i] = static_cast<ClassId>(i);
  ds.semantics.label = std::move(lb);
  ds.semantics.action_description = std::move(ad);
  ds.semantics.motion_description = std::move(md);
  return ds;
}

// Draws `n_unseen` of classes 0..n_classes-1 uniformly as unseen.
inline SplitSpec make_synthetic_split(std::size_t n_classes, std::size_t n_unseen, std::uint64_t seed) {
  if (n_unseen < 1 || n_unseen >= n_classes) throw ConfigError("synthetic split needs 1 <= n_unseen < n_classes");
  std::vector<ClassId> ids(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) ids[i] = static_cast<ClassId>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  SplitSpec split;
  split.unseen.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_unseen));
  split.seen.insert(ids.begin() + static_cast<std::ptrdiff_t>(n_unseen), ids.end());
  split.name = "synthetic-" + std::to_string(n_classes - n_unseen) + "-" + std::to_string(n_unseen);
  return split;
}

}  // namespace msf
