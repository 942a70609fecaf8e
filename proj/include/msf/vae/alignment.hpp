#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msf/error.hpp"
#include "msf/semantic/fusion.hpp"
#include "msf/tensor/adam.hpp"
#include "msf/vae/branch.hpp"

namespace msf {

struct AlignmentConfig {
  std::size_t latent_dim = 100;
  std::vector<std::size_t> hidden = {256};
  double alpha = 1.0;
  double beta = 1.0;
  // Linear beta ramp from 0 over the first `warmup_fraction` of the epochs.
  bool beta_warmup = false;
  double warmup_fraction = 0.1;
  // Penalize ||f - g||^2 instead of ||f - g||.
  bool squared_align = false;
  std::size_t epochs = 1900;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
};

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
};

// Twin VAEs over skeleton and fused text features. Each branch's decoder is
// also applied to the other branch's latent code (cross-decoding) to align the
// two latent spaces.
struct AlignmentModule {
  VaeBranch skeleton;
  VaeBranch text;
  double alpha = 1.0;
  double beta = 1.0;
  bool squared_align = false;

  std::size_t latent_dim() const { return skeleton.latent_dim(); }
  LossWeights weights() const { return {alpha, beta}; }

  const VaeBranch& branch(Modality m) const { return m == Modality::skeleton ? skeleton : text; }
  VaeBranch& branch(Modality m) { return m == Modality::skeleton ? skeleton : text; }

  void validate() const {
    if (skeleton.latent_dim() != text.latent_dim()) throw ShapeError("branches disagree on latent dim");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be non-negative");
  }

  friend bool operator==(const AlignmentModule&, const AlignmentModule&) = default;
};

template <typename Rng>
AlignmentModule make_alignment_module(std::size_t skeleton_dim, std::size_t text_dim,
                                      const AlignmentConfig& cfg, Rng& rng) {
  if (cfg.latent_dim == 0) throw ConfigError("latent_dim must be positive");
  AlignmentModule m;
  m.skeleton = make_branch(Modality::skeleton, skeleton_dim, cfg.hidden, cfg.latent_dim, rng);
  m.text = make_branch(Modality::text, text_dim, cfg.hidden, cfg.latent_dim, rng);
  m.alpha = cfg.alpha;
  m.beta = cfg.beta;
  m.squared_align = cfg.squared_align;
  m.validate();
  return m;
}

inline AlignmentModule zeros_like(const AlignmentModule& m) {
  AlignmentModule g = m;
  g.skeleton = zeros_like(m.skeleton);
  g.text = zeros_like(m.text);
  return g;
}

inline std::vector<std::span<double>> parameters(AlignmentModule& m) {
  std::vector<std::span<double>> out;
  append_parameters(m.skeleton, out);
  append_parameters(m.text, out);
  return out;
}

inline std::vector<std::span<const double>> const_parameters(AlignmentModule& m) {
  std::vector<std::span<const double>> out;
  for (auto s : parameters(m)) out.emplace_back(s);
  return out;
}

struct BranchLossParts {
  double recon = 0.0;  // mean over batch of the summed squared reconstruction error
  double kl = 0.0;     // mean over batch of KL to N(0, I)
  double align = 0.0;  // mean over batch of ||target - cross_decoded||
  double total = 0.0;  // recon + beta * kl + alpha * align
};

struct TotalLossParts {
  BranchLossParts skeleton;
  BranchLossParts text;
  double total = 0.0;
};

// Skeleton features paired row-by-row with their classes' fused prototypes,
// plus pre-drawn standard-normal noise for both reparameterizations.
struct AlignmentBatch {
  Matrix<double> skeleton;
  Matrix<double> text;
  Matrix<double> eps_skeleton;
  Matrix<double> eps_text;
};

namespace detail {

// Loss of the branch that encodes `source`: reconstruct `source` through its
// own decoder and match `target` through the other branch's decoder.
inline BranchLossParts branch_loss_impl(const VaeBranch& own, const VaeBranch& other,
                                        const Matrix<double>& source, const Matrix<double>& target,
                                        const Matrix<double>& eps, LossWeights w, bool squared_align,
                                        VaeBranch* grad_own, VaeBranch* grad_other) {
  if (source.rows() != target.rows()) throw ShapeError("branch_loss: batch size mismatch");
  if (target.cols() != other.input_dim()) throw ShapeError("branch_loss: target width mismatch");
  const std::size_t batch = source.rows();
  BranchLossParts parts;
  if (batch == 0) return parts;
  const double inv_b = 1.0 / static_cast<double>(batch);

  EncoderTrace enc = encode_traced(own, source);
  const GaussianParams& q = enc.posterior;
  require_same_shape(q.mu, eps, "branch_loss(eps)");
  Matrix<double> sigma(q.mu.rows(), q.mu.cols());
  for (std::size_t k = 0; k < sigma.size(); ++k) sigma.values()[k] = std::exp(0.5 * q.log_var.values()[k]);
  Matrix<double> z(q.mu.rows(), q.mu.cols());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z.values()[k] = q.mu.values()[k] + sigma.values()[k] * eps.values()[k];
  }

  MlpTrace self = mlp_forward(own.decoder, z);
  MlpTrace cross = mlp_forward(other.decoder, z);
  const Matrix<double>& recon_out = self.output();
  const Matrix<double>& cross_out = cross.output();

  Matrix<double> d_recon(batch, source.cols());
  for (std::size_t k = 0; k < source.size(); ++k) {
    const double r = source.values()[k] - recon_out.values()[k];
    parts.recon += r * r;
    d_recon.values()[k] = -2.0 * r * inv_b;
  }
  parts.recon *= inv_b;

  for (std::size_t i = 0; i < batch; ++i) {
    parts.kl += kl_to_standard_normal(q.mu.row(i), q.log_var.row(i));
  }
  parts.kl *= inv_b;

  Matrix<double> d_cross(batch, target.cols());
  for (std::size_t i = 0; i < batch; ++i) {
    auto t = target.row(i);
    auto g = cross_out.row(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) sq += (t[j] - g[j]) * (t[j] - g[j]);
    const double norm = std::sqrt(sq);
    parts.align += squared_align ? sq : norm;
    // d||r||/dg = -r/||r||, undefined at r = 0 where the subgradient 0 is used.
    const double scale = squared_align ? 2.0 : (norm > 0.0 ? 1.0 / norm : 0.0);
    auto d = d_cross.row(i);
    for (std::size_t j = 0; j < t.size(); ++j) d[j] = -w.alpha * inv_b * scale * (t[j] - g[j]);
  }
  parts.align *= inv_b;
  parts.total = parts.recon + w.beta * parts.kl + w.alpha * parts.align;

  if (grad_own == nullptr) return parts;

  Matrix<double> dz = mlp_backward(own.decoder, self, std::move(d_recon), grad_own->decoder);
  Matrix<double> dz_cross = mlp_backward(other.decoder, cross, std::move(d_cross), grad_other->decoder);
  for (std::size_t k = 0; k < dz.size(); ++k) dz.values()[k] += dz_cross.values()[k];

  Matrix<double> d_mu(batch, q.mu.cols());
  Matrix<double> d_lv(batch, q.mu.cols());
  for (std::size_t k = 0; k < dz.size(); ++k) {
    const double mu = q.mu.values()[k];
    const double lv = q.log_var.values()[k];
    d_mu.values()[k] = dz.values()[k] + w.beta * inv_b * mu;
    d_lv.values()[k] = dz.values()[k] * eps.values()[k] * 0.5 * sigma.values()[k] +
                       w.beta * inv_b * 0.5 * (std::exp(lv) - 1.0);
  }
  encoder_backward(own, enc, d_mu, std::move(d_lv), *grad_own);
  return parts;
}

}  // namespace detail

// Loss of one branch: negative ELBO (squared reconstruction error plus
// beta-weighted KL) plus alpha times the cross-reconstruction distance.
// `source` selects the branch; for the skeleton branch eps is eps_skeleton.
// Gradients are accumulated into `grad` when given.
inline BranchLossParts branch_loss(const AlignmentModule& module, Modality source,
                                   const Matrix<double>& skeleton_features,
                                   const Matrix<double>& text_features, const Matrix<double>& eps,
                                   AlignmentModule* grad = nullptr,
                                   std::optional<LossWeights> weights = std::nullopt) {
  const LossWeights w = weights.value_or(module.weights());
  const bool from_skeleton = source == Modality::skeleton;
  const Modality other = from_skeleton ? Modality::text : Modality::skeleton;
  return detail::branch_loss_impl(
      module.branch(source), module.branch(other), from_skeleton ? skeleton_features : text_features,
      from_skeleton ? text_features : skeleton_features, eps, w, module.squared_align,
      grad ? &grad->branch(source) : nullptr, grad ? &grad->branch(other) : nullptr);
}

inline TotalLossParts total_loss(const AlignmentModule& module, const AlignmentBatch& batch,
                                 AlignmentModule* grad = nullptr,
                                 std::optional<LossWeights> weights = std::nullopt) {
  TotalLossParts parts;
  parts.skeleton = branch_loss(module, Modality::skeleton, batch.skeleton, batch.text,
                               batch.eps_skeleton, grad, weights);
  parts.text = branch_loss(module, Modality::text, batch.skeleton, batch.text, batch.eps_text, grad,
                           weights);
  parts.total = parts.skeleton.total + parts.text.total;
  return parts;
}

struct EpochLoss {
  std::size_t epoch = 0;
  double total = 0.0;
  BranchLossParts skeleton;
  BranchLossParts text;
};

struct AlignmentTrainResult {
  AlignmentModule module;
  std::vector<EpochLoss> trace;
};

inline Matrix<double> standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix<double> m(rows, cols);
  for (auto& v : m.values()) v = dist(rng);
  return m;
}

// Fits the module on seen-class skeleton features, each paired with the fused
// prototype of its class. Deterministic for a given seed.
inline AlignmentTrainResult train_alignment(const Matrix<double>& skeleton_features,
                                            std::span<const ClassId> labels,
                                            const PrototypeTable& prototypes,
                                            const AlignmentConfig& cfg, std::uint64_t seed) {
  if (labels.size() != skeleton_features.rows()) throw ShapeError("train_alignment: label count mismatch");
  if (skeleton_features.rows() == 0) throw EmptyInputError("train_alignment: no training samples");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  for (ClassId id : labels) {
    if (!prototypes.contains(id)) throw LookupError("no semantic prototype for class " + std::to_string(id));
  }

  std::mt19937_64 rng(seed);
  AlignmentTrainResult result;
  result.module = make_alignment_module(skeleton_features.cols(), prototypes.dim(), cfg, rng);
  AlignmentModule& module = result.module;
  AlignmentModule grad = zeros_like(module);
  AdamState<double> adam(cfg.learning_rate);
  const auto params = parameters(module);
  const auto grads = const_parameters(grad);
  auto grad_buffers = parameters(grad);

  const std::size_t n = skeleton_features.rows();
  const std::size_t latent = cfg.latent_dim;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double warmup_epochs = cfg.warmup_fraction * static_cast<double>(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossWeights w = module.weights();
    if (cfg.beta_warmup && warmup_epochs > 0.0) {
      w.beta *= std::min(1.0, static_cast<double>(epoch) / warmup_epochs);
    }
    std::shuffle(order.begin(), order.end(), rng);
    EpochLoss record;
    record.epoch = epoch;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      std::vector<ClassId> batch_labels;
      batch_labels.reserve(rows.size());
      for (std::size_t r : rows) batch_labels.push_back(labels[r]);
      AlignmentBatch batch{skeleton_features.gather_rows(rows), prototypes.gather(batch_labels),
                           standard_normal(rows.size(), latent, rng),
                           standard_normal(rows.size(), latent, rng)};
      for (auto buf : grad_buffers) std::fill(buf.begin(), buf.end(), 0.0);
      const TotalLossParts parts = total_loss(module, batch, &grad, w);
      const double share = static_cast<double>(rows.size()) / static_cast<double>(n);
      record.total += share * parts.total;
      auto accumulate = [share](BranchLossParts& into, const BranchLossParts& from) {
        into.recon += share * from.recon;
        into.kl += share * from.kl;
        into.align += share * from.align;
        into.total += share * from.total;
      };
      accumulate(record.skeleton, parts.skeleton);
      accumulate(record.text, parts.text);
      if (!std::isfinite(parts.total)) break;
      adam_step(params, grads, adam);
    }
    if (!std::isfinite(record.total)) {
      const long last_good = static_cast<long>(epoch) - 1;
      throw TrainingDivergedError("alignment training diverged at epoch " + std::to_string(epoch) +
                                      " (last good epoch " + std::to_string(last_good) + ")",
                                  last_good);
    }
    result.trace.push_back(record);
  }
  return result;
}

struct LatentSet {
  Matrix<double> z;
  std::vector<ClassId> labels;
};

// Draws n_per_class samples from each row's Gaussian. Rows are grouped by
// class in the order of `class_ids`. log_var = -inf gives exact copies of mu.
inline LatentSet synthesize_from_posteriors(const GaussianParams& posteriors,
                                            std::span<const ClassId> class_ids, std::size_t n_per_class,
                                            std::uint64_t seed) {
  if (posteriors.batch() != class_ids.size()) throw ShapeError("one posterior per class required");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const std::size_t latent = posteriors.latent_dim();
  LatentSet out{Matrix<double>(class_ids.size() * n_per_class, latent), {}};
  out.labels.reserve(class_ids.size() * n_per_class);
  std::size_t row = 0;
  for (std::size_t c = 0; c < class_ids.size(); ++c) {
    auto mu = posteriors.mu.row(c);
    auto lv = posteriors.log_var.row(c);
    for (std::size_t s = 0; s < n_per_class; ++s, ++row) {
      auto z = out.z.row(row);
      for (std::size_t d = 0; d < latent; ++d) z[d] = mu[d] + std::exp(0.5 * lv[d]) * dist(rng);
      out.labels.push_back(class_ids[c]);
    }
  }
  return out;
}

// Encodes each class prototype with the text encoder and samples its posterior.
inline LatentSet synthesize_latents(const AlignmentModule& module, const PrototypeTable& prototypes,
                                    std::span<const ClassId> class_ids, std::size_t n_per_class,
                                    std::uint64_t seed) {
  const GaussianParams q = encode(module.text, prototypes.gather(class_ids));
  return synthesize_from_posteriors(q, class_ids, n_per_class, seed);
}

// Deterministic latent embedding of skeleton features: the posterior mean.
inline Matrix<double> embed_skeleton(const AlignmentModule& module, const Matrix<double>& skeleton_features) {
  return encode(module.skeleton, skeleton_features).mu;
}

inline Matrix<double> embed_text(const AlignmentModule& module, const Matrix<double>& text_features) {
  return encode(module.text, text_features).mu;
}

}  // namespace msf
