#pragma once

#include <string_view>
#include <vector>

#include "msf/tensor/dense.hpp"
#include "msf/vae/gaussian.hpp"

namespace msf {

enum class Modality { skeleton, text };

inline std::string_view to_string(Modality m) { return m == Modality::skeleton ? "skeleton" : "text"; }

// Stack of dense layers applied in order.
struct Mlp {
  std::vector<DenseLayer<double>> layers;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Activations of one forward pass: activations[0] is the input and
// activations[i + 1] the output of layer i.
struct MlpTrace {
  std::vector<Matrix<double>> activations;
  const Matrix<double>& output() const { return activations.back(); }
};

inline Mlp zeros_like(const Mlp& mlp) {
  Mlp out;
  for (const auto& l : mlp.layers) out.layers.push_back(zeros_like(l));
  return out;
}

// Hidden layers use relu, the final layer is linear.
template <typename Rng>
Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, Rng& rng) {
  Mlp mlp;
  std::size_t width = in;
  for (std::size_t h : hidden) {
    mlp.layers.emplace_back(width, h, Activation::relu);
    width = h;
  }
  mlp.layers.emplace_back(width, out, Activation::identity);
  for (auto& l : mlp.layers) l.initialize(rng);
  return mlp;
}

inline MlpTrace mlp_forward(const Mlp& mlp, Matrix<double> x) {
  MlpTrace trace;
  trace.activations.reserve(mlp.layers.size() + 1);
  trace.activations.push_back(std::move(x));
  for (const auto& layer : mlp.layers) {
    trace.activations.push_back(linear_forward(trace.activations.back(), layer));
  }
  return trace;
}

inline Matrix<double> mlp_backward(const Mlp& mlp, const MlpTrace& trace, Matrix<double> dy, Mlp& grad) {
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    dy = linear_backward(trace.activations[i], mlp.layers[i], trace.activations[i + 1], dy,
                         grad.layers[i]);
  }
  return dy;
}

inline void append_parameters(Mlp& mlp, std::vector<std::span<double>>& out) {
  for (auto& l : mlp.layers) append_parameters(l, out);
}

// One VAE half: encoder trunk with twin (mu, log_var) heads, and a decoder
// back to the branch's own modality.
struct VaeBranch {
  Modality modality = Modality::skeleton;
  Mlp encoder;  // input -> last hidden layer (relu); may be empty
  DenseLayer<double> mu_head;
  DenseLayer<double> log_var_head;
  Mlp decoder;  // latent -> own modality

  std::size_t input_dim() const { return decoder.out_dim(); }
  std::size_t latent_dim() const { return mu_head.out_dim(); }

  friend bool operator==(const VaeBranch&, const VaeBranch&) = default;
};

inline VaeBranch zeros_like(const VaeBranch& b) {
  return VaeBranch{b.modality, zeros_like(b.encoder), zeros_like(b.mu_head), zeros_like(b.log_var_head),
                   zeros_like(b.decoder)};
}

inline void append_parameters(VaeBranch& b, std::vector<std::span<double>>& out) {
  append_parameters(b.encoder, out);
  append_parameters(b.mu_head, out);
  append_parameters(b.log_var_head, out);
  append_parameters(b.decoder, out);
}

template <typename Rng>
VaeBranch make_branch(Modality modality, std::size_t input_dim, const std::vector<std::size_t>& hidden,
                      std::size_t latent_dim, Rng& rng) {
  VaeBranch b;
  b.modality = modality;
  std::size_t width = input_dim;
  for (std::size_t h : hidden) {
    b.encoder.layers.emplace_back(width, h, Activation::relu);
    b.encoder.layers.back().initialize(rng);
    width = h;
  }
  b.mu_head = DenseLayer<double>(width, latent_dim);
  b.mu_head.initialize(rng);
  b.log_var_head = DenseLayer<double>(width, latent_dim);
  b.log_var_head.initialize(rng);
  b.decoder = make_mlp(latent_dim, hidden, input_dim, rng);
  return b;
}

// Forward state of the encoder needed for its backward pass.
struct EncoderTrace {
  MlpTrace trunk;
  Matrix<double> raw_log_var;  // before clamping
  GaussianParams posterior;    // log_var clamped to [kLogVarMin, kLogVarMax]
};

inline EncoderTrace encode_traced(const VaeBranch& branch, const Matrix<double>& f) {
  if (f.cols() != branch.input_dim()) {
    throw ShapeError("encode(" + std::string(to_string(branch.modality)) + "): input has " +
                     std::to_string(f.cols()) + " columns, branch expects " +
                     std::to_string(branch.input_dim()));
  }
  EncoderTrace t;
  t.trunk = mlp_forward(branch.encoder, f);
  t.posterior.mu = linear_forward(t.trunk.output(), branch.mu_head);
  t.raw_log_var = linear_forward(t.trunk.output(), branch.log_var_head);
  t.posterior.log_var = t.raw_log_var;
  for (auto& v : t.posterior.log_var.values()) v = clamp_log_var(v);
  return t;
}

inline GaussianParams encode(const VaeBranch& branch, const Matrix<double>& f) {
  return encode_traced(branch, f).posterior;
}

// Backpropagates gradients on (mu, clamped log_var) into the encoder.
inline void encoder_backward(const VaeBranch& branch, const EncoderTrace& t, const Matrix<double>& d_mu,
                             Matrix<double> d_log_var, VaeBranch& grad) {
  auto raw = t.raw_log_var.values();
  auto dlv = d_log_var.values();
  for (std::size_t k = 0; k < dlv.size(); ++k) {
    if (raw[k] < kLogVarMin || raw[k] > kLogVarMax) dlv[k] = 0.0;
  }
  const Matrix<double>& h = t.trunk.output();
  Matrix<double> dh = linear_backward(h, branch.mu_head, t.posterior.mu, d_mu, grad.mu_head);
  Matrix<double> dh2 = linear_backward(h, branch.log_var_head, t.raw_log_var, d_log_var, grad.log_var_head);
  auto a = dh.values();
  auto b = dh2.values();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  if (!branch.encoder.layers.empty()) mlp_backward(branch.encoder, t.trunk, std::move(dh), grad.encoder);
}

inline Matrix<double> decode(const VaeBranch& branch, const Matrix<double>& z) {
  if (z.cols() != branch.latent_dim()) throw ShapeError("decode: latent width mismatch");
  return mlp_forward(branch.decoder, z).output();
}

}  // namespace msf
