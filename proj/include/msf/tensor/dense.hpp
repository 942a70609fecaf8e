#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "msf/tensor/matrix.hpp"

namespace msf {

enum class Activation { identity, relu };

// Fully connected layer y = act(x W^T + b) with W stored out x in.
template <typename T>
struct DenseLayer {
  Matrix<T> weight;
  std::vector<T> bias;
  Activation activation = Activation::identity;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out, Activation act = Activation::identity)
      : weight(out, in), bias(out, T{0}), activation(act) {}
  DenseLayer(Matrix<T> w, std::vector<T> b, Activation act)
      : weight(std::move(w)), bias(std::move(b)), activation(act) {
    if (bias.size() != weight.rows()) throw ShapeError("dense layer bias length mismatch");
  }

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  // Uniform fan-in initialization (He for relu, Glorot otherwise); biases zero.
  template <typename Rng>
  void initialize(Rng& rng) {
    const double fan_in = static_cast<double>(in_dim());
    const double fan_out = static_cast<double>(out_dim());
    const double limit = activation == Activation::relu ? std::sqrt(6.0 / fan_in)
                                                        : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : weight.values()) w = static_cast<T>(dist(rng));
    std::fill(bias.begin(), bias.end(), T{0});
  }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Returns a layer of identical shape with every parameter zero; used as the
// gradient accumulator for `layer`.
template <typename T>
DenseLayer<T> zeros_like(const DenseLayer<T>& layer) {
  return DenseLayer<T>(Matrix<T>(layer.out_dim(), layer.in_dim()),
                       std::vector<T>(layer.out_dim(), T{0}), layer.activation);
}

template <typename T>
void append_parameters(DenseLayer<T>& layer, std::vector<std::span<T>>& out) {
  out.push_back(layer.weight.values());
  out.push_back(std::span<T>(layer.bias));
}

template <typename T>
Matrix<T> linear_forward(const Matrix<T>& x, const DenseLayer<T>& layer) {
  if (x.cols() != layer.in_dim()) {
    throw ShapeError("linear_forward: input has " + std::to_string(x.cols()) +
                     " columns, layer expects " + std::to_string(layer.in_dim()));
  }
  const std::size_t batch = x.rows();
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  Matrix<T> y(batch, out);
  for (std::size_t i = 0; i < batch; ++i) {
    const T* xi = x.row(i).data();
    T* yi = y.row(i).data();
    for (std::size_t o = 0; o < out; ++o) {
      const T* wo = layer.weight.row(o).data();
      T acc = layer.bias[o];
      for (std::size_t k = 0; k < in; ++k) acc += xi[k] * wo[k];
      if (layer.activation == Activation::relu && acc < T{0}) acc = T{0};
      yi[o] = acc;
    }
  }
  return y;
}

// Backward pass for linear_forward. `y` is the forward output, `dy` the
// upstream gradient. Parameter gradients are accumulated into `grad`; the
// input gradient is returned.
template <typename T>
Matrix<T> linear_backward(const Matrix<T>& x, const DenseLayer<T>& layer, const Matrix<T>& y,
                          const Matrix<T>& dy, DenseLayer<T>& grad) {
  require_same_shape(y, dy, "linear_backward");
  const std::size_t batch = x.rows();
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  Matrix<T> dx(batch, in);
  std::vector<T> delta(out);
  for (std::size_t i = 0; i < batch; ++i) {
    const T* xi = x.row(i).data();
    T* dxi = dx.row(i).data();
    for (std::size_t o = 0; o < out; ++o) {
      T d = dy(i, o);
      if (layer.activation == Activation::relu && y(i, o) <= T{0}) d = T{0};
      delta[o] = d;
    }
    for (std::size_t o = 0; o < out; ++o) {
      const T d = delta[o];
      if (d == T{0}) continue;
      grad.bias[o] += d;
      T* gwo = grad.weight.row(o).data();
      const T* wo = layer.weight.row(o).data();
      for (std::size_t k = 0; k < in; ++k) {
        gwo[k] += d * xi[k];
        dxi[k] += d * wo[k];
      }
    }
  }
  return dx;
}

}  // namespace msf
