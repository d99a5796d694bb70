#pragma once

// Layer building blocks shared by the generator and discriminator builders.

#include <cmath>
#include <random>
#include <string>

#include "swagan/nn/spec.hpp"
#include "swagan/ops/conv.hpp"
#include "swagan/ops/matmul.hpp"

namespace swagan::nn {

/// Per-sample modulated convolution. For sample n the weight is scaled by
/// s[n, i] along the input axis and, when demodulating, renormalized to unit
/// norm per output channel. Implemented as scale -> shared conv -> scale so
/// one convolution serves the whole batch; the result equals convolving each
/// sample with its own weight.
template <typename Real>
Tensor<Real> modulated_conv2d(const Tensor<Real>& input, const Tensor<Real>& weight, const Tensor<Real>& style,
                              bool demodulate) {
  require_rank(weight, 4, "modulated_conv2d weight");
  if (style.rank() != 2 || style.dim(0) != input.dim(0) || style.dim(1) != weight.dim(1)) {
    throw DimensionError("modulated_conv2d: style " + to_string(style.shape()) + " must be [batch, " +
                         std::to_string(weight.dim(1)) + "] for weight " + to_string(weight.shape()));
  }
  if (!ops::all_finite(style)) throw ContractError("modulated_conv2d: non-finite style scales");
  auto y = ops::conv2d(ops::scale_channels(input, style), weight);
  if (!demodulate) return y;
  const Index cout = weight.dim(0), cin = weight.dim(1), kk = weight.dim(2) * weight.dim(3);
  auto wsq = ops::sum_last(ops::square(ops::reshape(weight, {cout, cin, kk})));  // [Cout, Cin]
  auto norm = ops::matmul(ops::square(style), wsq, false, true);                 // [N, Cout]
  auto d = ops::pow_scalar(ops::add_scalar(norm, Real(1e-8)), Real(-0.5));
  return ops::scale_channels(y, d);
}

namespace detail {

/// Sequential initializer: tensors are drawn in build order from one stream.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  template <typename Real>
  Tensor<Real> normal(const Shape& shape, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<Real> v(static_cast<std::size_t>(swagan::numel(shape)));
    for (auto& x : v) x = static_cast<Real>(dist(rng_));
    Tensor<Real> t(shape, std::move(v));
    t.set_requires_grad(true);
    return t;
  }

  template <typename Real>
  Tensor<Real> filled(const Shape& shape, double value) {
    auto t = Tensor<Real>::full(shape, static_cast<Real>(value));
    t.set_requires_grad(true);
    return t;
  }

 private:
  std::mt19937_64 rng_;
};

template <typename Real>
void add_conv(NetworkParams<Real>& p, Initializer& init, const std::string& name, Index cout, Index cin, Index k,
              bool bias = true) {
  p.insert(name + ".weight", init.normal<Real>({cout, cin, k, k}, 1.0 / std::sqrt(double(cin * k * k))));
  if (bias) p.insert(name + ".bias", init.filled<Real>({cout}, 0.0));
}

/// Style affine: w -> per-input-channel scales, bias starting at 1 so that
/// fresh layers see unit modulation.
template <typename Real>
void add_style(NetworkParams<Real>& p, Initializer& init, const std::string& name, Index channels,
               Index latent_dim) {
  p.insert(name + ".style.weight", init.normal<Real>({channels, latent_dim}, 1.0 / std::sqrt(double(latent_dim))));
  p.insert(name + ".style.bias", init.filled<Real>({channels}, 1.0));
}

template <typename Real>
void add_linear(NetworkParams<Real>& p, Initializer& init, const std::string& name, Index dout, Index din) {
  p.insert(name + ".weight", init.normal<Real>({dout, din}, 1.0 / std::sqrt(double(din))));
  p.insert(name + ".bias", init.filled<Real>({dout}, 0.0));
}

template <typename Real>
Tensor<Real> conv(const NetworkParams<Real>& p, const std::string& name, const Tensor<Real>& x) {
  const auto& w = p.at(name + ".weight");
  auto y = ops::conv2d(x, w);
  return p.contains(name + ".bias") ? ops::add_channel_bias(y, p.at(name + ".bias")) : y;
}

/// Modulated conv + bias when the layer owns a style affine, plain conv otherwise.
template <typename Real>
Tensor<Real> styled_conv(const NetworkParams<Real>& p, const std::string& name, const Tensor<Real>& x,
                         const Tensor<Real>& w, bool demodulate) {
  if (!p.contains(name + ".style.weight")) return conv(p, name, x);
  auto s = ops::linear(w, p.at(name + ".style.weight"), p.at(name + ".style.bias"));
  return ops::add_channel_bias(modulated_conv2d(x, p.at(name + ".weight"), s, demodulate), p.at(name + ".bias"));
}

}  // namespace detail

}  // namespace swagan::nn
