#pragma once

// Discriminators. WaveletSkip feeds the Haar decomposition of the input into
// every block through fWavelets 1x1 convs: block j sees the decomposition of
// the image at R / 2^(j-1), i.e. coefficients at R / 2^j, and adds it to the
// bilinearly downsampled features of block j-1. ResidualPixel is the
// StyleGAN2 residual discriminator (fromRGB once, then conv-conv-downsample
// blocks with a 1x1 skip, summed and scaled by 1/sqrt(2)). Both end in a
// linear layer over the flattened 4x4 features.

#include <cmath>
#include <string>
#include <vector>

#include "swagan/nn/layers.hpp"
#include "swagan/wavelet.hpp"

namespace swagan::nn {

template <typename Real>
NetworkParams<Real> build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed) {
  validate(spec);
  detail::Initializer init(seed);
  NetworkParams<Real> p;
  const auto& ch = spec.channels;
  if (spec.variant == DiscriminatorVariant::WaveletSkip) {
    for (Index j = 1; j <= spec.n_blocks; ++j) {
      const Index c = ch[static_cast<std::size_t>(j - 1)];
      const Index cin = j == 1 ? c : ch[static_cast<std::size_t>(j - 2)];
      const auto b = "block" + std::to_string(j);
      detail::add_conv(p, init, b + ".fwav", cin, 12, 1);
      detail::add_conv(p, init, b + ".conv0", c, cin, 3);
      detail::add_conv(p, init, b + ".conv1", c, c, 3);
    }
  } else {
    detail::add_conv(p, init, "frgb", ch[0], 3, 1);
    for (Index j = 1; j <= spec.n_blocks; ++j) {
      const Index c = ch[static_cast<std::size_t>(j - 1)];
      const Index cin = j == 1 ? c : ch[static_cast<std::size_t>(j - 2)];
      const auto b = "block" + std::to_string(j);
      detail::add_conv(p, init, b + ".conv0", cin, cin, 3);
      detail::add_conv(p, init, b + ".conv1", c, cin, 3);
      detail::add_conv(p, init, b + ".skip", c, cin, 1, false);
    }
  }
  detail::add_linear(p, init, "out", 1, ch.back() * 16);
  return p;
}

/// image [N, 3, R, R] -> score [N, 1]. block_shapes, when given, receives
/// the feature shape leaving each block.
template <typename Real>
Tensor<Real> discriminator_forward(const NetworkParams<Real>& p, const DiscriminatorSpec& spec,
                                   const Tensor<Real>& image, std::vector<Shape>* block_shapes = nullptr) {
  const Index r = input_resolution(spec);
  if (image.rank() != 4 || image.dim(1) != 3 || image.dim(2) != r || image.dim(3) != r) {
    throw DimensionError("discriminator: expected [N, 3, " + std::to_string(r) + ", " + std::to_string(r) +
                         "], got " + to_string(image.shape()));
  }
  const Index n = image.dim(0);
  Tensor<Real> x;
  if (spec.variant == DiscriminatorVariant::WaveletSkip) {
    auto wav = wavelet::dwt2(image);
    for (Index j = 1; j <= spec.n_blocks; ++j) {
      const auto b = "block" + std::to_string(j);
      if (j > 1) wav = wavelet::wavelet_downsample(wav);
      auto from = ops::leaky_relu(detail::conv(p, b + ".fwav", wav));
      x = j == 1 ? from : ops::add(ops::downsample2x(x), from);
      x = ops::leaky_relu(detail::conv(p, b + ".conv0", x));
      x = ops::leaky_relu(detail::conv(p, b + ".conv1", x));
      if (block_shapes) block_shapes->push_back(x.shape());
    }
  } else {
    const Real inv_sqrt2 = static_cast<Real>(1.0 / std::sqrt(2.0));
    x = ops::leaky_relu(detail::conv(p, "frgb", image));
    for (Index j = 1; j <= spec.n_blocks; ++j) {
      const auto b = "block" + std::to_string(j);
      auto skip = detail::conv(p, b + ".skip", ops::downsample2x(x));
      auto y = ops::leaky_relu(detail::conv(p, b + ".conv0", x));
      y = ops::downsample2x(ops::leaky_relu(detail::conv(p, b + ".conv1", y)));
      x = ops::scale(ops::add(y, skip), inv_sqrt2);
      if (block_shapes) block_shapes->push_back(x.shape());
    }
  }
  auto flat = ops::reshape(x, {n, x.numel() / n});
  return ops::linear(flat, p.at("out.weight"), p.at("out.bias"));
}

}  // namespace swagan::nn
