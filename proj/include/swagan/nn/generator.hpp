#pragma once

// Style-based generators. Wavelet variants keep a running 12-channel Haar
// decomposition (4 bands x RGB) next to the feature stream; each block adds
// its tWavelets prediction to the resampled decomposition of the previous
// block, and the image is the IWT of the last one. Block 1 runs on the
// learned 4x4 constant (an 8x8 image in wavelet terms); later blocks double
// the resolution. The pixel baseline is the StyleGAN2 skip generator, whose
// blocks all upsample, so both reach 4 * 2^n_blocks pixels.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "swagan/log.hpp"
#include "swagan/nn/layers.hpp"
#include "swagan/wavelet.hpp"

namespace swagan::nn {

inline constexpr Index kWaveletChannels = 12;

template <typename Real>
struct GeneratorOutput {
  Tensor<Real> image;  // [N, 3, R, R]
  /// Per block: the decomposition whose IWT is the image represented after
  /// that block (filled only when capture was requested).
  std::vector<Tensor<Real>> decompositions;
};

namespace detail {

inline std::string block_name(Index i) { return "block" + std::to_string(i); }

/// Name of the skip head of block i (1-based), or "" for none.
inline std::string skip_head(const GeneratorSpec& s, Index i) {
  switch (s.variant) {
    case GeneratorVariant::SwaganBi:
    case GeneratorVariant::SwaganNU: return block_name(i) + ".twav";
    case GeneratorVariant::PixelBaseline: return block_name(i) + ".trgb";
    case GeneratorVariant::WaveletFinal: return block_name(i) + (i == s.n_blocks ? ".twav" : ".trgb");
  }
  return {};
}

}  // namespace detail

template <typename Real>
NetworkParams<Real> build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
  validate(spec);
  detail::Initializer init(seed);
  NetworkParams<Real> p;
  const Index L = spec.latent_dim;
  for (Index i = 0; i < spec.mapping_layers; ++i) detail::add_linear(p, init, "mapping." + std::to_string(i), L, L);
  p.insert("const", init.filled<Real>({1, spec.channels[0], 4, 4}, 1.0));
  Index cin = spec.channels[0];
  for (Index i = 1; i <= spec.n_blocks; ++i) {
    const Index c = spec.channels[static_cast<std::size_t>(i - 1)];
    const auto b = detail::block_name(i);
    detail::add_conv(p, init, b + ".conv0", c, cin, 3);
    if (spec.style_enabled) detail::add_style(p, init, b + ".conv0", cin, L);
    detail::add_conv(p, init, b + ".conv1", c, c, 3);
    if (spec.style_enabled) detail::add_style(p, init, b + ".conv1", c, L);
    const auto head = detail::skip_head(spec, i);
    const bool wav_head = head.ends_with(".twav");
    detail::add_conv(p, init, head, wav_head ? kWaveletChannels : 3, c, 1);
    if (spec.style_enabled) detail::add_style(p, init, head, c, L);
    if (spec.variant == GeneratorVariant::SwaganNU && i > 1) {
      detail::add_conv(p, init, b + ".nu", kWaveletChannels, kWaveletChannels, 3);
    }
    cin = c;
  }
  p.insert("w_avg", Tensor<Real>::zeros({L}));
  return p;
}

/// Standard normal latents [n, dim].
template <typename Real>
Tensor<Real> sample_latents(Index n, Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Real> v(static_cast<std::size_t>(n * dim));
  for (auto& x : v) x = static_cast<Real>(normal(rng));
  return Tensor<Real>(Shape{n, dim}, std::move(v));
}

/// z -> w: normalize z by its second moment, then the mapping MLP.
template <typename Real>
Tensor<Real> mapping_forward(const NetworkParams<Real>& p, const GeneratorSpec& spec, const Tensor<Real>& z) {
  if (z.rank() != 2 || z.dim(1) != spec.latent_dim) {
    throw DimensionError("generator: latent axis 1 must have " + std::to_string(spec.latent_dim) + " entries, got " +
                         to_string(z.shape()));
  }
  const Index L = spec.latent_dim;
  auto ms = ops::add_scalar(ops::scale(ops::sum_last(ops::square(z)), Real(1.0 / double(L))), Real(1e-8));
  auto x = ops::mul(z, ops::expand_last(ops::pow_scalar(ms, Real(-0.5)), L));
  for (Index i = 0; i < spec.mapping_layers; ++i) {
    const auto n = "mapping." + std::to_string(i);
    x = ops::leaky_relu(ops::linear(x, p.at(n + ".weight"), p.at(n + ".bias")));
  }
  return x;
}

/// w' = w_avg + psi (w - w_avg); psi = 1 returns w unchanged.
template <typename Real>
Tensor<Real> truncate(const NetworkParams<Real>& p, const Tensor<Real>& w, double psi) {
  if (psi < 0.0 || psi > 1.0) log_warning("truncation psi = " + std::to_string(psi) + " is outside [0, 1]");
  if (psi == 1.0) return w;
  const auto& avg = p.at("w_avg");
  auto avg_rows = ops::tile_batch(ops::reshape(avg, {1, avg.numel()}), w.dim(0));
  return ops::add(avg_rows, ops::scale(ops::sub(w, avg_rows), static_cast<Real>(psi)));
}

/// Synthesis network driven by styles w [N, latent_dim].
template <typename Real>
GeneratorOutput<Real> synthesis_forward(const NetworkParams<Real>& p, const GeneratorSpec& spec,
                                        const Tensor<Real>& w, bool capture = false) {
  using wavelet::dwt2;
  using wavelet::iwt2;
  const Index n = w.dim(0);
  GeneratorOutput<Real> out;
  Tensor<Real> x = ops::tile_batch(p.at("const"), n);
  Tensor<Real> wav, rgb;
  for (Index i = 1; i <= spec.n_blocks; ++i) {
    const auto b = detail::block_name(i);
    if (i > 1 || !is_wavelet(spec.variant)) x = ops::upsample2x(x);
    x = ops::leaky_relu(detail::styled_conv(p, b + ".conv0", x, w, true));
    x = ops::leaky_relu(detail::styled_conv(p, b + ".conv1", x, w, true));
    const auto head = detail::skip_head(spec, i);
    auto y = detail::styled_conv(p, head, x, w, false);
    switch (spec.variant) {
      case GeneratorVariant::SwaganBi:
        wav = i == 1 ? y : ops::add(y, wavelet::wavelet_upsample(wav));
        if (capture) out.decompositions.push_back(wav);
        break;
      case GeneratorVariant::SwaganNU:
        wav = i == 1 ? y : ops::add(y, detail::conv(p, b + ".nu", ops::upsample2x(wav)));
        if (capture) out.decompositions.push_back(wav);
        break;
      case GeneratorVariant::PixelBaseline:
        rgb = i == 1 ? y : ops::add(y, ops::upsample2x(rgb));
        if (capture) out.decompositions.push_back(dwt2(rgb));
        break;
      case GeneratorVariant::WaveletFinal:
        if (i < spec.n_blocks) {
          rgb = i == 1 ? y : ops::add(y, ops::upsample2x(rgb));
          if (capture) out.decompositions.push_back(dwt2(rgb));
        } else {
          // RGB skip lives at block resolution, i.e. a quarter of the output.
          wav = i == 1 ? y : ops::add(y, dwt2(ops::upsample2x(ops::upsample2x(rgb))));
          if (capture) out.decompositions.push_back(wav);
        }
        break;
    }
  }
  out.image = spec.variant == GeneratorVariant::PixelBaseline ? rgb : iwt2(wav);
  return out;
}

/// z -> image. psi outside [0, 1] is allowed with a warning.
template <typename Real>
GeneratorOutput<Real> generator_forward(const NetworkParams<Real>& p, const GeneratorSpec& spec, const Tensor<Real>& z,
                                        double psi = 1.0, bool capture = false) {
  return synthesis_forward(p, spec, truncate(p, mapping_forward(p, spec, z), psi), capture);
}

}  // namespace swagan::nn
