#pragma once

#include <cstdint>

#include "swagan/nn/spec.hpp"

namespace swagan::nn {

/// Multiply-accumulates of one conv layer: Cout * Cin * k^2 * H * W.
inline std::uint64_t conv_macs(Index cout, Index cin, Index k, Index h, Index w) {
  return static_cast<std::uint64_t>(cout) * static_cast<std::uint64_t>(cin) * static_cast<std::uint64_t>(k * k) *
         static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w);
}

/// Conv multiply-accumulates per generated image.
inline std::uint64_t flop_count(const GeneratorSpec& spec) {
  validate(spec);
  std::uint64_t total = 0;
  Index cin = spec.channels[0];
  for (Index i = 1; i <= spec.n_blocks; ++i) {
    const Index c = spec.channels[static_cast<std::size_t>(i - 1)];
    const Index s = is_wavelet(spec.variant) ? Index{4} << (i - 1) : Index{4} << i;
    total += conv_macs(c, cin, 3, s, s) + conv_macs(c, c, 3, s, s);
    const bool wav_head = spec.variant == GeneratorVariant::SwaganBi || spec.variant == GeneratorVariant::SwaganNU ||
                          (spec.variant == GeneratorVariant::WaveletFinal && i == spec.n_blocks);
    total += conv_macs(wav_head ? 12 : 3, c, 1, s, s);
    if (spec.variant == GeneratorVariant::SwaganNU && i > 1) total += conv_macs(12, 12, 3, s, s);
    cin = c;
  }
  return total;
}

/// Conv multiply-accumulates per scored image.
inline std::uint64_t flop_count(const DiscriminatorSpec& spec) {
  validate(spec);
  const Index r = input_resolution(spec);
  const auto& ch = spec.channels;
  std::uint64_t total = 0;
  if (spec.variant == DiscriminatorVariant::ResidualPixel) total += conv_macs(ch[0], 3, 1, r, r);
  for (Index j = 1; j <= spec.n_blocks; ++j) {
    const Index c = ch[static_cast<std::size_t>(j - 1)];
    const Index cin = j == 1 ? c : ch[static_cast<std::size_t>(j - 2)];
    if (spec.variant == DiscriminatorVariant::WaveletSkip) {
      const Index s = r >> j;
      total += conv_macs(cin, 12, 1, s, s) + conv_macs(c, cin, 3, s, s) + conv_macs(c, c, 3, s, s);
    } else {
      const Index t = r >> (j - 1);
      total += conv_macs(cin, cin, 3, t, t) + conv_macs(c, cin, 3, t, t) + conv_macs(c, cin, 1, t / 2, t / 2);
    }
  }
  return total;
}

}  // namespace swagan::nn
