#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "swagan/tensor_dict.hpp"

namespace swagan::nn {

enum class GeneratorVariant { SwaganBi, SwaganNU, WaveletFinal, PixelBaseline };
enum class DiscriminatorVariant { WaveletSkip, ResidualPixel };

/// Named parameter set of one network.
template <typename Real>
using NetworkParams = TensorDict<Real>;

struct GeneratorSpec {
  GeneratorVariant variant = GeneratorVariant::SwaganBi;
  Index n_blocks = 3;
  Index latent_dim = 32;
  Index mapping_layers = 2;
  std::vector<Index> channels{32, 32, 32};  // block 1 (lowest resolution) first
  bool style_enabled = true;
};

struct DiscriminatorSpec {
  DiscriminatorVariant variant = DiscriminatorVariant::WaveletSkip;
  Index n_blocks = 3;
  std::vector<Index> channels{32, 32, 32};  // block 1 (highest resolution) first
};

/// Side length of generated images: blocks double a 4x4 start n_blocks times.
inline Index output_resolution(Index n_blocks) { return Index{4} << n_blocks; }
inline Index output_resolution(const GeneratorSpec& s) { return output_resolution(s.n_blocks); }
inline Index input_resolution(const DiscriminatorSpec& s) { return output_resolution(s.n_blocks); }

inline bool is_wavelet(GeneratorVariant v) { return v != GeneratorVariant::PixelBaseline; }

inline const char* variant_name(GeneratorVariant v) {
  switch (v) {
    case GeneratorVariant::SwaganBi: return "swagan-bi";
    case GeneratorVariant::SwaganNU: return "swagan-nu";
    case GeneratorVariant::WaveletFinal: return "wavelet-final";
    case GeneratorVariant::PixelBaseline: return "pixel";
  }
  return "?";
}

inline const char* variant_name(DiscriminatorVariant v) {
  return v == DiscriminatorVariant::WaveletSkip ? "wavelet" : "residual";
}

/// Accepts the canonical names plus the short forms bi, nu, final, pixel.
/// "swagan-bi-nwd" names the wavelet generator paired with the residual
/// discriminator; see parse_pairing.
inline GeneratorVariant parse_generator_variant(const std::string& s) {
  if (s == "swagan-bi" || s == "bi" || s == "swagan-bi-nwd" || s == "nwd") return GeneratorVariant::SwaganBi;
  if (s == "swagan-nu" || s == "nu") return GeneratorVariant::SwaganNU;
  if (s == "wavelet-final" || s == "final") return GeneratorVariant::WaveletFinal;
  if (s == "pixel" || s == "stylegan2" || s == "baseline") return GeneratorVariant::PixelBaseline;
  throw ConfigError("unknown generator variant '" + s + "' (expected bi, nu, final, pixel)");
}

inline DiscriminatorVariant parse_discriminator_variant(const std::string& s) {
  if (s == "wavelet" || s == "wavelet-skip") return DiscriminatorVariant::WaveletSkip;
  if (s == "residual" || s == "residual-pixel" || s == "nwd") return DiscriminatorVariant::ResidualPixel;
  throw ConfigError("unknown discriminator variant '" + s + "' (expected wavelet, residual)");
}

/// Discriminator that a generator variant is trained against by default.
inline DiscriminatorVariant default_discriminator(const std::string& generator_name) {
  if (generator_name == "swagan-bi-nwd" || generator_name == "nwd") return DiscriminatorVariant::ResidualPixel;
  return parse_generator_variant(generator_name) == GeneratorVariant::PixelBaseline
             ? DiscriminatorVariant::ResidualPixel
             : DiscriminatorVariant::WaveletSkip;
}

inline void validate(const GeneratorSpec& s) {
  if (s.n_blocks < 1) throw ConfigError("generator n_blocks must be >= 1");
  if (static_cast<Index>(s.channels.size()) != s.n_blocks) {
    throw ConfigError("generator channels list has " + std::to_string(s.channels.size()) + " entries, expected " +
                      std::to_string(s.n_blocks));
  }
  if (s.latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (s.mapping_layers < 0) throw ConfigError("mapping_layers must be >= 0");
  for (Index c : s.channels)
    if (c < 1) throw ConfigError("channel widths must be positive");
}

inline void validate(const DiscriminatorSpec& s) {
  if (s.n_blocks < 1) throw ConfigError("discriminator n_blocks must be >= 1");
  if (static_cast<Index>(s.channels.size()) != s.n_blocks) {
    throw ConfigError("discriminator channels list has " + std::to_string(s.channels.size()) +
                      " entries, expected " + std::to_string(s.n_blocks));
  }
  for (Index c : s.channels)
    if (c < 1) throw ConfigError("channel widths must be positive");
}

/// Widths used when none are given: 16 for the two lowest-resolution
/// blocks, halving every two blocks after that, never below 4.
inline std::vector<Index> default_channels(Index n_blocks) {
  std::vector<Index> out;
  for (Index i = 0; i < n_blocks; ++i) out.push_back(std::max<Index>(4, Index{16} >> (i / 2)));
  return out;
}

/// Discriminator mirroring a generator: same depth, widths in reverse order.
inline DiscriminatorSpec mirror(const GeneratorSpec& g, DiscriminatorVariant variant) {
  DiscriminatorSpec d;
  d.variant = variant;
  d.n_blocks = g.n_blocks;
  d.channels.assign(g.channels.rbegin(), g.channels.rend());
  return d;
}

}  // namespace swagan::nn
