#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "swagan/io/bands.hpp"
#include "swagan/nn/generator.hpp"

namespace swagan::io {

/// Renders every block's decomposition of one sample as band images: the
/// band is averaged over colour, bicubically resized to size x size, then
/// normalized to [0, 255] with the range in a sidecar. Files are
/// blockI_BAND.png plus a 2x2 blockI_grid.png (LL LH / HL HH). Returns the
/// per-band paths in block-major order.
inline std::vector<std::string> dump_intermediates(const nn::NetworkParams<float>& params,
                                                   const nn::GeneratorSpec& spec, std::uint64_t seed,
                                                   const std::string& out_dir, Index size = 256, double psi = 1.0) {
  NoGradGuard no_grad;
  std::filesystem::create_directories(out_dir);
  std::mt19937_64 rng(seed);
  const auto z = nn::sample_latents<float>(1, spec.latent_dim, rng);
  const auto out = nn::generator_forward(params, spec, z, psi, true);
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < out.decompositions.size(); ++i) {
    const auto& dec = out.decompositions[i];
    const auto stem = (std::filesystem::path(out_dir) / ("block" + std::to_string(i + 1))).string();
    RawImage grid{2 * size, 2 * size, 8, std::vector<std::uint16_t>(static_cast<std::size_t>(12 * size * size))};
    for (auto b : wavelet::kBands) {
      const auto band = wavelet::extract_band(dec, b);  // [1, 3, h, w]
      const Index hw = band.dim(2) * band.dim(3);
      std::vector<float> mean(static_cast<std::size_t>(hw));
      for (Index p = 0; p < hw; ++p) mean[p] = (band[p] + band[hw + p] + band[2 * hw + p]) / 3.0f;
      auto up = ops::bicubic_resize(Tensor<float>({1, 1, band.dim(2), band.dim(3)}, mean), size, size);
      auto rgb = ops::reshape(ops::tile_batch(up, 3), {3, size, size});
      const auto path = stem + "_" + wavelet::band_name(b) + ".png";
      write_minmax(minmax_path(path), write_normalized_png(path, rgb, 8));
      paths.push_back(path);
      const auto written = read_png_raw(path);
      const Index gx = (static_cast<int>(b) % 2) * size, gy = (static_cast<int>(b) / 2) * size;
      for (Index y = 0; y < size; ++y)
        for (Index x = 0; x < size; ++x)
          for (Index c = 0; c < 3; ++c)
            grid.samples[((gy + y) * 2 * size + gx + x) * 3 + c] = written.samples[(y * size + x) * 3 + c];
    }
    write_png_raw(stem + "_grid.png", grid);
  }
  return paths;
}

}  // namespace swagan::io
