#pragma once

// Image sets for training: one PNG, a directory of PNGs, or seeded synthetic
// patterns. Descriptor grammar:
//   image:PATH
//   dir:PATH
//   synthetic:FAMILY[:key=value]...   keys: count, seed, period, phase, orientation
// FAMILY is checkerboard, stripes or gabor. Unspecified pattern parameters
// are drawn from the seed.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "swagan/io/png.hpp"

namespace swagan::io {

enum class DatasetKind { SingleImage, Directory, Synthetic };

struct DatasetDescriptor {
  DatasetKind kind = DatasetKind::Synthetic;
  std::string path;                 // SingleImage / Directory
  std::string family = "gabor";     // Synthetic
  Index count = 1;
  std::uint64_t seed = 0;
  std::optional<Index> period;      // checkerboard / stripes
  std::optional<Index> phase;       // checkerboard / stripes
  std::optional<std::string> orientation;  // stripes
  Index resolution = 64;
};

inline DatasetDescriptor parse_dataset(const std::string& text, Index resolution) {
  DatasetDescriptor d;
  d.resolution = resolution;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "image" || kind == "dir") {
    if (rest.empty()) throw ConfigError("dataset '" + text + "' needs a path");
    d.kind = kind == "image" ? DatasetKind::SingleImage : DatasetKind::Directory;
    d.path = rest;
    return d;
  }
  if (kind != "synthetic") {
    throw ConfigError("unknown dataset kind '" + kind + "' (expected image:, dir: or synthetic:)");
  }
  std::istringstream parts(rest);
  std::string part;
  std::getline(parts, d.family, ':');
  if (d.family != "checkerboard" && d.family != "stripes" && d.family != "gabor") {
    throw ConfigError("unknown synthetic family '" + d.family + "' (expected checkerboard, stripes, gabor)");
  }
  while (std::getline(parts, part, ':')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("dataset option '" + part + "' is not key=value");
    const auto key = part.substr(0, eq), value = part.substr(eq + 1);
    try {
      if (key == "count") d.count = std::stoll(value);
      else if (key == "seed") d.seed = std::stoull(value);
      else if (key == "period") d.period = std::stoll(value);
      else if (key == "phase") d.phase = std::stoll(value);
      else if (key == "orientation") d.orientation = value;
      else throw ConfigError("unknown dataset option '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("bad value for dataset option '" + key + "': " + value);
    }
  }
  if (d.count < 1) throw ConfigError("dataset count must be >= 1");
  if (d.period && *d.period != 2 && *d.period != 4 && *d.period != 8) {
    throw ConfigError("pattern period must be 2, 4 or 8");
  }
  if (d.orientation && *d.orientation != "horizontal" && *d.orientation != "vertical" &&
      *d.orientation != "diagonal") {
    throw ConfigError("stripe orientation must be horizontal, vertical or diagonal");
  }
  return d;
}

namespace detail {

inline Tensor<float> gray_to_rgb(const std::vector<double>& g, Index n, const double tint[3]) {
  std::vector<float> v(static_cast<std::size_t>(3 * n * n));
  for (Index c = 0; c < 3; ++c)
    for (Index i = 0; i < n * n; ++i) v[c * n * n + i] = static_cast<float>(std::clamp(g[i] * tint[c], -1.0, 1.0));
  return Tensor<float>(Shape{3, n, n}, std::move(v));
}

}  // namespace detail

/// +1 where the cell parity is even, -1 elsewhere; cells are period/2 wide.
inline Tensor<float> checkerboard(Index n, Index period, Index phase_x = 0, Index phase_y = 0) {
  const Index cell = std::max<Index>(1, period / 2);
  std::vector<double> g(static_cast<std::size_t>(n * n));
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) g[y * n + x] = (((x + phase_x) / cell + (y + phase_y) / cell) % 2 == 0) ? 1.0 : -1.0;
  const double tint[3] = {1, 1, 1};
  return detail::gray_to_rgb(g, n, tint);
}

/// Square-wave stripes; horizontal stripes vary along rows only.
inline Tensor<float> stripes(Index n, const std::string& orientation, Index period, Index phase,
                             const double tint[3]) {
  const Index cell = std::max<Index>(1, period / 2);
  std::vector<double> g(static_cast<std::size_t>(n * n));
  for (Index y = 0; y < n; ++y)
    for (Index x = 0; x < n; ++x) {
      const Index t = orientation == "horizontal" ? y : orientation == "vertical" ? x : x + y;
      g[y * n + x] = ((t + phase) / cell) % 2 == 0 ? 1.0 : -1.0;
    }
  return detail::gray_to_rgb(g, n, tint);
}

/// Mixture of windowed oriented sinusoids with per-channel colour weights.
inline Tensor<float> gabor_texture(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int components = 2 + static_cast<int>(u(rng) * 3);  // 2..4
  std::vector<double> v(static_cast<std::size_t>(3 * n * n), 0.0);
  double weight_sum = 0;
  for (int k = 0; k < components; ++k) {
    const double theta = u(rng) * std::numbers::pi;
    const double freq = 0.05 + 0.4 * u(rng);  // cycles per pixel, below Nyquist
    const double phi = u(rng) * 2 * std::numbers::pi;
    const double cx = u(rng) * n, cy = u(rng) * n, sigma = n * (0.25 + 0.5 * u(rng));
    const double amp = 0.5 + 0.5 * u(rng);
    const double col[3] = {0.4 + 0.6 * u(rng), 0.4 + 0.6 * u(rng), 0.4 + 0.6 * u(rng)};
    weight_sum += amp;
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x) {
        const double proj = x * std::cos(theta) + y * std::sin(theta);
        const double env = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma));
        const double val = amp * env * std::cos(2 * std::numbers::pi * freq * proj + phi);
        for (int c = 0; c < 3; ++c) v[c * n * n + y * n + x] += col[c] * val;
      }
  }
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(std::clamp(v[i] / weight_sum, -1.0, 1.0));
  return Tensor<float>(Shape{3, n, n}, std::move(out));
}

inline std::vector<Tensor<float>> synth_dataset(const DatasetDescriptor& d) {
  const Index n = d.resolution;
  std::mt19937_64 rng(d.seed);
  std::vector<Tensor<float>> out;
  const Index periods[3] = {2, 4, 8};
  const char* orientations[3] = {"horizontal", "vertical", "diagonal"};
  for (Index i = 0; i < d.count; ++i) {
    std::uniform_int_distribution<int> pick(0, 2);
    if (d.family == "checkerboard") {
      const Index period = d.period.value_or(periods[pick(rng)]);
      std::uniform_int_distribution<Index> ph(0, period - 1);
      const Index px = d.phase ? *d.phase : ph(rng);
      const Index py = d.phase ? *d.phase : ph(rng);
      out.push_back(checkerboard(n, period, px, py));
    } else if (d.family == "stripes") {
      const std::string orient = d.orientation.value_or(orientations[pick(rng)]);
      const Index period = d.period.value_or(periods[pick(rng)]);
      std::uniform_int_distribution<Index> ph(0, period - 1);
      const Index phase = d.phase ? *d.phase : ph(rng);
      std::uniform_real_distribution<double> t(0.5, 1.0);
      const double tint[3] = {t(rng), t(rng), t(rng)};
      out.push_back(stripes(n, orient, period, phase, tint));
    } else if (d.family == "gabor") {
      out.push_back(gabor_texture(n, rng));
    } else {
      throw ConfigError("unknown synthetic family '" + d.family + "'");
    }
  }
  return out;
}

inline void require_resolution(const Tensor<float>& img, Index n, const std::string& source) {
  if (img.dim(1) != n || img.dim(2) != n) {
    throw DimensionError(source + ": image is " + std::to_string(img.dim(2)) + "x" + std::to_string(img.dim(1)) +
                         ", expected " + std::to_string(n) + "x" + std::to_string(n));
  }
}

/// Materializes a dataset as [3, R, R] images in [-1, 1].
inline std::vector<Tensor<float>> load_dataset(const DatasetDescriptor& d) {
  if (d.resolution < 4 || (d.resolution & (d.resolution - 1)) != 0) {
    throw ConfigError("dataset resolution must be a power of two >= 4, got " + std::to_string(d.resolution));
  }
  std::vector<Tensor<float>> out;
  if (d.kind == DatasetKind::Synthetic) return synth_dataset(d);
  if (d.kind == DatasetKind::SingleImage) {
    out.push_back(load_png(d.path));
    require_resolution(out.back(), d.resolution, d.path);
    return out;
  }
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(d.path)) throw IoError("not a directory: " + d.path);
  for (const auto& e : std::filesystem::directory_iterator(d.path))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ContractError("dataset directory " + d.path + " contains no .png files");
  for (const auto& f : files) {
    out.push_back(load_png(f.string()));
    require_resolution(out.back(), d.resolution, f.string());
  }
  return out;
}

}  // namespace swagan::io
