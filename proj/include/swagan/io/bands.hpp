#pragma once

// Sub-band images. Each band of a decomposition is written as one RGB PNG
// whose channels are affinely mapped from [min, max] to the full sample range;
// the per-channel (min, max) pairs go to a sidecar PREFIX_BAND.minmax.txt, one
// "min max" line per colour channel, so the values can be restored.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "swagan/io/png.hpp"
#include "swagan/wavelet.hpp"

namespace swagan::io {

using MinMax = std::pair<double, double>;

inline void write_minmax(const std::string& path, const std::vector<MinMax>& ranges) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [lo, hi] : ranges) os << lo << ' ' << hi << '\n';
  atomic_write(path, os.str());
}

inline std::vector<MinMax> read_minmax(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::vector<MinMax> out;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(f, line)) {
    if (!line.empty()) {
      std::istringstream is(line);
      MinMax mm;
      if (!(is >> mm.first >> mm.second)) throw FormatError(path + ": expected 'min max'", offset);
      out.push_back(mm);
    }
    offset += line.size() + 1;
  }
  return out;
}

/// Writes planes [3, H, W] as an RGB PNG of the given bit depth with
/// per-channel affine normalization; returns the (min, max) per channel.
template <typename Real>
std::vector<MinMax> write_normalized_png(const std::string& path, const Tensor<Real>& planes, int bit_depth) {
  if (planes.rank() != 3 || planes.dim(0) != 3) {
    throw DimensionError("write_normalized_png: expected [3, H, W], got " + to_string(planes.shape()));
  }
  const Index h = planes.dim(1), w = planes.dim(2), hw = h * w;
  const double top = bit_depth == 16 ? 65535.0 : 255.0;
  RawImage raw{w, h, bit_depth, std::vector<std::uint16_t>(static_cast<std::size_t>(3 * hw))};
  std::vector<MinMax> ranges;
  auto d = planes.data();
  for (Index c = 0; c < 3; ++c) {
    const auto [lo_it, hi_it] = std::minmax_element(d.begin() + c * hw, d.begin() + (c + 1) * hw);
    const double lo = static_cast<double>(*lo_it), hi = static_cast<double>(*hi_it);
    ranges.emplace_back(lo, hi);
    const double span = hi - lo;
    for (Index p = 0; p < hw; ++p) {
      const double t = span > 0 ? (static_cast<double>(d[c * hw + p]) - lo) / span : 0.0;
      raw.samples[p * 3 + c] = static_cast<std::uint16_t>(std::floor(t * top + 0.5));
    }
  }
  write_png_raw(path, raw);
  return ranges;
}

/// Inverse of write_normalized_png given the recorded ranges.
inline Tensor<double> read_normalized_png(const std::string& path, const std::vector<MinMax>& ranges) {
  const auto raw = read_png_raw(path);
  if (ranges.size() != 3) throw FormatError(path + ": need 3 min/max lines, got " + std::to_string(ranges.size()), 0);
  const double top = raw.bit_depth == 16 ? 65535.0 : 255.0;
  const Index hw = raw.width * raw.height;
  std::vector<double> v(static_cast<std::size_t>(3 * hw));
  for (Index c = 0; c < 3; ++c) {
    const auto [lo, hi] = ranges[static_cast<std::size_t>(c)];
    for (Index p = 0; p < hw; ++p) v[c * hw + p] = lo + (hi - lo) * (raw.samples[p * 3 + c] / top);
  }
  return Tensor<double>(Shape{3, raw.height, raw.width}, std::move(v));
}

inline std::string band_path(const std::string& prefix, wavelet::Band b) {
  return prefix + "_" + wavelet::band_name(b) + ".png";
}

inline std::string minmax_path(const std::string& png_path) {
  return png_path.substr(0, png_path.size() - 4) + ".minmax.txt";
}

/// Writes the four bands of an RGB decomposition [1, 12, H, W] as 16-bit PNGs.
template <typename Real>
void write_band_pngs(const std::string& prefix, const Tensor<Real>& decomp) {
  if (decomp.rank() != 4 || decomp.dim(0) != 1 || decomp.dim(1) != 12) {
    throw DimensionError("write_band_pngs: expected [1, 12, H, W], got " + to_string(decomp.shape()));
  }
  for (auto b : wavelet::kBands) {
    auto planes = ops::reshape(wavelet::extract_band(decomp, b), {3, decomp.dim(2), decomp.dim(3)});
    const auto path = band_path(prefix, b);
    write_minmax(minmax_path(path), write_normalized_png(path, planes, 16));
  }
}

inline Tensor<double> read_band_pngs(const std::string& prefix) {
  std::vector<Tensor<double>> bands;
  for (auto b : wavelet::kBands) {
    const auto path = band_path(prefix, b);
    bands.push_back(read_normalized_png(path, read_minmax(minmax_path(path))));
  }
  const Index h = bands[0].dim(1), w = bands[0].dim(2), hw = h * w;
  std::vector<double> out(static_cast<std::size_t>(12 * hw));
  for (int bi = 0; bi < 4; ++bi) {
    if (bands[bi].shape() != bands[0].shape()) throw DimensionError(prefix + ": band images differ in size");
    for (Index c = 0; c < 3; ++c)
      std::copy_n(bands[bi].data().begin() + c * hw, hw, out.begin() + (c * 4 + bi) * hw);
  }
  return Tensor<double>(Shape{1, 12, h, w}, std::move(out));
}

}  // namespace swagan::io
