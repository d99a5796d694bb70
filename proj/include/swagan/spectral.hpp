#pragma once

// Power-spectrum analysis: radix-2 FFT, radially averaged spectra, the
// relative spectrum gap between two image sets, and binomial blur baselines.

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "swagan/ops/basic.hpp"
#include "swagan/ops/resample.hpp"

namespace swagan::spectral {

using Complex = std::complex<double>;

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place unnormalized 1-D DFT of a power-of-two length sequence with
/// stride. inverse flips the exponent sign without scaling.
inline void fft_inplace(Complex* data, Index n, Index stride, bool inverse) {
  for (Index i = 1, j = 0; i < n; ++i) {
    Index bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (Index len = 2; len <= n; len <<= 1) {
    const Index half = len / 2;
    for (Index k = 0; k < half; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (Index start = 0; start < n; start += len) {
        Complex& lo = data[(start + k) * stride];
        Complex& hi = data[(start + k + half) * stride];
        const Complex t = w * hi;
        hi = lo - t;
        lo = lo + t;
      }
    }
  }
}

/// Row-major complex grid.
struct ComplexGrid {
  Index height = 0;
  Index width = 0;
  std::vector<Complex> values;

  Complex& at(Index u, Index v) { return values[static_cast<std::size_t>(u * width + v)]; }
  const Complex& at(Index u, Index v) const { return values[static_cast<std::size_t>(u * width + v)]; }
};

inline void fft2_inplace(ComplexGrid& grid, bool inverse) {
  if (!is_power_of_two(grid.height) || !is_power_of_two(grid.width)) {
    throw DimensionError("fft2: sizes must be powers of two, got " + std::to_string(grid.height) + "x" +
                         std::to_string(grid.width));
  }
  for (Index r = 0; r < grid.height; ++r) fft_inplace(grid.values.data() + r * grid.width, grid.width, 1, inverse);
  for (Index c = 0; c < grid.width; ++c) fft_inplace(grid.values.data() + c, grid.height, grid.width, inverse);
}

/// F(u, v) = sum_{h,w} x(h, w) exp(-2 pi i (u h / H + v w / W)), rows then columns.
template <typename Real>
ComplexGrid fft2(const Tensor<Real>& image) {
  if (image.rank() != 2) throw DimensionError("fft2: expected [H, W], got " + to_string(image.shape()));
  ComplexGrid grid{image.dim(0), image.dim(1), {}};
  if (!is_power_of_two(grid.height) || !is_power_of_two(grid.width)) {
    throw DimensionError("fft2: sizes must be powers of two, got " + to_string(image.shape()));
  }
  grid.values.assign(image.data().begin(), image.data().end());
  fft2_inplace(grid, false);
  return grid;
}

/// Normalized inverse of fft2; returns the real part.
inline Tensor<double> ifft2(ComplexGrid grid) {
  fft2_inplace(grid, true);
  const double scale = 1.0 / static_cast<double>(grid.height * grid.width);
  std::vector<double> out(grid.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = grid.values[i].real() * scale;
  return Tensor<double>(Shape{grid.height, grid.width}, std::move(out));
}

/// Luma 0.299 R + 0.587 G + 0.114 B of a [3, H, W] image; [1, H, W] passes through.
template <typename Real>
Tensor<double> luminance(const Tensor<Real>& image) {
  require_rank(image, 3, "luminance");
  const Index h = image.dim(1), w = image.dim(2), hw = h * w;
  std::vector<double> out(static_cast<std::size_t>(hw));
  auto d = image.data();
  if (image.dim(0) == 1) {
    for (Index i = 0; i < hw; ++i) out[i] = d[i];
  } else if (image.dim(0) == 3) {
    for (Index i = 0; i < hw; ++i)
      out[i] = 0.299 * static_cast<double>(d[i]) + 0.587 * static_cast<double>(d[hw + i]) +
               0.114 * static_cast<double>(d[2 * hw + i]);
  } else {
    throw DimensionError("luminance: channel axis 0 must be 1 or 3, got " + to_string(image.shape()));
  }
  return Tensor<double>(Shape{h, w}, std::move(out));
}

/// Radial bin of every frequency of an N x N grid: round(|centered (u, v)|),
/// or -1 beyond the Nyquist radius N / 2.
struct RadialBins {
  Index size = 0;
  std::vector<Index> bin_of;   // per (u, v), row-major
  std::vector<Index> counts;   // per bin

  explicit RadialBins(Index n) : size(n), bin_of(static_cast<std::size_t>(n * n)), counts(static_cast<std::size_t>(n / 2 + 1)) {
    for (Index u = 0; u < n; ++u)
      for (Index v = 0; v < n; ++v) {
        const Index cu = u < (n + 1) / 2 ? u : u - n;
        const Index cv = v < (n + 1) / 2 ? v : v - n;
        const Index r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(cu * cu + cv * cv))));
        const Index bin = r <= n / 2 ? r : -1;
        bin_of[static_cast<std::size_t>(u * n + v)] = bin;
        if (bin >= 0) ++counts[static_cast<std::size_t>(bin)];
      }
  }

  Index bin_count() const { return static_cast<Index>(counts.size()); }
};

/// Mean power per integer radial frequency, averaged over images.
struct SpectrumProfile {
  std::vector<double> bins;
  Index n_images = 0;

  Index size() const { return bins.empty() ? 0 : 2 * (static_cast<Index>(bins.size()) - 1); }
};

/// Per-bin relative distance of a model profile from a real-image profile.
struct GapProfile {
  std::vector<double> bins;
};

/// First bin of the top quartile of a profile with the given bin count.
inline Index top_quartile_begin(Index bin_count) { return bin_count - bin_count / 4; }

/// Radial profile of one grayscale image. P = |F|^2 / (H W), so the
/// profile's DC bin equals N^2 times the squared mean intensity.
inline std::vector<double> radial_profile(const Tensor<double>& gray, const RadialBins& bins) {
  const Index n = gray.dim(0);
  const auto grid = fft2(gray);
  std::vector<double> acc(static_cast<std::size_t>(bins.bin_count()), 0.0);
  const double norm = 1.0 / static_cast<double>(n * n);
  for (Index i = 0; i < n * n; ++i) {
    const Index b = bins.bin_of[static_cast<std::size_t>(i)];
    if (b >= 0) acc[static_cast<std::size_t>(b)] += std::norm(grid.values[static_cast<std::size_t>(i)]) * norm;
  }
  for (std::size_t b = 0; b < acc.size(); ++b) acc[b] /= static_cast<double>(bins.counts[b]);
  return acc;
}

/// Mean radially averaged power spectrum of a set of [C, N, N] images,
/// computed on luminance.
template <typename Real>
SpectrumProfile radial_power_spectrum(std::span<const Tensor<Real>> images) {
  if (images.empty()) throw ContractError("radial_power_spectrum: empty image set");
  require_rank(images.front(), 3, "radial_power_spectrum");
  const Index n = images.front().dim(1);
  if (images.front().dim(2) != n || !is_power_of_two(n)) {
    throw DimensionError("radial_power_spectrum: images must be square with power-of-two size, got " +
                         to_string(images.front().shape()));
  }
  const RadialBins bins(n);
  SpectrumProfile profile;
  profile.bins.assign(static_cast<std::size_t>(bins.bin_count()), 0.0);
  for (const auto& img : images) {
    if (img.shape() != images.front().shape()) {
      throw DimensionError("radial_power_spectrum: mixed image shapes " + to_string(img.shape()) + " vs " +
                           to_string(images.front().shape()));
    }
    const auto p = radial_profile(luminance(img), bins);
    for (std::size_t b = 0; b < p.size(); ++b) profile.bins[b] += p[b];
  }
  for (auto& v : profile.bins) v /= static_cast<double>(images.size());
  profile.n_images = static_cast<Index>(images.size());
  return profile;
}

template <typename Real>
SpectrumProfile radial_power_spectrum(const std::vector<Tensor<Real>>& images) {
  return radial_power_spectrum(std::span<const Tensor<Real>>(images));
}

/// gap(r) = |model(r) - real(r)| / real(r).
inline GapProfile spectrum_gap(const SpectrumProfile& model, const SpectrumProfile& real) {
  if (model.bins.size() != real.bins.size()) {
    throw ContractError("spectrum_gap: bin counts differ (" + std::to_string(model.bins.size()) + " vs " +
                        std::to_string(real.bins.size()) + ")");
  }
  GapProfile gap;
  gap.bins.resize(real.bins.size());
  for (std::size_t r = 0; r < real.bins.size(); ++r) {
    if (!(real.bins[r] > 0.0)) {
      throw ContractError("spectrum_gap: real profile bin " + std::to_string(r) + " is not positive");
    }
    gap.bins[r] = std::abs(model.bins[r] - real.bins[r]) / real.bins[r];
  }
  return gap;
}

/// Mean gap over the top quartile of radial bins.
inline double top_quartile_mean(const GapProfile& gap) {
  const Index count = static_cast<Index>(gap.bins.size());
  const Index begin = top_quartile_begin(count);
  double acc = 0;
  for (Index r = begin; r < count; ++r) acc += gap.bins[static_cast<std::size_t>(r)];
  return acc / static_cast<double>(count - begin);
}

/// Separable binomial blur of a [C, H, W] image (kernel 3: [1 2 1]/4,
/// kernel 5: [1 4 6 4 1]/16) with mirrored borders.
template <typename Real>
Tensor<Real> gaussian_blur(const Tensor<Real>& image, int kernel) {
  std::vector<double> taps;
  if (kernel == 3) {
    taps = {0.25, 0.5, 0.25};
  } else if (kernel == 5) {
    taps = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  } else {
    throw ContractError("gaussian_blur: unsupported kernel size " + std::to_string(kernel) + " (use 3 or 5)");
  }
  require_rank(image, 3, "gaussian_blur");
  NoGradGuard no_grad;
  const Index c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const auto map = ops::SeparableMap::make(ops::reflect_filter_map(h, taps), ops::reflect_filter_map(w, taps));
  auto out = ops::resample2d(ops::reshape(image, Shape{1, c, h, w}), map);
  return ops::reshape(out, Shape{c, h, w});
}

// ---------------------------------------------------------- differentiable

/// Mean normalized power per radial bin of each [1, N, N] plane of an
/// [B, 1, N, N] tensor: out[b, r] = mean over bin r of |F|^2 / N^2. The
/// backward is first-order only.
template <typename Real>
Tensor<Real> radial_band_energy(const Tensor<Real>& gray) {
  require_rank(gray, 4, "radial_band_energy");
  const Index batch = gray.dim(0), n = gray.dim(2);
  if (gray.dim(1) != 1 || gray.dim(3) != n || !is_power_of_two(n)) {
    throw DimensionError("radial_band_energy: expected [B, 1, N, N] with power-of-two N, got " +
                         to_string(gray.shape()));
  }
  const auto bins = std::make_shared<const RadialBins>(n);
  const Index nb = bins->bin_count();
  std::vector<Real> out(static_cast<std::size_t>(batch * nb));
  auto gd = gray.data();
  for (Index b = 0; b < batch; ++b) {
    std::vector<double> plane(gd.begin() + b * n * n, gd.begin() + (b + 1) * n * n);
    const auto p = radial_profile(Tensor<double>(Shape{n, n}, std::move(plane)), *bins);
    for (Index r = 0; r < nb; ++r) out[static_cast<std::size_t>(b * nb + r)] = static_cast<Real>(p[r]);
  }
  return record_op<Real>(Shape{batch, nb}, std::move(out), "radial_band_energy", {gray},
                         [gray, bins, n, nb, batch](const Tensor<Real>& g, const std::vector<bool>&) {
                           auto xd = gray.data();
                           auto up = g.data();
                           std::vector<Real> dx(static_cast<std::size_t>(gray.numel()));
                           const double norm = 1.0 / static_cast<double>(n * n);
                           for (Index b = 0; b < batch; ++b) {
                             ComplexGrid grid{n, n, {}};
                             grid.values.assign(xd.begin() + b * n * n, xd.begin() + (b + 1) * n * n);
                             fft2_inplace(grid, false);
                             for (Index i = 0; i < n * n; ++i) {
                               const Index r = bins->bin_of[static_cast<std::size_t>(i)];
                               const double c = r < 0 ? 0.0
                                                      : static_cast<double>(up[b * nb + r]) * norm /
                                                            static_cast<double>(bins->counts[static_cast<std::size_t>(r)]);
                               grid.values[static_cast<std::size_t>(i)] *= c;
                             }
                             fft2_inplace(grid, true);
                             for (Index i = 0; i < n * n; ++i)
                               dx[static_cast<std::size_t>(b * n * n + i)] =
                                   static_cast<Real>(2.0 * grid.values[static_cast<std::size_t>(i)].real());
                           }
                           return ops::TensorList<Real>{Tensor<Real>(gray.shape(), std::move(dx))};
                         });
}

// ------------------------------------------------------------------- CSV

namespace detail {

inline void write_csv(const std::string& path, const std::string& value_name, const std::vector<double>& bins) {
  std::ostringstream os;
  os << "bin,frequency," << value_name << '\n';
  const Index n = 2 * (static_cast<Index>(bins.size()) - 1);
  os << std::setprecision(17);
  for (std::size_t r = 0; r < bins.size(); ++r) {
    os << r << ',' << (n > 0 ? static_cast<double>(r) / static_cast<double>(n) : 0.0) << ',' << bins[r] << '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << os.str();
  if (!f) throw IoError("failed writing " + path);
}

inline std::vector<double> read_csv(const std::string& path, const std::string& value_name) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "bin,frequency," + value_name) {
    throw FormatError(path + ": expected header 'bin,frequency," + value_name + "'", 0);
  }
  std::vector<double> bins;
  std::uint64_t offset = line.size() + 1;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string bin, freq, value;
    if (!std::getline(is, bin, ',') || !std::getline(is, freq, ',') || !std::getline(is, value)) {
      throw FormatError(path + ": malformed row '" + line + "'", offset);
    }
    if (std::stoll(bin) != static_cast<long long>(bins.size())) {
      throw FormatError(path + ": bins must be consecutive from 0", offset);
    }
    bins.push_back(std::stod(value));
    offset += line.size() + 1;
  }
  return bins;
}

}  // namespace detail

inline void write_profile_csv(const std::string& path, const SpectrumProfile& p) {
  detail::write_csv(path, "power", p.bins);
}
inline void write_gap_csv(const std::string& path, const GapProfile& g) { detail::write_csv(path, "gap", g.bins); }

inline SpectrumProfile read_profile_csv(const std::string& path) {
  SpectrumProfile p;
  p.bins = detail::read_csv(path, "power");
  return p;
}

}  // namespace swagan::spectral
