#pragma once

// First-level orthonormal 2-D Haar transform.
//
// For each 2x2 block [[a, b], [c, d]] of a color channel:
//   LL = (a + b + c + d) / 2     LH = (a + b - c - d) / 2
//   HL = (a - b + c - d) / 2     HH = (a - b - c + d) / 2
// LH carries horizontal structure, HL vertical, HH diagonal. Sub-bands of
// channel c are stored at channels 4c + {0, 1, 2, 3} = {LL, LH, HL, HH}.
// The transform matrix is orthogonal, so iwt2 is both its inverse and its
// adjoint; each op is the other's backward.

#include <string>
#include <vector>

#include "swagan/ops/basic.hpp"
#include "swagan/ops/resample.hpp"

namespace swagan::wavelet {

enum class Band : int { LL = 0, LH = 1, HL = 2, HH = 3 };

inline constexpr const char* band_name(Band b) {
  switch (b) {
    case Band::LL: return "LL";
    case Band::LH: return "LH";
    case Band::HL: return "HL";
    case Band::HH: return "HH";
  }
  return "?";
}

inline constexpr Band kBands[] = {Band::LL, Band::LH, Band::HL, Band::HH};

template <typename Real>
Tensor<Real> iwt2(const Tensor<Real>& decomp);

/// [N, C, 2H, 2W] image -> [N, 4C, H, W] sub-bands.
template <typename Real>
Tensor<Real> dwt2(const Tensor<Real>& image) {
  require_rank(image, 4, "dwt2");
  const Index n = image.dim(0), c = image.dim(1), h2 = image.dim(2), w2 = image.dim(3);
  if (h2 % 2 != 0) throw DimensionError("dwt2: height axis 2 is odd (" + std::to_string(h2) + ")");
  if (w2 % 2 != 0) throw DimensionError("dwt2: width axis 3 is odd (" + std::to_string(w2) + ")");
  const Index h = h2 / 2, w = w2 / 2;
  std::vector<Real> out(static_cast<std::size_t>(image.numel()));
  auto x = image.data();
  const Real half = Real(0.5);
  for (Index nc = 0; nc < n * c; ++nc) {
    const Real* src = x.data() + nc * h2 * w2;
    Real* ll = out.data() + (nc * 4 + 0) * h * w;
    Real* lh = ll + h * w;
    Real* hl = lh + h * w;
    Real* hh = hl + h * w;
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) {
        const Real a = src[(2 * i) * w2 + 2 * j];
        const Real b = src[(2 * i) * w2 + 2 * j + 1];
        const Real cc = src[(2 * i + 1) * w2 + 2 * j];
        const Real d = src[(2 * i + 1) * w2 + 2 * j + 1];
        const Index o = i * w + j;
        ll[o] = (a + b + cc + d) * half;
        lh[o] = (a + b - cc - d) * half;
        hl[o] = (a - b + cc - d) * half;
        hh[o] = (a - b - cc + d) * half;
      }
  }
  return record_op<Real>(Shape{n, 4 * c, h, w}, std::move(out), "dwt2", {image},
                         [](const Tensor<Real>& g, const std::vector<bool>&) {
                           return ops::TensorList<Real>{iwt2(g)};
                         });
}

/// [N, 4C, H, W] sub-bands -> [N, C, 2H, 2W] image.
template <typename Real>
Tensor<Real> iwt2(const Tensor<Real>& decomp) {
  require_rank(decomp, 4, "iwt2");
  const Index n = decomp.dim(0), c4 = decomp.dim(1), h = decomp.dim(2), w = decomp.dim(3);
  if (c4 % 4 != 0) {
    throw DimensionError("iwt2: channel axis 1 has " + std::to_string(c4) + " entries, not divisible by 4");
  }
  const Index c = c4 / 4, h2 = 2 * h, w2 = 2 * w;
  std::vector<Real> out(static_cast<std::size_t>(decomp.numel()));
  auto x = decomp.data();
  const Real half = Real(0.5);
  for (Index nc = 0; nc < n * c; ++nc) {
    const Real* ll = x.data() + (nc * 4 + 0) * h * w;
    const Real* lh = ll + h * w;
    const Real* hl = lh + h * w;
    const Real* hh = hl + h * w;
    Real* dst = out.data() + nc * h2 * w2;
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) {
        const Index o = i * w + j;
        dst[(2 * i) * w2 + 2 * j] = (ll[o] + lh[o] + hl[o] + hh[o]) * half;
        dst[(2 * i) * w2 + 2 * j + 1] = (ll[o] + lh[o] - hl[o] - hh[o]) * half;
        dst[(2 * i + 1) * w2 + 2 * j] = (ll[o] - lh[o] + hl[o] - hh[o]) * half;
        dst[(2 * i + 1) * w2 + 2 * j + 1] = (ll[o] - lh[o] - hl[o] + hh[o]) * half;
      }
  }
  return record_op<Real>(Shape{n, c, h2, w2}, std::move(out), "iwt2", {decomp},
                         [](const Tensor<Real>& g, const std::vector<bool>&) {
                           return ops::TensorList<Real>{dwt2(g)};
                         });
}

/// Decomposition at H x W -> decomposition at 2H x 2W via IWT, bilinear x2, DWT.
template <typename Real>
Tensor<Real> wavelet_upsample(const Tensor<Real>& decomp) {
  return dwt2(ops::upsample2x(iwt2(decomp)));
}

/// Decomposition at 2H x 2W -> decomposition at H x W via IWT, bilinear x1/2, DWT.
template <typename Real>
Tensor<Real> wavelet_downsample(const Tensor<Real>& decomp) {
  return dwt2(ops::downsample2x(iwt2(decomp)));
}

/// Copies one sub-band of every color channel: [N, 4C, H, W] -> [N, C, H, W].
template <typename Real>
Tensor<Real> extract_band(const Tensor<Real>& decomp, Band band) {
  require_rank(decomp, 4, "extract_band");
  if (decomp.dim(1) % 4 != 0) throw DimensionError("extract_band: channel axis 1 not divisible by 4");
  const Index n = decomp.dim(0), c = decomp.dim(1) / 4, hw = decomp.dim(2) * decomp.dim(3);
  std::vector<Real> out(static_cast<std::size_t>(n * c * hw));
  auto x = decomp.data();
  for (Index i = 0; i < n * c; ++i)
    std::copy_n(x.begin() + (i * 4 + static_cast<Index>(band)) * hw, hw, out.begin() + i * hw);
  return Tensor<Real>(Shape{n, c, decomp.dim(2), decomp.dim(3)}, std::move(out));
}

}  // namespace swagan::wavelet
