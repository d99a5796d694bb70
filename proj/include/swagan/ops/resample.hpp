#pragma once

// Separable linear resampling of [N, C, H, W] tensors: bilinear resize,
// bicubic resize and binomial blur are all expressed as a pair of sparse 1-D
// maps applied along height and width. The backward of a map is its adjoint,
// so the op is closed under differentiation.

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "swagan/ops/basic.hpp"
#include "swagan/parallel.hpp"

namespace swagan::ops {

/// Sparse linear map from in_size samples to out_size samples.
struct LinearMap1D {
  Index in_size = 0;
  Index out_size = 0;
  /// taps[o] lists (input index, weight) pairs in fixed order.
  std::vector<std::vector<std::pair<Index, double>>> taps;

  LinearMap1D transposed() const {
    LinearMap1D t;
    t.in_size = out_size;
    t.out_size = in_size;
    t.taps.resize(static_cast<std::size_t>(in_size));
    for (Index o = 0; o < out_size; ++o)
      for (const auto& [i, w] : taps[o]) t.taps[i].emplace_back(o, w);
    return t;
  }
};

/// Height and width maps together with their adjoints.
struct SeparableMap {
  std::shared_ptr<const LinearMap1D> rows;  // acts on the height axis
  std::shared_ptr<const LinearMap1D> cols;  // acts on the width axis
  std::shared_ptr<const LinearMap1D> rows_adjoint;
  std::shared_ptr<const LinearMap1D> cols_adjoint;

  static SeparableMap make(LinearMap1D rows, LinearMap1D cols) {
    SeparableMap m;
    m.rows_adjoint = std::make_shared<const LinearMap1D>(rows.transposed());
    m.cols_adjoint = std::make_shared<const LinearMap1D>(cols.transposed());
    m.rows = std::make_shared<const LinearMap1D>(std::move(rows));
    m.cols = std::make_shared<const LinearMap1D>(std::move(cols));
    return m;
  }

  SeparableMap adjoint() const { return SeparableMap{rows_adjoint, cols_adjoint, rows, cols}; }
};

/// Bilinear interpolation weights with half-pixel centers: output sample i
/// reads input coordinate (i + 0.5) / factor - 0.5, clamped to the border.
inline LinearMap1D bilinear_map(Index in_size, Index out_size) {
  LinearMap1D m;
  m.in_size = in_size;
  m.out_size = out_size;
  m.taps.resize(static_cast<std::size_t>(out_size));
  const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (Index o = 0; o < out_size; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const Index i0 = static_cast<Index>(std::floor(src));
    const Index i1 = std::min(i0 + 1, in_size - 1);
    const double t = src - static_cast<double>(i0);
    if (i1 == i0 || t == 0.0) {
      m.taps[o].emplace_back(i0, 1.0);
    } else {
      m.taps[o].emplace_back(i0, 1.0 - t);
      m.taps[o].emplace_back(i1, t);
    }
  }
  return m;
}

/// Cubic convolution (a = -0.75) with half-pixel centers and clamped borders.
inline LinearMap1D bicubic_map(Index in_size, Index out_size) {
  constexpr double a = -0.75;
  auto cubic = [](double x) {
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
  };
  LinearMap1D m;
  m.in_size = in_size;
  m.out_size = out_size;
  m.taps.resize(static_cast<std::size_t>(out_size));
  const double ratio = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (Index o = 0; o < out_size; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    const Index base = static_cast<Index>(std::floor(src));
    const double t = src - static_cast<double>(base);
    std::vector<std::pair<Index, double>> merged;
    for (Index k = -1; k <= 2; ++k) {
      const Index idx = std::clamp<Index>(base + k, 0, in_size - 1);
      const double w = cubic(static_cast<double>(k) - t);
      auto it = std::find_if(merged.begin(), merged.end(), [idx](const auto& p) { return p.first == idx; });
      if (it == merged.end()) {
        merged.emplace_back(idx, w);
      } else {
        it->second += w;
      }
    }
    m.taps[o] = std::move(merged);
  }
  return m;
}

/// Same-size convolution with a symmetric 1-D kernel, mirrored at the
/// borders without repeating the edge sample (… 2 1 | 0 1 2 … ).
inline LinearMap1D reflect_filter_map(Index size, const std::vector<double>& kernel) {
  LinearMap1D m;
  m.in_size = size;
  m.out_size = size;
  m.taps.resize(static_cast<std::size_t>(size));
  const Index radius = static_cast<Index>(kernel.size() / 2);
  auto reflect = [size](Index i) {
    if (size == 1) return Index{0};
    const Index period = 2 * (size - 1);
    i = ((i % period) + period) % period;
    return i < size ? i : period - i;
  };
  for (Index o = 0; o < size; ++o) {
    std::vector<std::pair<Index, double>> merged;
    for (Index t = 0; t < static_cast<Index>(kernel.size()); ++t) {
      const Index idx = reflect(o + t - radius);
      auto it = std::find_if(merged.begin(), merged.end(), [idx](const auto& p) { return p.first == idx; });
      if (it == merged.end()) {
        merged.emplace_back(idx, kernel[static_cast<std::size_t>(t)]);
      } else {
        it->second += kernel[static_cast<std::size_t>(t)];
      }
    }
    m.taps[o] = std::move(merged);
  }
  return m;
}

namespace detail {

template <typename Real>
void apply_separable(const Real* x, Index planes, const LinearMap1D& rows, const LinearMap1D& cols, Real* out) {
  const Index in_h = rows.in_size, in_w = cols.in_size;
  const Index out_h = rows.out_size, out_w = cols.out_size;
  parallel_for(planes, [&](Index p) {
    const Real* src = x + p * in_h * in_w;
    Real* dst = out + p * out_h * out_w;
    std::vector<Real> tmp(static_cast<std::size_t>(in_h * out_w));
    for (Index h = 0; h < in_h; ++h) {
      const Real* srow = src + h * in_w;
      Real* trow = tmp.data() + h * out_w;
      for (Index o = 0; o < out_w; ++o) {
        Real acc = 0;
        for (const auto& [i, w] : cols.taps[o]) acc += static_cast<Real>(w) * srow[i];
        trow[o] = acc;
      }
    }
    for (Index o = 0; o < out_h; ++o) {
      Real* drow = dst + o * out_w;
      std::fill_n(drow, out_w, Real(0));
      for (const auto& [i, w] : rows.taps[o]) {
        const Real wr = static_cast<Real>(w);
        const Real* trow = tmp.data() + i * out_w;
        for (Index c = 0; c < out_w; ++c) drow[c] += wr * trow[c];
      }
    }
  });
}

}  // namespace detail

/// Applies a separable map to every [H, W] plane of an [N, C, H, W] tensor.
template <typename Real>
Tensor<Real> resample2d(const Tensor<Real>& x, const SeparableMap& map) {
  require_rank(x, 4, "resample2d");
  if (x.dim(2) != map.rows->in_size || x.dim(3) != map.cols->in_size) {
    throw DimensionError("resample2d: spatial axes " + to_string(x.shape()) + " do not match map input " +
                         std::to_string(map.rows->in_size) + "x" + std::to_string(map.cols->in_size));
  }
  const Index planes = x.dim(0) * x.dim(1);
  Shape out_shape{x.dim(0), x.dim(1), map.rows->out_size, map.cols->out_size};
  std::vector<Real> out(static_cast<std::size_t>(numel(out_shape)));
  detail::apply_separable(x.data().data(), planes, *map.rows, *map.cols, out.data());
  return record_op<Real>(std::move(out_shape), std::move(out), "resample2d", {x},
                         [map](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{resample2d(g, map.adjoint())};
                         });
}

/// Resampling factor accepted by bilinear_resize.
enum class ResizeFactor { Double, Half };

template <typename Real>
Tensor<Real> bilinear_resize(const Tensor<Real>& x, ResizeFactor factor) {
  require_rank(x, 4, "bilinear_resize");
  const Index h = x.dim(2), w = x.dim(3);
  if (factor == ResizeFactor::Half && (h % 2 != 0 || w % 2 != 0)) {
    throw DimensionError("bilinear_resize: factor 1/2 needs even height (axis 2) and width (axis 3), got " +
                         to_string(x.shape()));
  }
  const Index oh = factor == ResizeFactor::Double ? 2 * h : h / 2;
  const Index ow = factor == ResizeFactor::Double ? 2 * w : w / 2;
  return resample2d(x, SeparableMap::make(bilinear_map(h, oh), bilinear_map(w, ow)));
}

template <typename Real>
Tensor<Real> upsample2x(const Tensor<Real>& x) {
  return bilinear_resize(x, ResizeFactor::Double);
}

template <typename Real>
Tensor<Real> downsample2x(const Tensor<Real>& x) {
  return bilinear_resize(x, ResizeFactor::Half);
}

template <typename Real>
Tensor<Real> bicubic_resize(const Tensor<Real>& x, Index out_h, Index out_w) {
  require_rank(x, 4, "bicubic_resize");
  return resample2d(x, SeparableMap::make(bicubic_map(x.dim(2), out_h), bicubic_map(x.dim(3), out_w)));
}

}  // namespace swagan::ops
