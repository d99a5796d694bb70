#pragma once

// 2-D cross-correlation and its two adjoints. The three ops are the partial
// derivatives of one trilinear form T(x, g, w), so the backward of each one
// is expressed with the other two and the family is closed under
// differentiation.

#include <algorithm>
#include <string>
#include <vector>

#include "swagan/ops/basic.hpp"
#include "swagan/parallel.hpp"

namespace swagan::ops {

struct ConvGeometry {
  Index in_channels = 0;
  Index out_channels = 0;
  Index in_h = 0, in_w = 0;
  Index out_h = 0, out_w = 0;
  Index kernel = 1;
  Index stride = 1;
  Index padding = 0;

  Index patch() const { return in_channels * kernel * kernel; }
  Index out_pixels() const { return out_h * out_w; }
  Index in_pixels() const { return in_h * in_w; }
  bool pointwise() const { return kernel == 1 && stride == 1 && padding == 0; }
};

namespace detail {

inline constexpr Index kPixelTile = 256;

/// Calls fn(j, src, n) for each run of output pixels in [p0, p0 + count)
/// that lies on one output row: tile positions j.. j+n-1 read input row h
/// starting at column w0 with the geometry's stride, and the valid part of
/// the run is reported separately from the zero padding on either side.
template <typename Fn>
void for_each_row_run(const ConvGeometry& g, Index kh, Index kw, Index p0, Index count, Fn&& fn) {
  Index j = 0;
  while (j < count) {
    const Index p = p0 + j;
    const Index oh = p / g.out_w, ow0 = p % g.out_w;
    const Index n = std::min(count - j, g.out_w - ow0);
    const Index h = oh * g.stride + kh - g.padding;
    if (h < 0 || h >= g.in_h) {
      fn(j, n, Index{-1}, Index{0}, Index{0});
    } else {
      // Valid output columns ow satisfy 0 <= ow * stride + kw - padding < in_w.
      const Index off = kw - g.padding;
      Index lo = off >= 0 ? 0 : (-off + g.stride - 1) / g.stride;
      Index hi = (g.in_w - 1 - off) < 0 ? 0 : (g.in_w - 1 - off) / g.stride + 1;
      hi = std::min(hi, g.out_w);
      lo = std::clamp(lo - ow0, Index{0}, n);
      hi = std::clamp(hi - ow0, lo, n);
      fn(j, n, h * g.in_w + (ow0 + lo) * g.stride + off, lo, hi);
    }
    j += n;
  }
}

/// Patch matrix for output pixels [p0, p0 + count): col[r * count + j].
template <typename Real>
void im2col_tile(const Real* x, const ConvGeometry& g, Index p0, Index count, Real* col) {
  const Index k = g.kernel, s = g.stride;
  for (Index ci = 0; ci < g.in_channels; ++ci)
    for (Index kh = 0; kh < k; ++kh)
      for (Index kw = 0; kw < k; ++kw) {
        Real* row = col + ((ci * k + kh) * k + kw) * count;
        const Real* plane = x + ci * g.in_pixels();
        for_each_row_run(g, kh, kw, p0, count, [&](Index j, Index n, Index src, Index lo, Index hi) {
          Real* dst = row + j;
          if (src < 0) {
            std::fill_n(dst, n, Real(0));
            return;
          }
          std::fill_n(dst, lo, Real(0));
          const Real* in = plane + src;
          if (s == 1) {
            std::copy_n(in, hi - lo, dst + lo);
          } else {
            for (Index t = lo; t < hi; ++t) dst[t] = in[(t - lo) * s];
          }
          std::fill_n(dst + hi, n - hi, Real(0));
        });
      }
}

/// Adds a patch-matrix tile back onto the image it was gathered from.
template <typename Real>
void col2im_tile(const Real* col, const ConvGeometry& g, Index p0, Index count, Real* x) {
  const Index k = g.kernel, s = g.stride;
  for (Index ci = 0; ci < g.in_channels; ++ci)
    for (Index kh = 0; kh < k; ++kh)
      for (Index kw = 0; kw < k; ++kw) {
        const Real* row = col + ((ci * k + kh) * k + kw) * count;
        Real* plane = x + ci * g.in_pixels();
        for_each_row_run(g, kh, kw, p0, count, [&](Index j, Index, Index src, Index lo, Index hi) {
          if (src < 0) return;
          const Real* from = row + j;
          Real* out = plane + src;
          for (Index t = lo; t < hi; ++t) out[(t - lo) * s] += from[t];
        });
      }
}

// y[o, p0 + j] += sum_r w[o, r] * col[r, j], four output channels at a time.
template <typename Real>
void gemm_forward_tile(const Real* w, const Real* col, Index cout, Index patch, Index count, Real* y,
                       Index y_stride, Index p0) {
  Index o = 0;
  for (; o + 4 <= cout; o += 4) {
    Real* y0 = y + o * y_stride + p0;
    Real* y1 = y0 + y_stride;
    Real* y2 = y1 + y_stride;
    Real* y3 = y2 + y_stride;
    for (Index r = 0; r < patch; ++r) {
      const Real a0 = w[o * patch + r], a1 = w[(o + 1) * patch + r];
      const Real a2 = w[(o + 2) * patch + r], a3 = w[(o + 3) * patch + r];
      const Real* cr = col + r * count;
      for (Index j = 0; j < count; ++j) {
        const Real c = cr[j];
        y0[j] += a0 * c;
        y1[j] += a1 * c;
        y2[j] += a2 * c;
        y3[j] += a3 * c;
      }
    }
  }
  for (; o < cout; ++o) {
    Real* yo = y + o * y_stride + p0;
    const Real* wo = w + o * patch;
    for (Index r = 0; r < patch; ++r) {
      const Real a = wo[r];
      const Real* cr = col + r * count;
      for (Index j = 0; j < count; ++j) yo[j] += a * cr[j];
    }
  }
}

// dcol[r, j] = sum_o w[o, r] * g[o, p0 + j]
template <typename Real>
void gemm_input_grad_tile(const Real* w, const Real* grad, Index cout, Index patch, Index count, Index g_stride,
                          Index p0, Real* dcol) {
  std::fill_n(dcol, patch * count, Real(0));
  for (Index o = 0; o < cout; ++o) {
    const Real* go = grad + o * g_stride + p0;
    const Real* wo = w + o * patch;
    for (Index r = 0; r < patch; ++r) {
      const Real a = wo[r];
      Real* dr = dcol + r * count;
      for (Index j = 0; j < count; ++j) dr[j] += a * go[j];
    }
  }
}

// dw[o, r] += sum_j g[o, p0 + j] * col[r, j]. Eight fixed partial sums keep
// the reduction order independent of the vector width.
template <typename Real>
void gemm_weight_grad_tile(const Real* grad, const Real* col, Index cout, Index patch, Index count, Index g_stride,
                           Index p0, Real* dw) {
  constexpr Index kLanes = 8;
  const Index body = count - count % kLanes;
  for (Index o = 0; o < cout; ++o) {
    const Real* go = grad + o * g_stride + p0;
    for (Index r = 0; r < patch; ++r) {
      const Real* cr = col + r * count;
      Real acc[kLanes] = {};
      for (Index j = 0; j < body; j += kLanes)
        for (Index l = 0; l < kLanes; ++l) acc[l] += go[j + l] * cr[j + l];
      Real total = 0;
      for (Index l = 0; l < kLanes; ++l) total += acc[l];
      for (Index j = body; j < count; ++j) total += go[j] * cr[j];
      dw[o * patch + r] += total;
    }
  }
}

/// y[n] = conv(x[n], w) for every sample.
template <typename Real>
void conv_forward_kernel(const Real* x, const Real* w, Index batch, const ConvGeometry& g, Real* y) {
  parallel_for(batch, [&](Index n) {
    const Real* xn = x + n * g.in_channels * g.in_pixels();
    Real* yn = y + n * g.out_channels * g.out_pixels();
    std::fill_n(yn, g.out_channels * g.out_pixels(), Real(0));
    if (g.pointwise()) {
      gemm_forward_tile(w, xn, g.out_channels, g.patch(), g.out_pixels(), yn, g.out_pixels(), Index{0});
      return;
    }
    std::vector<Real> col(static_cast<std::size_t>(g.patch() * kPixelTile));
    for (Index p0 = 0; p0 < g.out_pixels(); p0 += kPixelTile) {
      const Index count = std::min(kPixelTile, g.out_pixels() - p0);
      im2col_tile(xn, g, p0, count, col.data());
      gemm_forward_tile(w, col.data(), g.out_channels, g.patch(), count, yn, g.out_pixels(), p0);
    }
  });
}

/// dx[n] = adjoint of conv(., w) applied to grad[n].
template <typename Real>
void conv_input_grad_kernel(const Real* grad, const Real* w, Index batch, const ConvGeometry& g, Real* dx) {
  parallel_for(batch, [&](Index n) {
    const Real* gn = grad + n * g.out_channels * g.out_pixels();
    Real* dxn = dx + n * g.in_channels * g.in_pixels();
    std::vector<Real> dcol(static_cast<std::size_t>(g.patch() * std::min(kPixelTile, g.out_pixels())));
    if (g.pointwise()) {
      gemm_input_grad_tile(w, gn, g.out_channels, g.patch(), g.out_pixels(), g.out_pixels(), Index{0}, dxn);
      return;
    }
    std::fill_n(dxn, g.in_channels * g.in_pixels(), Real(0));
    for (Index p0 = 0; p0 < g.out_pixels(); p0 += kPixelTile) {
      const Index count = std::min(kPixelTile, g.out_pixels() - p0);
      gemm_input_grad_tile(w, gn, g.out_channels, g.patch(), count, g.out_pixels(), p0, dcol.data());
      col2im_tile(dcol.data(), g, p0, count, dxn);
    }
  });
}

/// dw = sum over samples of the weight gradient; per-sample partials are
/// reduced in sample order so the result is independent of thread count.
template <typename Real>
void conv_weight_grad_kernel(const Real* x, const Real* grad, Index batch, const ConvGeometry& g, Real* dw) {
  const Index wsize = g.out_channels * g.patch();
  std::vector<Real> partial(static_cast<std::size_t>(batch * wsize), Real(0));
  parallel_for(batch, [&](Index n) {
    const Real* xn = x + n * g.in_channels * g.in_pixels();
    const Real* gn = grad + n * g.out_channels * g.out_pixels();
    Real* dwn = partial.data() + n * wsize;
    const Index tile = std::min(kPixelTile, g.out_pixels());
    if (g.pointwise()) {
      gemm_weight_grad_tile(gn, xn, g.out_channels, g.patch(), g.out_pixels(), g.out_pixels(), Index{0}, dwn);
      return;
    }
    std::vector<Real> col(static_cast<std::size_t>(g.patch() * tile));
    for (Index p0 = 0; p0 < g.out_pixels(); p0 += kPixelTile) {
      const Index count = std::min(kPixelTile, g.out_pixels() - p0);
      im2col_tile(xn, g, p0, count, col.data());
      gemm_weight_grad_tile(gn, col.data(), g.out_channels, g.patch(), count, g.out_pixels(), p0, dwn);
    }
  });
  std::fill_n(dw, wsize, Real(0));
  for (Index n = 0; n < batch; ++n)
    for (Index i = 0; i < wsize; ++i) dw[i] += partial[n * wsize + i];
}

}  // namespace detail

template <typename Real>
Tensor<Real> conv2d_input_grad(const Tensor<Real>& grad, const Tensor<Real>& weight, const ConvGeometry& g);
template <typename Real>
Tensor<Real> conv2d_weight_grad(const Tensor<Real>& x, const Tensor<Real>& grad, const ConvGeometry& g);

template <typename Real>
Tensor<Real> conv2d_apply(const Tensor<Real>& x, const Tensor<Real>& weight, const ConvGeometry& g) {
  const Index batch = x.dim(0);
  std::vector<Real> out(static_cast<std::size_t>(batch * g.out_channels * g.out_pixels()));
  detail::conv_forward_kernel(x.data().data(), weight.data().data(), batch, g, out.data());
  return record_op<Real>(Shape{batch, g.out_channels, g.out_h, g.out_w}, std::move(out), "conv2d", {x, weight},
                         [x, weight, g](const Tensor<Real>& grad, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           if (needs[0]) r[0] = conv2d_input_grad(grad, weight, g);
                           if (needs[1]) r[1] = conv2d_weight_grad(x, grad, g);
                           return r;
                         });
}

template <typename Real>
Tensor<Real> conv2d_input_grad(const Tensor<Real>& grad, const Tensor<Real>& weight, const ConvGeometry& g) {
  const Index batch = grad.dim(0);
  std::vector<Real> out(static_cast<std::size_t>(batch * g.in_channels * g.in_pixels()));
  detail::conv_input_grad_kernel(grad.data().data(), weight.data().data(), batch, g, out.data());
  return record_op<Real>(Shape{batch, g.in_channels, g.in_h, g.in_w}, std::move(out), "conv2d_input_grad",
                         {grad, weight},
                         [grad, weight, g](const Tensor<Real>& up, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           if (needs[0]) r[0] = conv2d_apply(up, weight, g);
                           if (needs[1]) r[1] = conv2d_weight_grad(up, grad, g);
                           return r;
                         });
}

template <typename Real>
Tensor<Real> conv2d_weight_grad(const Tensor<Real>& x, const Tensor<Real>& grad, const ConvGeometry& g) {
  const Index batch = x.dim(0);
  std::vector<Real> out(static_cast<std::size_t>(g.out_channels * g.patch()));
  detail::conv_weight_grad_kernel(x.data().data(), grad.data().data(), batch, g, out.data());
  return record_op<Real>(Shape{g.out_channels, g.in_channels, g.kernel, g.kernel}, std::move(out),
                         "conv2d_weight_grad", {x, grad},
                         [x, grad, g](const Tensor<Real>& up, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           if (needs[0]) r[0] = conv2d_input_grad(grad, up, g);
                           if (needs[1]) r[1] = conv2d_apply(x, up, g);
                           return r;
                         });
}

/// Shape checks and output geometry for conv2d(input, weight, stride, padding).
template <typename Real>
ConvGeometry conv_geometry(const Tensor<Real>& input, const Tensor<Real>& weight, Index stride, Index padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  if (weight.dim(2) != weight.dim(3)) {
    throw DimensionError("conv2d: kernel axes 2 and 3 differ: " + to_string(weight.shape()));
  }
  if (input.dim(1) != weight.dim(1)) {
    throw DimensionError("conv2d: channel axis 1 of input has " + std::to_string(input.dim(1)) +
                         " but weight expects " + std::to_string(weight.dim(1)));
  }
  if (stride < 1 || padding < 0) throw ContractError("conv2d: stride must be >= 1 and padding >= 0");
  ConvGeometry g;
  g.in_channels = input.dim(1);
  g.out_channels = weight.dim(0);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.kernel = weight.dim(2);
  g.stride = stride;
  g.padding = padding;
  if (g.in_h + 2 * padding < g.kernel) throw DimensionError("conv2d: height axis 2 smaller than kernel");
  if (g.in_w + 2 * padding < g.kernel) throw DimensionError("conv2d: width axis 3 smaller than kernel");
  g.out_h = (g.in_h + 2 * padding - g.kernel) / stride + 1;
  g.out_w = (g.in_w + 2 * padding - g.kernel) / stride + 1;
  return g;
}

/// Cross-correlation of [N, Cin, H, W] with [Cout, Cin, k, k] plus a per-output-channel bias.
template <typename Real>
Tensor<Real> conv2d(const Tensor<Real>& input, const Tensor<Real>& weight, const Tensor<Real>& bias, Index stride = 1,
                    Index padding = -1) {
  if (padding < 0) padding = weight.rank() == 4 ? weight.dim(2) / 2 : 0;
  const ConvGeometry g = conv_geometry(input, weight, stride, padding);
  auto out = conv2d_apply(input, weight, g);
  if (!bias.defined()) return out;
  if (bias.rank() != 1 || bias.dim(0) != g.out_channels) {
    throw DimensionError("conv2d: bias axis 0 has " + std::to_string(bias.numel()) + " entries, expected " +
                         std::to_string(g.out_channels));
  }
  return add_channel_bias(out, bias);
}

template <typename Real>
Tensor<Real> conv2d(const Tensor<Real>& input, const Tensor<Real>& weight, Index stride = 1, Index padding = -1) {
  return conv2d(input, weight, Tensor<Real>{}, stride, padding);
}

}  // namespace swagan::ops
