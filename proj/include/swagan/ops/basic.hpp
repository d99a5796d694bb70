#pragma once

// Elementwise arithmetic, activations, reductions and channel-wise broadcast
// ops. Every backward is written in terms of recorded ops, so gradients can
// themselves be differentiated (needed by the R1 penalty).

#include <cmath>
#include <string>
#include <vector>

#include "swagan/tensor.hpp"

namespace swagan::ops {

template <typename Real>
using TensorList = std::vector<Tensor<Real>>;

// ---------------------------------------------------------------- arithmetic

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return record_op<Real>(a.shape(), std::move(out), "add", {a, b},
                         [](const Tensor<Real>& g, const std::vector<bool>&) { return TensorList<Real>{g, g}; });
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor);

template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "sub");
  std::vector<Real> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  return record_op<Real>(a.shape(), std::move(out), "sub", {a, b},
                         [](const Tensor<Real>& g, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           r[0] = g;
                           if (needs[1]) r[1] = scale(g, Real(-1));
                           return r;
                         });
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  return record_op<Real>(a.shape(), std::move(out), "mul", {a, b},
                         [a, b](const Tensor<Real>& g, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           if (needs[0]) r[0] = mul(g, b);
                           if (needs[1]) r[1] = mul(g, a);
                           return r;
                         });
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return record_op<Real>(a.shape(), std::move(out), "scale", {a},
                         [factor](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{scale(g, factor)};
                         });
}

template <typename Real>
Tensor<Real> neg(const Tensor<Real>& a) {
  return scale(a, Real(-1));
}

template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& a, Real value) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += value;
  return record_op<Real>(a.shape(), std::move(out), "add_scalar", {a},
                         [](const Tensor<Real>& g, const std::vector<bool>&) { return TensorList<Real>{g}; });
}

/// x^p elementwise; the caller guarantees x > 0 for non-integer p.
template <typename Real>
Tensor<Real> pow_scalar(const Tensor<Real>& a, Real p) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = std::pow(v, p);
  return record_op<Real>(a.shape(), std::move(out), "pow_scalar", {a},
                         [a, p](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{mul(g, scale(pow_scalar(a, p - Real(1)), p))};
                         });
}

template <typename Real>
Tensor<Real> square(const Tensor<Real>& a) {
  return mul(a, a);
}

// --------------------------------------------------------------- activations

/// Multiplies by a constant (never differentiated) tensor.
template <typename Real>
Tensor<Real> mul_constant(const Tensor<Real>& a, const Tensor<Real>& constant) {
  require_same_shape(a, constant, "mul_constant");
  std::vector<Real> out(a.data().begin(), a.data().end());
  auto cd = constant.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= cd[i];
  return record_op<Real>(a.shape(), std::move(out), "mul_constant", {a},
                         [constant](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{mul_constant(g, constant)};
                         });
}

/// x for x >= 0, slope * x otherwise. The derivative at 0 is taken as 1.
template <typename Real>
Tensor<Real> leaky_relu(const Tensor<Real>& a, Real slope = Real(0.2)) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  std::vector<Real> mask(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool pos = out[i] >= Real(0);
    mask[i] = pos ? Real(1) : slope;
    if (!pos) out[i] *= slope;
  }
  Tensor<Real> m(a.shape(), std::move(mask));
  return record_op<Real>(a.shape(), std::move(out), "leaky_relu", {a},
                         [m](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{mul_constant(g, m)};
                         });
}

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real>& a) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) {
    if (v >= Real(0)) {
      v = Real(1) / (Real(1) + std::exp(-v));
    } else {
      const Real e = std::exp(v);
      v = e / (Real(1) + e);
    }
  }
  return record_op<Real>(a.shape(), std::move(out), "sigmoid", {a},
                         [a](const Tensor<Real>& g, const std::vector<bool>&) {
                           auto s = sigmoid(a);
                           return TensorList<Real>{mul(g, mul(s, add_scalar(neg(s), Real(1))))};
                         });
}

/// ln(1 + e^x), evaluated without overflow for large |x|.
template <typename Real>
Real softplus_value(Real x) {
  if (x > Real(20)) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

template <typename Real>
Tensor<Real> softplus(const Tensor<Real>& a) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = softplus_value(v);
  return record_op<Real>(a.shape(), std::move(out), "softplus", {a},
                         [a](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{mul(g, sigmoid(a))};
                         });
}

// ---------------------------------------------------------------- reductions

template <typename Real>
Tensor<Real> expand_scalar(const Tensor<Real>& s, const Shape& shape);

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& a) {
  Real acc = 0;
  for (Real v : a.data()) acc += v;
  const Shape in_shape = a.shape();
  return record_op<Real>(Shape{}, {acc}, "sum", {a},
                         [in_shape](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{expand_scalar(g, in_shape)};
                         });
}

template <typename Real>
Tensor<Real> expand_scalar(const Tensor<Real>& s, const Shape& shape) {
  if (s.numel() != 1) throw DimensionError("expand_scalar: input is not a scalar: " + to_string(s.shape()));
  return record_op<Real>(shape, std::vector<Real>(numel(shape), s.data()[0]), "expand_scalar", {s},
                         [](const Tensor<Real>& g, const std::vector<bool>&) { return TensorList<Real>{sum(g)}; });
}

template <typename Real>
Tensor<Real> mean(const Tensor<Real>& a) {
  return scale(sum(a), Real(1) / static_cast<Real>(a.numel()));
}

template <typename Real>
Tensor<Real> expand_last(const Tensor<Real>& a, Index size);

/// Sums over the last axis, removing it.
template <typename Real>
Tensor<Real> sum_last(const Tensor<Real>& a) {
  if (a.rank() == 0) throw DimensionError("sum_last: scalar input");
  const Index inner = a.shape().back();
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  const Index outer = numel(out_shape);
  std::vector<Real> out(static_cast<std::size_t>(outer), Real(0));
  auto d = a.data();
  for (Index o = 0; o < outer; ++o) {
    Real acc = 0;
    for (Index i = 0; i < inner; ++i) acc += d[o * inner + i];
    out[o] = acc;
  }
  return record_op<Real>(out_shape, std::move(out), "sum_last", {a},
                         [inner](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{expand_last(g, inner)};
                         });
}

/// Appends a trailing axis of the given size by repetition.
template <typename Real>
Tensor<Real> expand_last(const Tensor<Real>& a, Index size) {
  Shape out_shape = a.shape();
  out_shape.push_back(size);
  std::vector<Real> out(static_cast<std::size_t>(a.numel() * size));
  auto d = a.data();
  for (Index o = 0; o < a.numel(); ++o) std::fill_n(out.begin() + o * size, size, d[o]);
  return record_op<Real>(out_shape, std::move(out), "expand_last", {a},
                         [](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{sum_last(g)};
                         });
}

template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& a, const Shape& shape) {
  if (numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
  }
  const Shape in_shape = a.shape();
  return record_op<Real>(shape, a.values(), "reshape", {a},
                         [in_shape](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{reshape(g, in_shape)};
                         });
}

// --------------------------------------------- channel-axis (axis 1) helpers

namespace detail {

struct ChannelLayout {
  Index batch;
  Index channels;
  Index inner;
};

template <typename Real>
ChannelLayout channel_layout(const Tensor<Real>& a, const char* op) {
  if (a.rank() < 2) throw DimensionError(std::string(op) + ": need rank >= 2, got " + to_string(a.shape()));
  const Index inner = a.numel() / std::max<Index>(1, a.dim(0) * a.dim(1));
  return {a.dim(0), a.dim(1), a.dim(0) * a.dim(1) == 0 ? 0 : inner};
}

}  // namespace detail

template <typename Real>
Tensor<Real> channel_sum(const Tensor<Real>& a);

template <typename Real>
Tensor<Real> broadcast_channels(const Tensor<Real>& b, const Shape& shape);

/// x[n, c, ...] + b[c].
template <typename Real>
Tensor<Real> add_channel_bias(const Tensor<Real>& x, const Tensor<Real>& b) {
  const auto l = detail::channel_layout(x, "add_channel_bias");
  if (b.rank() != 1 || b.dim(0) != l.channels) {
    throw DimensionError("add_channel_bias: channel axis " + std::to_string(l.channels) + " vs bias " +
                         to_string(b.shape()));
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  auto bd = b.data();
  for (Index n = 0; n < l.batch; ++n)
    for (Index c = 0; c < l.channels; ++c) {
      Real* p = out.data() + (n * l.channels + c) * l.inner;
      for (Index i = 0; i < l.inner; ++i) p[i] += bd[c];
    }
  return record_op<Real>(x.shape(), std::move(out), "add_channel_bias", {x, b},
                         [](const Tensor<Real>& g, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           r[0] = g;
                           if (needs[1]) r[1] = channel_sum(g);
                           return r;
                         });
}

/// Sum over every axis except axis 1.
template <typename Real>
Tensor<Real> channel_sum(const Tensor<Real>& a) {
  const auto l = detail::channel_layout(a, "channel_sum");
  std::vector<Real> out(static_cast<std::size_t>(l.channels), Real(0));
  auto d = a.data();
  for (Index n = 0; n < l.batch; ++n)
    for (Index c = 0; c < l.channels; ++c) {
      const Real* p = d.data() + (n * l.channels + c) * l.inner;
      Real acc = 0;
      for (Index i = 0; i < l.inner; ++i) acc += p[i];
      out[c] += acc;
    }
  const Shape in_shape = a.shape();
  return record_op<Real>(Shape{l.channels}, std::move(out), "channel_sum", {a},
                         [in_shape](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{broadcast_channels(g, in_shape)};
                         });
}

template <typename Real>
Tensor<Real> broadcast_channels(const Tensor<Real>& b, const Shape& shape) {
  return add_channel_bias(Tensor<Real>::zeros(shape), b);
}

template <typename Real>
Tensor<Real> channel_dot(const Tensor<Real>& a, const Tensor<Real>& b);

/// x[n, c, ...] * s[n, c].
template <typename Real>
Tensor<Real> scale_channels(const Tensor<Real>& x, const Tensor<Real>& s) {
  const auto l = detail::channel_layout(x, "scale_channels");
  if (s.shape() != Shape{l.batch, l.channels}) {
    throw DimensionError("scale_channels: scales " + to_string(s.shape()) + " do not match input " +
                         to_string(x.shape()));
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  auto sd = s.data();
  for (Index nc = 0; nc < l.batch * l.channels; ++nc) {
    Real* p = out.data() + nc * l.inner;
    const Real f = sd[nc];
    for (Index i = 0; i < l.inner; ++i) p[i] *= f;
  }
  return record_op<Real>(x.shape(), std::move(out), "scale_channels", {x, s},
                         [x, s](const Tensor<Real>& g, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           if (needs[0]) r[0] = scale_channels(g, s);
                           if (needs[1]) r[1] = channel_dot(g, x);
                           return r;
                         });
}

/// out[n, c] = sum over trailing axes of a[n, c, ...] * b[n, c, ...].
template <typename Real>
Tensor<Real> channel_dot(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "channel_dot");
  const auto l = detail::channel_layout(a, "channel_dot");
  std::vector<Real> out(static_cast<std::size_t>(l.batch * l.channels));
  auto ad = a.data();
  auto bd = b.data();
  for (Index nc = 0; nc < l.batch * l.channels; ++nc) {
    Real acc = 0;
    const Real* pa = ad.data() + nc * l.inner;
    const Real* pb = bd.data() + nc * l.inner;
    for (Index i = 0; i < l.inner; ++i) acc += pa[i] * pb[i];
    out[nc] = acc;
  }
  return record_op<Real>(Shape{l.batch, l.channels}, std::move(out), "channel_dot", {a, b},
                         [a, b](const Tensor<Real>& g, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           if (needs[0]) r[0] = scale_channels(b, g);
                           if (needs[1]) r[1] = scale_channels(a, g);
                           return r;
                         });
}

template <typename Real>
Tensor<Real> sum_batch(const Tensor<Real>& a);

/// Repeats a tensor with leading axis 1 along the batch axis.
template <typename Real>
Tensor<Real> tile_batch(const Tensor<Real>& a, Index batch) {
  if (a.rank() == 0 || a.dim(0) != 1) throw DimensionError("tile_batch: leading axis must be 1, got " + to_string(a.shape()));
  Shape out_shape = a.shape();
  out_shape[0] = batch;
  std::vector<Real> out;
  out.reserve(static_cast<std::size_t>(a.numel() * batch));
  for (Index n = 0; n < batch; ++n) out.insert(out.end(), a.data().begin(), a.data().end());
  return record_op<Real>(out_shape, std::move(out), "tile_batch", {a},
                         [](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{sum_batch(g)};
                         });
}

/// Sums over the batch axis, keeping it with size 1.
template <typename Real>
Tensor<Real> sum_batch(const Tensor<Real>& a) {
  Shape out_shape = a.shape();
  const Index batch = out_shape.at(0);
  out_shape[0] = 1;
  const Index inner = numel(out_shape);
  std::vector<Real> out(static_cast<std::size_t>(inner), Real(0));
  auto d = a.data();
  for (Index n = 0; n < batch; ++n)
    for (Index i = 0; i < inner; ++i) out[i] += d[n * inner + i];
  return record_op<Real>(out_shape, std::move(out), "sum_batch", {a},
                         [batch](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{tile_batch(g, batch)};
                         });
}

/// Samples [begin, end) along the batch axis.
template <typename Real>
Tensor<Real> slice_batch(const Tensor<Real>& a, Index begin, Index end);

template <typename Real>
Tensor<Real> pad_batch(const Tensor<Real>& g, Index begin, Index total) {
  Shape out_shape = g.shape();
  out_shape[0] = total;
  const Index inner = g.numel() / std::max<Index>(1, g.dim(0));
  std::vector<Real> out(static_cast<std::size_t>(numel(out_shape)), Real(0));
  std::copy(g.data().begin(), g.data().end(), out.begin() + begin * inner);
  const Index count = g.dim(0);
  return record_op<Real>(out_shape, std::move(out), "pad_batch", {g},
                         [begin, count](const Tensor<Real>& gg, const std::vector<bool>&) {
                           return TensorList<Real>{slice_batch(gg, begin, begin + count)};
                         });
}

template <typename Real>
Tensor<Real> slice_batch(const Tensor<Real>& a, Index begin, Index end) {
  if (a.rank() == 0 || begin < 0 || end > a.dim(0) || begin >= end) {
    throw DimensionError("slice_batch: bad range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") for " + to_string(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[0] = end - begin;
  const Index inner = a.numel() / a.dim(0);
  std::vector<Real> out(a.data().begin() + begin * inner, a.data().begin() + end * inner);
  const Index total = a.dim(0);
  return record_op<Real>(out_shape, std::move(out), "slice_batch", {a},
                         [begin, total](const Tensor<Real>& g, const std::vector<bool>&) {
                           return TensorList<Real>{pad_batch(g, begin, total)};
                         });
}

// ------------------------------------------------------------ value helpers

template <typename Real>
bool all_finite(const Tensor<Real>& t) {
  for (Real v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename Real>
Real max_abs_diff(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "max_abs_diff");
  Real m = 0;
  for (Index i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename Real>
double sum_squares(const Tensor<Real>& a) {
  double acc = 0;
  for (Real v : a.data()) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

}  // namespace swagan::ops
