#pragma once

#include <string>
#include <vector>

#include "swagan/ops/basic.hpp"

namespace swagan::ops {

/// op(A) * op(B) for rank-2 tensors, op = transpose when the flag is set.
template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b, bool trans_a = false, bool trans_b = false) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const Index m = trans_a ? a.dim(1) : a.dim(0);
  const Index k = trans_a ? a.dim(0) : a.dim(1);
  const Index kb = trans_b ? b.dim(1) : b.dim(0);
  const Index n = trans_b ? b.dim(0) : b.dim(1);
  if (k != kb) {
    throw DimensionError("matmul: contraction axis mismatch, " + to_string(a.shape()) + (trans_a ? "^T" : "") +
                         " x " + to_string(b.shape()) + (trans_b ? "^T" : ""));
  }
  auto ad = a.data();
  auto bd = b.data();
  std::vector<Real> out(static_cast<std::size_t>(m * n), Real(0));
  for (Index i = 0; i < m; ++i) {
    Real* row = out.data() + i * n;
    for (Index p = 0; p < k; ++p) {
      const Real av = trans_a ? ad[p * m + i] : ad[i * k + p];
      if (!trans_b) {
        const Real* br = bd.data() + p * n;
        for (Index j = 0; j < n; ++j) row[j] += av * br[j];
      } else {
        for (Index j = 0; j < n; ++j) row[j] += av * bd[j * k + p];
      }
    }
  }
  return record_op<Real>(Shape{m, n}, std::move(out), "matmul", {a, b},
                         [a, b, trans_a, trans_b](const Tensor<Real>& g, const std::vector<bool>& needs) {
                           TensorList<Real> r(2);
                           if (needs[0]) r[0] = trans_a ? matmul(b, g, trans_b, true) : matmul(g, b, false, !trans_b);
                           if (needs[1]) r[1] = trans_b ? matmul(g, a, true, trans_a) : matmul(a, g, !trans_a, false);
                           return r;
                         });
}

/// Affine map: input [N, Din] x weight [Dout, Din]^T + bias [Dout].
template <typename Real>
Tensor<Real> linear(const Tensor<Real>& input, const Tensor<Real>& weight, const Tensor<Real>& bias) {
  require_rank(input, 2, "linear input");
  require_rank(weight, 2, "linear weight");
  if (input.dim(1) != weight.dim(1)) {
    throw DimensionError("linear: feature axis 1 of input has " + std::to_string(input.dim(1)) +
                         " but weight expects " + std::to_string(weight.dim(1)));
  }
  auto out = matmul(input, weight, false, true);
  if (!bias.defined()) return out;
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    throw DimensionError("linear: bias axis 0 has " + std::to_string(bias.numel()) + " entries, expected " +
                         std::to_string(weight.dim(0)));
  }
  return add_channel_bias(out, bias);
}

}  // namespace swagan::ops
