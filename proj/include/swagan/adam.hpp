#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "swagan/tensor_dict.hpp"

namespace swagan {

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// First/second moment estimates per parameter and the step counter.
template <typename Real>
struct AdamState {
  TensorDict<Real> m;
  TensorDict<Real> v;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of every parameter that has a gradient.
/// Moments are created lazily on the first step.
template <typename Real>
void adam_step(TensorDict<Real>& params, const TensorDict<Real>& grads, AdamState<Real>& state,
               const AdamConfig& cfg) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor<Real>& p = params.at(name);
    if (g.shape() != p.shape()) {
      throw DimensionError("adam_step: gradient of '" + name + "' has shape " + to_string(g.shape()) +
                           ", parameter has " + to_string(p.shape()));
    }
    if (!state.m.contains(name)) {
      state.m.insert(name, Tensor<Real>::zeros(p.shape()));
      state.v.insert(name, Tensor<Real>::zeros(p.shape()));
    }
    auto pd = p.mutable_data();
    auto md = state.m.at(name).mutable_data();
    auto vd = state.v.at(name).mutable_data();
    auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double gi = static_cast<double>(gd[i]);
      const double m = cfg.beta1 * static_cast<double>(md[i]) + (1.0 - cfg.beta1) * gi;
      const double v = cfg.beta2 * static_cast<double>(vd[i]) + (1.0 - cfg.beta2) * gi * gi;
      md[i] = static_cast<Real>(m);
      vd[i] = static_cast<Real>(v);
      const double m_hat = m / c1;
      const double v_hat = v / c2;
      pd[i] = static_cast<Real>(static_cast<double>(pd[i]) - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
}

}  // namespace swagan
