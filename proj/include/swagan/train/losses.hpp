#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "swagan/nn/discriminator.hpp"
#include "swagan/wavelet.hpp"

namespace swagan::train {

template <typename Real>
struct GanLosses {
  Tensor<Real> g_loss;
  Tensor<Real> d_loss;
};

/// Non-saturating logistic losses:
///   g = mean softplus(-d_fake), d = mean softplus(d_fake) + mean softplus(-d_real).
template <typename Real>
GanLosses<Real> gan_losses(const Tensor<Real>& d_real, const Tensor<Real>& d_fake) {
  if (!ops::all_finite(d_real) || !ops::all_finite(d_fake)) throw ContractError("gan_losses: non-finite scores");
  return {ops::mean(ops::softplus(ops::neg(d_fake))),
          ops::add(ops::mean(ops::softplus(d_fake)), ops::mean(ops::softplus(ops::neg(d_real))))};
}

/// (gamma / 2) * mean over the batch of |grad_x D(x)|^2 at the real images.
/// The result stays differentiable with respect to the parameters of D.
template <typename Real>
Tensor<Real> r1_penalty(const std::function<Tensor<Real>(const Tensor<Real>&)>& disc, const Tensor<Real>& real,
                        double gamma) {
  auto x = real.detach();
  x.set_requires_grad(true);
  const auto scores = disc(x);
  const auto g = grad(ops::sum(scores), x, true);
  return ops::scale(ops::sum(ops::square(g)), static_cast<Real>(gamma / 2.0 / static_cast<double>(real.dim(0))));
}

template <typename Real>
Tensor<Real> r1_penalty(const nn::NetworkParams<Real>& d_params, const nn::DiscriminatorSpec& spec,
                        const Tensor<Real>& real, double gamma) {
  return r1_penalty<Real>([&](const Tensor<Real>& x) { return nn::discriminator_forward(d_params, spec, x); }, real,
                          gamma);
}

/// Mean over the batch of |grad_x D(x)|^2, without a graph.
template <typename Real>
double mean_grad_norm_sq(const nn::NetworkParams<Real>& d_params, const nn::DiscriminatorSpec& spec,
                         const Tensor<Real>& real) {
  auto x = real.detach();
  x.set_requires_grad(true);
  const auto g = grad(ops::sum(nn::discriminator_forward(d_params, spec, x)), x);
  return ops::sum_squares(g) / static_cast<double>(real.dim(0));
}

inline double mse(std::span<const float> a, std::span<const float> b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

/// PSNR of images in [-1, 1] (peak-to-peak 2); infinite for an exact match.
inline double psnr_from_mse(double m) {
  return m <= 0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(4.0 / m);
}

/// Mean squared error of each Haar band (LL, LH, HL, HH) between two
/// [N, 3, H, W] images.
template <typename Real>
std::array<double, 4> band_mse(const Tensor<Real>& a, const Tensor<Real>& b) {
  NoGradGuard no_grad;
  const auto diff = wavelet::dwt2(ops::sub(a.detach(), b.detach()));
  std::array<double, 4> out{};
  for (auto band : wavelet::kBands) {
    const auto t = wavelet::extract_band(diff, band);
    out[static_cast<std::size_t>(band)] = ops::sum_squares(t) / static_cast<double>(t.numel());
  }
  return out;
}

}  // namespace swagan::train
