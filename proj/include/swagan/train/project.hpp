#pragma once

// Latent projection and interpolation in W space.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "swagan/adam.hpp"
#include "swagan/nn.hpp"
#include "swagan/spectral.hpp"
#include "swagan/train/losses.hpp"

namespace swagan::train {

struct ProjectOptions {
  Index steps = 1000;
  double lr = 0.1;
  double lambda = 0.1;  // weight of the spectral term
};

struct ProjectResult {
  Tensor<float> w;               // [1, latent_dim], best iterate
  Tensor<float> reconstruction;  // [3, R, R]
  double psnr = 0;
  double loss = 0;
};

namespace detail {

/// Differentiable luma of [N, 3, H, W] images as [N, 1, H, W].
inline Tensor<float> luma(const Tensor<float>& images) {
  return ops::conv2d(images, Tensor<float>(Shape{1, 3, 1, 1}, {0.299f, 0.587f, 0.114f}));
}

/// Per-bin weights of the spectral term: 1 / (count * target_energy^2) on
/// the top-quartile radial bins, 0 elsewhere, so the term is the mean
/// squared relative energy error over those bins.
inline Tensor<float> spectral_weights(const Tensor<float>& target_energy) {
  const Index nb = target_energy.dim(1);
  const Index begin = spectral::top_quartile_begin(nb);
  std::vector<float> m(static_cast<std::size_t>(nb), 0.f);
  for (Index r = begin; r < nb; ++r) {
    const double e = std::max(static_cast<double>(target_energy[r]), 1e-8);
    m[static_cast<std::size_t>(r)] = static_cast<float>(1.0 / (static_cast<double>(nb - begin) * e * e));
  }
  return Tensor<float>(Shape{1, nb}, std::move(m));
}

}  // namespace detail

/// Pixel MSE plus lambda times the mean squared relative error of the
/// top-quartile radial band energies (weights from spectral_weights).
inline Tensor<float> projection_loss(const Tensor<float>& image, const Tensor<float>& target,
                                     const Tensor<float>& target_energy, const Tensor<float>& weights, double lambda) {
  auto loss = ops::mean(ops::square(ops::sub(image, target)));
  if (lambda == 0) return loss;
  const auto e = spectral::radial_band_energy(detail::luma(image));
  const auto spec = ops::sum(ops::mul_constant(ops::square(ops::sub(e, target_energy)), weights));
  return ops::add(loss, ops::scale(spec, static_cast<float>(lambda)));
}

/// Adam on w starting from w_avg; returns the iterate with the lowest loss.
/// steps = 0 returns the output at w_avg.
inline ProjectResult project_latent(const TensorDict<float>& g, const nn::GeneratorSpec& spec,
                                    const Tensor<float>& target, const ProjectOptions& o = {}) {
  const Index r = nn::output_resolution(spec);
  if (target.shape() != Shape{3, r, r}) {
    throw DimensionError("project: target " + to_string(target.shape()) + " does not match generator output [3, " +
                         std::to_string(r) + ", " + std::to_string(r) + "]");
  }
  const auto tgt = ops::reshape(target.detach(), {1, 3, r, r});
  Tensor<float> target_energy;
  {
    NoGradGuard no_grad;
    target_energy = spectral::radial_band_energy(detail::luma(tgt));
  }
  const auto weights = detail::spectral_weights(target_energy);
  TensorDict<float> vars;
  auto w0 = ops::reshape(g.at("w_avg").detach(), {1, spec.latent_dim});
  w0.set_requires_grad(true);
  vars.insert("w", w0);
  AdamState<float> state;
  const AdamConfig adam{o.lr, 0.9, 0.999, 1e-8};
  ProjectResult best;
  best.loss = std::numeric_limits<double>::infinity();
  for (Index step = 0; step <= o.steps; ++step) {
    const auto image = nn::synthesis_forward(g, spec, vars.at("w")).image;
    const auto loss = projection_loss(image, tgt, target_energy, weights, o.lambda);
    if (loss[0] < best.loss) {
      best.loss = loss[0];
      best.w = vars.at("w").detach();
      best.reconstruction = ops::reshape(image.detach(), {3, r, r});
    }
    if (step < o.steps) adam_step(vars, backward(loss, vars), state, adam);
  }
  best.psnr = psnr_from_mse(mse(best.reconstruction.data(), target.data()));
  return best;
}

/// Images at w(t) = (1 - t) w_a + t w_b for t = 0, 1/(n-1), ..., 1.
inline std::vector<Tensor<float>> interpolate_latents(const TensorDict<float>& g, const nn::GeneratorSpec& spec,
                                                      const Tensor<float>& w_a, const Tensor<float>& w_b,
                                                      Index n_steps) {
  if (w_a.numel() != spec.latent_dim || w_b.numel() != spec.latent_dim) {
    throw DimensionError("interpolate: latents must have " + std::to_string(spec.latent_dim) + " entries, got " +
                         to_string(w_a.shape()) + " and " + to_string(w_b.shape()));
  }
  if (n_steps < 1) throw ContractError("interpolate: need at least one frame");
  NoGradGuard no_grad;
  const Index r = nn::output_resolution(spec);
  std::vector<Tensor<float>> frames;
  for (Index i = 0; i < n_steps; ++i) {
    const double t = n_steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n_steps - 1);
    std::vector<float> w(static_cast<std::size_t>(spec.latent_dim));
    for (Index j = 0; j < spec.latent_dim; ++j)
      w[static_cast<std::size_t>(j)] = static_cast<float>((1.0 - t) * w_a[j] + t * w_b[j]);
    const auto image = nn::synthesis_forward(g, spec, Tensor<float>(Shape{1, spec.latent_dim}, std::move(w))).image;
    frames.push_back(ops::reshape(image, {3, r, r}));
  }
  return frames;
}

}  // namespace swagan::train
