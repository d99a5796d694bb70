#pragma once

// Single-image reconstruction: the generator alone is fitted by Adam to one
// target from one fixed latent. Used to compare how quickly variants pick up
// high-frequency content.

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "swagan/adam.hpp"
#include "swagan/io/file.hpp"
#include "swagan/nn.hpp"
#include "swagan/train/losses.hpp"

namespace swagan::train {

struct OverfitOptions {
  nn::GeneratorVariant variant = nn::GeneratorVariant::SwaganBi;
  std::vector<Index> channels;  // empty: width 8 for every block
  Index latent_dim = 32;
  Index steps = 1000;
  double lr = 2e-3;
  std::uint64_t seed = 0;
  Index eval_interval = 100;
};

struct OverfitRecord {
  Index step = 0;
  double wall_s = 0;
  double loss = 0;
  double best_loss = 0;
  double psnr = 0;
  std::array<double, 4> band_mse{};  // LL, LH, HL, HH
};

struct OverfitResult {
  std::vector<OverfitRecord> records;
  nn::GeneratorSpec spec;
  TensorDict<float> params;
  Tensor<float> best_image;  // [3, R, R]
  double best_loss = std::numeric_limits<double>::infinity();
  Index param_count = 0;
};

inline nn::GeneratorSpec overfit_spec(Index resolution, const OverfitOptions& o) {
  if (resolution < 8 || (resolution & (resolution - 1)) != 0) {
    throw DimensionError("overfit: target side must be a power of two >= 8, got " + std::to_string(resolution));
  }
  nn::GeneratorSpec s;
  s.variant = o.variant;
  s.n_blocks = static_cast<Index>(std::log2(static_cast<double>(resolution))) - 2;
  s.latent_dim = o.latent_dim;
  s.channels = o.channels.empty() ? std::vector<Index>(static_cast<std::size_t>(s.n_blocks), 8) : o.channels;
  nn::validate(s);
  return s;
}

inline void write_overfit_csv(const std::string& path, const std::vector<OverfitRecord>& records) {
  std::ostringstream os;
  os << "step,wall_s,loss,best_loss,psnr,mse_ll,mse_lh,mse_hl,mse_hh\n";
  os.precision(10);
  for (const auto& r : records) {
    os << r.step << ',' << r.wall_s << ',' << r.loss << ',' << r.best_loss << ',' << r.psnr;
    for (double m : r.band_mse) os << ',' << m;
    os << '\n';
  }
  io::atomic_write(path, os.str());
}

/// Fits a fresh generator to target [3, R, R]. Records are taken at step 0,
/// every eval_interval steps and after the last step; the loss at record k
/// is that of the parameters after k updates.
inline OverfitResult train_overfit(const Tensor<float>& target, const OverfitOptions& o,
                                   const TensorDict<float>* initial = nullptr) {
  if (target.rank() != 3 || target.dim(0) != 3 || target.dim(1) != target.dim(2)) {
    throw DimensionError("overfit: target must be [3, R, R], got " + to_string(target.shape()));
  }
  const Index r = target.dim(1);
  OverfitResult res;
  res.spec = overfit_spec(r, o);
  std::mt19937_64 rng(o.seed);
  const std::uint64_t init_seed = rng();  // drawn either way so z does not depend on initial
  res.params = initial ? initial->clone() : nn::build_generator<float>(res.spec, init_seed);
  res.param_count = res.params.trainable_count();
  const auto z = nn::sample_latents<float>(1, res.spec.latent_dim, rng);
  const auto tgt = ops::reshape(target.detach(), {1, 3, r, r});
  AdamState<float> state;
  const AdamConfig adam{o.lr, 0.0, 0.99, 1e-8};
  const auto t0 = std::chrono::steady_clock::now();
  for (Index step = 0; step <= o.steps; ++step) {
    const auto image = nn::generator_forward(res.params, res.spec, z).image;
    const auto loss_t = ops::mean(ops::square(ops::sub(image, tgt)));
    const double loss = loss_t[0];
    if (!std::isfinite(loss)) throw TrainingError("overfit: non-finite loss at step " + std::to_string(step));
    if (loss < res.best_loss) {
      res.best_loss = loss;
      res.best_image = ops::reshape(image.detach(), {3, r, r});
    }
    if (step == o.steps || (o.eval_interval > 0 && step % o.eval_interval == 0)) {
      OverfitRecord rec;
      rec.step = step;
      rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rec.loss = loss;
      rec.best_loss = res.best_loss;
      rec.psnr = psnr_from_mse(loss);
      rec.band_mse = band_mse(image, tgt);
      res.records.push_back(rec);
    }
    if (step < o.steps) adam_step(res.params, backward(loss_t, res.params), state, adam);
  }
  return res;
}

}  // namespace swagan::train
