#pragma once

// Throughput of full training iterations, in seconds per 1000 real images.

#include <chrono>
#include <random>

#include "swagan/nn/flops.hpp"
#include "swagan/train/gan.hpp"

namespace swagan::train {

struct BenchResult {
  double seconds_per_1k = 0;
  Index images = 0;
  std::uint64_t macs = 0;  // generator + discriminator forward conv MACs per image
};

/// Times D-step + G-step iterations (forwards, backwards and Adam updates,
/// no R1) on random inputs until n_images real images have been consumed.
/// One untimed warm-up iteration runs first.
inline BenchResult bench_throughput(const nn::GeneratorSpec& gspec, const nn::DiscriminatorSpec& dspec, Index batch,
                                    Index n_images, std::uint64_t seed = 0) {
  if (n_images < 1) throw ContractError("bench: n_images must be >= 1");
  if (batch < 1) throw ContractError("bench: batch must be >= 1");
  std::mt19937_64 rng(seed);
  auto g = nn::build_generator<float>(gspec, rng());
  auto d = nn::build_discriminator<float>(dspec, rng());
  AdamState<float> ag, ad;
  const AdamConfig adam;
  const Index r = nn::output_resolution(gspec);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  std::vector<float> v(static_cast<std::size_t>(batch * 3 * r * r));
  for (auto& x : v) x = u(rng);
  const Tensor<float> real(Shape{batch, 3, r, r}, std::move(v));
  gan_step(g, d, ag, ad, gspec, dspec, adam, real, rng, 0.0);

  BenchResult res;
  const auto t0 = std::chrono::steady_clock::now();
  while (res.images < n_images) {
    gan_step(g, d, ag, ad, gspec, dspec, adam, real, rng, 0.0);
    res.images += batch;
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.seconds_per_1k = s * 1000.0 / static_cast<double>(res.images);
  res.macs = nn::flop_count(gspec) + nn::flop_count(dspec);
  return res;
}

struct BenchComparison {
  BenchResult a, b;
  double speedup = 0;     // b time / a time; > 1 when a is faster
  double flop_ratio = 0;  // a MACs / b MACs
};

inline BenchComparison compare_throughput(const nn::GeneratorSpec& ga, const nn::DiscriminatorSpec& da,
                                          const nn::GeneratorSpec& gb, const nn::DiscriminatorSpec& db, Index batch,
                                          Index n_images, std::uint64_t seed = 0) {
  BenchComparison c;
  c.a = bench_throughput(ga, da, batch, n_images, seed);
  c.b = bench_throughput(gb, db, batch, n_images, seed);
  c.speedup = c.b.seconds_per_1k / c.a.seconds_per_1k;
  c.flop_ratio = static_cast<double>(c.a.macs) / static_cast<double>(c.b.macs);
  return c;
}

}  // namespace swagan::train
