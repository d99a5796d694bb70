#pragma once

// Alternating D-step / G-step training of a generator/discriminator pair
// with Adam, lazy R1 and an EMA of the mapping outputs. Everything random is
// drawn from generators seeded by the config seed, so in single-threaded
// mode a config reproduces its checkpoint bit for bit.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "swagan/adam.hpp"
#include "swagan/io/checkpoint.hpp"
#include "swagan/io/dataset.hpp"
#include "swagan/log.hpp"
#include "swagan/nn.hpp"
#include "swagan/spectral.hpp"
#include "swagan/train/config.hpp"
#include "swagan/train/losses.hpp"

namespace swagan::train {

inline constexpr double kWAvgDecay = 0.995;

struct EvalRecord {
  Index step = 0;
  Index images_seen = 0;
  double wall_s = 0;
  double g_loss = 0;
  double d_loss = 0;
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double gap_topq = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
  std::vector<EvalRecord> records;
};

inline void write_report_csv(const std::string& path, const ExperimentReport& r) {
  std::ostringstream os;
  os << "step,images_seen,wall_s,g_loss,d_loss,psnr,gap_topq\n" << std::setprecision(10);
  for (const auto& e : r.records)
    os << e.step << ',' << e.images_seen << ',' << e.wall_s << ',' << e.g_loss << ',' << e.d_loss << ',' << e.psnr
       << ',' << e.gap_topq << '\n';
  io::atomic_write(path, os.str());
}

/// Networks rebuilt from a checkpoint.
struct Model {
  TrainConfig config;
  TensorDict<float> g;
  TensorDict<float> d;
};

namespace detail {

inline void put_prefixed(TensorDict<float>& out, const std::string& prefix, const TensorDict<float>& src) {
  for (const auto& [name, t] : src) out.insert(prefix + name, t.detach());
}

inline void put_adam(TensorDict<float>& out, const std::string& prefix, const AdamState<float>& s) {
  put_prefixed(out, prefix + "m.", s.m);
  put_prefixed(out, prefix + "v.", s.v);
  out.insert(prefix + "step", Tensor<float>::scalar(static_cast<float>(s.step)));
}

/// Marks every network tensor except the running average as trainable.
inline void mark_trainable(TensorDict<float>& p) {
  for (auto& [name, t] : p) t.set_requires_grad(name != "w_avg");
}

inline Tensor<float> stack(const std::vector<Tensor<float>>& images, const std::vector<Index>& idx) {
  const auto& first = images.at(0);
  const Index per = first.numel();
  std::vector<float> v(static_cast<std::size_t>(per) * idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& src = images.at(static_cast<std::size_t>(idx[i])).values();
    std::copy(src.begin(), src.end(), v.begin() + static_cast<std::ptrdiff_t>(i) * per);
  }
  return Tensor<float>(Shape{static_cast<Index>(idx.size()), first.dim(0), first.dim(1), first.dim(2)}, std::move(v));
}

inline std::vector<Tensor<float>> unstack(const Tensor<float>& batch) {
  std::vector<Tensor<float>> out;
  for (Index i = 0; i < batch.dim(0); ++i)
    out.push_back(ops::reshape(ops::slice_batch(batch, i, i + 1).detach(), {batch.dim(1), batch.dim(2), batch.dim(3)}));
  return out;
}

}  // namespace detail

inline io::Checkpoint make_checkpoint(const TrainConfig& c, const TensorDict<float>& g, const TensorDict<float>& d,
                                      const AdamState<float>* adam_g = nullptr,
                                      const AdamState<float>* adam_d = nullptr) {
  io::Checkpoint ck;
  ck.config = to_text(c);
  detail::put_prefixed(ck.tensors, "g.", g);
  detail::put_prefixed(ck.tensors, "d.", d);
  if (adam_g) detail::put_adam(ck.tensors, "adam.g.", *adam_g);
  if (adam_d) detail::put_adam(ck.tensors, "adam.d.", *adam_d);
  return ck;
}

/// Rebuilds both networks and checks that every expected tensor is present
/// with the expected shape.
inline Model model_from_checkpoint(const io::Checkpoint& ck) {
  Model m;
  m.config = parse_config(ck.config);
  const auto g_ref = nn::build_generator<float>(m.config.generator, 0);
  const auto d_ref = nn::build_discriminator<float>(m.config.discriminator, 0);
  auto take = [&](const TensorDict<float>& ref, const std::string& prefix, TensorDict<float>& out) {
    for (const auto& [name, t] : ref) {
      const auto key = prefix + name;
      if (!ck.tensors.contains(key)) throw FormatError("checkpoint lacks tensor '" + key + "'", 0);
      const auto& stored = ck.tensors.at(key);
      if (stored.shape() != t.shape()) {
        throw FormatError("checkpoint tensor '" + key + "' has shape " + to_string(stored.shape()) + ", expected " +
                          to_string(t.shape()), 0);
      }
      out.insert(name, stored.detach());
    }
    detail::mark_trainable(out);
  };
  take(g_ref, "g.", m.g);
  take(d_ref, "d.", m.d);
  return m;
}

inline Model load_model(const std::string& path) { return model_from_checkpoint(io::load_checkpoint(path)); }

/// n images [3, R, R] from seeded latents, generated in chunks.
inline std::vector<Tensor<float>> sample_images(const TensorDict<float>& g, const nn::GeneratorSpec& spec, Index n,
                                                double psi, std::mt19937_64& rng) {
  NoGradGuard no_grad;
  std::vector<Tensor<float>> out;
  for (Index done = 0; done < n;) {
    const Index chunk = std::min<Index>(8, n - done);
    const auto z = nn::sample_latents<float>(chunk, spec.latent_dim, rng);
    for (auto& img : detail::unstack(nn::generator_forward(g, spec, z, psi).image)) out.push_back(std::move(img));
    done += chunk;
  }
  return out;
}

/// Writes images side by side into one PNG.
inline void save_strip(const std::string& path, const std::vector<Tensor<float>>& images) {
  const Index h = images.at(0).dim(1), w = images.at(0).dim(2), n = static_cast<Index>(images.size());
  std::vector<float> v(static_cast<std::size_t>(3 * h * w * n));
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < 3; ++c)
      for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
          v[static_cast<std::size_t>((c * h + y) * w * n + i * w + x)] = images[static_cast<std::size_t>(i)][(c * h + y) * w + x];
  io::save_png(path, Tensor<float>(Shape{3, h, w * n}, std::move(v)));
}

struct TrainHooks {
  /// Called before every step with (step, g, d); tests use it to inject faults.
  std::function<void(Index, TensorDict<float>&, TensorDict<float>&)> before_step;
  /// Write sample strips, the report and the checkpoint under out_dir.
  bool write_files = true;
};

struct TrainResult {
  io::Checkpoint checkpoint;
  ExperimentReport report;
};

/// Top-quartile spectrum gap of generated samples against a real profile.
inline double sample_gap(const TensorDict<float>& g, const nn::GeneratorSpec& spec, Index n, double psi,
                         std::uint64_t seed, const spectral::SpectrumProfile& real,
                         std::vector<Tensor<float>>* samples = nullptr) {
  std::mt19937_64 rng(seed);
  auto images = sample_images(g, spec, n, psi, rng);
  const double gap = spectral::top_quartile_mean(spectral::spectrum_gap(spectral::radial_power_spectrum(images), real));
  if (samples) *samples = std::move(images);
  return gap;
}

struct StepOutcome {
  double d_loss = 0;
  double g_loss = 0;
  Tensor<float> w;      // mapping outputs of the generator step
  std::string failure;  // non-empty when a loss or score was not finite
};

/// One training iteration: a discriminator update on real vs freshly
/// generated images (plus r1_weight * R1 when r1_weight > 0, where
/// r1_weight already contains gamma), then a generator update.
inline StepOutcome gan_step(TensorDict<float>& g, TensorDict<float>& d, AdamState<float>& adam_g,
                            AdamState<float>& adam_d, const nn::GeneratorSpec& gspec,
                            const nn::DiscriminatorSpec& dspec, const AdamConfig& adam, const Tensor<float>& real,
                            std::mt19937_64& rng, double r1_weight) {
  StepOutcome out;
  const Index batch = real.dim(0);
  Tensor<float> fake;
  {
    NoGradGuard no_grad;
    fake = nn::generator_forward(g, gspec, nn::sample_latents<float>(batch, gspec.latent_dim, rng)).image;
  }
  const auto d_real = nn::discriminator_forward(d, dspec, real);
  const auto d_fake = nn::discriminator_forward(d, dspec, fake);
  if (!ops::all_finite(d_real) || !ops::all_finite(d_fake)) {
    out.failure = "discriminator score";
    return out;
  }
  const auto losses = gan_losses(d_real, d_fake);
  auto d_total = losses.d_loss;
  if (r1_weight > 0) d_total = ops::add(d_total, r1_penalty(d, dspec, real, r1_weight));
  out.d_loss = losses.d_loss[0];
  if (!std::isfinite(d_total[0])) {
    out.failure = "discriminator loss";
    return out;
  }
  adam_step(d, backward(d_total, d), adam_d, adam);

  const auto z = nn::sample_latents<float>(batch, gspec.latent_dim, rng);
  out.w = nn::mapping_forward(g, gspec, z);
  const auto scores = nn::discriminator_forward(d, dspec, nn::synthesis_forward(g, gspec, out.w).image);
  if (!ops::all_finite(scores)) {
    out.failure = "discriminator score";
    return out;
  }
  const auto g_loss = ops::mean(ops::softplus(ops::neg(scores)));
  out.g_loss = g_loss[0];
  adam_step(g, backward(g_loss, g), adam_g, adam);
  return out;
}

inline TrainResult train_gan(const TrainConfig& config, const TrainHooks& hooks = {}) {
  namespace fs = std::filesystem;
  const auto& gspec = config.generator;
  const auto& dspec = config.discriminator;
  const auto data = io::load_dataset(io::parse_dataset(config.dataset, config.resolution));
  if (data.empty()) throw ContractError("training dataset is empty");
  const auto real_profile = spectral::radial_power_spectrum(data);

  std::mt19937_64 rng(config.seed);
  auto g = nn::build_generator<float>(gspec, rng());
  auto d = nn::build_discriminator<float>(dspec, rng());
  const std::uint64_t eval_seed = rng();
  AdamState<float> adam_g, adam_d;
  const AdamConfig adam{config.lr, config.beta1, config.beta2, 1e-8};
  std::uniform_int_distribution<Index> pick(0, static_cast<Index>(data.size()) - 1);
  const Index batch = config.batch;

  auto last_good = make_checkpoint(config, g, d, &adam_g, &adam_d);
  TrainResult result;
  Index images_seen = 0;
  const auto t0 = std::chrono::steady_clock::now();
  if (hooks.write_files) fs::create_directories(config.out_dir);

  auto abort_with = [&](Index step, const std::string& what) {
    const auto path = (fs::path(config.out_dir) / "last_good.swgk").string();
    io::save_checkpoint(path, last_good);
    throw TrainingError("non-finite " + what + " at step " + std::to_string(step + 1) +
                        "; last good checkpoint written to " + path);
  };

  for (Index step = 0; step < config.steps; ++step) {
    if (hooks.before_step) hooks.before_step(step, g, d);

    std::vector<Index> idx(static_cast<std::size_t>(batch));
    for (auto& i : idx) i = pick(rng);
    const double r1_weight = config.gamma > 0 && step % config.r1_interval == 0
                                 ? config.gamma * static_cast<double>(config.r1_interval)
                                 : 0.0;
    const auto out = gan_step(g, d, adam_g, adam_d, gspec, dspec, adam, detail::stack(data, idx), rng, r1_weight);
    if (!out.failure.empty()) abort_with(step, out.failure);
    images_seen += batch;
    const double d_loss = out.d_loss, g_loss = out.g_loss;
    const auto& w = out.w;

    // Running average of the mapping outputs.
    {
      auto avg = g.at("w_avg").mutable_data();
      const auto wd = w.data();
      for (Index j = 0; j < gspec.latent_dim; ++j) {
        double m = 0;
        for (Index b = 0; b < batch; ++b) m += wd[b * gspec.latent_dim + j];
        m /= static_cast<double>(batch);
        avg[j] = static_cast<float>(kWAvgDecay * avg[j] + (1.0 - kWAvgDecay) * m);
      }
    }

    bool finite = true;
    for (const auto* net : {&g, &d})
      for (const auto& [name, t] : *net) finite = finite && ops::all_finite(t);
    if (!finite) abort_with(step, "parameter update");
    last_good = make_checkpoint(config, g, d, &adam_g, &adam_d);

    const Index done = step + 1;
    if (done == config.steps || (config.eval_interval > 0 && done % config.eval_interval == 0)) {
      EvalRecord e;
      e.step = done;
      e.images_seen = images_seen;
      e.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      e.g_loss = g_loss;
      e.d_loss = d_loss;
      std::vector<Tensor<float>> samples;
      e.gap_topq = sample_gap(g, gspec, config.eval_samples, config.psi_eval, eval_seed, real_profile, &samples);
      if (hooks.write_files) {
        const auto stem = (fs::path(config.out_dir) / ("step" + std::to_string(done))).string();
        samples.resize(std::min<std::size_t>(samples.size(), 8));
        save_strip(stem + "_samples.png", samples);
      }
      std::ostringstream msg;
      msg << "step " << done << " images " << images_seen << " g_loss " << g_loss << " d_loss " << d_loss
          << " gap_topq " << e.gap_topq;
      log_info(msg.str());
      result.report.records.push_back(e);
    }
  }
  result.checkpoint = std::move(last_good);
  if (hooks.write_files) {
    io::save_checkpoint((fs::path(config.out_dir) / "checkpoint.swgk").string(), result.checkpoint);
    write_report_csv((fs::path(config.out_dir) / "report.csv").string(), result.report);
  }
  return result;
}

}  // namespace swagan::train
