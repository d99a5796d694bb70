#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "swagan/gradcheck.hpp"
#include "swagan/train.hpp"
#include "test_support.hpp"

namespace swagan {
namespace {

namespace fs = std::filesystem;
using nn::GeneratorVariant;
using testing::random_tensor;
using T64 = Tensor<double>;

const double kLn2 = std::numbers::ln2;

std::string tmp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("swagan_train_" + name + "_" + std::to_string(std::random_device{}()));
  fs::create_directories(p);
  return p.string();
}

std::string tiny_config_text(const std::string& out_dir, const std::string& variant = "bi") {
  return "# tiny run\n"
         "variant = " + variant + "\n"
         "d_variant = " + (variant == "pixel" ? "residual" : "wavelet") + "\n"
         "resolution = 16\n"
         "n_blocks = 2\n"
         "channels = 4, 4\n"
         "latent_dim = 8\n"
         "lr = 0.002\n"
         "gamma = 1   # R1 weight\n"
         "batch = 2\n"
         "steps = 3\n"
         "seed = 7\n"
         "dataset = synthetic:gabor:count=8:seed=1\n"
         "out_dir = " + out_dir + "\n"
         "eval_samples = 4\n";
}

train::TrainHooks no_files() {
  train::TrainHooks h;
  h.write_files = false;
  return h;
}

// ----------------------------------------------------------------- config

TEST(Config, ParsesFileWithCommentsAndOptionalKeys) {
  auto c = train::parse_config(tiny_config_text("out") + "beta2 = 0.9\nr1_interval = 4\n");
  EXPECT_EQ(c.generator.variant, GeneratorVariant::SwaganBi);
  EXPECT_EQ(c.discriminator.variant, nn::DiscriminatorVariant::WaveletSkip);
  EXPECT_EQ(c.generator.channels, (std::vector<Index>{4, 4}));
  EXPECT_EQ(c.discriminator.channels, (std::vector<Index>{4, 4}));
  EXPECT_EQ(c.gamma, 1.0);
  EXPECT_EQ(c.beta1, 0.0);
  EXPECT_EQ(c.beta2, 0.9);
  EXPECT_EQ(c.r1_interval, 4);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.dataset, "synthetic:gabor:count=8:seed=1");
}

TEST(Config, TextRoundTripAndOverrides) {
  auto c = train::parse_config(tiny_config_text("out"), {{"seed", "99"}, {"out_dir", "elsewhere"}});
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.out_dir, "elsewhere");
  const auto text = train::to_text(c);
  EXPECT_EQ(train::to_text(train::parse_config(text)), text);
}

TEST(Config, Errors) {
  const auto good = tiny_config_text("out");
  EXPECT_THROW(train::parse_config("variant = bi\n"), ConfigError);
  EXPECT_THROW(train::parse_config(good + "colour = red\n"), ConfigError);
  EXPECT_THROW(train::parse_config(good, {{"steps", "0"}}), ConfigError);
  EXPECT_THROW(train::parse_config(good, {{"gamma", "-1"}}), ConfigError);
  EXPECT_THROW(train::parse_config(good, {{"r1_interval", "0"}}), ConfigError);
  EXPECT_THROW(train::parse_config(good, {{"resolution", "32"}}), ConfigError);
  EXPECT_THROW(train::parse_config(good, {{"lr", "fast"}}), ConfigError);
  EXPECT_THROW(train::parse_config(good, {{"variant", "gan"}}), ConfigError);
  EXPECT_THROW(train::parse_config(good + "seed = 8\n"), ConfigError);
  EXPECT_THROW(train::parse_config(good + "just words\n"), ConfigError);
  EXPECT_THROW(train::load_config("/nonexistent/run.cfg"), IoError);
}

// ----------------------------------------------------------------- losses

TEST(GanLosses, ZeroScores) {
  auto zeros = Tensor<float>::zeros({4, 1});
  auto l = train::gan_losses(zeros, zeros);
  EXPECT_NEAR(l.g_loss[0], kLn2, 1e-6);
  EXPECT_NEAR(l.d_loss[0], 2 * kLn2, 1e-6);
}

TEST(GanLosses, Asymptote) {
  auto l = train::gan_losses(Tensor<double>({2, 1}, {50, 50}), Tensor<double>({2, 1}, {-50, -50}));
  EXPECT_LT(l.d_loss[0], 1e-20);
  EXPECT_NEAR(l.g_loss[0], 50.0, 1e-12);
  EXPECT_THROW(train::gan_losses(Tensor<double>({1, 1}, {NAN}), Tensor<double>({1, 1}, {0})), ContractError);
}

TEST(GanLosses, GradientsMatchFiniteDifferences) {
  TensorDict<double> p;
  auto a = random_tensor<double>({5, 1}, 1, -3, 3);
  auto b = random_tensor<double>({5, 1}, 2, -3, 3);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  p.insert("real", a);
  p.insert("fake", b);
  for (int which = 0; which < 2; ++which) {
    std::function<T64(const TensorDict<double>&)> f = [which](const TensorDict<double>& q) {
      auto l = train::gan_losses(q.at("real"), q.at("fake"));
      return which == 0 ? l.g_loss : l.d_loss;
    };
    EXPECT_LE(finite_diff_check(f, p, {.step = 1e-6}).max_rel_error, 1e-6);
  }
}

TEST(GanLosses, ZeroWeightDiscriminatorAtInitialization) {
  nn::GeneratorSpec gs;
  gs.n_blocks = 2;
  gs.channels = {4, 4};
  gs.latent_dim = 8;
  const auto ds = nn::mirror(gs, nn::DiscriminatorVariant::WaveletSkip);
  auto g = nn::build_generator<float>(gs, 1);
  auto d = nn::build_discriminator<float>(ds, 2);
  for (auto& [name, t] : d)
    for (auto& v : t.mutable_data()) v = 0;
  std::mt19937_64 rng(3);
  const auto fake = nn::generator_forward(g, gs, nn::sample_latents<float>(3, 8, rng)).image;
  const auto real = random_tensor<float>({3, 3, 16, 16}, 4);
  auto l = train::gan_losses(nn::discriminator_forward(d, ds, real), nn::discriminator_forward(d, ds, fake));
  EXPECT_NEAR(l.g_loss[0], kLn2, 1e-6);
  EXPECT_NEAR(l.d_loss[0] / 2, kLn2, 1e-6);
}

// --------------------------------------------------------------------- R1

nn::DiscriminatorSpec tiny_disc(nn::DiscriminatorVariant v) {
  nn::DiscriminatorSpec s;
  s.variant = v;
  s.n_blocks = 2;
  s.channels = {3, 2};
  return s;
}

TEST(R1, ZeroWeightDiscriminatorHasNoPenalty) {
  const auto spec = tiny_disc(nn::DiscriminatorVariant::WaveletSkip);
  auto d = nn::build_discriminator<double>(spec, 1);
  for (auto& [name, t] : d)
    for (auto& v : t.mutable_data()) v = 0;
  EXPECT_EQ(train::r1_penalty(d, spec, random_tensor<double>({2, 3, 16, 16}, 2), 10.0)[0], 0.0);
}

TEST(R1, SumProbeGivesPixelCount) {
  std::function<T64(const T64&)> probe = [](const T64& x) {
    return ops::reshape(ops::sum(x), {1, 1});
  };
  // D(x) = sum of the whole batch: every pixel of every sample has gradient 1.
  const auto x = random_tensor<double>({3, 3, 4, 4}, 1);
  const double gamma = 10.0;
  EXPECT_NEAR(train::r1_penalty(probe, x, gamma)[0], gamma / 2 * 48, 1e-9);
}

TEST(R1, PenaltyMatchesNumericalInputGradient) {
  const auto spec = tiny_disc(nn::DiscriminatorVariant::ResidualPixel);
  const auto d = nn::build_discriminator<double>(spec, 3);
  const auto x = random_tensor<double>({2, 3, 16, 16}, 4);
  const double gamma = 2.0, h = 1e-5;
  // Per-sample scores only depend on their own sample, so perturbing one
  // coordinate and re-measuring the summed score gives that coordinate's
  // gradient.
  auto total = [&](const T64& in) {
    NoGradGuard no_grad;
    return ops::sum(nn::discriminator_forward(d, spec, in))[0];
  };
  double sq = 0;
  for (Index i = 0; i < x.numel(); ++i) {
    auto plus = x.detach(), minus = x.detach();
    plus.mutable_data()[i] += h;
    minus.mutable_data()[i] -= h;
    const double gi = (total(plus) - total(minus)) / (2 * h);
    sq += gi * gi;
  }
  const double numeric = gamma / 2 * sq / 2;
  const double analytic = train::r1_penalty(d, spec, x, gamma)[0];
  EXPECT_LE(std::abs(analytic - numeric) / numeric, 1e-2);
}

TEST(R1, ParameterGradientsThroughDoubleBackward) {
  for (auto v : {nn::DiscriminatorVariant::WaveletSkip, nn::DiscriminatorVariant::ResidualPixel}) {
    const auto spec = tiny_disc(v);
    auto d = nn::build_discriminator<double>(spec, 5);
    const auto x = random_tensor<double>({2, 3, 16, 16}, 6);
    std::function<T64(const TensorDict<double>&)> f = [&](const TensorDict<double>& p) {
      return train::r1_penalty(p, spec, x, 3.0);
    };
    auto report = finite_diff_check(f, d, {.step = 1e-6, .max_coords_per_tensor = 16, .seed = 7});
    EXPECT_LE(report.max_rel_error, 1e-2) << nn::variant_name(v) << " " << report.worst;
    EXPECT_GE(report.coords_checked, 50);
  }
}

// ---------------------------------------------------------------- metrics

TEST(Metrics, PsnrAndBandMse) {
  EXPECT_TRUE(std::isinf(train::psnr_from_mse(0)));
  EXPECT_NEAR(train::psnr_from_mse(4e-4), 40.0, 1e-9);
  auto a = Tensor<float>::zeros({1, 3, 4, 4});
  auto b = io::checkerboard(4, 2);  // all energy in HH
  const auto m = train::band_mse(a, ops::reshape(b, {1, 3, 4, 4}));
  EXPECT_NEAR(m[3], 4.0, 1e-6);
  EXPECT_NEAR(m[0] + m[1] + m[2], 0.0, 1e-12);
}

// ---------------------------------------------------------------- training

TEST(TrainGan, SingleStepIsBitwiseReproducible) {
  const auto dir = tmp_dir("repro");
  auto c = train::parse_config(tiny_config_text(dir), {{"steps", "1"}, {"batch", "1"}});
  const auto a = io::encode_checkpoint(train::train_gan(c, no_files()).checkpoint);
  const auto b = io::encode_checkpoint(train::train_gan(c, no_files()).checkpoint);
  EXPECT_EQ(a, b);
  c.seed = 8;
  EXPECT_NE(io::encode_checkpoint(train::train_gan(c, no_files()).checkpoint), a);
  fs::remove_all(dir);
}

TEST(TrainGan, ReportAndFiles) {
  const auto dir = tmp_dir("files");
  auto c = train::parse_config(tiny_config_text(dir), {{"steps", "4"}, {"eval_interval", "2"}});
  const auto result = train::train_gan(c);
  ASSERT_EQ(result.report.records.size(), 2u);
  EXPECT_EQ(result.report.records[0].step, 2);
  EXPECT_EQ(result.report.records[1].step, 4);
  EXPECT_EQ(result.report.records[1].images_seen, 8);
  EXPECT_TRUE(std::isfinite(result.report.records[1].gap_topq));
  EXPECT_TRUE(fs::exists(dir + "/checkpoint.swgk"));
  EXPECT_TRUE(fs::exists(dir + "/step4_samples.png"));
  std::ifstream csv(dir + "/report.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "step,images_seen,wall_s,g_loss,d_loss,psnr,gap_topq");

  // The checkpoint rebuilds networks that produce the same images.
  const auto model = train::load_model(dir + "/checkpoint.swgk");
  EXPECT_EQ(train::to_text(model.config), train::to_text(c));
  const auto again = train::model_from_checkpoint(result.checkpoint);
  std::mt19937_64 r1(5), r2(5);
  EXPECT_EQ(train::sample_images(model.g, c.generator, 2, 1.0, r1)[1].values(),
            train::sample_images(again.g, c.generator, 2, 1.0, r2)[1].values());
  EXPECT_NE(model.g.at("w_avg").values(), std::vector<float>(8, 0.f));
  EXPECT_TRUE(result.checkpoint.tensors.contains("adam.g.step"));
  EXPECT_EQ(result.checkpoint.tensors.at("adam.d.step")[0], 4.f);
  fs::remove_all(dir);
}

TEST(TrainGan, NonFiniteLossAbortsWithLastGoodCheckpoint) {
  const auto dir = tmp_dir("nan");
  auto c = train::parse_config(tiny_config_text(dir), {{"steps", "5"}});
  train::TrainHooks hooks;
  hooks.before_step = [](Index step, TensorDict<float>&, TensorDict<float>& d) {
    if (step == 2) d.at("out.bias").mutable_data()[0] = NAN;
  };
  try {
    train::train_gan(c, hooks);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos) << e.what();
  }
  const auto last = io::load_checkpoint(dir + "/last_good.swgk");
  EXPECT_EQ(last.tensors.at("adam.d.step")[0], 2.f);
  for (const auto& [name, t] : last.tensors) EXPECT_TRUE(ops::all_finite(t)) << name;
  fs::remove_all(dir);
}

TEST(TrainGan, R1ReducesInputGradientNorm) {
  double norms[2];
  const double gammas[2] = {0.0, 10.0};
  for (int i = 0; i < 2; ++i) {
    auto c = train::parse_config(tiny_config_text("unused"),
                                 {{"steps", "150"}, {"r1_interval", "4"}, {"gamma", std::to_string(gammas[i])}});
    const auto model = train::model_from_checkpoint(train::train_gan(c, no_files()).checkpoint);
    const auto data = io::load_dataset(io::parse_dataset(c.dataset, c.resolution));
    norms[i] = train::mean_grad_norm_sq(model.d, c.discriminator,
                                        train::detail::stack(data, {0, 1, 2, 3, 4, 5, 6, 7}));
  }
  EXPECT_LT(norms[1], norms[0]);
}

// ---------------------------------------------------------------- overfit

TEST(Overfit, OwnInitialOutputIsAFixedPoint) {
  train::OverfitOptions o;
  o.steps = 0;
  o.seed = 3;
  const auto first = train::train_overfit(io::checkerboard(16, 4), o);
  const auto again = train::train_overfit(first.best_image, o);
  ASSERT_EQ(again.records.size(), 1u);
  EXPECT_EQ(again.records[0].loss, 0.0);
  EXPECT_TRUE(std::isinf(again.records[0].psnr));
}

TEST(Overfit, ConstantTargetReachesFortyDecibels) {
  const auto gray = ops::scale(Tensor<float>::ones({3, 16, 16}), 0.25f);
  for (auto v : {GeneratorVariant::SwaganBi, GeneratorVariant::PixelBaseline}) {
    train::OverfitOptions o;
    o.variant = v;
    o.steps = 500;
    o.eval_interval = 50;
    const auto r = train::train_overfit(gray, o);
    EXPECT_GE(train::psnr_from_mse(r.best_loss), 40.0) << nn::variant_name(v);
    for (std::size_t i = 1; i < r.records.size(); ++i) EXPECT_LE(r.records[i].best_loss, r.records[i - 1].best_loss);
  }
}

TEST(Overfit, MatchedParameterCounts) {
  train::OverfitOptions o;
  const auto bi = nn::build_generator<float>(train::overfit_spec(128, o), 0).trainable_count();
  o.variant = GeneratorVariant::PixelBaseline;
  const auto px = nn::build_generator<float>(train::overfit_spec(128, o), 0).trainable_count();
  EXPECT_LE(std::abs(double(bi - px)) / double(px), 0.10);
  EXPECT_THROW(train::overfit_spec(96, o), DimensionError);
}

// --------------------------------------------------------------- projection

struct SmallModel {
  nn::GeneratorSpec spec;
  TensorDict<float> g;
};

SmallModel small_model() {
  SmallModel m;
  m.spec.n_blocks = 2;
  m.spec.channels = {8, 8};
  m.spec.latent_dim = 8;
  m.g = nn::build_generator<float>(m.spec, 11);
  auto avg = m.g.at("w_avg").mutable_data();
  for (Index i = 0; i < 8; ++i) avg[i] = 0.1f * static_cast<float>(i % 3);
  return m;
}

TEST(Project, ZeroStepsReturnsMeanOutput) {
  const auto m = small_model();
  const auto r = train::project_latent(m.g, m.spec, io::checkerboard(16, 4), {.steps = 0});
  std::mt19937_64 rng(1);
  const auto mean_face = nn::generator_forward(m.g, m.spec, nn::sample_latents<float>(1, 8, rng), 0.0).image;
  EXPECT_EQ(r.reconstruction.values(), mean_face.values());
  EXPECT_EQ(r.w.values(), m.g.at("w_avg").values());
}

TEST(Project, RecoversAnImageFromTheSameGenerator) {
  const auto m = small_model();
  std::mt19937_64 rng(2);
  const auto w = nn::mapping_forward(m.g, m.spec, nn::sample_latents<float>(1, 8, rng)).detach();
  const auto target = ops::reshape(nn::synthesis_forward(m.g, m.spec, w).image.detach(), {3, 16, 16});
  const auto start = train::project_latent(m.g, m.spec, target, {.steps = 0});
  const auto r = train::project_latent(m.g, m.spec, target, {.steps = 300});
  EXPECT_GT(r.psnr, start.psnr + 10);
  EXPECT_LE(r.loss, start.loss);
  EXPECT_THROW(train::project_latent(m.g, m.spec, io::checkerboard(8, 2)), DimensionError);
}

TEST(Project, SpectralTermGradient) {
  const auto target = random_tensor<float>({1, 3, 8, 8}, 3).cast<double>();
  // Same loss in double precision through the public pieces.
  TensorDict<double> p;
  auto img = random_tensor<double>({1, 3, 8, 8}, 4);
  img.set_requires_grad(true);
  p.insert("img", img);
  const auto luma_w = T64(Shape{1, 3, 1, 1}, {0.299, 0.587, 0.114});
  T64 te;
  {
    NoGradGuard no_grad;
    te = spectral::radial_band_energy(ops::conv2d(target, luma_w));
  }
  std::function<T64(const TensorDict<double>&)> f = [&](const TensorDict<double>& q) {
    const auto e = spectral::radial_band_energy(ops::conv2d(q.at("img"), luma_w));
    return ops::add(ops::mean(ops::square(ops::sub(q.at("img"), target))), ops::sum(ops::square(ops::sub(e, te))));
  };
  EXPECT_LE(finite_diff_check(f, p, {.step = 1e-6, .max_coords_per_tensor = 200}).max_rel_error, 1e-5);
}

TEST(Project, SpectralTermNarrowsTheHighFrequencyGap) {
  const auto m = small_model();
  std::mt19937_64 rng(1);
  const auto target = io::gabor_texture(16, rng);
  auto gap = [&](double lambda) {
    const auto r = train::project_latent(m.g, m.spec, target, {.steps = 200, .lambda = lambda});
    const auto real = spectral::radial_power_spectrum(std::vector<Tensor<float>>{target});
    const auto model = spectral::radial_power_spectrum(std::vector<Tensor<float>>{r.reconstruction});
    return spectral::top_quartile_mean(spectral::spectrum_gap(model, real));
  };
  EXPECT_LT(gap(0.1), gap(0.0));
}

// ------------------------------------------------------------ interpolation

TEST(Interpolate, EndpointsAndConstantPath) {
  const auto m = small_model();
  const auto wa = random_tensor<float>({1, 8}, 5), wb = random_tensor<float>({1, 8}, 6);
  const auto frames = train::interpolate_latents(m.g, m.spec, wa, wb, 5);
  ASSERT_EQ(frames.size(), 5u);
  NoGradGuard no_grad;
  EXPECT_EQ(frames.front().values(), nn::synthesis_forward(m.g, m.spec, wa).image.values());
  EXPECT_EQ(frames.back().values(), nn::synthesis_forward(m.g, m.spec, wb).image.values());
  EXPECT_NE(frames[2].values(), frames.front().values());
  const auto same = train::interpolate_latents(m.g, m.spec, wa, wa, 4);
  for (const auto& f : same) EXPECT_EQ(f.values(), same[0].values());
  EXPECT_THROW(train::interpolate_latents(m.g, m.spec, wa, random_tensor<float>({1, 4}, 7), 3), DimensionError);
}

// ---------------------------------------------------------------- benchmark

TEST(Bench, ReportsTimeAndFlopRatio) {
  nn::GeneratorSpec a;
  a.n_blocks = 2;
  a.channels = {4, 4};
  a.latent_dim = 8;
  auto b = a;
  b.variant = GeneratorVariant::PixelBaseline;
  const auto c = train::compare_throughput(a, nn::mirror(a, nn::DiscriminatorVariant::WaveletSkip), b,
                                           nn::mirror(b, nn::DiscriminatorVariant::ResidualPixel), 2, 6);
  EXPECT_EQ(c.a.images, 6);
  EXPECT_GT(c.a.seconds_per_1k, 0);
  EXPECT_GT(c.speedup, 0);
  EXPECT_LT(c.flop_ratio, 1.0);
  EXPECT_THROW(train::bench_throughput(a, nn::mirror(a, nn::DiscriminatorVariant::WaveletSkip), 2, 0),
               ContractError);
}

}  // namespace
}  // namespace swagan
