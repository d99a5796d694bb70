// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance --criterion N [--criterion M ...] [--cli PATH] [--workdir DIR]
// Exit status is 0 only when every requested criterion passes.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "swagan/gradcheck.hpp"
#include "swagan/io/bands.hpp"
#include "swagan/io/dataset.hpp"
#include "swagan/spectral.hpp"
#include "swagan/train.hpp"
#include "swagan/wavelet.hpp"

namespace fs = std::filesystem;
using namespace swagan;

namespace {

using T64 = Tensor<double>;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

template <typename Real>
Tensor<Real> uniform(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Real> v(static_cast<std::size_t>(numel(shape)));
  for (auto& x : v) x = static_cast<Real>(u(rng));
  return Tensor<Real>(shape, std::move(v));
}

T64 param(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  return uniform<double>(shape, rng, lo, hi).set_requires_grad(true);
}

// ------------------------------------------------------------ criterion 1

Outcome wavelet_exactness() {
  std::mt19937_64 rng(1);
  double worst_abs = 0, worst_parseval = 0;
  Index worst_size = 0;
  for (Index s : {8, 16, 64, 256, 512}) {
    for (int i = 0; i < 1000; ++i) {
      const auto x = uniform<float>({1, 3, s, s}, rng);
      const auto d = wavelet::dwt2(x);
      const double e = ops::max_abs_diff(wavelet::iwt2(d), x);
      const double ex = ops::sum_squares(x);
      const double p = std::abs(ops::sum_squares(d) - ex) / ex;
      if (e > worst_abs) worst_abs = e, worst_size = s;
      worst_parseval = std::max(worst_parseval, p);
    }
  }
  return {worst_abs <= 1e-6 && worst_parseval <= 1e-4,
          "max|iwt2(dwt2(x))-x| = " + fmt(worst_abs) + " (size " + std::to_string(worst_size) +
              ", limit 1e-6), Parseval rel " + fmt(worst_parseval) + " (limit 1e-4)"};
}

// ------------------------------------------------------------ criterion 2

std::vector<std::complex<double>> naive_dft(const T64& x) {
  const Index h = x.dim(0), w = x.dim(1);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(h * w));
  for (Index u = 0; u < h; ++u)
    for (Index v = 0; v < w; ++v) {
      std::complex<double> acc = 0;
      for (Index y = 0; y < h; ++y)
        for (Index k = 0; k < w; ++k) {
          const double a = -2.0 * std::numbers::pi *
                           (static_cast<double>((u * y) % h) / static_cast<double>(h) +
                            static_cast<double>((v * k) % w) / static_cast<double>(w));
          acc += x[y * w + k] * std::complex<double>(std::cos(a), std::sin(a));
        }
      out[static_cast<std::size_t>(u * w + v)] = acc;
    }
  return out;
}

Outcome fft_correctness() {
  std::mt19937_64 rng(2);
  double worst_dft = 0, worst_parseval = 0;
  std::string where;
  for (Index h = 1; h <= 64; h *= 2)
    for (Index w = 1; w <= 64; w *= 2) {
      const auto x = uniform<double>({h, w}, rng);
      const auto fast = spectral::fft2(x);
      const auto slow = naive_dft(x);
      double err = 0, scale = 0;
      for (std::size_t i = 0; i < slow.size(); ++i) {
        err = std::max(err, std::abs(fast.values[i] - slow[i]));
        scale = std::max(scale, std::abs(slow[i]));
      }
      if (err / scale > worst_dft) worst_dft = err / scale, where = std::to_string(h) + "x" + std::to_string(w);
    }
  for (Index n = 1; n <= 512; n *= 2)
    for (int rep = 0; rep < 4; ++rep) {
      const auto x = uniform<double>({n, n}, rng);
      const auto f = spectral::fft2(x);
      double ef = 0;
      for (const auto& c : f.values) ef += std::norm(c);
      ef /= static_cast<double>(n * n);
      const double ex = ops::sum_squares(x);
      worst_parseval = std::max(worst_parseval, std::abs(ef - ex) / ex);
    }
  return {worst_dft <= 1e-4 && worst_parseval <= 1e-4,
          "fft2 vs naive DFT max rel " + fmt(worst_dft) + " (worst " + where + ", limit 1e-4), Parseval rel " +
              fmt(worst_parseval) + " up to 512 (limit 1e-4)"};
}

// ------------------------------------------------------------ criterion 3

struct GradCase {
  std::string name;
  TensorDict<double> params;
  std::function<T64(const TensorDict<double>&)> f;
  Index per_tensor = 128;
  double step = 1e-6;
};

nn::GeneratorSpec tiny_generator(nn::GeneratorVariant v) {
  nn::GeneratorSpec s;
  s.variant = v;
  s.n_blocks = 2;
  s.latent_dim = 6;
  s.mapping_layers = 2;
  s.channels = {3, 3};
  return s;
}

std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  auto add = [&](std::string name, std::vector<std::pair<std::string, T64>> ps,
                 std::function<T64(const TensorDict<double>&)> f, Index per_tensor = 128) {
    GradCase c{std::move(name), {}, std::move(f), per_tensor};
    for (auto& [k, t] : ps) c.params.insert(k, t);
    cases.push_back(std::move(c));
  };
  std::mt19937_64 rng(3);
  const auto c120 = uniform<double>({4, 5, 6}, rng);

  add("add/sub/mul/scale/neg/add_scalar/square/mul_constant/sum/mean",
      {{"a", param({4, 5, 6}, 10)}, {"b", param({4, 5, 6}, 11)}}, [c120](const TensorDict<double>& p) {
        const auto& a = p.at("a");
        const auto& b = p.at("b");
        auto e1 = ops::sum(ops::mul(ops::add(a, b), ops::sub(a, ops::scale(b, 0.7))));
        auto e2 = ops::mean(ops::square(ops::add_scalar(ops::neg(a), 0.3)));
        return ops::add(ops::add(e1, e2), ops::sum(ops::mul_constant(b, c120)));
      });
  add("pow_scalar", {{"x", param({4, 5, 6}, 12, 0.5, 1.5)}}, [c120](const TensorDict<double>& p) {
    return ops::sum(ops::mul_constant(ops::pow_scalar(p.at("x"), 1.7), c120));
  });
  add("leaky_relu/sigmoid/softplus", {{"x", param({4, 5, 6}, 13, -3, 3)}}, [c120](const TensorDict<double>& p) {
    const auto& x = p.at("x");
    auto y = ops::add(ops::leaky_relu(x), ops::add(ops::sigmoid(x), ops::softplus(ops::scale(x, 2.0))));
    return ops::sum(ops::mul_constant(y, c120));
  });
  add("sum_last/expand_last/reshape", {{"x", param({4, 5, 6}, 14)}}, [c120](const TensorDict<double>& p) {
    auto s = ops::expand_last(ops::sum_last(ops::square(p.at("x"))), 6);
    return ops::sum(ops::mul_constant(ops::reshape(ops::add(s, p.at("x")), {4, 5, 6}), c120));
  });
  {
    const auto t = uniform<double>({2, 6, 3, 3}, rng);
    add("channel bias/sum/broadcast/scale/dot",
        {{"x", param({2, 6, 3, 3}, 15)}, {"b", param({6}, 16)}, {"s", param({2, 6}, 17)}},
        [t](const TensorDict<double>& p) {
          const auto& x = p.at("x");
          auto y = ops::scale_channels(ops::add_channel_bias(x, p.at("b")), p.at("s"));
          auto a = ops::sum(ops::square(ops::channel_dot(y, t)));
          auto c = ops::sum(ops::square(ops::channel_sum(y)));
          auto d = ops::sum(ops::mul_constant(ops::broadcast_channels(ops::square(p.at("b")), x.shape()), t));
          return ops::add(a, ops::add(c, d));
        });
  }
  {
    const auto t = uniform<double>({3, 2, 4, 4}, rng);
    add("tile_batch/sum_batch/slice_batch", {{"x", param({1, 2, 4, 4}, 18)}, {"y", param({4, 2, 4, 4}, 19)}},
        [t](const TensorDict<double>& p) {
          auto tiled = ops::tile_batch(p.at("x"), 3);
          auto part = ops::slice_batch(p.at("y"), 1, 4);
          auto a = ops::sum(ops::mul_constant(ops::square(ops::add(tiled, part)), t));
          return ops::add(a, ops::sum(ops::square(ops::sum_batch(p.at("y")))));
        });
  }
  {
    const auto t1 = uniform<double>({2, 4, 6, 6}, rng);
    const auto t2 = uniform<double>({2, 4, 3, 3}, rng);
    add("conv2d (3x3 pad 1, stride 2, 1x1, bias)",
        {{"x", param({2, 3, 6, 6}, 20)}, {"w", param({4, 3, 3, 3}, 21)}, {"b", param({4}, 22)},
         {"w1", param({4, 3, 1, 1}, 23)}},
        [t1, t2](const TensorDict<double>& p) {
          auto a = ops::conv2d(p.at("x"), p.at("w"), p.at("b"), 1, 1);
          auto s2 = ops::conv2d(p.at("x"), p.at("w"), 2, 1);
          auto pw = ops::conv2d(p.at("x"), p.at("w1"));
          return ops::add(ops::sum(ops::mul_constant(ops::leaky_relu(ops::add(a, pw)), t1)),
                          ops::sum(ops::mul_constant(ops::square(s2), t2)));
        });
  }
  add("matmul (all transposes)/linear",
      {{"a", param({6, 8}, 24)}, {"b", param({8, 5}, 25)}, {"w", param({5, 8}, 26)}, {"lw", param({4, 5}, 38)},
       {"bias", param({4}, 27)}},
      [](const TensorDict<double>& p) {
        const auto& a = p.at("a");
        const auto& b = p.at("b");
        auto m1 = ops::matmul(a, b);                    // [6, 5]
        auto m2 = ops::matmul(b, a, true, true);        // [5, 6]
        auto m3 = ops::matmul(a, p.at("w"), false, true);  // [6, 5]
        auto m4 = ops::matmul(a, ops::reshape(m2, {5, 6}), true, true);  // [8, 5]
        auto l = ops::linear(ops::softplus(m1), p.at("lw"), p.at("bias"));  // [6, 4]
        auto s = ops::add(ops::sum(ops::square(ops::add(m1, m3))), ops::sum(ops::sigmoid(m4)));
        return ops::add(s, ops::sum(ops::square(l)));
      });
  {
    const auto t1 = uniform<double>({1, 2, 16, 16}, rng);
    const auto t2 = uniform<double>({1, 2, 4, 4}, rng);
    const auto t3 = uniform<double>({1, 2, 9, 5}, rng);
    add("upsample2x/downsample2x/bilinear_resize/bicubic_resize", {{"x", param({1, 2, 8, 8}, 28)}},
        [t1, t2, t3](const TensorDict<double>& p) {
          const auto& x = p.at("x");
          auto a = ops::sum(ops::mul_constant(ops::upsample2x(x), t1));
          auto b = ops::sum(ops::mul_constant(ops::square(ops::downsample2x(x)), t2));
          auto c = ops::sum(ops::square(ops::bilinear_resize(x, ops::ResizeFactor::Half)));
          auto d = ops::sum(ops::mul_constant(ops::bicubic_resize(x, 9, 5), t3));
          return ops::add(ops::add(a, b), ops::add(c, d));
        });
  }
  {
    const auto t1 = uniform<double>({1, 8, 4, 4}, rng);
    const auto t2 = uniform<double>({1, 8, 8, 8}, rng);
    const auto t3 = uniform<double>({1, 8, 2, 2}, rng);
    add("dwt2/iwt2/wavelet_upsample/wavelet_downsample",
        {{"img", param({1, 2, 8, 8}, 29)}, {"dec", param({1, 8, 4, 4}, 30)}}, [t1, t2, t3](const TensorDict<double>& p) {
          auto a = ops::sum(ops::mul_constant(ops::softplus(wavelet::dwt2(p.at("img"))), t1));
          auto b = ops::sum(ops::mul_constant(wavelet::wavelet_upsample(p.at("dec")), t2));
          auto c = ops::sum(ops::square(ops::sub(wavelet::wavelet_downsample(p.at("dec")), t3)));
          auto e = ops::sum(ops::square(wavelet::iwt2(p.at("dec"))));
          return ops::add(ops::add(a, b), ops::add(c, e));
        });
  }
  {
    const auto t = uniform<double>({2, 4, 5, 5}, rng);
    add("modulated_conv2d (demodulated and plain)",
        {{"x", param({2, 3, 5, 5}, 31)}, {"w", param({4, 3, 3, 3}, 32)}, {"s", param({2, 3}, 33, 0.5, 1.5)}},
        [t](const TensorDict<double>& p) {
          auto a = nn::modulated_conv2d(p.at("x"), p.at("w"), p.at("s"), true);
          auto b = nn::modulated_conv2d(p.at("x"), p.at("w"), p.at("s"), false);
          return ops::add(ops::sum(ops::mul_constant(a, t)), ops::sum(ops::square(b)));
        });
  }
  {
    const auto t = uniform<double>({2, 1, 16, 16}, rng);
    add("radial_band_energy", {{"x", param({2, 1, 16, 16}, 34)}}, [t](const TensorDict<double>& p) {
      auto e = spectral::radial_band_energy(ops::add(p.at("x"), t));
      return ops::sum(ops::square(e));
    });
  }
  for (auto dv : {nn::DiscriminatorVariant::WaveletSkip, nn::DiscriminatorVariant::ResidualPixel}) {
    const nn::DiscriminatorSpec d{dv, 2, {3, 3}};
    auto dp = nn::build_discriminator<double>(d, 35);
    const auto real = uniform<double>({2, 3, 16, 16}, rng);
    std::vector<std::pair<std::string, T64>> ps;
    for (auto& [k, t] : dp) ps.emplace_back(k, t);
    add(std::string("R1 penalty double backward, ") + nn::variant_name(dv) + " D", ps,
        [d, real](const TensorDict<double>& p) { return train::r1_penalty(p, d, real, 10.0); }, 16);
  }
  const std::pair<nn::GeneratorVariant, nn::DiscriminatorVariant> pairs[] = {
      {nn::GeneratorVariant::SwaganBi, nn::DiscriminatorVariant::WaveletSkip},
      {nn::GeneratorVariant::SwaganNU, nn::DiscriminatorVariant::WaveletSkip},
      {nn::GeneratorVariant::WaveletFinal, nn::DiscriminatorVariant::WaveletSkip},
      {nn::GeneratorVariant::SwaganBi, nn::DiscriminatorVariant::ResidualPixel},
      {nn::GeneratorVariant::PixelBaseline, nn::DiscriminatorVariant::ResidualPixel}};
  for (const auto& [gv, dv] : pairs) {
    const auto gspec = tiny_generator(gv);
    const auto dspec = nn::mirror(gspec, dv);
    std::vector<std::pair<std::string, T64>> ps;
    for (auto& [k, t] : nn::build_generator<double>(gspec, 36)) ps.emplace_back("g." + k, t);
    for (auto& [k, t] : nn::build_discriminator<double>(dspec, 37)) ps.emplace_back("d." + k, t);
    const auto z = uniform<double>({2, gspec.latent_dim}, rng);
    const auto real = uniform<double>({2, 3, 16, 16}, rng);
    add(std::string("G+D+loss end to end, ") + nn::variant_name(gv) + " / " + nn::variant_name(dv), ps,
        [gspec, dspec, z, real](const TensorDict<double>& all) {
          TensorDict<double> g, d;
          for (const auto& [name, t] : all) (name.starts_with("g.") ? g : d).insert(name.substr(2), t);
          auto fake = nn::generator_forward(g, gspec, z).image;
          auto l = train::gan_losses(nn::discriminator_forward(d, dspec, real), nn::discriminator_forward(d, dspec, fake));
          return ops::add(l.g_loss, l.d_loss);
        },
        6);
  }
  return cases;
}

Outcome gradient_suite() {
  double worst = 0;
  Index min_coords = std::numeric_limits<Index>::max(), total = 0;
  std::string worst_case, failures;
  for (auto& c : gradient_cases()) {
    const auto r = finite_diff_check(c.f, c.params, {.step = c.step, .max_coords_per_tensor = c.per_tensor, .seed = 4});
    total += r.coords_checked;
    min_coords = std::min(min_coords, r.coords_checked);
    if (r.max_rel_error > worst) worst = r.max_rel_error, worst_case = c.name + " " + r.worst;
    if (r.max_rel_error > 1e-3 || r.coords_checked < 100) {
      failures += "; " + c.name + ": rel " + fmt(r.max_rel_error) + " over " + std::to_string(r.coords_checked);
    }
  }
  return {failures.empty(), "max rel err " + fmt(worst) + " at " + worst_case + " (limit 1e-3), " +
                                std::to_string(total) + " coordinates, fewest per case " +
                                std::to_string(min_coords) + " (need 100)" + failures};
}

// ------------------------------------------------------------ criterion 4

Outcome blur_monotonicity() {
  io::DatasetDescriptor d = io::parse_dataset("synthetic:gabor:count=64:seed=4", 64);
  const auto images = io::load_dataset(d);
  const auto real = spectral::radial_power_spectrum(images);
  std::map<int, double> gap;
  gap[0] = spectral::top_quartile_mean(spectral::spectrum_gap(real, real));
  for (int k : {3, 5}) {
    std::vector<Tensor<float>> blurred;
    for (const auto& img : images) blurred.push_back(spectral::gaussian_blur(img, k));
    gap[k] = spectral::top_quartile_mean(spectral::spectrum_gap(spectral::radial_power_spectrum(blurred), real));
  }
  return {gap[0] <= 1e-9 && gap[0] < gap[3] && gap[3] < gap[5],
          "gap none " + fmt(gap[0]) + " < 3x3 " + fmt(gap[3]) + " < 5x5 " + fmt(gap[5])};
}

// ------------------------------------------------------------ criterion 5

Outcome spectral_bias_overfit() {
  const auto target = io::checkerboard(128, 4);
  std::map<std::string, train::OverfitResult> res;
  for (auto [name, v] : {std::pair{"bi", nn::GeneratorVariant::SwaganBi},
                         std::pair{"pixel", nn::GeneratorVariant::PixelBaseline}}) {
    train::OverfitOptions o;
    o.variant = v;
    o.steps = 3000;
    o.eval_interval = 500;
    res[name] = train::train_overfit(target, o);
  }
  const auto& bi = res["bi"];
  const auto& px = res["pixel"];
  const double hh_bi = bi.records.back().band_mse[3], hh_px = px.records.back().band_mse[3];
  const double pdiff = std::abs(static_cast<double>(bi.param_count - px.param_count)) / static_cast<double>(px.param_count);
  return {pdiff <= 0.1 && hh_bi <= 0.5 * hh_px,
          "HH MSE after 3000 steps: bi " + fmt(hh_bi) + " vs pixel " + fmt(hh_px) + " (ratio " +
              fmt(hh_bi / hh_px) + ", limit 0.5); params " + std::to_string(bi.param_count) + " vs " +
              std::to_string(px.param_count) + " (diff " + fmt(100 * pdiff) + "%, limit 10%)"};
}

// ------------------------------------------------------------ criterion 6

Outcome throughput_direction() {
  nn::GeneratorSpec bi;
  bi.variant = nn::GeneratorVariant::SwaganBi;
  bi.n_blocks = 6;  // 256 x 256
  bi.channels = nn::default_channels(bi.n_blocks);
  auto px = bi;
  px.variant = nn::GeneratorVariant::PixelBaseline;
  const auto dbi = nn::mirror(bi, nn::DiscriminatorVariant::WaveletSkip);
  const auto dpx = nn::mirror(px, nn::DiscriminatorVariant::ResidualPixel);
  bool ok = true;
  std::string runs;
  for (int run = 0; run < 3; ++run) {
    const auto c = train::compare_throughput(bi, dbi, px, dpx, 4, 1000, static_cast<std::uint64_t>(run));
    ok = ok && c.speedup >= 1.2 && c.flop_ratio < 1.0;
    runs += (run ? "; " : "") + std::string("run ") + std::to_string(run + 1) + ": bi " + fmt(c.a.seconds_per_1k) +
            " s/1k, pixel " + fmt(c.b.seconds_per_1k) + " s/1k, speedup " + fmt(c.speedup) + ", flop ratio " +
            fmt(c.flop_ratio);
  }
  return {ok, runs + " (need speedup >= 1.2 and flop ratio < 1 on all 3)"};
}

// ------------------------------------------------------------ criterion 7

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome ablation_ordering(const fs::path& work) {
  struct Arm {
    std::string label, variant, d_variant;
  };
  const std::vector<Arm> arms = {{"bi", "bi", "wavelet"},
                                 {"nu", "nu", "wavelet"},
                                 {"final", "final", "wavelet"},
                                 {"bi+nwd", "bi", "residual"}};
  std::map<std::string, double> med;
  std::string detail;
  for (const auto& arm : arms) {
    std::vector<double> gaps;
    for (std::uint64_t seed : {1, 2, 3}) {
      std::ostringstream cfg;
      cfg << "variant = " << arm.variant << "\nd_variant = " << arm.d_variant
          << "\nresolution = 64\nn_blocks = 4\nchannels = 16,16,8,8\nlatent_dim = 32\nlr = 0.002\ngamma = 1\n"
          << "batch = 4\nsteps = 20000\nseed = " << seed
          << "\ndataset = synthetic:gabor:count=256:seed=0\neval_samples = 64\neval_interval = 5000\nout_dir = "
          << (work / "ablation" / (arm.label + "_seed" + std::to_string(seed))).string() << '\n';
      const auto t0 = Clock::now();
      const auto r = train::train_gan(train::parse_config(cfg.str(), {}));
      gaps.push_back(r.report.records.back().gap_topq);
      std::cout << "  " << arm.label << " seed " << seed << ": gap_topq " << gaps.back() << " ("
                << std::chrono::duration<double>(Clock::now() - t0).count() << " s)" << std::endl;
    }
    med[arm.label] = median3(gaps);
    detail += (detail.empty() ? "" : ", ") + arm.label + " " + fmt(med[arm.label]);
  }
  const bool ok = med["bi"] <= med["nu"] && med["bi"] <= med["final"] && med["bi"] <= med["bi+nwd"];
  return {ok, "median top-quartile gap: " + detail + " (bi must be <= each)"};
}

// ------------------------------------------------------------ criterion 8

train::TrainConfig acceptance_config(const fs::path& out) {
  std::ostringstream cfg;
  cfg << "variant = bi\nd_variant = wavelet\nresolution = 32\nn_blocks = 3\nchannels = 16,16,8\nlatent_dim = 32\n"
      << "lr = 0.002\ngamma = 1\nbatch = 4\nsteps = 6000\nseed = 8\ndataset = synthetic:gabor:count=64:seed=0\n"
      << "eval_samples = 32\nout_dir = " << out.string() << '\n';
  return train::parse_config(cfg.str(), {});
}

double image_gap(const Tensor<float>& img, const spectral::SpectrumProfile& real) {
  return spectral::top_quartile_mean(spectral::spectrum_gap(spectral::radial_power_spectrum(std::vector{img}), real));
}

// Observations on the trained checkpoint that are reported but not gated.
void report_checkpoint(const train::Model& m, const spectral::SpectrumProfile& real) {
  const auto& spec = m.config.generator;
  const Index r = nn::output_resolution(spec);
  NoGradGuard no_grad;
  std::mt19937_64 rng(81);
  double mid = 0, ends = 0;
  const int pairs = 8;
  for (int i = 0; i < pairs; ++i) {
    const auto wa = nn::mapping_forward(m.g, spec, nn::sample_latents<float>(1, spec.latent_dim, rng));
    const auto wb = nn::mapping_forward(m.g, spec, nn::sample_latents<float>(1, spec.latent_dim, rng));
    const auto frames = train::interpolate_latents(m.g, spec, wa, wb, 5);
    mid += image_gap(frames[2], real) / pairs;
    ends += 0.5 * (image_gap(frames[0], real) + image_gap(frames[4], real)) / pairs;
  }
  std::cout << "  info: interpolation midpoint gap " << fmt(mid) << " vs endpoints " << fmt(ends)
            << (mid <= 2 * ends ? " (within 2x)" : " (more than 2x)") << '\n';
  const auto out = nn::generator_forward(m.g, spec, nn::sample_latents<float>(4, spec.latent_dim, rng), 1.0, true);
  std::cout << "  info: mean square of LH/HL/HH per block:";
  for (const auto& dec : out.decompositions) {
    double detail = 0;
    for (auto b : {wavelet::Band::LH, wavelet::Band::HL, wavelet::Band::HH})
      detail += ops::sum_squares(wavelet::extract_band(dec, b));
    std::cout << ' ' << fmt(detail / static_cast<double>(3 * dec.numel() / 4)) << " @" << 2 * dec.dim(2);
  }
  std::cout << " (output " << r << ")\n";
}

Outcome self_inversion(const fs::path& work) {
  const auto config = acceptance_config(work / "checkpoint_run");
  train::train_gan(config);
  const auto m = train::load_model((fs::path(config.out_dir) / "checkpoint.swgk").string());
  const auto real = spectral::radial_power_spectrum(io::load_dataset(io::parse_dataset(config.dataset, config.resolution)));
  report_checkpoint(m, real);
  std::mt19937_64 rng(88);
  double worst = std::numeric_limits<double>::infinity();
  std::string psnrs;
  std::string start;
  for (int i = 0; i < 8; ++i) {
    const auto target = train::sample_images(m.g, m.config.generator, 1, 1.0, rng)[0];
    const auto r = train::project_latent(m.g, m.config.generator, target, {.steps = 1000});
    const auto r0 = train::project_latent(m.g, m.config.generator, target, {.steps = 0});
    worst = std::min(worst, r.psnr);
    psnrs += (i ? ", " : "") + fmt(r.psnr, 3);
    start += (i ? ", " : "") + fmt(r0.psnr, 3);
  }
  return {worst >= 30.0, "projection PSNR on 8 samples after 1000 steps: " + psnrs + " dB (from " + start +
                             " at w_avg; need >= 30)"};
}

// ------------------------------------------------------------ criterion 9

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return rc;
}

bool same_bytes(const fs::path& a, const fs::path& b) { return io::read_file(a.string()) == io::read_file(b.string()); }

Outcome reproducibility(const fs::path& work, const std::string& cli) {
  if (cli.empty()) return {false, "no --cli path given"};
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  const auto dir = work / "repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto cfg = dir / "train.cfg";
  io::atomic_write(cfg.string(),
                   "variant = bi\nd_variant = wavelet\nresolution = 16\nn_blocks = 2\nchannels = 8,8\nlatent_dim = 16\n"
                   "lr = 0.002\ngamma = 1\nbatch = 2\nsteps = 40\nseed = 0\n"
                   "dataset = synthetic:gabor:count=8:seed=1\nout_dir = unused\n");
  const auto run_dir = dir / "run";
  const std::string train_cmd = quote(cli) + " train --config " + quote(cfg) + " --seed 7 --out " + quote(run_dir);
  check(run(train_cmd) == 0, "first train exited non-zero");
  const auto first = dir / "first.swgk";
  std::error_code ec;
  fs::copy_file(run_dir / "checkpoint.swgk", first, fs::copy_options::overwrite_existing, ec);
  check(!ec, "first checkpoint missing");
  check(run(train_cmd) == 0, "second train exited non-zero");
  if (!ec) check(same_bytes(first, run_dir / "checkpoint.swgk"), "train --seed 7 checkpoints differ");

  // Checkpoint decode/encode is the identity on bytes, and the model loads.
  if (!ec) {
    const auto bytes = io::read_file(first.string());
    const auto encoded = io::encode_checkpoint(io::decode_checkpoint(bytes));
    check(std::string(bytes.begin(), bytes.end()) == encoded, "checkpoint re-encode differs");
    const auto m = train::load_model(first.string());
    check(m.config.seed == 7, "checkpoint config lost --seed");
  }

  // PNG: save(load(file)) reproduces the pixels.
  std::mt19937_64 rng(9);
  const auto png = dir / "image.png";
  io::save_png(png.string(), uniform<float>({3, 24, 32}, rng));
  const auto again = dir / "image_again.png";
  io::save_png(again.string(), io::load_png(png.string()));
  check(io::read_png_raw(png.string()).samples == io::read_png_raw(again.string()).samples, "png save/load not exact");

  // dwt -> idwt through the CLI reproduces the pixels.
  const auto back = dir / "image_idwt.png";
  check(run(quote(cli) + " dwt --in " + quote(png) + " --out-prefix " + quote(dir / "bands")) == 0, "dwt failed");
  check(run(quote(cli) + " idwt --in-prefix " + quote(dir / "bands") + " --out " + quote(back)) == 0, "idwt failed");
  if (fs::exists(back)) {
    check(io::read_png_raw(png.string()).samples == io::read_png_raw(back.string()).samples, "dwt/idwt not exact");
  }

  // Sampling is a pure function of checkpoint and seed.
  for (const char* s : {"s1", "s2"}) {
    check(run(quote(cli) + " sample --ckpt " + quote(first) + " --n 2 --psi 0.7 --seed 5 --out " + quote(dir / s)) == 0,
          "sample failed");
  }
  check(fs::exists(dir / "s1" / "sample_001.png") &&
            same_bytes(dir / "s1" / "sample_001.png", dir / "s2" / "sample_001.png") &&
            same_bytes(dir / "s1" / "sample_001.w.txt", dir / "s2" / "sample_001.w.txt"),
        "sample not reproducible");

  std::string detail = "train --seed 7 twice, checkpoint, png, dwt/idwt and sample round trips";
  for (const auto& f : failed) detail += "; " + f;
  return {failed.empty(), failed.empty() ? detail + " exact" : detail};
}

// ----------------------------------------------------------------- driver

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> ids;
  std::string cli;
  std::string workdir = "acceptance_work";
  app.add_option("--criterion", ids, "Criterion to run (repeatable); default all but 7")->check(CLI::Range(1, 9));
  app.add_option("--cli", cli, "Path of the swagan command-line binary (criterion 9)");
  app.add_option("--workdir", workdir, "Scratch directory for checkpoints and files");
  CLI11_PARSE(app, argc, argv);
  if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 8, 9};
  const fs::path work = fs::absolute(workdir);
  fs::create_directories(work);

  const std::vector<Criterion> all = {
      {1, "wavelet exactness", 60, wavelet_exactness},
      {2, "fft correctness", 60, fft_correctness},
      {3, "gradient suite", 300, gradient_suite},
      {4, "blur monotonicity", 120, blur_monotonicity},
      {5, "spectral-bias overfit", 1800, spectral_bias_overfit},
      {6, "throughput direction", 600, throughput_direction},
      {7, "ablation ordering", 8 * 3600, [&] { return ablation_ordering(work); }},
      {8, "self-inversion", 600, [&] { return self_inversion(work); }},
      {9, "reproducibility", 300, [&] { return reproducibility(work, cli); }},
  };
  bool all_pass = true;
  for (int id : ids) {
    const auto& c = all[static_cast<std::size_t>(id - 1)];
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool pass = o.pass && s <= c.limit_s;
    all_pass = all_pass && pass;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << " [" << c.name << "] " << o.detail
              << "; runtime " << fmt(s, 4) << " s (limit " << c.limit_s << " s)" << std::endl;
  }
  return all_pass ? 0 : 1;
}
