// swagan: command-line entry point. Exit codes: 0 success, 1 runtime error,
// 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "swagan/io/bands.hpp"
#include "swagan/io/dump.hpp"
#include "swagan/parallel.hpp"
#include "swagan/train.hpp"

namespace fs = std::filesystem;
using namespace swagan;

namespace {

std::vector<std::string> png_files(const std::string& path) {
  if (fs::is_regular_file(path)) return {path};
  if (!fs::is_directory(path)) throw IoError("no such file or directory: " + path);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ContractError(path + " contains no .png files");
  return files;
}

void write_latent(const std::string& path, const Tensor<float>& w) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<float>::max_digits10);
  for (Index i = 0; i < w.numel(); ++i) os << (i ? " " : "") << w[i];
  os << '\n';
  io::atomic_write(path, os.str());
}

Tensor<float> read_latent(const std::string& path, Index dim) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open latent file " + path);
  std::vector<float> v;
  float x;
  while (f >> x) v.push_back(x);
  if (!f.eof()) throw FormatError(path + ": latent files hold whitespace-separated numbers", 0);
  if (static_cast<Index>(v.size()) != dim) {
    throw DimensionError(path + ": latent has " + std::to_string(v.size()) + " entries, model expects " +
                         std::to_string(dim));
  }
  return Tensor<float>(Shape{1, dim}, std::move(v));
}

std::string numbered(const std::string& dir, const std::string& stem, Index i, const std::string& ext) {
  std::ostringstream os;
  os << stem << '_' << std::setw(3) << std::setfill('0') << i << ext;
  return (fs::path(dir) / os.str()).string();
}

nn::GeneratorSpec bench_spec(const std::string& name, Index res, const std::vector<Index>& channels) {
  nn::GeneratorSpec g;
  g.variant = nn::parse_generator_variant(name);
  Index n = 0;
  while (nn::output_resolution(n) < res) ++n;
  if (nn::output_resolution(n) != res || n < 1) {
    throw ConfigError("resolution must be 4 * 2^k with k >= 1, got " + std::to_string(res));
  }
  g.n_blocks = n;
  g.channels = channels.empty() ? nn::default_channels(n) : channels;
  nn::validate(g);
  return g;
}

const std::vector<std::string> kVariants = {"bi", "nu", "final", "pixel"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet-domain style GAN toolkit: transforms, spectra, training and diagnostics"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for batch-parallel ops (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  // dwt / idwt
  std::string in, out, prefix;
  auto* dwt = app.add_subcommand("dwt", "Haar DWT of a PNG into four band PNGs plus min/max sidecars");
  dwt->add_option("--in", in, "Input PNG")->required();
  dwt->add_option("--out-prefix", prefix, "Output prefix; writes PREFIX_{LL,LH,HL,HH}.png")->required();
  auto* idwt = app.add_subcommand("idwt", "Inverse of dwt: band PNGs back to one image");
  idwt->add_option("--in-prefix", prefix, "Prefix given to dwt")->required();
  idwt->add_option("--out", out, "Output PNG")->required();

  // spectrum / gap
  auto* spectrum = app.add_subcommand("spectrum", "Mean radial power spectrum of a directory of PNGs");
  spectrum->add_option("--in", in, "Directory of PNGs, or one PNG")->required();
  spectrum->add_option("--out", out, "Output CSV (bin,frequency,power)")->required();
  std::string model_csv, real_csv;
  auto* gap = app.add_subcommand("gap", "Per-bin spectrum gap |model - real| / real");
  gap->add_option("--model", model_csv, "Model spectrum CSV")->required();
  gap->add_option("--real", real_csv, "Real spectrum CSV")->required();
  gap->add_option("--out", out, "Output CSV (bin,frequency,gap)")->required();

  // train
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::map<std::string, std::string> flag_values;
  auto* train_cmd = app.add_subcommand("train", "Train a generator/discriminator pair from a config file");
  train_cmd->add_option("--config", config_path, "Config file (key = value lines)")->required();
  train_cmd->add_option("--out", flag_values["out_dir"], "Output directory (overrides out_dir)");
  for (const auto* key : {"variant", "d_variant", "resolution", "n_blocks", "channels", "latent_dim",
                          "mapping_layers", "lr", "beta1", "beta2", "gamma", "r1_interval", "batch", "steps",
                          "seed", "dataset", "eval_interval", "eval_samples", "psi_eval"}) {
    train_cmd->add_option(std::string("--") + key, flag_values[key], std::string("Overrides config key ") + key);
  }

  // overfit
  std::string variant = "bi", target;
  Index steps = 3000;
  double lr = 2e-3;
  std::uint64_t seed = 0;
  std::vector<Index> channels;
  auto* overfit = app.add_subcommand("overfit", "Fit a generator to one image from a fixed latent");
  overfit->add_option("--target", target, "Target PNG (square, power-of-two side)")->required();
  overfit->add_option("--variant", variant, "Generator variant")->check(CLI::IsMember(kVariants));
  overfit->add_option("--steps", steps, "Optimization steps")->check(CLI::NonNegativeNumber);
  overfit->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
  overfit->add_option("--channels", channels, "Block widths, lowest resolution first")->delimiter(',');
  overfit->add_option("--seed", seed, "Seed for initialization and the fixed latent");
  overfit->add_option("--out", out, "Optional CSV of per-step PSNR and band errors");
  Index eval_interval = 100;
  overfit->add_option("--eval-interval", eval_interval, "Steps between records")->check(CLI::NonNegativeNumber);

  // sample
  std::string ckpt;
  Index n = 8;
  double psi = 1.0;
  auto* sample = app.add_subcommand("sample", "Generate images (and their W latents) from a checkpoint");
  sample->add_option("--ckpt", ckpt, "Checkpoint")->required();
  sample->add_option("--n", n, "Number of images")->check(CLI::PositiveNumber);
  sample->add_option("--psi", psi, "Truncation (1 = none)");
  sample->add_option("--seed", seed, "Latent seed");
  sample->add_option("--out", out, "Output directory")->required();

  // project
  double lambda = 0.1;
  double project_lr = 0.1;
  Index project_steps = 1000;
  auto* project = app.add_subcommand("project", "Find the W latent that reproduces a target image");
  project->add_option("--ckpt", ckpt, "Checkpoint")->required();
  project->add_option("--target", target, "Target PNG")->required();
  project->add_option("--steps", project_steps, "Adam steps")->check(CLI::NonNegativeNumber);
  project->add_option("--lr", project_lr, "Adam learning rate")->check(CLI::PositiveNumber);
  project->add_option("--lambda", lambda, "Weight of the top-quartile spectral term");
  project->add_option("--out", prefix, "Output prefix; writes PREFIX.png and PREFIX.w.txt");

  // interp
  std::string wa_path, wb_path;
  Index frames = 8;
  auto* interp = app.add_subcommand("interp", "Frames along the straight line between two W latents");
  interp->add_option("--ckpt", ckpt, "Checkpoint")->required();
  interp->add_option("--wa", wa_path, "Start latent file")->required();
  interp->add_option("--wb", wb_path, "End latent file")->required();
  interp->add_option("--frames", frames, "Number of frames")->check(CLI::PositiveNumber);
  interp->add_option("--out", out, "Output directory");

  // bench
  std::string variant_a = "swagan-bi", variant_b = "pixel";
  Index res = 256, images = 1000, batch = 4;
  auto* bench = app.add_subcommand("bench", "Seconds per 1000 images of full training iterations, a vs b");
  bench->add_option("--a", variant_a, "First generator variant (bi, nu, final, pixel, nwd)");
  bench->add_option("--b", variant_b, "Second generator variant");
  bench->add_option("--res", res, "Output resolution");
  bench->add_option("--images", images, "Real images per measurement")->check(CLI::Range(Index{1000}, Index{1} << 40));
  bench->add_option("--batch", batch, "Batch size")->check(CLI::PositiveNumber);
  bench->add_option("--channels", channels, "Block widths shared by both, lowest resolution first")->delimiter(',');
  bench->add_option("--seed", seed, "Initialization seed");

  // dump
  Index size = 256;
  auto* dump = app.add_subcommand("dump", "Per-block wavelet bands of one sample as PNGs");
  dump->add_option("--ckpt", ckpt, "Checkpoint")->required();
  dump->add_option("--seed", seed, "Latent seed");
  dump->add_option("--out", out, "Output directory")->required();
  dump->add_option("--size", size, "Side of each band image")->check(CLI::PositiveNumber);
  dump->add_option("--psi", psi, "Truncation (1 = none)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    set_thread_count(threads);
    if (dwt->parsed()) {
      const auto img = io::load_png(in).cast<double>();
      io::write_band_pngs(prefix, wavelet::dwt2(ops::reshape(img, {1, 3, img.dim(1), img.dim(2)})));
    } else if (idwt->parsed()) {
      const auto img = wavelet::iwt2(io::read_band_pngs(prefix));
      io::save_png(out, ops::reshape(img, {3, img.dim(2), img.dim(3)}));
    } else if (spectrum->parsed()) {
      std::vector<Tensor<float>> imgs;
      for (const auto& f : png_files(in)) imgs.push_back(io::load_png(f));
      spectral::write_profile_csv(out, spectral::radial_power_spectrum(imgs));
    } else if (gap->parsed()) {
      const auto g = spectral::spectrum_gap(spectral::read_profile_csv(model_csv), spectral::read_profile_csv(real_csv));
      spectral::write_gap_csv(out, g);
      std::cout << "gap_topq " << spectral::top_quartile_mean(g) << '\n';
    } else if (train_cmd->parsed()) {
      for (const auto& [key, value] : flag_values)
        if (!value.empty()) overrides[key] = value;
      const auto config = train::load_config(config_path, overrides);
      const auto result = train::train_gan(config);
      const auto& last = result.report.records.back();
      std::cout << "checkpoint " << (fs::path(config.out_dir) / "checkpoint.swgk").string() << "\n"
                << "images_seen " << last.images_seen << "\ngap_topq " << last.gap_topq << '\n';
    } else if (overfit->parsed()) {
      train::OverfitOptions o;
      o.variant = nn::parse_generator_variant(variant);
      o.steps = steps;
      o.lr = lr;
      o.seed = seed;
      o.channels = channels;
      o.eval_interval = eval_interval;
      const auto r = train::train_overfit(io::load_png(target), o);
      if (!out.empty()) train::write_overfit_csv(out, r.records);
      const auto& last = r.records.back();
      std::cout << "params " << r.param_count << "\npsnr " << last.psnr << "\nbest_psnr "
                << train::psnr_from_mse(r.best_loss) << "\nmse_ll " << last.band_mse[0] << "\nmse_lh "
                << last.band_mse[1] << "\nmse_hl " << last.band_mse[2] << "\nmse_hh " << last.band_mse[3] << '\n';
    } else if (sample->parsed()) {
      const auto m = train::load_model(ckpt);
      const auto& spec = m.config.generator;
      fs::create_directories(out);
      std::mt19937_64 rng(seed);
      NoGradGuard no_grad;
      const Index r = nn::output_resolution(spec);
      for (Index i = 0; i < n; ++i) {
        const auto w = nn::truncate(m.g, nn::mapping_forward(m.g, spec, nn::sample_latents<float>(1, spec.latent_dim, rng)), psi);
        io::save_png(numbered(out, "sample", i, ".png"),
                     ops::reshape(nn::synthesis_forward(m.g, spec, w).image, {3, r, r}));
        write_latent(numbered(out, "sample", i, ".w.txt"), w);
      }
    } else if (project->parsed()) {
      const auto m = train::load_model(ckpt);
      const auto r = train::project_latent(m.g, m.config.generator, io::load_png(target),
                                           {.steps = project_steps, .lr = project_lr, .lambda = lambda});
      if (prefix.empty()) prefix = fs::path(target).replace_extension("").string() + "_projected";
      io::save_png(prefix + ".png", r.reconstruction);
      write_latent(prefix + ".w.txt", r.w);
      std::cout << "psnr " << r.psnr << "\nloss " << r.loss << "\nlatent " << prefix << ".w.txt\n";
    } else if (interp->parsed()) {
      const auto m = train::load_model(ckpt);
      const auto& spec = m.config.generator;
      const auto seq = train::interpolate_latents(m.g, spec, read_latent(wa_path, spec.latent_dim),
                                                  read_latent(wb_path, spec.latent_dim), frames);
      if (out.empty()) out = "interp";
      fs::create_directories(out);
      for (std::size_t i = 0; i < seq.size(); ++i) io::save_png(numbered(out, "frame", static_cast<Index>(i), ".png"), seq[i]);
    } else if (bench->parsed()) {
      const auto ga = bench_spec(variant_a, res, channels);
      const auto gb = bench_spec(variant_b, res, channels);
      const auto c = train::compare_throughput(ga, nn::mirror(ga, nn::default_discriminator(variant_a)), gb,
                                               nn::mirror(gb, nn::default_discriminator(variant_b)), batch, images,
                                               seed);
      std::cout << "a " << variant_a << " seconds_per_1k " << c.a.seconds_per_1k << " macs " << c.a.macs << '\n'
                << "b " << variant_b << " seconds_per_1k " << c.b.seconds_per_1k << " macs " << c.b.macs << '\n'
                << "ratio " << c.speedup << '\n'
                << "flop_ratio " << c.flop_ratio << '\n';
    } else if (dump->parsed()) {
      const auto m = train::load_model(ckpt);
      const auto paths = io::dump_intermediates(m.g, m.config.generator, seed, out, size, psi);
      std::cout << "wrote " << paths.size() << " band images to " << out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
