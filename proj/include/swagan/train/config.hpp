#pragma once

// Training configuration files: UTF-8 lines "key = value", '#' starts a
// comment. Required keys: variant, d_variant, resolution, n_blocks, channels
// (comma list, lowest resolution first), latent_dim, lr, gamma, batch,
// steps, seed, dataset, out_dir. The canonical text produced by to_text is
// stored inside checkpoints so a checkpoint alone rebuilds its networks.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "swagan/nn/spec.hpp"

namespace swagan::train {

struct TrainConfig {
  std::string variant = "bi";
  std::string d_variant = "wavelet";
  nn::GeneratorSpec generator;
  nn::DiscriminatorSpec discriminator;
  Index resolution = 32;
  double lr = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double gamma = 1.0;
  Index r1_interval = 16;
  Index batch = 4;
  Index steps = 1000;
  std::uint64_t seed = 0;
  std::string dataset = "synthetic:gabor:count=64";
  std::string out_dir = "run";
  Index eval_interval = 0;  // 0: evaluate only after the last step
  Index eval_samples = 16;
  double psi_eval = 1.0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

inline std::vector<Index> parse_channels(const std::string& value) {
  std::vector<Index> out;
  std::istringstream is(value);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_number<Index>("channels", trim(item)));
  if (out.empty()) throw ConfigError("config key 'channels' is empty");
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/// Sets one key; unknown keys are a ConfigError. Specs are rebuilt by finalize.
inline void set_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "variant") c.variant = value;
  else if (key == "d_variant") c.d_variant = value;
  else if (key == "resolution") c.resolution = parse_number<Index>(key, value);
  else if (key == "n_blocks") c.generator.n_blocks = parse_number<Index>(key, value);
  else if (key == "channels") c.generator.channels = detail::parse_channels(value);
  else if (key == "latent_dim") c.generator.latent_dim = parse_number<Index>(key, value);
  else if (key == "mapping_layers") c.generator.mapping_layers = parse_number<Index>(key, value);
  else if (key == "lr") c.lr = parse_number<double>(key, value);
  else if (key == "beta1") c.beta1 = parse_number<double>(key, value);
  else if (key == "beta2") c.beta2 = parse_number<double>(key, value);
  else if (key == "gamma") c.gamma = parse_number<double>(key, value);
  else if (key == "r1_interval") c.r1_interval = parse_number<Index>(key, value);
  else if (key == "batch") c.batch = parse_number<Index>(key, value);
  else if (key == "steps") c.steps = parse_number<Index>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "dataset") c.dataset = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "eval_interval") c.eval_interval = parse_number<Index>(key, value);
  else if (key == "eval_samples") c.eval_samples = parse_number<Index>(key, value);
  else if (key == "psi_eval") c.psi_eval = parse_number<double>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Resolves variant names into the network specs and checks invariants.
inline void finalize(TrainConfig& c) {
  c.generator.variant = nn::parse_generator_variant(c.variant);
  c.discriminator = nn::mirror(c.generator, nn::parse_discriminator_variant(c.d_variant));
  nn::validate(c.generator);
  if (nn::output_resolution(c.generator) != c.resolution) {
    throw ConfigError("resolution " + std::to_string(c.resolution) + " does not match n_blocks " +
                      std::to_string(c.generator.n_blocks) + " (expected " +
                      std::to_string(nn::output_resolution(c.generator)) + ")");
  }
  if (c.steps <= 0) throw ConfigError("steps must be > 0");
  if (!(c.gamma >= 0)) throw ConfigError("gamma must be >= 0");
  if (c.r1_interval < 1) throw ConfigError("r1_interval must be >= 1");
  if (c.batch < 1) throw ConfigError("batch must be >= 1");
  if (!(c.lr > 0)) throw ConfigError("lr must be > 0");
  if (c.eval_interval < 0) throw ConfigError("eval_interval must be >= 0");
  if (c.eval_samples < 1) throw ConfigError("eval_samples must be >= 1");
}

inline const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys = {"variant", "d_variant", "resolution", "n_blocks", "channels",
                                                "latent_dim", "lr", "gamma", "batch", "steps", "seed",
                                                "dataset", "out_dir"};
  return keys;
}

/// Parses key = value text. overrides are applied after the file (flags win);
/// a required key may come from either.
inline TrainConfig parse_config(const std::string& text, const std::map<std::string, std::string>& overrides = {}) {
  TrainConfig c;
  std::map<std::string, bool> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    if (seen[key]) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    set_config_value(c, key, detail::trim(line.substr(eq + 1)));
    seen[key] = true;
  }
  for (const auto& [key, value] : overrides) {
    set_config_value(c, key, value);
    seen[key] = true;
  }
  for (const auto& key : required_keys())
    if (!seen[key]) throw ConfigError("config is missing required key '" + key + "'");
  finalize(c);
  return c;
}

inline TrainConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides = {}) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

/// Canonical text form; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const TrainConfig& c) {
  std::ostringstream os;
  os << "variant = " << c.variant << "\n"
     << "d_variant = " << c.d_variant << "\n"
     << "resolution = " << c.resolution << "\n"
     << "n_blocks = " << c.generator.n_blocks << "\n"
     << "channels = ";
  for (std::size_t i = 0; i < c.generator.channels.size(); ++i) os << (i ? "," : "") << c.generator.channels[i];
  os << "\n"
     << "latent_dim = " << c.generator.latent_dim << "\n"
     << "mapping_layers = " << c.generator.mapping_layers << "\n"
     << "lr = " << detail::format_double(c.lr) << "\n"
     << "beta1 = " << detail::format_double(c.beta1) << "\n"
     << "beta2 = " << detail::format_double(c.beta2) << "\n"
     << "gamma = " << detail::format_double(c.gamma) << "\n"
     << "r1_interval = " << c.r1_interval << "\n"
     << "batch = " << c.batch << "\n"
     << "steps = " << c.steps << "\n"
     << "seed = " << c.seed << "\n"
     << "dataset = " << c.dataset << "\n"
     << "out_dir = " << c.out_dir << "\n"
     << "eval_interval = " << c.eval_interval << "\n"
     << "eval_samples = " << c.eval_samples << "\n"
     << "psi_eval = " << detail::format_double(c.psi_eval) << "\n";
  return os.str();
}

}  // namespace swagan::train
