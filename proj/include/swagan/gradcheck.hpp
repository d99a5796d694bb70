#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "swagan/tensor_dict.hpp"

namespace swagan {

struct GradCheckOptions {
  double step = 1e-4;
  /// Coordinates checked per tensor; larger tensors are subsampled.
  Index max_coords_per_tensor = 64;
  /// Denominator floor of the relative error, so that near-zero gradients
  /// are compared in absolute terms.
  double floor = 1e-4;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0;
  Index coords_checked = 0;
  std::string worst;  // "name[index]" of the worst coordinate
};

/// Compares backward() against central differences (f(x+h) - f(x-h)) / 2h
/// on the trainable entries of params. f must be deterministic. It is
/// evaluated with recording enabled so that f may itself call grad().
template <typename Real>
GradCheckReport finite_diff_check(const std::function<Tensor<Real>(const TensorDict<Real>&)>& f,
                                  TensorDict<Real>& params, const GradCheckOptions& opt = {}) {
  const auto analytic = backward(f(params), params);
  std::mt19937_64 rng(opt.seed);
  GradCheckReport report;
  for (const auto& [name, g] : analytic) {
    Tensor<Real>& p = params.at(name);
    std::vector<Index> coords(static_cast<std::size_t>(p.numel()));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (static_cast<Index>(coords.size()) > opt.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(opt.max_coords_per_tensor));
    }
    auto pd = p.mutable_data();
    for (Index c : coords) {
      const Real saved = pd[c];
      pd[c] = static_cast<Real>(saved + opt.step);
      const double plus = static_cast<double>(f(params).item());
      pd[c] = static_cast<Real>(saved - opt.step);
      const double minus = static_cast<double>(f(params).item());
      pd[c] = saved;
      const double numeric = (plus - minus) / (2.0 * opt.step);
      const double a = static_cast<double>(g[c]);
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.floor});
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst = name + "[" + std::to_string(c) + "]";
      }
      ++report.coords_checked;
    }
  }
  return report;
}

}  // namespace swagan
