#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "swagan/error.hpp"

namespace swagan {

using Index = std::int64_t;
using Shape = std::vector<Index>;

inline Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename Real>
class Tensor;

namespace detail {

template <typename Real>
struct Node;

template <typename Real>
struct TensorImpl {
  Shape shape;
  std::vector<Real> data;
  bool requires_grad = false;
  std::shared_ptr<Node<Real>> grad_fn;
};

inline std::uint64_t next_sequence() {
  thread_local std::uint64_t counter = 0;
  return ++counter;
}

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// Whether differentiable operations are currently recorded.
struct GradMode {
  static bool enabled() { return detail::grad_mode_flag(); }
  static void set(bool on) { detail::grad_mode_flag() = on; }
};

/// Restores the previous recording mode on destruction.
class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled) : previous_(GradMode::enabled()) { GradMode::set(enabled); }
  ~GradModeGuard() { GradMode::set(previous_); }
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

class NoGradGuard : public GradModeGuard {
 public:
  NoGradGuard() : GradModeGuard(false) {}
};

/// Dense row-major array of Real with optional gradient tracking.
///
/// Copies share storage: a Tensor is a handle. Values produced by a recorded
/// operation remember the operation that created them so that gradients can
/// flow back to leaves marked with requires_grad.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  Tensor(Shape shape, std::vector<Real> data) : impl_(std::make_shared<detail::TensorImpl<Real>>()) {
    if (swagan::numel(shape) != static_cast<Index>(data.size())) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + to_string(shape));
    }
    for (Index d : shape) {
      if (d < 0) throw DimensionError("negative dimension in shape " + to_string(shape));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
  }

  static Tensor zeros(const Shape& shape) { return Tensor(shape, std::vector<Real>(swagan::numel(shape), Real(0))); }
  static Tensor ones(const Shape& shape) { return full(shape, Real(1)); }
  static Tensor full(const Shape& shape, Real value) {
    return Tensor(shape, std::vector<Real>(swagan::numel(shape), value));
  }
  static Tensor scalar(Real value) { return Tensor(Shape{}, std::vector<Real>{value}); }

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  Index dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t rank() const { return impl_->shape.size(); }
  Index numel() const { return static_cast<Index>(impl_->data.size()); }

  std::span<const Real> data() const { return impl_->data; }
  /// In-place access. Only meaningful for leaves; recorded operations keep
  /// references to their inputs, so mutating an input invalidates its graph.
  std::span<Real> mutable_data() { return impl_->data; }
  const std::vector<Real>& values() const { return impl_->data; }

  Real item() const {
    if (numel() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
    return impl_->data[0];
  }
  Real operator[](Index i) const { return impl_->data[static_cast<std::size_t>(i)]; }

  /// True when this tensor is a tracked leaf or the output of a recorded op.
  bool requires_grad() const { return impl_ && (impl_->requires_grad || impl_->grad_fn != nullptr); }
  bool is_leaf() const { return impl_->grad_fn == nullptr; }

  Tensor& set_requires_grad(bool on) {
    if (impl_->grad_fn) throw ContractError("requires_grad can only be set on leaf tensors");
    impl_->requires_grad = on;
    return *this;
  }

  /// Fresh leaf holding a copy of the values.
  Tensor detach() const { return Tensor(shape(), impl_->data); }
  Tensor clone() const { return detach(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape(), std::vector<Other>(impl_->data.begin(), impl_->data.end()));
  }

  const void* id() const noexcept { return impl_.get(); }
  const std::shared_ptr<detail::Node<Real>>& grad_fn() const { return impl_->grad_fn; }
  detail::TensorImpl<Real>* impl() const noexcept { return impl_.get(); }

 private:
  template <typename R>
  friend Tensor<R> record_op(Shape, std::vector<R>, const char*, std::vector<Tensor<R>>,
                             typename detail::Node<R>::BackwardFn);

  std::shared_ptr<detail::TensorImpl<Real>> impl_;
};

namespace detail {

template <typename Real>
struct Node {
  /// Receives the gradient of the op's output and a mask of which inputs
  /// need a gradient; returns one tensor per input (undefined when unneeded).
  using BackwardFn =
      std::function<std::vector<Tensor<Real>>(const Tensor<Real>& grad, const std::vector<bool>& needs)>;

  const char* name = "";
  std::uint64_t sequence = 0;
  std::vector<Tensor<Real>> inputs;
  BackwardFn backward;
};

}  // namespace detail

/// Wraps freshly computed values as the output of a differentiable op. The op
/// is recorded only when grad mode is on and some input requires a gradient.
template <typename Real>
Tensor<Real> record_op(Shape shape, std::vector<Real> data, const char* name, std::vector<Tensor<Real>> inputs,
                       typename detail::Node<Real>::BackwardFn backward) {
  Tensor<Real> out(std::move(shape), std::move(data));
  if (!GradMode::enabled()) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor<Real>& t) {
    return t.defined() && t.requires_grad();
  });
  if (!any) return out;
  auto node = std::make_shared<detail::Node<Real>>();
  node->name = name;
  node->sequence = detail::next_sequence();
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  out.impl_->grad_fn = std::move(node);
  return out;
}

template <typename Real>
void require_same_shape(const Tensor<Real>& a, const Tensor<Real>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

template <typename Real>
void require_rank(const Tensor<Real>& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         to_string(t.shape()));
  }
}

}  // namespace swagan
