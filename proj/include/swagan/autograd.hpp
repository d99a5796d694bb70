#pragma once

#include <algorithm>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "swagan/ops/basic.hpp"
#include "swagan/tensor.hpp"

namespace swagan {

/// The recorded operations reachable from a root tensor, in execution
/// order. Every operation appears after the operations producing its inputs.
template <typename Real>
class Tape {
 public:
  struct Entry {
    detail::TensorImpl<Real>* output;
    detail::Node<Real>* op;
  };

  explicit Tape(const Tensor<Real>& root) {
    if (!root.defined()) throw ContractError("Tape: undefined root tensor");
    std::unordered_set<const detail::TensorImpl<Real>*> seen;
    std::vector<detail::TensorImpl<Real>*> stack{root.impl()};
    while (!stack.empty()) {
      auto* impl = stack.back();
      stack.pop_back();
      if (!seen.insert(impl).second) continue;
      if (!impl->grad_fn) continue;
      entries_.push_back({impl, impl->grad_fn.get()});
      for (const auto& in : impl->grad_fn->inputs)
        if (in.defined() && in.requires_grad()) stack.push_back(in.impl());
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.op->sequence < b.op->sequence; });
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// d(root)/d(wrt[i]) for every requested tensor. Tensors the root does not
  /// depend on get zeros. With create_graph the returned gradients are
  /// themselves recorded and can be differentiated again.
  std::vector<Tensor<Real>> gradient(const Tensor<Real>& root, std::span<const Tensor<Real>> wrt,
                                     bool create_graph = false) const {
    if (root.numel() != 1) {
      throw ContractError("backward: loss must be a scalar, got shape " + to_string(root.shape()));
    }
    using Impl = detail::TensorImpl<Real>;
    std::unordered_set<const Impl*> targets;
    for (const auto& t : wrt) targets.insert(t.impl());

    // Which tensors lead to a requested target.
    std::unordered_map<const Impl*, bool> leads;
    auto leads_to_target = [&](const Tensor<Real>& t) {
      if (!t.defined() || !t.requires_grad()) return false;
      if (targets.count(t.impl())) return true;
      auto it = leads.find(t.impl());
      return it != leads.end() && it->second;
    };
    for (const auto& e : entries_) {
      bool any = targets.count(e.output) > 0;
      for (const auto& in : e.op->inputs) any = any || leads_to_target(in);
      leads[e.output] = any;
    }

    GradModeGuard mode(create_graph);
    std::unordered_map<const Impl*, Tensor<Real>> grads;
    auto accumulate = [&](const Tensor<Real>& key, Tensor<Real> g) {
      auto [it, inserted] = grads.try_emplace(key.impl(), g);
      if (!inserted) it->second = ops::add(it->second, g);
    };
    grads.emplace(root.impl(), Tensor<Real>::ones(root.shape()));

    for (auto e = entries_.rbegin(); e != entries_.rend(); ++e) {
      if (!leads[e->output]) continue;
      auto git = grads.find(e->output);
      if (git == grads.end()) continue;
      Tensor<Real> g = git->second;
      if (!targets.count(e->output)) grads.erase(git);
      const auto& inputs = e->op->inputs;
      std::vector<bool> needs(inputs.size());
      for (std::size_t i = 0; i < inputs.size(); ++i) needs[i] = leads_to_target(inputs[i]);
      auto input_grads = e->op->backward(g, needs);
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!needs[i] || !input_grads[i].defined()) continue;
        if (input_grads[i].shape() != inputs[i].shape()) {
          throw DimensionError(std::string("backward of ") + e->op->name + ": gradient shape " +
                               to_string(input_grads[i].shape()) + " != input shape " +
                               to_string(inputs[i].shape()));
        }
        accumulate(inputs[i], input_grads[i]);
      }
    }

    std::vector<Tensor<Real>> result;
    result.reserve(wrt.size());
    for (const auto& t : wrt) {
      auto it = grads.find(t.impl());
      result.push_back(it != grads.end() ? it->second : Tensor<Real>::zeros(t.shape()));
    }
    return result;
  }

 private:
  std::vector<Entry> entries_;
};

/// Gradient of a scalar with respect to each tensor in wrt.
template <typename Real>
std::vector<Tensor<Real>> grad(const Tensor<Real>& loss, std::span<const Tensor<Real>> wrt, bool create_graph = false) {
  return Tape<Real>(loss).gradient(loss, wrt, create_graph);
}

template <typename Real>
std::vector<Tensor<Real>> grad(const Tensor<Real>& loss, const std::vector<Tensor<Real>>& wrt,
                               bool create_graph = false) {
  return grad(loss, std::span<const Tensor<Real>>(wrt), create_graph);
}

template <typename Real>
Tensor<Real> grad(const Tensor<Real>& loss, const Tensor<Real>& wrt, bool create_graph = false) {
  return grad(loss, std::vector<Tensor<Real>>{wrt}, create_graph).front();
}

}  // namespace swagan
