#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swagan/autograd.hpp"
#include "swagan/tensor.hpp"

namespace swagan {

/// Name -> tensor map that iterates in insertion order.
template <typename Real>
class TensorDict {
 public:
  using Entry = std::pair<std::string, Tensor<Real>>;

  void insert(std::string name, Tensor<Real> tensor) {
    if (index_.count(name)) throw ContractError("duplicate tensor name: " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(tensor));
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const Tensor<Real>& at(const std::string& name) const { return entries_[lookup(name)].second; }
  Tensor<Real>& at(const std::string& name) { return entries_[lookup(name)].second; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : entries_) out.push_back(n);
    return out;
  }

  /// Deep copy; requires_grad flags are preserved.
  TensorDict clone() const {
    TensorDict out;
    for (const auto& [n, t] : entries_) {
      auto c = t.detach();
      c.set_requires_grad(t.requires_grad());
      out.insert(n, std::move(c));
    }
    return out;
  }

  template <typename Other>
  TensorDict<Other> cast() const {
    TensorDict<Other> out;
    for (const auto& [n, t] : entries_) {
      auto c = t.template cast<Other>();
      c.set_requires_grad(t.requires_grad());
      out.insert(n, std::move(c));
    }
    return out;
  }

  /// Entries whose tensors are marked requires_grad.
  std::vector<std::string> trainable_names() const {
    std::vector<std::string> out;
    for (const auto& [n, t] : entries_)
      if (t.requires_grad()) out.push_back(n);
    return out;
  }

  std::vector<Tensor<Real>> trainable() const {
    std::vector<Tensor<Real>> out;
    for (const auto& [n, t] : entries_)
      if (t.requires_grad()) out.push_back(t);
    return out;
  }

  Index trainable_count() const {
    Index total = 0;
    for (const auto& [n, t] : entries_)
      if (t.requires_grad()) total += t.numel();
    return total;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("no tensor named '" + name + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Gradients of a scalar loss with respect to every trainable entry of
/// params, keyed by name. Entries the loss does not reach get zeros.
template <typename Real>
TensorDict<Real> backward(const Tensor<Real>& loss, const TensorDict<Real>& params) {
  const auto names = params.trainable_names();
  const auto tensors = params.trainable();
  auto grads = grad(loss, tensors);
  TensorDict<Real> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.insert(names[i], std::move(grads[i]));
  return out;
}

}  // namespace swagan
