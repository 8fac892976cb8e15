#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab {

/// Named learnable tensors in insertion order. Entries are handles, so a
/// store can be assembled from tensors owned elsewhere (model + loss params).
class ParamStore {
 public:
  /// Registers `tensor` under `name` and enables its grad. Throws on a
  /// duplicate name.
  Tensor add(const std::string& name, Tensor tensor);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t scalar_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Appends every entry of `other` (same handles).
  void extend(const ParamStore& other);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reverse-mode sweep from a scalar root. Every grad on the reachable graph is
/// overwritten (never accumulated across calls).
void backward(const Tensor& root);

/// As above, and additionally guarantees every parameter in `store` ends with
/// a fresh grad buffer (zeros when unreachable). Throws if no parameter of the
/// store is reachable from `root`.
void backward(const Tensor& root, ParamStore& store);

using NumericGradients = std::map<std::string, std::vector<double>>;

/// Central differences (f(p+h) - f(p-h)) / 2h for every entry of every
/// parameter. `f` is evaluated twice up front and must agree bitwise.
NumericGradients finite_diff_grad(const std::function<double(ParamStore&)>& f, ParamStore& store,
                                  double h = 1e-5);

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

/// Compares analytic grads (already filled by `backward`) to numeric ones.
/// Relative error per entry is |a - n| / max(|a|, |n|, floor).
std::vector<GradCheckEntry> compare_gradients(const ParamStore& store,
                                              const NumericGradients& numeric,
                                              double floor = 1e-6);

}  // namespace motionlab
