#include "motionlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "motionlab/error.hpp"

namespace motionlab {

Tensor ParamStore::add(const std::string& name, Tensor tensor) {
  if (index_.count(name)) throw Error(ErrorKind::config, "duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(tensor));
  return entries_.back().second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorKind::config, "unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorKind::config, "unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamStore::extend(const ParamStore& other) {
  for (const auto& [name, t] : other) add(name, t);
}

namespace {

using detail::Node;

// Post-order over the tape (parents before children), iterative.
std::vector<Node*> topo_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

std::vector<Node*> run_backward(const Tensor& root) {
  if (root.numel() != 1) {
    throw Error(ErrorKind::gradient, "backward root must be a scalar, got shape " + shape_to_string(root.shape()));
  }
  if (!root.requires_grad()) throw Error(ErrorKind::gradient, "backward root does not depend on any parameter");
  auto order = topo_order(root.node().get());
  for (Node* n : order) n->grad.assign(n->value.size(), 0.0);
  root.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
  return order;
}

}  // namespace

void backward(const Tensor& root) { run_backward(root); }

void backward(const Tensor& root, ParamStore& store) {
  const auto order = run_backward(root);
  const std::unordered_set<Node*> reached(order.begin(), order.end());
  bool attached = false;
  for (auto& [name, t] : store) {
    if (reached.count(t.node().get())) {
      attached = true;
    } else {
      t.node()->grad.assign(t.numel(), 0.0);
    }
  }
  if (!attached && !store.empty()) {
    throw Error(ErrorKind::gradient, "backward root is detached from every parameter in the store");
  }
}

NumericGradients finite_diff_grad(const std::function<double(ParamStore&)>& f, ParamStore& store, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::domain, "finite difference step must be positive");
  const double first = f(store);
  const double second = f(store);
  if (!(first == second)) {
    throw Error(ErrorKind::gradient, "finite_diff_grad: objective is not deterministic");
  }
  NumericGradients out;
  for (auto& [name, t] : store) {
    auto values = t.mutable_data();
    std::vector<double> g(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double plus = f(store);
      values[i] = saved - h;
      const double minus = f(store);
      values[i] = saved;
      g[i] = (plus - minus) / (2.0 * h);
    }
    out.emplace(name, std::move(g));
  }
  return out;
}

std::vector<GradCheckEntry> compare_gradients(const ParamStore& store, const NumericGradients& numeric, double floor) {
  std::vector<GradCheckEntry> report;
  for (const auto& [name, t] : store) {
    auto it = numeric.find(name);
    if (it == numeric.end()) throw Error(ErrorKind::gradient, "no numeric gradient for '" + name + "'");
    if (!t.has_grad()) throw Error(ErrorKind::gradient, "no analytic gradient for '" + name + "'");
    GradCheckEntry entry{name};
    const auto analytic = t.grad();
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double a = analytic[i];
      const double n = it->second[i];
      const double diff = std::abs(a - n);
      const double denom = std::max({std::abs(a), std::abs(n), floor});
      entry.max_abs_error = std::max(entry.max_abs_error, diff);
      const double rel = diff / denom;
      // NaN must register as a failure.
      entry.max_rel_error = std::isnan(rel) ? rel : std::max(entry.max_rel_error, rel);
      if (std::isnan(entry.max_rel_error)) break;
    }
    report.push_back(entry);
  }
  return report;
}

}  // namespace motionlab
