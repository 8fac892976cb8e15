#include "motionlab/optim.hpp"

#include <cmath>

#include "motionlab/error.hpp"

namespace motionlab {

AdamState AdamState::for_store(const ParamStore& store, AdamOptions options) {
  AdamState state;
  state.options = options;
  for (const auto& [name, t] : store) {
    state.first_moment.emplace(name, std::vector<double>(t.numel(), 0.0));
    state.second_moment.emplace(name, std::vector<double>(t.numel(), 0.0));
  }
  return state;
}

void adam_step(ParamStore& store, AdamState& state) {
  if (state.first_moment.size() != store.size() || state.second_moment.size() != store.size()) {
    throw Error(ErrorKind::config, "optimizer state does not match the parameter store");
  }
  for (auto& [name, t] : store) {
    if (!t.has_grad()) throw Error(ErrorKind::gradient, "adam_step: parameter '" + name + "' has no gradient");
    auto m = state.first_moment.find(name);
    auto v = state.second_moment.find(name);
    if (m == state.first_moment.end() || v == state.second_moment.end() || m->second.size() != t.numel()) {
      throw Error(ErrorKind::config, "optimizer state has no moments for '" + name + "'");
    }
  }

  const auto& o = state.options;
  const double step = static_cast<double>(state.step_count + 1);
  const double correction1 = 1.0 - std::pow(o.beta1, step);
  const double correction2 = 1.0 - std::pow(o.beta2, step);
  for (auto& [name, t] : store) {
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    auto g = t.grad();
    auto p = t.mutable_data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
  ++state.step_count;
}

}  // namespace motionlab
