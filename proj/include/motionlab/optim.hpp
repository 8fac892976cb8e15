#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "motionlab/autodiff.hpp"

namespace motionlab {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamOptions&) const = default;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step_count = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;

  /// Zeroed moments for every parameter in `store`.
  static AdamState for_store(const ParamStore& store, AdamOptions options = {});
};

/// One bias-corrected Adam update of every parameter in `store` from its
/// current grad. Grads are left untouched.
void adam_step(ParamStore& store, AdamState& state);

}  // namespace motionlab
