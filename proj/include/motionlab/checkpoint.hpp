#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "motionlab/config.hpp"
#include "motionlab/losses.hpp"
#include "motionlab/model.hpp"
#include "motionlab/optim.hpp"

namespace motionlab {

// Binary checkpoint layout (all integers and floats little-endian):
//
//   offset  size  field
//   0       8     magic "MLABCKPT"
//   8       4     u32 format version (kCheckpointVersion)
//   12      8     u64 header length H in bytes
//   20      H     UTF-8 JSON header: {"format_version", "step", "model",
//                 "run_config", "params": [{"name", "shape"}...],
//                 "uncertainty_frames", "adam": {"step_count", "lr", "beta1",
//                 "beta2", "epsilon"}}
//   20+H    ...   f64 payload, in order:
//                   model parameters in ParamStore order, each flattened
//                   row-major;
//                   the T_out log-uncertainties;
//                   Adam first moments, then second moments, each over the
//                   training store order (model parameters, then
//                   "loss.log_sigma").
//
// The header JSON is written in a fixed key order without whitespace so
// identical states produce identical bytes.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Predictor model;
  UncertaintyParams uncertainty;
  AdamState adam;
  RunConfig run_config;
  std::uint64_t step = 0;

  /// Model parameters followed by "loss.log_sigma" (shared handles).
  ParamStore training_store();
};

void save_checkpoint(Checkpoint& ckpt, const std::filesystem::path& path);

/// Reads and validates a checkpoint. With `expected_model`, a differing model
/// configuration is rejected.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected_model = std::nullopt);

}  // namespace motionlab
