#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "motionlab/data.hpp"
#include "motionlab/losses.hpp"
#include "motionlab/model.hpp"
#include "motionlab/optim.hpp"

namespace motionlab {

struct TrainingOptions {
  std::uint64_t steps = 2000;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 0;  // 0: only the final checkpoint

  bool operator==(const TrainingOptions&) const = default;
};

enum class DataSource { synthetic, paths, index };

struct DataOptions {
  DataSource source = DataSource::synthetic;
  SynthSpec synthetic;
  std::size_t n_sequences = 16;
  std::uint64_t synthetic_seed = 0;  // sequence i uses synthetic_seed + i
  std::vector<std::string> paths;
  std::string index;
  std::size_t stride = 1;
  double val_fraction = 0.2;
  std::optional<std::size_t> root_joint = 0;
  std::optional<double> target_fps;

  bool operator==(const DataOptions&) const = default;
};

struct EvalOptions {
  std::vector<int> horizons_ms = {80, 160, 320, 400, 560, 1000};
  std::vector<JitterWindow> jitter_windows = default_jitter_windows();

  bool operator==(const EvalOptions& o) const;
};

struct RunConfig {
  ModelConfig model;
  LossConfig loss;
  AdamOptions optimizer;
  TrainingOptions training;
  DataOptions data;
  EvalOptions eval;
  // Resolves relative data paths; not part of the serialized config.
  std::filesystem::path base_dir;

  /// Cross-section checks (horizons fit T_out, synthetic joints match the model, ...).
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// Strict parse: unknown keys and out-of-range values are errors; omitted
/// optional keys take their defaults. The `data` section is required.
RunConfig parse_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig parse_config(const std::filesystem::path& path);

}  // namespace motionlab
