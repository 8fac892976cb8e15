#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "motionlab/autodiff.hpp"
#include "motionlab/checkpoint.hpp"
#include "motionlab/config.hpp"
#include "motionlab/data.hpp"
#include "motionlab/losses.hpp"
#include "motionlab/model.hpp"

namespace motionlab {

// The model always runs in meters; data are converted on the way in and
// MPJPE is reported in millimeters.

struct Dataset {
  std::vector<WindowPair> train;
  std::vector<WindowPair> val;
  double fps = 25.0;
  Units units = Units::mm;
};

/// Loads or generates sequences, preprocesses them, cuts windows, and
/// splits train/val with the training seed.
Dataset build_dataset(const RunConfig& cfg);
/// Windows from one CSV sequence or a dataset index (by .json extension),
/// preprocessed as `cfg` says; no split.
Dataset load_windows(const RunConfig& cfg, const std::filesystem::path& data_path);

/// Stacks the windows at `indices` into batched [B, T, N, 3] tensors in meters.
std::pair<Tensor, Tensor> make_batch(const std::vector<WindowPair>& windows, const std::vector<std::size_t>& indices,
                                     Units units);

struct EvalResult {
  MetricsReport model;
  MetricsReport zero_velocity;

  /// {"model": {...}, "zero_velocity": {...}}
  std::string json() const;
  /// Plain-text table rendering the very same numbers.
  std::string table() const;
};

EvalResult evaluate_windows(const Predictor& predictor, const std::vector<WindowPair>& windows, double fps, Units units,
                            const EvalOptions& options);

struct TrainOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::filesystem::path> resume;
  std::ostream* echo = nullptr;  // copy of every log line, if set
};

struct TrainResult {
  double initial_train_mpjpe_mm = 0.0;
  double final_train_mpjpe_mm = 0.0;
  std::uint64_t steps_run = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
};

/// Log format (train.log): '#'-prefixed header/summary lines, then one line
/// per step with whitespace-separated columns
///   step loss adaptive salient mean_sigma batch_mpjpe_mm
/// where `step` counts completed optimizer steps. Summary lines:
///   # initial_train_mpjpe_mm <value>
///   # final_train_mpjpe_mm <value>
/// Checkpoints: step_NNNNNN.ckpt every `checkpoint_every` steps, final.ckpt
/// at the end.
TrainResult cmd_train(const RunConfig& cfg, const TrainOptions& options);

enum class EvalSplit { train, val, all };
EvalSplit eval_split_from_string(const std::string& text);

EvalResult cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, EvalSplit split,
                    const std::optional<std::filesystem::path>& data_override = std::nullopt);

/// Predicts T_out frames from the last T_in frames of `input` and writes
/// them as a sequence file. Output = last input frame + predicted motion.
void cmd_predict(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                 const std::filesystem::path& output);

using LossBuilder = std::function<Tensor(const Tensor& pred, const Tensor& target, const LossConfig& cfg,
                                         const UncertaintyParams& u)>;

struct GradcheckOptions {
  ModelConfig model{4, 5, 6, 8, 4, 2, 3};
  LossConfig loss;
  std::size_t batch = 2;
  double step = 1e-5;
  double tolerance = 1e-4;
  LossBuilder loss_fn;  // defaults to combined_loss
};

struct GradcheckReport {
  std::vector<GradCheckEntry> groups;  // every parameter, then loss.log_sigma
  double tolerance = 1e-4;
  bool passed() const;
  std::string text() const;
};

/// Random toy model and data from `seed`; analytic vs central-difference
/// gradients for every parameter group.
GradcheckReport cmd_gradcheck(std::uint64_t seed, const GradcheckOptions& options = {});

}  // namespace motionlab
