#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab {

struct LossConfig {
  double lambda = 0.3;
  double omega = 10.0;
  // Use the mean squared joint distance inside the uncertainty-weighted term
  // instead of the mean joint distance.
  bool adaptive_squared_norm = false;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

/// Learnable per-output-frame log-uncertainties, s_t = log sigma_t.
struct UncertaintyParams {
  Tensor log_sigma;  // [T_out]

  /// s_t = 0 (sigma_t = 1) for every frame.
  static UncertaintyParams neutral(std::size_t out_frames);
  std::vector<double> sigma() const;
};

// per-frame errors

/// e_t = mean over joints of the Euclidean joint distance.
/// [(B,) T, N, 3] x2 -> [(B,) T].
Tensor frame_errors(const Tensor& pred, const Tensor& target);
/// Mean over joints of the squared joint distance.
Tensor frame_errors_squared(const Tensor& pred, const Tensor& target);

/// Mean per-joint position error over all frames (and batch entries).
Tensor mpjpe(const Tensor& pred, const Tensor& target);

/// 1-based predicted-frame index for a horizon in milliseconds. Throws when
/// the horizon does not land on a frame or lies beyond `out_frames`.
std::size_t horizon_frame(int horizon_ms, double fps, std::size_t out_frames);

/// Per-timestamp error at each horizon (averaged over batch entries).
std::map<int, double> mpjpe_at_horizons(const Tensor& pred, const Tensor& target, double fps,
                                        const std::vector<int>& horizons_ms);

// training objectives
// The `*_from_errors` forms take the per-frame error vector [T] directly;
// batched errors [B, T] are averaged over the batch first.

Tensor adaptive_loss_from_errors(const Tensor& errors, const UncertaintyParams& u);
Tensor salient_loss_from_errors(const Tensor& errors, double omega);

/// sum_t exp(-2 s_t) / 2 * e_t + s_t
Tensor adaptive_loss(const Tensor& pred, const Tensor& target, const UncertaintyParams& u, bool squared_norm = false);
/// omega * T_out * e_1 + sum_t e_t
Tensor salient_loss(const Tensor& pred, const Tensor& target, double omega);

struct LossTerms {
  Tensor total;
  Tensor adaptive;
  Tensor salient;
};

/// lambda * adaptive + (1 - lambda) * salient, with both terms kept.
LossTerms combined_loss_terms(const Tensor& pred, const Tensor& target, const LossConfig& cfg, const UncertaintyParams& u);
Tensor combined_loss(const Tensor& pred, const Tensor& target, const LossConfig& cfg, const UncertaintyParams& u);

// motion quality

/// fps^3 / (T - 3) * sum_{t=0}^{T-3} (dx[t+3] - 3 dx[t+2] + 3 dx[t+1] - dx[t])
/// over the samples dx[0..T] (so T = errors.size() - 1, which must be >= 4).
double jitter_from_errors(std::span<const double> errors, double fps);
/// Same with each third difference taken in absolute value.
double jitter_abs_from_errors(std::span<const double> errors, double fps);

/// Jitter of the per-frame error trajectory of one prediction, with the
/// predicted frames taken as dx[0..T_out-1]. Errors are converted to meters
/// with `meters_per_unit` before differencing.
double jitter(const Tensor& pred, const Tensor& target, double fps, double meters_per_unit = 1e-3);

struct JitterWindow {
  int start_ms = 0;
  int end_ms = 1000;
  std::string label() const;
};

std::vector<JitterWindow> default_jitter_windows();

/// Error samples for a time window. Sample k sits at k * 1000 / fps ms after
/// the last observed frame; k = 0 is that observed frame itself, whose error
/// is zero. Values are in the input's units. Unbatched [T, N, 3] inputs.
std::vector<double> window_errors(const Tensor& pred, const Tensor& target, double fps, const JitterWindow& window);
/// Same, from the per-frame errors e_1..e_T_out of one prediction.
std::vector<double> window_samples(std::span<const double> frame_errs, double fps, const JitterWindow& window);

// baselines and reports

/// Last observed frame repeated: [(B,) T_in, N, 3] -> [(B,) T_out, N, 3].
Tensor zero_velocity_baseline(const Tensor& obs, std::size_t out_frames);

struct JitterValue {
  std::string window;
  double literal = 0.0;
  double absolute = 0.0;
};

struct MetricsReport {
  std::map<int, double> mpjpe_by_horizon;  // horizon ms -> mm
  double mpjpe_mean = 0.0;                 // over every predicted frame
  std::vector<JitterValue> jitter;         // m/s^3
  std::size_t n_windows = 0;

  /// Flat object: "mpjpe@80ms", "mpjpe_mean", "jitter@0-1000ms",
  /// "jitter_abs@0-1000ms", "n_windows".
  std::string to_json() const;
};

}  // namespace motionlab
