#include "motionlab/losses.hpp"

#include <cmath>

#include "json.hpp"
#include "motionlab/error.hpp"
#include "motionlab/ops.hpp"

namespace motionlab {

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::config, "loss.lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw Error(ErrorKind::config, "loss.omega must be a finite non-negative number, got " + std::to_string(omega));
  }
}

UncertaintyParams UncertaintyParams::neutral(std::size_t out_frames) {
  UncertaintyParams u{Tensor::zeros({out_frames})};
  u.log_sigma.set_requires_grad(true);
  return u;
}

std::vector<double> UncertaintyParams::sigma() const {
  std::vector<double> out;
  for (double s : log_sigma.data()) out.push_back(std::exp(s));
  return out;
}

namespace {

void check_pair(const Tensor& pred, const Tensor& target, const char* what) {
  if (pred.shape() != target.shape()) {
    throw Error(ErrorKind::shape, std::string(what) + ": prediction " + shape_to_string(pred.shape()) +
                                      " and target " + shape_to_string(target.shape()) + " differ");
  }
  if (pred.rank() != 3 && pred.rank() != 4) {
    throw Error(ErrorKind::shape, std::string(what) + ": expected [(B,) T, N, 3], got " + shape_to_string(pred.shape()));
  }
  if (pred.shape().back() != 3) throw Error(ErrorKind::shape, std::string(what) + ": last axis must hold 3 coordinates");
}

Tensor batch_mean(const Tensor& errors) {
  if (errors.rank() == 1) return errors;
  if (errors.rank() == 2) return mean(errors, 0);
  throw Error(ErrorKind::shape, "per-frame errors must be [T] or [B, T], got " + shape_to_string(errors.shape()));
}

std::vector<double> mean_frame_errors(const Tensor& pred, const Tensor& target) {
  return batch_mean(frame_errors(pred.detach(), target.detach())).to_vector();
}

double third_difference(std::span<const double> dx, std::size_t t) {
  return dx[t + 3] - 3.0 * dx[t + 2] + 3.0 * dx[t + 1] - dx[t];
}

}  // namespace

Tensor frame_errors(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "frame_errors");
  const Tensor dist = norm_last(sub(pred, target));  // [(B,) T, N]
  return mean(dist, dist.rank() - 1);
}

Tensor frame_errors_squared(const Tensor& pred, const Tensor& target) {
  check_pair(pred, target, "frame_errors_squared");
  const Tensor d = sub(pred, target);
  const Tensor sq = sum(square(d), d.rank() - 1);
  return mean(sq, sq.rank() - 1);
}

Tensor mpjpe(const Tensor& pred, const Tensor& target) { return mean_all(frame_errors(pred, target)); }

std::size_t horizon_frame(int horizon_ms, double fps, std::size_t out_frames) {
  const double exact = static_cast<double>(horizon_ms) * fps / 1000.0;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9) {
    throw Error(ErrorKind::config, "horizon " + std::to_string(horizon_ms) + "ms does not fall on a frame at " +
                                       std::to_string(fps) + " fps");
  }
  if (rounded < 1.0 || rounded > static_cast<double>(out_frames)) {
    throw Error(ErrorKind::config, "horizon " + std::to_string(horizon_ms) + "ms is outside the " +
                                       std::to_string(out_frames) + " predicted frames");
  }
  return static_cast<std::size_t>(rounded);
}

std::map<int, double> mpjpe_at_horizons(const Tensor& pred, const Tensor& target, double fps,
                                        const std::vector<int>& horizons_ms) {
  check_pair(pred, target, "mpjpe_at_horizons");
  const std::size_t out_frames = pred.dim(pred.rank() - 3);
  std::vector<std::size_t> frames;
  for (int h : horizons_ms) frames.push_back(horizon_frame(h, fps, out_frames));
  const auto e = mean_frame_errors(pred, target);
  std::map<int, double> out;
  for (std::size_t i = 0; i < horizons_ms.size(); ++i) out[horizons_ms[i]] = e[frames[i] - 1];
  return out;
}

Tensor adaptive_loss_from_errors(const Tensor& errors, const UncertaintyParams& u) {
  const Tensor e = batch_mean(errors);
  if (u.log_sigma.rank() != 1 || u.log_sigma.dim(0) != e.dim(0)) {
    throw Error(ErrorKind::shape, "adaptive_loss: " + std::to_string(e.dim(0)) + " frames but " +
                                      std::to_string(u.log_sigma.numel()) + " uncertainty parameters");
  }
  const Tensor precision_half = scale(exp(scale(u.log_sigma, -2.0)), 0.5);
  return sum_all(add(mul(precision_half, e), u.log_sigma));
}

Tensor salient_loss_from_errors(const Tensor& errors, double omega) {
  const Tensor e = batch_mean(errors);
  const auto frames = static_cast<double>(e.dim(0));
  return add(scale(sum_all(slice(e, 0, 0, 1)), omega * frames), sum_all(e));
}

Tensor adaptive_loss(const Tensor& pred, const Tensor& target, const UncertaintyParams& u, bool squared_norm) {
  return adaptive_loss_from_errors(squared_norm ? frame_errors_squared(pred, target) : frame_errors(pred, target), u);
}

Tensor salient_loss(const Tensor& pred, const Tensor& target, double omega) {
  return salient_loss_from_errors(frame_errors(pred, target), omega);
}

LossTerms combined_loss_terms(const Tensor& pred, const Tensor& target, const LossConfig& cfg, const UncertaintyParams& u) {
  cfg.validate();
  const Tensor e = frame_errors(pred, target);
  const Tensor adaptive = adaptive_loss_from_errors(cfg.adaptive_squared_norm ? frame_errors_squared(pred, target) : e, u);
  const Tensor salient = salient_loss_from_errors(e, cfg.omega);
  // The endpoints are exact: no 0 * x terms leak into the collapsed loss.
  Tensor total;
  if (cfg.lambda == 1.0) {
    total = adaptive;
  } else if (cfg.lambda == 0.0) {
    total = salient;
  } else {
    total = add(scale(adaptive, cfg.lambda), scale(salient, 1.0 - cfg.lambda));
  }
  return {total, adaptive, salient};
}

Tensor combined_loss(const Tensor& pred, const Tensor& target, const LossConfig& cfg, const UncertaintyParams& u) {
  return combined_loss_terms(pred, target, cfg, u).total;
}

double jitter_from_errors(std::span<const double> errors, double fps) {
  if (errors.size() < 5) {
    throw Error(ErrorKind::shape, "jitter needs samples dx[0..T] with T >= 4, got " + std::to_string(errors.size()) +
                                      " samples");
  }
  const std::size_t T = errors.size() - 1;
  double total = 0.0;
  for (std::size_t t = 0; t + 3 <= T; ++t) total += third_difference(errors, t);
  return fps * fps * fps / static_cast<double>(T - 3) * total;
}

double jitter_abs_from_errors(std::span<const double> errors, double fps) {
  if (errors.size() < 5) {
    throw Error(ErrorKind::shape, "jitter needs samples dx[0..T] with T >= 4, got " + std::to_string(errors.size()) +
                                      " samples");
  }
  const std::size_t T = errors.size() - 1;
  double total = 0.0;
  for (std::size_t t = 0; t + 3 <= T; ++t) total += std::abs(third_difference(errors, t));
  return fps * fps * fps / static_cast<double>(T - 3) * total;
}

double jitter(const Tensor& pred, const Tensor& target, double fps, double meters_per_unit) {
  auto e = mean_frame_errors(pred, target);
  for (auto& v : e) v *= meters_per_unit;
  return jitter_from_errors(e, fps);
}

std::string JitterWindow::label() const { return std::to_string(start_ms) + "-" + std::to_string(end_ms) + "ms"; }

std::vector<JitterWindow> default_jitter_windows() { return {{0, 1000}, {400, 1000}, {800, 1000}}; }

std::vector<double> window_samples(std::span<const double> frame_errs, double fps, const JitterWindow& window) {
  if (window.end_ms <= window.start_ms) throw Error(ErrorKind::config, "jitter window " + window.label() + " is empty");
  const std::size_t last = horizon_frame(window.end_ms, fps, frame_errs.size());
  const std::size_t first = window.start_ms == 0 ? 0 : horizon_frame(window.start_ms, fps, frame_errs.size());
  std::vector<double> out;
  for (std::size_t k = first; k <= last; ++k) out.push_back(k == 0 ? 0.0 : frame_errs[k - 1]);
  return out;
}

std::vector<double> window_errors(const Tensor& pred, const Tensor& target, double fps, const JitterWindow& window) {
  check_pair(pred, target, "window_errors");
  if (pred.rank() != 3) throw Error(ErrorKind::shape, "window_errors expects an unbatched [T, N, 3] prediction");
  const auto e = frame_errors(pred.detach(), target.detach()).to_vector();
  return window_samples(e, fps, window);
}

Tensor zero_velocity_baseline(const Tensor& obs, std::size_t out_frames) {
  if (obs.rank() != 3 && obs.rank() != 4) {
    throw Error(ErrorKind::shape, "zero_velocity_baseline: expected [(B,) T_in, N, 3], got " + shape_to_string(obs.shape()));
  }
  if (out_frames == 0) throw Error(ErrorKind::shape, "zero_velocity_baseline: out_frames must be positive");
  const std::size_t time_axis = obs.rank() - 3;
  const std::size_t T = obs.dim(time_axis);
  const Tensor last = slice(obs.detach(), time_axis, T - 1, 1);
  Shape target_shape = obs.shape();
  target_shape[time_axis] = out_frames;
  return add(Tensor::zeros(target_shape), last);
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [ms, v] : mpjpe_by_horizon) j["mpjpe@" + std::to_string(ms) + "ms"] = v;
  j["mpjpe_mean"] = mpjpe_mean;
  for (const auto& jv : jitter) {
    j["jitter@" + jv.window] = jv.literal;
    j["jitter_abs@" + jv.window] = jv.absolute;
  }
  j["n_windows"] = n_windows;
  return j.dump();
}

}  // namespace motionlab
