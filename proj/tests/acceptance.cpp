// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion names
// (A1 ... A9) as arguments to run a subset. Exit status is non-zero if any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "motionlab/checkpoint.hpp"
#include "motionlab/config.hpp"
#include "motionlab/error.hpp"
#include "motionlab/harness.hpp"
#include "motionlab/ops.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace motionlab;
using oracle::Vec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const ModelConfig kToy{4, 5, 6, 8, 4, 2, 3};

// Shared between A3 and A4.
struct OverfitRun {
  TempDir dir;
  RunConfig cfg;
  TrainResult result;
  double seconds = 0.0;
  bool done = false;
};

OverfitRun& overfit_run() {
  static OverfitRun run;
  if (!run.done) {
    run.cfg = parse_config(fs::path(MOTIONLAB_SOURCE_DIR) / "configs" / "synthetic_overfit.json");
    const auto t0 = Clock::now();
    run.result = cmd_train(run.cfg, {run.dir.path, std::nullopt, nullptr});
    run.seconds = seconds_since(t0);
    run.done = true;
  }
  return run;
}

Outcome a1_gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_group;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GradcheckOptions opts;
    opts.model = kToy;
    const auto report = cmd_gradcheck(seed, opts);
    for (const auto& g : report.groups) {
      if (g.max_rel_error > worst) worst = g.max_rel_error, worst_group = g.name;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0,
          "20 seeds, max rel error " + num(worst) + " (" + worst_group + "), " + num(secs) + " s"};
}

Outcome a2_identities() {
  std::mt19937_64 gen(2);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Shape shape{6, 4, 3};
    const Tensor p = Tensor::create(shape, oracle::random_vec(gen, 72)), q = Tensor::create(shape, oracle::random_vec(gen, 72));
    const Tensor s = Tensor::create({6}, oracle::random_vec(gen, 6));
    const Vec e = oracle::frame_errors(p.to_vector(), q.to_vector(), 6, 4);
    double half_sum = 0.0, sum_e = 0.0;
    for (double v : e) half_sum += 0.5 * v, sum_e += v;
    worst = std::max(worst, std::abs(adaptive_loss(p, q, UncertaintyParams::neutral(6)).item() - half_sum));
    worst = std::max(worst, std::abs(salient_loss(p, q, 0.0).item() - sum_e));
    const double omega = 10.0 * (trial + 1);
    const UncertaintyParams u{s};
    worst = std::max(worst, std::abs(combined_loss(p, q, {1.0, omega, false}, u).item() - adaptive_loss(p, q, u).item()));
    worst = std::max(worst, std::abs(combined_loss(p, q, {0.0, omega, false}, u).item() - salient_loss(p, q, omega).item()));
  }
  return {worst <= 1e-12, "50 random cases, max deviation " + num(worst)};
}

Outcome a3_overfit() {
  auto& run = overfit_run();
  const double ratio = run.result.final_train_mpjpe_mm / run.result.initial_train_mpjpe_mm;
  return {ratio <= 0.10 && run.seconds < 300.0,
          "train MPJPE " + num(run.result.initial_train_mpjpe_mm) + " -> " + num(run.result.final_train_mpjpe_mm) +
              " mm (ratio " + num(ratio) + "), " + std::to_string(run.result.steps_run) + " steps in " +
              num(run.seconds) + " s"};
}

Outcome a4_zero_velocity() {
  auto& run = overfit_run();
  const Checkpoint ckpt = load_checkpoint(run.result.checkpoint, run.cfg.model);
  // Held-out sequences: same generator family, seeds never used in training.
  RunConfig held = run.cfg;
  held.data.synthetic_seed = 100000;
  held.data.val_fraction = 0.0;
  const Dataset ds = build_dataset(held);
  EvalOptions opts;
  opts.horizons_ms.clear();
  const double frame_ms = 1000.0 / ds.fps;
  for (std::size_t k = 1; k <= run.cfg.model.out_frames && k * frame_ms <= 400.0 + 1e-9; ++k) {
    opts.horizons_ms.push_back(static_cast<int>(std::lround(k * frame_ms)));
  }
  opts.jitter_windows.clear();
  const EvalResult r = evaluate_windows(ckpt.model, ds.train, ds.fps, ds.units, opts);
  double model = 0.0, base = 0.0;
  for (int h : opts.horizons_ms) model += r.model.mpjpe_by_horizon.at(h), base += r.zero_velocity.mpjpe_by_horizon.at(h);
  model /= static_cast<double>(opts.horizons_ms.size());
  base /= static_cast<double>(opts.horizons_ms.size());
  const double gain = 1.0 - model / base;
  return {gain >= 0.20, std::to_string(ds.train.size()) + " held-out windows, mean MPJPE <= 400 ms: model " + num(model) +
                            " mm vs zero-velocity " + num(base) + " mm (" + num(100.0 * gain) + "% lower)"};
}

Outcome a5_jitter() {
  std::mt19937_64 gen(5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec e = oracle::random_vec(gen, 5 + trial % 30, 0.0, 0.5);
    const double fps = trial % 2 ? 25.0 : 50.0;
    worst = std::max(worst, std::abs(jitter_from_errors(e, fps) - oracle::jitter(e, fps)));
  }
  bool zeros = true;
  for (std::size_t len = 5; len < 30; ++len) {
    Vec c(len), l(len), q(len);
    for (std::size_t t = 0; t < len; ++t) {
      c[t] = 0.7;
      l[t] = 0.25 + 0.5 * t;  // dyadic, so "exactly 0" is meaningful
      q[t] = 1.0 - 2.0 * t + 3.0 * t * t;
    }
    zeros = zeros && jitter_from_errors(c, 25) == 0.0 && jitter_from_errors(l, 25) == 0.0 &&
            jitter_from_errors(q, 25) == 0.0;
  }
  const double cubic = jitter_from_errors(Vec{0, 1, 8, 27, 64, 125}, 1.0);
  return {worst <= 1e-10 && zeros && cubic == 9.0,
          "100 random sequences max |diff| " + num(worst) + ", polynomial zeros " + (zeros ? "exact" : "NOT exact") +
              ", t^3 case " + num(cubic)};
}

Outcome a6_attention() {
  std::mt19937_64 gen(6);
  double worst_frame = 0.0, worst_sample = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Predictor p = init_model(kToy, trial);
    const auto& layer = p.blocks[trial % 2].saggb;
    const Tensor x = Tensor::create({kToy.in_frames, kToy.n_joints, kToy.feature_dim},
                                    oracle::random_vec(gen, kToy.in_frames * kToy.n_joints * kToy.feature_dim, -2, 2));
    for (std::size_t t = 0; t < kToy.in_frames; ++t) {
      const Tensor a = saggb_pose_graph(layer, reshape(slice(x, 0, t, 1), {kToy.n_joints, kToy.feature_dim}));
      for (std::size_t i = 0; i < kToy.n_joints; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < kToy.n_joints; ++j) row += a.at({i, j});
        worst_frame = std::max(worst_frame, std::abs(row - 1.0));
      }
    }
    const Tensor s = saggb_sample_graph(layer, x);
    for (std::size_t i = 0; i < kToy.n_joints; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < kToy.n_joints; ++j) row += s.at({i, j});
      worst_sample = std::max(worst_sample, std::abs(row - static_cast<double>(kToy.in_frames)));
    }
  }
  return {worst_frame <= 1e-9 && worst_sample <= 1e-8,
          "100 inputs, max |row - 1| " + num(worst_frame) + ", max |row - T_in| " + num(worst_sample)};
}

Outcome a7_param_count() {
  const ModelConfig full;  // N=22, T_in=10, T_out=25, C_f=128, 6 blocks, d_k=32, K=3
  const std::size_t count = param_count(init_model(full, 0));
  return {count < 1200000 && count == analytic_param_count(full),
          "default model has " + std::to_string(count) + " parameters (limit 1200000)"};
}

Outcome a8_determinism() {
  TempDir dir;
  RunConfig cfg = parse_config(fs::path(MOTIONLAB_SOURCE_DIR) / "configs" / "toy.json");
  cfg.training.steps = 30;
  cfg.training.checkpoint_every = 10;
  const auto a = cmd_train(cfg, {dir.path / "a", std::nullopt, nullptr});
  const auto b = cmd_train(cfg, {dir.path / "b", std::nullopt, nullptr});
  const bool identical = slurp(a.log) == slurp(b.log) && slurp(a.checkpoint) == slurp(b.checkpoint);

  // k = 10 then k' = 20 more, against the straight 30-step run.
  const auto c = cmd_train(cfg, {dir.path / "c", dir.path / "a" / "step_000010.ckpt", nullptr});
  const Checkpoint straight = load_checkpoint(a.checkpoint), resumed = load_checkpoint(c.checkpoint);
  double worst = 0.0;
  for (const auto& [name, t] : straight.model.params()) {
    const auto other = resumed.model.params().get(name).data();
    for (std::size_t i = 0; i < t.numel(); ++i) worst = std::max(worst, std::abs(t.data()[i] - other[i]));
  }
  for (std::size_t i = 0; i < straight.uncertainty.log_sigma.numel(); ++i) {
    worst = std::max(worst, std::abs(straight.uncertainty.log_sigma.data()[i] - resumed.uncertainty.log_sigma.data()[i]));
  }
  return {identical && worst <= 1e-12 && resumed.step == 30,
          std::string("repeated runs ") + (identical ? "byte-identical" : "DIFFER") + ", 10+20 resume vs 30 straight max |diff| " +
              num(worst)};
}

Outcome a9_round_trips() {
  TempDir dir;
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<std::size_t> frames(1, 60), joints(1, 25);
  bool exact = true;
  for (int i = 0; i < 50; ++i) {
    const std::size_t T = frames(gen), N = joints(gen);
    const MotionSequence s = make_sequence(oracle::random_vec(gen, T * N * 3, -3000, 3000), T, N, 25.0 + i,
                                           i % 2 ? Units::m : Units::mm);
    const fs::path path = dir.path / ("s" + std::to_string(i) + ".csv");
    save_sequence(s, path);
    const MotionSequence back = load_sequence(path);
    exact = exact && back.frames.to_vector() == s.frames.to_vector() && back.frames.shape() == s.frames.shape() &&
            back.fps == s.fps && back.units == s.units && back.joint_names == s.joint_names;
  }
  std::uniform_int_distribution<std::size_t> len(1, 80), small(1, 12);
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t T = len(gen), tin = small(gen), tout = small(gen), stride = small(gen);
    const MotionSequence s = make_sequence(Vec(T * 3, 0.0), T, 1, 25.0);
    const std::size_t expect = T < tin + tout ? 0 : (T - tin - tout) / stride + 1;
    if (window_split(s, tin, tout, stride).size() != expect) ++mismatches;
  }
  return {exact && mismatches == 0, std::string("50 sequences ") + (exact ? "bit-exact" : "DIFFER") +
                                        ", window counts " + std::to_string(500 - mismatches) + "/500 match"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1_gradients}, {"A2", a2_identities},   {"A3", a3_overfit},  {"A4", a4_zero_velocity}, {"A5", a5_jitter},
      {"A6", a6_attention}, {"A7", a7_param_count}, {"A8", a8_determinism}, {"A9", a9_round_trips}};
  std::set<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
