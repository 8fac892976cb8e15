#include "motionlab/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "motionlab/error.hpp"
#include "motionlab/ops.hpp"
#include "motionlab/optim.hpp"
#include "motionlab/rng.hpp"

namespace motionlab {

namespace fs = std::filesystem;

namespace {

// Independent random streams derived from the training seed.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::size_t kEvalChunk = 64;
constexpr const char* kSigmaName = "loss.log_sigma";

std::string fmt(double v, int digits = 17) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

MotionSequence preprocess(MotionSequence seq, const RunConfig& cfg) {
  if (cfg.data.target_fps) seq = downsample(seq, *cfg.data.target_fps);
  if (cfg.data.root_joint) seq = remove_global_translation(seq, *cfg.data.root_joint);
  return seq;
}

struct Loaded {
  std::vector<MotionSequence> sequences;
  std::vector<std::string> ids;
};

Dataset cut_windows(const Loaded& loaded, const RunConfig& cfg) {
  Dataset ds;
  if (loaded.sequences.empty()) throw Error(ErrorKind::data, "no sequences to train or evaluate on");
  ds.fps = loaded.sequences.front().fps;
  ds.units = loaded.sequences.front().units;
  for (std::size_t i = 0; i < loaded.sequences.size(); ++i) {
    const auto& seq = loaded.sequences[i];
    if (seq.n_joints() != cfg.model.n_joints) {
      throw Error(ErrorKind::data, loaded.ids[i] + " has " + std::to_string(seq.n_joints()) + " joints, model expects " +
                                       std::to_string(cfg.model.n_joints));
    }
    if (std::abs(seq.fps - ds.fps) > 1e-9 || seq.units != ds.units) {
      throw Error(ErrorKind::data, loaded.ids[i] + " disagrees with the first sequence on fps or units");
    }
    auto pairs = window_split(seq, cfg.model.in_frames, cfg.model.out_frames, cfg.data.stride, loaded.ids[i]);
    for (auto& p : pairs) ds.train.push_back(std::move(p));
  }
  return ds;
}

Loaded load_from_path(const RunConfig& cfg, const fs::path& path) {
  Loaded loaded;
  if (path.extension() == ".json") {
    for (const auto& entry : load_index(path)) {
      loaded.sequences.push_back(preprocess(load_sequence(entry.path), cfg));
      loaded.ids.push_back(entry.action.empty() ? entry.path.string() : entry.action + ":" + entry.path.string());
    }
  } else {
    loaded.sequences.push_back(preprocess(load_sequence(path), cfg));
    loaded.ids.push_back(path.string());
  }
  return loaded;
}

Loaded load_configured(const RunConfig& cfg) {
  Loaded loaded;
  switch (cfg.data.source) {
    case DataSource::synthetic:
      for (std::size_t i = 0; i < cfg.data.n_sequences; ++i) {
        loaded.sequences.push_back(preprocess(synth_generate(cfg.data.synthetic, cfg.data.synthetic_seed + i), cfg));
        loaded.ids.push_back("synthetic-" + std::to_string(i));
      }
      break;
    case DataSource::paths:
      for (const auto& p : cfg.data.paths) {
        auto part = load_from_path(cfg, cfg.base_dir / p);
        for (std::size_t i = 0; i < part.sequences.size(); ++i) {
          loaded.sequences.push_back(std::move(part.sequences[i]));
          loaded.ids.push_back(std::move(part.ids[i]));
        }
      }
      break;
    case DataSource::index: loaded = load_from_path(cfg, cfg.base_dir / cfg.data.index); break;
  }
  return loaded;
}

std::vector<double> zero_vector(std::size_t n) { return std::vector<double>(n, 0.0); }

struct TrainState {
  Checkpoint ckpt;
  ParamStore store;
};

void write_line(std::ofstream& log, std::ostream* echo, const std::string& line) {
  log << line << '\n';
  if (echo) *echo << line << '\n';
}

std::string step_checkpoint_name(std::uint64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06llu.ckpt", static_cast<unsigned long long>(step));
  return buf;
}

bool same_except_schedule(RunConfig a, RunConfig b) {
  a.training.steps = b.training.steps;
  a.training.checkpoint_every = b.training.checkpoint_every;
  return a.to_json() == b.to_json();
}

}  // namespace

Dataset build_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset ds = cut_windows(load_configured(cfg), cfg);
  if (ds.train.empty()) throw Error(ErrorKind::data, "sequences are too short for a single training window");
  if (cfg.data.val_fraction > 0.0) {
    auto [train, val] = split_train_val(std::move(ds.train), 1.0 - cfg.data.val_fraction,
                                        Rng(cfg.training.seed, kSplitStream).below(UINT64_MAX));
    ds.train = std::move(train);
    ds.val = std::move(val);
  }
  if (ds.train.empty()) throw Error(ErrorKind::data, "training split is empty");
  return ds;
}

Dataset load_windows(const RunConfig& cfg, const fs::path& data_path) {
  return cut_windows(load_from_path(cfg, data_path), cfg);
}

std::pair<Tensor, Tensor> make_batch(const std::vector<WindowPair>& windows, const std::vector<std::size_t>& indices,
                                     Units units) {
  if (indices.empty()) throw Error(ErrorKind::data, "empty batch");
  const double k = meters_per_unit(units);
  const Shape obs_shape = windows[indices[0]].obs.shape();
  const Shape tgt_shape = windows[indices[0]].target.shape();
  std::vector<double> obs, tgt;
  obs.reserve(indices.size() * shape_numel(obs_shape));
  tgt.reserve(indices.size() * shape_numel(tgt_shape));
  for (auto i : indices) {
    for (double v : windows[i].obs.data()) obs.push_back(v * k);
    for (double v : windows[i].target.data()) tgt.push_back(v * k);
  }
  Shape bo = obs_shape, bt = tgt_shape;
  bo.insert(bo.begin(), indices.size());
  bt.insert(bt.begin(), indices.size());
  return {Tensor::create(bo, std::move(obs)), Tensor::create(bt, std::move(tgt))};
}

namespace {

struct Accumulator {
  std::vector<double> frame_sum;  // meters
  std::vector<double> jitter_sum;
  std::vector<double> jitter_abs_sum;
  std::size_t count = 0;

  void add(std::span<const double> errors_m, double fps, const EvalOptions& options) {
    if (frame_sum.empty()) {
      frame_sum = zero_vector(errors_m.size());
      jitter_sum = zero_vector(options.jitter_windows.size());
      jitter_abs_sum = zero_vector(options.jitter_windows.size());
    }
    for (std::size_t t = 0; t < errors_m.size(); ++t) frame_sum[t] += errors_m[t];
    for (std::size_t w = 0; w < options.jitter_windows.size(); ++w) {
      const auto samples = window_samples(errors_m, fps, options.jitter_windows[w]);
      jitter_sum[w] += jitter_from_errors(samples, fps);
      jitter_abs_sum[w] += jitter_abs_from_errors(samples, fps);
    }
    ++count;
  }

  MetricsReport report(double fps, const EvalOptions& options) const {
    MetricsReport r;
    r.n_windows = count;
    const double n = static_cast<double>(count);
    double total = 0.0;
    for (double v : frame_sum) total += v / n;
    r.mpjpe_mean = 1000.0 * total / static_cast<double>(frame_sum.size());
    for (int h : options.horizons_ms) {
      r.mpjpe_by_horizon[h] = 1000.0 * frame_sum[horizon_frame(h, fps, frame_sum.size()) - 1] / n;
    }
    for (std::size_t w = 0; w < options.jitter_windows.size(); ++w) {
      r.jitter.push_back({options.jitter_windows[w].label(), jitter_sum[w] / n, jitter_abs_sum[w] / n});
    }
    return r;
  }
};

}  // namespace

EvalResult evaluate_windows(const Predictor& predictor, const std::vector<WindowPair>& windows, double fps, Units units,
                            const EvalOptions& options) {
  if (windows.empty()) throw Error(ErrorKind::data, "no windows to evaluate");
  const std::size_t out_frames = predictor.config().out_frames;
  // Fail before doing any work on an unusable horizon or window.
  for (int h : options.horizons_ms) horizon_frame(h, fps, out_frames);
  for (const auto& w : options.jitter_windows) {
    const auto probe = window_samples(zero_vector(out_frames), fps, w);
    if (probe.size() < 5) throw Error(ErrorKind::config, "jitter window " + w.label() + " spans fewer than 4 frames");
  }

  Accumulator model_acc, base_acc;
  for (std::size_t first = 0; first < windows.size(); first += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, windows.size() - first);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), first);
    auto [obs, target] = make_batch(windows, idx, units);
    const Tensor pred = predict(predictor, obs).detach();
    const Tensor base = zero_velocity_baseline(obs, out_frames);
    const auto pe = frame_errors(pred, target).to_vector();
    const auto be = frame_errors(base, target).to_vector();
    for (std::size_t b = 0; b < count; ++b) {
      model_acc.add(std::span<const double>(pe).subspan(b * out_frames, out_frames), fps, options);
      base_acc.add(std::span<const double>(be).subspan(b * out_frames, out_frames), fps, options);
    }
  }
  return {model_acc.report(fps, options), base_acc.report(fps, options)};
}

std::string EvalResult::json() const {
  return "{\"model\":" + model.to_json() + ",\"zero_velocity\":" + zero_velocity.to_json() + "}";
}

std::string EvalResult::table() const {
  auto num = [](double v) { return nlohmann::json(v).dump(); };
  std::ostringstream out;
  out << "predictor";
  for (const auto& [ms, v] : model.mpjpe_by_horizon) out << "\tmpjpe@" << ms << "ms";
  out << "\tmpjpe_mean";
  for (const auto& j : model.jitter) out << "\tjitter@" << j.window << "\tjitter_abs@" << j.window;
  out << '\n';
  for (const auto* r : {&model, &zero_velocity}) {
    out << (r == &model ? "model" : "zero_velocity");
    for (const auto& [ms, v] : r->mpjpe_by_horizon) out << '\t' << num(v);
    out << '\t' << num(r->mpjpe_mean);
    for (const auto& j : r->jitter) out << '\t' << num(j.literal) << '\t' << num(j.absolute);
    out << '\n';
  }
  return out.str();
}

TrainResult cmd_train(const RunConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  const Dataset ds = build_dataset(cfg);
  fs::create_directories(options.out_dir);

  Checkpoint ckpt{init_model(cfg.model, cfg.training.seed), UncertaintyParams::neutral(cfg.model.out_frames), {}, cfg, 0};
  if (options.resume) {
    Checkpoint loaded = load_checkpoint(*options.resume, cfg.model);
    if (!same_except_schedule(loaded.run_config, cfg)) {
      throw Error(ErrorKind::checkpoint, "checkpoint was trained with a different configuration");
    }
    if (loaded.step > cfg.training.steps) {
      throw Error(ErrorKind::checkpoint, "checkpoint is already past training.steps");
    }
    ckpt.model = std::move(loaded.model);
    ckpt.uncertainty = loaded.uncertainty;
    ckpt.adam = std::move(loaded.adam);
    ckpt.adam.options = cfg.optimizer;
    ckpt.step = loaded.step;
  }
  ckpt.run_config = cfg;
  ParamStore store = ckpt.training_store();
  if (!options.resume) ckpt.adam = AdamState::for_store(store, cfg.optimizer);

  TrainResult result;
  result.log = options.out_dir / "train.log";
  std::ofstream log(result.log, std::ios::binary);
  if (!log) throw Error(ErrorKind::io, "cannot write " + result.log.string());
  write_line(log, options.echo,
             "# motionlab train: " + std::to_string(ds.train.size()) + " train windows, " +
                 std::to_string(ds.val.size()) + " val windows, " + std::to_string(param_count(ckpt.model)) + " parameters");
  if (options.resume) write_line(log, options.echo, "# resumed_from_step " + std::to_string(ckpt.step));
  write_line(log, options.echo, "# step loss adaptive salient mean_sigma batch_mpjpe_mm");

  result.initial_train_mpjpe_mm = evaluate_windows(ckpt.model, ds.train, ds.fps, ds.units, {{}, {}}).model.mpjpe_mean;
  write_line(log, options.echo, "# initial_train_mpjpe_mm " + fmt(result.initial_train_mpjpe_mm));

  const std::size_t n = ds.train.size();
  std::vector<std::size_t> order(n);
  while (ckpt.step < cfg.training.steps) {
    // The batch depends only on (seed, step), so a resumed run draws the same
    // batches as an uninterrupted one.
    Rng rng(cfg.training.seed, kBatchStream + 1000003ULL * (ckpt.step + 1));
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> batch;
    if (cfg.training.batch_size <= n) {
      for (std::size_t i = 0; i < cfg.training.batch_size; ++i) {
        std::swap(order[i], order[i + rng.below(n - i)]);
        batch.push_back(order[i]);
      }
    } else {
      for (std::size_t i = 0; i < cfg.training.batch_size; ++i) batch.push_back(rng.below(n));
    }

    auto [obs, target] = make_batch(ds.train, batch, ds.units);
    Tensor pred;
    LossTerms terms;
    double loss = 0.0;
    try {
      pred = predict(ckpt.model, obs);
      terms = combined_loss_terms(pred, target, cfg.loss, ckpt.uncertainty);
      loss = terms.total.item();
      if (!std::isfinite(loss)) throw Error(ErrorKind::numeric, "loss is not finite");
      backward(terms.total, store);
      adam_step(store, ckpt.adam);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numeric) throw;
      throw Error(ErrorKind::numeric, "training diverged at step " + std::to_string(ckpt.step + 1) + ": " + e.what());
    }
    ++ckpt.step;

    const auto sigma = ckpt.uncertainty.sigma();
    const double mean_sigma = std::accumulate(sigma.begin(), sigma.end(), 0.0) / static_cast<double>(sigma.size());
    const double batch_mpjpe = 1000.0 * mpjpe(pred.detach(), target).item();
    write_line(log, options.echo,
               std::to_string(ckpt.step) + ' ' + fmt(loss) + ' ' + fmt(terms.adaptive.item()) + ' ' +
                   fmt(terms.salient.item()) + ' ' + fmt(mean_sigma) + ' ' + fmt(batch_mpjpe));

    if (cfg.training.checkpoint_every && ckpt.step % cfg.training.checkpoint_every == 0) {
      save_checkpoint(ckpt, options.out_dir / step_checkpoint_name(ckpt.step));
    }
    ++result.steps_run;
  }

  result.final_train_mpjpe_mm = evaluate_windows(ckpt.model, ds.train, ds.fps, ds.units, {{}, {}}).model.mpjpe_mean;
  write_line(log, options.echo, "# final_train_mpjpe_mm " + fmt(result.final_train_mpjpe_mm));
  result.checkpoint = options.out_dir / "final.ckpt";
  save_checkpoint(ckpt, result.checkpoint);
  return result;
}

EvalSplit eval_split_from_string(const std::string& text) {
  if (text == "train") return EvalSplit::train;
  if (text == "val") return EvalSplit::val;
  if (text == "all") return EvalSplit::all;
  throw Error(ErrorKind::config, "unknown split '" + text + "' (expected train, val or all)");
}

EvalResult cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, EvalSplit split,
                    const std::optional<fs::path>& data_override) {
  cfg.validate();
  const Checkpoint ckpt = load_checkpoint(checkpoint, cfg.model);
  Dataset ds;
  std::vector<WindowPair> windows;
  if (data_override) {
    ds = load_windows(cfg, *data_override);
    windows = ds.train;
  } else {
    ds = build_dataset(cfg);
    switch (split) {
      case EvalSplit::train: windows = ds.train; break;
      case EvalSplit::val: windows = ds.val; break;
      case EvalSplit::all:
        windows = ds.train;
        windows.insert(windows.end(), ds.val.begin(), ds.val.end());
        break;
    }
  }
  if (windows.empty()) throw Error(ErrorKind::data, "the selected split has no windows");
  return evaluate_windows(ckpt.model, windows, ds.fps, ds.units, cfg.eval);
}

void cmd_predict(const fs::path& checkpoint, const fs::path& input, const fs::path& output) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const auto& mc = ckpt.model.config();
  const MotionSequence seq = load_sequence(input);
  if (seq.n_frames() < mc.in_frames) {
    throw Error(ErrorKind::data, "input has " + std::to_string(seq.n_frames()) + " frames, the model needs " +
                                     std::to_string(mc.in_frames));
  }
  if (seq.n_joints() != mc.n_joints) {
    throw Error(ErrorKind::data, "input has " + std::to_string(seq.n_joints()) + " joints, the model expects " +
                                     std::to_string(mc.n_joints));
  }
  const std::size_t start = seq.n_frames() - mc.in_frames;
  const Tensor window = slice(seq.frames, 0, start, mc.in_frames);
  const MotionSequence window_seq = make_sequence(window.to_vector(), mc.in_frames, mc.n_joints, seq.fps, seq.units,
                                                  seq.joint_names);
  const auto& root = ckpt.run_config.data.root_joint;
  const MotionSequence model_in = root ? remove_global_translation(window_seq, *root) : window_seq;

  const double k = meters_per_unit(seq.units);
  std::vector<double> scaled = model_in.frames.to_vector();
  for (auto& v : scaled) v *= k;
  const Tensor obs = Tensor::create(model_in.frames.shape(), std::move(scaled));
  const auto pred = predict(ckpt.model, obs).to_vector();
  const auto obs_v = obs.to_vector();

  // Predicted motion relative to the last observed frame, re-applied to the
  // last input frame in its original units and position.
  const std::size_t pose = mc.n_joints * 3;
  const auto last_in = window.data().subspan((mc.in_frames - 1) * pose, pose);
  const auto last_model = std::span<const double>(obs_v).subspan((mc.in_frames - 1) * pose, pose);
  std::vector<double> out(mc.out_frames * pose);
  for (std::size_t t = 0; t < mc.out_frames; ++t) {
    for (std::size_t i = 0; i < pose; ++i) out[t * pose + i] = last_in[i] + (pred[t * pose + i] - last_model[i]) / k;
  }
  save_sequence(make_sequence(std::move(out), mc.out_frames, mc.n_joints, seq.fps, seq.units, seq.joint_names), output);
}

bool GradcheckReport::passed() const {
  for (const auto& g : groups) {
    if (!(g.max_rel_error < tolerance)) return false;
  }
  return !groups.empty();
}

std::string GradcheckReport::text() const {
  std::ostringstream out;
  out << "# group max_rel_error max_abs_error status\n";
  for (const auto& g : groups) {
    out << g.name << ' ' << fmt(g.max_rel_error, 6) << ' ' << fmt(g.max_abs_error, 6) << ' '
        << (g.max_rel_error < tolerance ? "ok" : "FAIL") << '\n';
  }
  out << (passed() ? "PASS" : "FAIL") << " tolerance " << fmt(tolerance, 6) << '\n';
  return out.str();
}

GradcheckReport cmd_gradcheck(std::uint64_t seed, const GradcheckOptions& options) {
  const auto& mc = options.model;
  Predictor model = init_model(mc, seed);
  Rng rng(seed, 7);
  auto random_tensor = [&rng](Shape shape, double lo, double hi) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::create(std::move(shape), std::move(v));
  };
  const Tensor obs = random_tensor({options.batch, mc.in_frames, mc.n_joints, 3}, -1.0, 1.0);
  const Tensor target = random_tensor({options.batch, mc.out_frames, mc.n_joints, 3}, -1.0, 1.0);
  UncertaintyParams u{random_tensor({mc.out_frames}, -0.5, 0.5)};
  // Biases start at zero; move them off zero so their gradients are generic.
  for (auto& [name, t] : model.params()) {
    if (name.ends_with("bias")) {
      for (auto& v : t.mutable_data()) v = rng.uniform(-0.1, 0.1);
    }
  }

  ParamStore store;
  store.extend(model.params());
  store.add(kSigmaName, u.log_sigma);
  const LossBuilder loss_fn = options.loss_fn ? options.loss_fn : LossBuilder(combined_loss);

  const Tensor loss = loss_fn(predict(model, obs), target, options.loss, u);
  backward(loss, store);
  const auto numeric = finite_diff_grad(
      [&](ParamStore&) { return loss_fn(predict(model, obs), target, options.loss, u).item(); }, store, options.step);
  return {compare_gradients(store, numeric), options.tolerance};
}

}  // namespace motionlab
