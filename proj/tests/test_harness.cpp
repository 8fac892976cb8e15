#include <fstream>
#include <sstream>

#include "doctest.h"
#include "motionlab/checkpoint.hpp"
#include "motionlab/config.hpp"
#include "motionlab/error.hpp"
#include "motionlab/harness.hpp"
#include "motionlab/ops.hpp"
#include "test_util.hpp"

using namespace motionlab;
using nlohmann::json;

namespace {

json toy_json() {
  return json::parse(R"({
    "model": {"n_joints": 4, "in_frames": 5, "out_frames": 6, "feature_dim": 8, "key_dim": 4, "n_blocks": 2, "tcn_kernel": 3},
    "optimizer": {"lr": 0.003},
    "training": {"steps": 12, "batch_size": 4, "seed": 3, "checkpoint_every": 4},
    "data": {"synthetic": {"n_joints": 4, "n_frames": 30, "n_sequences": 3, "seed": 5}, "val_fraction": 0.25},
    "eval": {"horizons_ms": [40, 80, 240], "jitter_windows": [[0, 240], [80, 240]]}
  })");
}

RunConfig toy_config() { return parse_config_json(toy_json()); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void expect_config_error(const json& j, const std::string& fragment) {
  try {
    parse_config_json(j);
    FAIL("config accepted: " << j.dump());
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("config parsing: defaults, round trip, strictness") {
  const RunConfig cfg = toy_config();
  CHECK(cfg.loss.lambda == 0.3);
  CHECK(cfg.loss.omega == 10.0);
  CHECK(cfg.data.root_joint == std::optional<std::size_t>(0));
  CHECK(cfg.training.seed == 3);
  const RunConfig again = parse_config_json(json::parse(cfg.to_json().dump()));
  CHECK(again.to_json() == cfg.to_json());

  json j = toy_json();
  j["model"]["n_layers"] = 3;
  expect_config_error(j, "n_layers");
  j = toy_json();
  j["extra"] = {};
  expect_config_error(j, "extra");
  j = toy_json();
  j["loss"] = {{"lambda", 1.5}};
  expect_config_error(j, "lambda");
  j = toy_json();
  j["model"]["tcn_kernel"] = 4;
  expect_config_error(j, "tcn_kernel");
  j = toy_json();
  j.erase("data");
  expect_config_error(j, "missing required section: data");
  j = toy_json();
  j["data"] = json::object();
  expect_config_error(j, "missing required key");
  j = toy_json();
  j["eval"]["horizons_ms"] = {1000};
  expect_config_error(j, "horizon");
  j = toy_json();
  j["data"]["synthetic"]["n_joints"] = 5;
  expect_config_error(j, "n_joints");
  j = toy_json();
  j["training"]["steps"] = -1;
  expect_config_error(j, "steps");
  j = toy_json();
  j["data"]["root_joint"] = nullptr;
  CHECK_FALSE(parse_config_json(j).data.root_joint.has_value());

  TempDir dir;
  std::ofstream(dir.path / "broken.json") << "{ not json";
  CHECK_THROWS_AS(parse_config(dir.path / "broken.json"), Error);
  CHECK_THROWS_AS(parse_config(dir.path / "absent.json"), Error);
}

TEST_CASE("checkpoint round trip and corruption") {
  TempDir dir;
  RunConfig cfg = toy_config();
  Checkpoint ckpt{init_model(cfg.model, 1), UncertaintyParams::neutral(6), {}, cfg, 17};
  ckpt.uncertainty.log_sigma.mutable_data()[2] = -0.25;
  ParamStore store = ckpt.training_store();
  ckpt.adam = AdamState::for_store(store, {0.01, 0.8, 0.99, 1e-7});
  ckpt.adam.step_count = 17;
  ckpt.adam.first_moment.begin()->second[0] = 0.125;
  const fs::path path = dir.path / "a.ckpt";
  save_checkpoint(ckpt, path);

  Checkpoint back = load_checkpoint(path, cfg.model);
  CHECK(back.step == 17);
  CHECK(back.adam.step_count == 17);
  CHECK(back.adam.options == ckpt.adam.options);
  CHECK(back.adam.first_moment == ckpt.adam.first_moment);
  CHECK(back.uncertainty.log_sigma.to_vector() == ckpt.uncertainty.log_sigma.to_vector());
  for (const auto& [name, t] : ckpt.model.params()) CHECK(back.model.params().get(name).to_vector() == t.to_vector());
  CHECK(back.run_config.to_json() == cfg.to_json());

  // Saving the loaded state reproduces the file byte for byte.
  save_checkpoint(back, dir.path / "b.ckpt");
  CHECK(slurp(path) == slurp(dir.path / "b.ckpt"));

  ModelConfig other = cfg.model;
  other.feature_dim = 16;
  CHECK_THROWS_WITH_AS(load_checkpoint(path, other), doctest::Contains("does not match"), Error);

  const std::string bytes = slurp(path);
  std::ofstream(dir.path / "short.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 8);
  CHECK_THROWS_WITH_AS(load_checkpoint(dir.path / "short.ckpt"), doctest::Contains("truncated"), Error);
  std::ofstream(dir.path / "long.ckpt", std::ios::binary) << bytes << "x";
  CHECK_THROWS_WITH_AS(load_checkpoint(dir.path / "long.ckpt"), doctest::Contains("trailing"), Error);
  std::ofstream(dir.path / "magic.ckpt", std::ios::binary) << "NOTACKPT" << bytes.substr(8);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "magic.ckpt"), Error);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "none.ckpt"), Error);
}

TEST_CASE("training is deterministic and resumable") {
  TempDir dir;
  const RunConfig cfg = toy_config();
  const auto a = cmd_train(cfg, {dir.path / "a", std::nullopt, nullptr});
  const auto b = cmd_train(cfg, {dir.path / "b", std::nullopt, nullptr});
  CHECK(a.steps_run == 12);
  CHECK(slurp(a.log) == slurp(b.log));
  CHECK(slurp(a.checkpoint) == slurp(b.checkpoint));
  CHECK(fs::exists(dir.path / "a" / "step_000004.ckpt"));
  CHECK(fs::exists(dir.path / "a" / "step_000012.ckpt"));

  // Resume from step 4 to 12: same final state as the straight run.
  const auto c = cmd_train(cfg, {dir.path / "c", dir.path / "a" / "step_000004.ckpt", nullptr});
  CHECK(c.steps_run == 8);
  CHECK(slurp(c.checkpoint) == slurp(a.checkpoint));

  // A different seed changes the run.
  RunConfig other = cfg;
  other.training.seed = 4;
  const auto d = cmd_train(other, {dir.path / "d", std::nullopt, nullptr});
  CHECK(slurp(d.log) != slurp(a.log));

  // Resuming under a changed configuration is refused.
  RunConfig changed = cfg;
  changed.loss.omega = 5.0;
  CHECK_THROWS_AS(cmd_train(changed, {dir.path / "e", dir.path / "a" / "step_000004.ckpt", nullptr}), Error);

  // Log layout: header lines, then one line per step with six columns.
  std::ifstream log(a.log);
  std::string line;
  int steps = 0;
  bool saw_initial = false, saw_final = false;
  while (std::getline(log, line)) {
    if (line.rfind("# initial_train_mpjpe_mm ", 0) == 0) saw_initial = true;
    if (line.rfind("# final_train_mpjpe_mm ", 0) == 0) saw_final = true;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream cols(line);
    double v;
    int n = 0;
    while (cols >> v) ++n;
    CHECK(n == 6);
    ++steps;
  }
  CHECK(steps == 12);
  CHECK(saw_initial);
  CHECK(saw_final);
}

TEST_CASE("divergent training aborts naming the step") {
  TempDir dir;
  json j = toy_json();
  j["loss"] = {{"lambda", 0.0}, {"omega", 1e308}};
  try {
    cmd_train(parse_config_json(j), {dir.path, std::nullopt, nullptr});
    FAIL("training should have diverged");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
    CHECK(std::string(e.what()).find("step 1") != std::string::npos);
  }
}

TEST_CASE("evaluation reports the model next to the zero-velocity baseline") {
  TempDir dir;
  const RunConfig cfg = toy_config();
  const auto run = cmd_train(cfg, {dir.path, std::nullopt, nullptr});
  const EvalResult r = cmd_eval(cfg, run.checkpoint, EvalSplit::val);
  const Dataset ds = build_dataset(cfg);
  CHECK(r.model.n_windows == ds.val.size());
  CHECK(r.zero_velocity.n_windows == ds.val.size());
  CHECK(r.model.mpjpe_by_horizon.size() == 3);
  CHECK(r.model.jitter.size() == 2);

  // JSON and table carry the very same numbers.
  const json j = json::parse(r.json());
  const std::string table = r.table();
  for (const char* who : {"model", "zero_velocity"}) {
    for (const auto& [key, value] : j.at(who).items()) {
      if (key == "n_windows") continue;
      CHECK_MESSAGE(table.find(value.dump()) != std::string::npos, key);
    }
  }
  CHECK(cmd_eval(cfg, run.checkpoint, EvalSplit::all).model.n_windows == ds.train.size() + ds.val.size());

  // Direct horizon check on the baseline against hand-computed errors.
  const auto windows = ds.val;
  auto [obs, target] = make_batch(windows, {0}, ds.units);
  const auto base = frame_errors(zero_velocity_baseline(obs, 6), target);
  const EvalResult one = evaluate_windows(init_model(cfg.model, 0), {windows[0]}, ds.fps, ds.units, cfg.eval);
  CHECK(one.zero_velocity.mpjpe_by_horizon.at(80) == doctest::Approx(1000.0 * base.at({0, 1})).epsilon(1e-12));

  EvalOptions bad = cfg.eval;
  bad.horizons_ms = {280};
  CHECK_THROWS_AS(evaluate_windows(init_model(cfg.model, 0), windows, ds.fps, ds.units, bad), Error);
  CHECK(eval_split_from_string("all") == EvalSplit::all);
  CHECK_THROWS_AS(eval_split_from_string("test"), Error);
}

TEST_CASE("predict writes T_out frames continuing the input") {
  TempDir dir;
  const RunConfig cfg = toy_config();
  Checkpoint ckpt{init_model(cfg.model, 2), UncertaintyParams::neutral(6), {}, cfg, 0};
  ParamStore store = ckpt.training_store();
  ckpt.adam = AdamState::for_store(store);
  for (auto& v : ckpt.model.decoder.mlp_weight.mutable_data()) v = 0.0;
  save_checkpoint(ckpt, dir.path / "zero.ckpt");

  SynthSpec spec;
  spec.n_joints = 4;
  spec.n_frames = 9;
  const MotionSequence input = synth_generate(spec, 1);
  save_sequence(input, dir.path / "in.csv");
  cmd_predict(dir.path / "zero.ckpt", dir.path / "in.csv", dir.path / "out.csv");
  const MotionSequence out = load_sequence(dir.path / "out.csv");
  REQUIRE(out.n_frames() == 6);
  CHECK(out.n_joints() == 4);
  CHECK(out.fps == input.fps);
  // With the output layer zeroed the model predicts "no motion": every frame
  // equals the last observed frame in world coordinates.
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t a = 0; a < 3; ++a) CHECK(out.frames.at({t, n, a}) == doctest::Approx(input.frames.at({8, n, a})).epsilon(1e-12));

  spec.n_frames = 4;
  save_sequence(synth_generate(spec, 1), dir.path / "short.csv");
  CHECK_THROWS_WITH_AS(cmd_predict(dir.path / "zero.ckpt", dir.path / "short.csv", dir.path / "x.csv"),
                       doctest::Contains("frames"), Error);
}

TEST_CASE("gradcheck passes on the toy model and catches a broken gradient") {
  const auto report = cmd_gradcheck(0);
  CHECK(report.passed());
  CHECK(report.groups.size() == 23);
  CHECK(report.groups.back().name == "loss.log_sigma");
  CHECK(report.text().find("PASS") != std::string::npos);

  GradcheckOptions broken;
  // The detached copy contributes to the value but not to the analytic gradient.
  broken.loss_fn = [](const Tensor& p, const Tensor& t, const LossConfig& c, const UncertaintyParams& u) {
    return add(combined_loss(p, t, c, u), sum_all(square(p.detach())));
  };
  const auto bad = cmd_gradcheck(0, broken);
  CHECK_FALSE(bad.passed());
  CHECK(bad.text().find("FAIL") != std::string::npos);
}
