#include "motionlab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "motionlab/error.hpp"

namespace motionlab {

using nlohmann::json;

bool EvalOptions::operator==(const EvalOptions& o) const {
  if (horizons_ms != o.horizons_ms || jitter_windows.size() != o.jitter_windows.size()) return false;
  for (std::size_t i = 0; i < jitter_windows.size(); ++i) {
    if (jitter_windows[i].start_ms != o.jitter_windows[i].start_ms || jitter_windows[i].end_ms != o.jitter_windows[i].end_ms) {
      return false;
    }
  }
  return true;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::config, where + ": " + what);
}

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "must be an object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) fail(path(key), "must be a finite number");
    return v.get<double>();
  }

  std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(path(key), "must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(path(key), "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(path(key), "must be a string");
    return v.get<std::string>();
  }

  std::pair<double, double> interval(const std::string& key, std::pair<double, double> fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(path(key), "must be a [low, high] pair of numbers");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  const json& raw(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    std::vector<std::string> unknown;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!known_.count(it.key())) unknown.push_back(it.key());
    }
    if (!unknown.empty()) {
      std::string list;
      for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
      fail(where_, "unknown key(s): " + list);
    }
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

ModelConfig parse_model(const json& j) {
  Section s(j, "model");
  ModelConfig m;
  m.n_joints = s.uint("n_joints", m.n_joints);
  m.in_frames = s.uint("in_frames", m.in_frames);
  m.out_frames = s.uint("out_frames", m.out_frames);
  m.feature_dim = s.uint("feature_dim", m.feature_dim);
  m.key_dim = s.uint("key_dim", m.key_dim);
  m.n_blocks = s.uint("n_blocks", m.n_blocks);
  m.tcn_kernel = s.uint("tcn_kernel", m.tcn_kernel);
  s.finish();
  m.validate();
  return m;
}

LossConfig parse_loss(const json& j) {
  Section s(j, "loss");
  LossConfig l;
  l.lambda = s.number("lambda", l.lambda);
  l.omega = s.number("omega", l.omega);
  l.adaptive_squared_norm = s.boolean("adaptive_squared_norm", l.adaptive_squared_norm);
  s.finish();
  l.validate();
  return l;
}

AdamOptions parse_optimizer(const json& j) {
  Section s(j, "optimizer");
  AdamOptions o;
  o.lr = s.number("lr", o.lr);
  o.beta1 = s.number("beta1", o.beta1);
  o.beta2 = s.number("beta2", o.beta2);
  o.epsilon = s.number("epsilon", o.epsilon);
  s.finish();
  if (!(o.lr > 0.0)) fail("optimizer.lr", "must be positive");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0)) fail("optimizer.beta1", "must lie in [0, 1)");
  if (!(o.beta2 >= 0.0 && o.beta2 < 1.0)) fail("optimizer.beta2", "must lie in [0, 1)");
  if (!(o.epsilon > 0.0)) fail("optimizer.epsilon", "must be positive");
  return o;
}

TrainingOptions parse_training(const json& j) {
  Section s(j, "training");
  TrainingOptions t;
  t.steps = s.uint("steps", t.steps);
  t.batch_size = s.uint("batch_size", t.batch_size);
  t.seed = s.uint("seed", t.seed);
  t.checkpoint_every = s.uint("checkpoint_every", t.checkpoint_every);
  s.finish();
  if (t.batch_size == 0) fail("training.batch_size", "must be positive");
  return t;
}

DataOptions parse_data(const json& j) {
  Section s(j, "data");
  DataOptions d;
  const bool synth = s.has("synthetic");
  const bool paths = s.has("paths");
  const bool index = s.has("index");
  const int sources = int(synth) + int(paths) + int(index);
  if (sources == 0) fail("data", "missing required key: one of synthetic, paths, index");
  if (sources > 1) fail("data", "give exactly one of synthetic, paths, index");

  if (synth) {
    d.source = DataSource::synthetic;
    Section g(s.raw("synthetic"), "data.synthetic");
    d.synthetic.n_joints = g.uint("n_joints", d.synthetic.n_joints);
    d.synthetic.n_frames = g.uint("n_frames", d.synthetic.n_frames);
    d.synthetic.fps = g.number("fps", d.synthetic.fps);
    d.synthetic.motion_family = motion_family_from_string(g.string("motion_family", to_string(d.synthetic.motion_family)));
    d.synthetic.amplitude_range = g.interval("amplitude_range", d.synthetic.amplitude_range);
    d.synthetic.frequency_range = g.interval("frequency_range", d.synthetic.frequency_range);
    d.n_sequences = g.uint("n_sequences", d.n_sequences);
    d.synthetic_seed = g.uint("seed", d.synthetic_seed);
    g.finish();
    d.synthetic.validate();
    if (d.n_sequences == 0) fail("data.synthetic.n_sequences", "must be positive");
  } else if (paths) {
    d.source = DataSource::paths;
    const auto& v = s.raw("paths");
    if (!v.is_array() || v.empty()) fail("data.paths", "must be a non-empty list of CSV paths");
    for (const auto& p : v) {
      if (!p.is_string()) fail("data.paths", "entries must be strings");
      d.paths.push_back(p.get<std::string>());
    }
  } else {
    d.source = DataSource::index;
    d.index = s.string("index", "");
    if (d.index.empty()) fail("data.index", "must be a non-empty path");
  }

  d.stride = s.uint("stride", d.stride);
  if (d.stride == 0) fail("data.stride", "must be at least 1");
  d.val_fraction = s.number("val_fraction", d.val_fraction);
  if (!(d.val_fraction >= 0.0 && d.val_fraction < 1.0)) fail("data.val_fraction", "must lie in [0, 1)");
  if (j.contains("root_joint")) {
    if (s.has("root_joint")) {
      d.root_joint = s.uint("root_joint", 0);
    } else {
      d.root_joint.reset();
    }
  }
  if (s.has("target_fps")) {
    d.target_fps = s.number("target_fps", 25.0);
    if (!(*d.target_fps > 0.0)) fail("data.target_fps", "must be positive");
  }
  s.finish();
  return d;
}

EvalOptions parse_eval(const json& j) {
  Section s(j, "eval");
  EvalOptions e;
  if (s.has("horizons_ms")) {
    const auto& v = s.raw("horizons_ms");
    if (!v.is_array() || v.empty()) fail("eval.horizons_ms", "must be a non-empty list of integers");
    e.horizons_ms.clear();
    for (const auto& h : v) {
      if (!h.is_number_integer() || h.get<int>() <= 0) fail("eval.horizons_ms", "entries must be positive integers");
      e.horizons_ms.push_back(h.get<int>());
    }
  }
  if (s.has("jitter_windows")) {
    const auto& v = s.raw("jitter_windows");
    if (!v.is_array()) fail("eval.jitter_windows", "must be a list of [start_ms, end_ms] pairs");
    e.jitter_windows.clear();
    for (const auto& w : v) {
      if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer() ||
          w[0].get<int>() < 0 || w[1].get<int>() <= w[0].get<int>()) {
        fail("eval.jitter_windows", "entries must be [start_ms, end_ms] with 0 <= start < end");
      }
      e.jitter_windows.push_back({w[0].get<int>(), w[1].get<int>()});
    }
  }
  s.finish();
  return e;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  if (data.source == DataSource::synthetic) {
    data.synthetic.validate();
    if (data.synthetic.n_joints != model.n_joints) {
      fail("data.synthetic.n_joints", "is " + std::to_string(data.synthetic.n_joints) + " but model.n_joints is " +
                                          std::to_string(model.n_joints));
    }
    if (data.root_joint && *data.root_joint >= model.n_joints) fail("data.root_joint", "is not a valid joint index");
    const double fps = data.target_fps.value_or(data.synthetic.fps);
    for (int h : eval.horizons_ms) horizon_frame(h, fps, model.out_frames);
  }
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = {{"n_joints", model.n_joints},       {"in_frames", model.in_frames}, {"out_frames", model.out_frames},
                {"feature_dim", model.feature_dim}, {"key_dim", model.key_dim},     {"n_blocks", model.n_blocks},
                {"tcn_kernel", model.tcn_kernel}};
  j["loss"] = {{"lambda", loss.lambda}, {"omega", loss.omega}, {"adaptive_squared_norm", loss.adaptive_squared_norm}};
  j["optimizer"] = {{"lr", optimizer.lr}, {"beta1", optimizer.beta1}, {"beta2", optimizer.beta2}, {"epsilon", optimizer.epsilon}};
  j["training"] = {{"steps", training.steps},
                   {"batch_size", training.batch_size},
                   {"seed", training.seed},
                   {"checkpoint_every", training.checkpoint_every}};
  nlohmann::ordered_json d;
  switch (data.source) {
    case DataSource::synthetic:
      d["synthetic"] = {{"n_joints", data.synthetic.n_joints},
                        {"n_frames", data.synthetic.n_frames},
                        {"fps", data.synthetic.fps},
                        {"motion_family", to_string(data.synthetic.motion_family)},
                        {"amplitude_range", {data.synthetic.amplitude_range.first, data.synthetic.amplitude_range.second}},
                        {"frequency_range", {data.synthetic.frequency_range.first, data.synthetic.frequency_range.second}},
                        {"n_sequences", data.n_sequences},
                        {"seed", data.synthetic_seed}};
      break;
    case DataSource::paths: d["paths"] = data.paths; break;
    case DataSource::index: d["index"] = data.index; break;
  }
  d["stride"] = data.stride;
  d["val_fraction"] = data.val_fraction;
  d["root_joint"] = data.root_joint ? nlohmann::ordered_json(*data.root_joint) : nlohmann::ordered_json(nullptr);
  d["target_fps"] = data.target_fps ? nlohmann::ordered_json(*data.target_fps) : nlohmann::ordered_json(nullptr);
  j["data"] = d;
  nlohmann::ordered_json windows = nlohmann::ordered_json::array();
  for (const auto& w : eval.jitter_windows) windows.push_back({w.start_ms, w.end_ms});
  j["eval"] = {{"horizons_ms", eval.horizons_ms}, {"jitter_windows", windows}};
  return j;
}

RunConfig parse_config_json(const json& j, const std::filesystem::path& base_dir) {
  Section top(j, "config");
  RunConfig cfg;
  cfg.base_dir = base_dir;
  if (top.has("model")) cfg.model = parse_model(top.raw("model"));
  if (top.has("loss")) cfg.loss = parse_loss(top.raw("loss"));
  if (top.has("optimizer")) cfg.optimizer = parse_optimizer(top.raw("optimizer"));
  if (top.has("training")) cfg.training = parse_training(top.raw("training"));
  if (!top.has("data")) fail("config", "missing required section: data");
  cfg.data = parse_data(top.raw("data"));
  if (top.has("eval")) cfg.eval = parse_eval(top.raw("eval"));
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return parse_config_json(j, path.parent_path());
}

}  // namespace motionlab
