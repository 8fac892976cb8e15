#include "motionlab/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "motionlab/error.hpp"

namespace motionlab {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'M', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};
constexpr const char* kSigmaName = "loss.log_sigma";

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw Error(ErrorKind::checkpoint, "checkpoint is truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return value;
}

void put_doubles(std::string& out, std::span<const double> values) {
  for (double v : values) put_le(out, std::bit_cast<std::uint64_t>(v));
}

void get_doubles(const std::string& in, std::size_t& pos, std::span<double> values) {
  for (double& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in, pos));
}

ordered_json model_json(const ModelConfig& m) {
  return {{"n_joints", m.n_joints},       {"in_frames", m.in_frames}, {"out_frames", m.out_frames},
          {"feature_dim", m.feature_dim}, {"key_dim", m.key_dim},     {"n_blocks", m.n_blocks},
          {"tcn_kernel", m.tcn_kernel}};
}

ModelConfig model_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.n_joints = j.at("n_joints").get<std::size_t>();
  m.in_frames = j.at("in_frames").get<std::size_t>();
  m.out_frames = j.at("out_frames").get<std::size_t>();
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.key_dim = j.at("key_dim").get<std::size_t>();
  m.n_blocks = j.at("n_blocks").get<std::size_t>();
  m.tcn_kernel = j.at("tcn_kernel").get<std::size_t>();
  return m;
}

}  // namespace

ParamStore Checkpoint::training_store() {
  ParamStore store;
  store.extend(model.params());
  store.add(kSigmaName, uncertainty.log_sigma);
  return store;
}

void save_checkpoint(Checkpoint& ckpt, const fs::path& path) {
  ParamStore store = ckpt.training_store();

  ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["step"] = ckpt.step;
  header["model"] = model_json(ckpt.model.config());
  header["run_config"] = ckpt.run_config.to_json();
  ordered_json params = ordered_json::array();
  for (const auto& [name, t] : ckpt.model.params()) params.push_back({{"name", name}, {"shape", t.shape()}});
  header["params"] = params;
  header["uncertainty_frames"] = ckpt.uncertainty.log_sigma.numel();
  const auto& o = ckpt.adam.options;
  header["adam"] = {{"step_count", ckpt.adam.step_count}, {"lr", o.lr}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"epsilon", o.epsilon}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint64_t>(header_text.size()));
  out += header_text;
  for (const auto& [name, t] : ckpt.model.params()) put_doubles(out, t.data());
  put_doubles(out, ckpt.uncertainty.log_sigma.data());
  for (const auto& [name, t] : store) {
    auto it = ckpt.adam.first_moment.find(name);
    if (it == ckpt.adam.first_moment.end()) throw Error(ErrorKind::checkpoint, "optimizer state lacks '" + name + "'");
    put_doubles(out, it->second);
  }
  for (const auto& [name, t] : store) put_doubles(out, ckpt.adam.second_moment.at(name));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorKind::io, "write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path, const std::optional<ModelConfig>& expected_model) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string in = buf.str();

  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::checkpoint, path.string() + " is not a motionlab checkpoint");
  }
  std::size_t pos = sizeof kMagic;
  const auto version = get_le<std::uint32_t>(in, pos);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::checkpoint, "unsupported checkpoint format version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(in, pos);
  if (pos + header_len > in.size()) throw Error(ErrorKind::checkpoint, "checkpoint header is truncated");

  nlohmann::json header;
  ModelConfig model_cfg;
  RunConfig run_cfg;
  try {
    header = nlohmann::json::parse(in.substr(pos, header_len));
    model_cfg = model_from_json(header.at("model"));
    run_cfg = parse_config_json(header.at("run_config"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::checkpoint, std::string("bad checkpoint header: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::checkpoint, std::string("bad checkpoint header: ") + e.what());
  }
  pos += header_len;
  if (expected_model && !(*expected_model == model_cfg)) {
    throw Error(ErrorKind::checkpoint, "checkpoint model configuration does not match the requested one");
  }

  Checkpoint ckpt{init_model(model_cfg, 0), UncertaintyParams::neutral(model_cfg.out_frames), {}, run_cfg,
                  header.at("step").get<std::uint64_t>()};
  const auto& params = header.at("params");
  if (params.size() != ckpt.model.params().size()) throw Error(ErrorKind::checkpoint, "parameter list does not match the model");
  std::size_t i = 0;
  for (auto& [name, t] : ckpt.model.params()) {
    if (params[i].at("name").get<std::string>() != name || params[i].at("shape").get<Shape>() != t.shape()) {
      throw Error(ErrorKind::checkpoint, "parameter '" + name + "' does not match the checkpoint layout");
    }
    get_doubles(in, pos, t.mutable_data());
    ++i;
  }
  if (header.at("uncertainty_frames").get<std::size_t>() != model_cfg.out_frames) {
    throw Error(ErrorKind::checkpoint, "uncertainty length does not match out_frames");
  }
  get_doubles(in, pos, ckpt.uncertainty.log_sigma.mutable_data());

  ParamStore store = ckpt.training_store();
  const auto& adam = header.at("adam");
  AdamOptions opts{adam.at("lr").get<double>(), adam.at("beta1").get<double>(), adam.at("beta2").get<double>(),
                   adam.at("epsilon").get<double>()};
  ckpt.adam = AdamState::for_store(store, opts);
  ckpt.adam.step_count = adam.at("step_count").get<std::uint64_t>();
  for (const auto& [name, t] : store) get_doubles(in, pos, ckpt.adam.first_moment[name]);
  for (const auto& [name, t] : store) get_doubles(in, pos, ckpt.adam.second_moment[name]);
  if (pos != in.size()) throw Error(ErrorKind::checkpoint, "checkpoint has trailing bytes");
  for (const auto& [name, t] : store) {
    for (double v : t.data()) {
      if (!std::isfinite(v)) throw Error(ErrorKind::checkpoint, "parameter '" + name + "' holds a non-finite value");
    }
  }
  return ckpt;
}

}  // namespace motionlab
