#include "motionlab/model.hpp"

#include <cmath>
#include <string>

#include "motionlab/error.hpp"
#include "motionlab/ops.hpp"
#include "motionlab/rng.hpp"

namespace motionlab {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error(ErrorKind::config, std::string("model.") + name + " must be positive");
  };
  positive(n_joints, "n_joints");
  positive(in_frames, "in_frames");
  positive(out_frames, "out_frames");
  positive(feature_dim, "feature_dim");
  positive(key_dim, "key_dim");
  positive(tcn_kernel, "tcn_kernel");
  if (tcn_kernel % 2 == 0) throw Error(ErrorKind::config, "model.tcn_kernel must be odd");
  if (coord_dim != 3) throw Error(ErrorKind::config, "model.coord_dim must be 3");
}

namespace {

Tensor xavier(Rng& rng, Shape shape, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = rng.uniform(-limit, limit);
  return Tensor::create(std::move(shape), std::move(values));
}

// Adds a leading batch axis of 1 when `x` has the unbatched rank.
std::pair<Tensor, bool> batched(const Tensor& x, std::size_t unbatched_rank, const char* what) {
  if (x.rank() == unbatched_rank) {
    Shape s = x.shape();
    s.insert(s.begin(), 1);
    return {reshape(x, s), true};
  }
  if (x.rank() == unbatched_rank + 1) return {x, false};
  throw Error(ErrorKind::shape, std::string(what) + ": unexpected input shape " + shape_to_string(x.shape()));
}

Tensor unbatch(const Tensor& x, bool was_unbatched) {
  if (!was_unbatched) return x;
  return reshape(x, Shape(x.shape().begin() + 1, x.shape().end()));
}

void expect_dim(const Tensor& x, std::size_t axis, std::size_t want, const char* what) {
  if (x.dim(axis) != want) {
    throw Error(ErrorKind::shape, std::string(what) + ": expected size " + std::to_string(want) + " on axis " +
                                      std::to_string(axis) + ", got shape " + shape_to_string(x.shape()));
  }
}

}  // namespace

Predictor init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Predictor p;
  p.config_ = config;
  const std::size_t C = config.feature_dim;
  const std::size_t K = config.tcn_kernel;
  const std::size_t Ti = config.in_frames;
  const std::size_t To = config.out_frames;

  p.input_weight = p.params_.add("input.weight", xavier(rng, {config.coord_dim, C}, config.coord_dim, C));
  p.input_bias = p.params_.add("input.bias", Tensor::zeros({C}));
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    EncoderBlock block;
    block.saggb.key_dim = config.key_dim;
    block.saggb.query = p.params_.add(prefix + "saggb.query", xavier(rng, {C, config.key_dim}, C, config.key_dim));
    block.saggb.key = p.params_.add(prefix + "saggb.key", xavier(rng, {C, config.key_dim}, C, config.key_dim));
    block.saggb.weight = p.params_.add(prefix + "saggb.weight", xavier(rng, {C, C}, C, C));
    block.tcn_kernel = p.params_.add(prefix + "tcn.kernel", xavier(rng, {K, C, C}, K * C, K * C));
    block.tcn_bias = p.params_.add(prefix + "tcn.bias", Tensor::zeros({C}));
    p.blocks.push_back(std::move(block));
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const std::string prefix = "decoder.time" + std::to_string(i) + ".";
    const std::size_t fan_in = i == 0 ? Ti : To;
    p.decoder.time_weight[i] = p.params_.add(prefix + "weight", xavier(rng, {To, fan_in}, fan_in, To));
    p.decoder.time_bias[i] = p.params_.add(prefix + "bias", Tensor::zeros({To}));
  }
  p.decoder.mlp_weight = p.params_.add("decoder.mlp.weight", xavier(rng, {C, config.coord_dim}, C, config.coord_dim));
  p.decoder.mlp_bias = p.params_.add("decoder.mlp.bias", Tensor::zeros({config.coord_dim}));
  return p;
}

Tensor saggb_pose_graph(const SaggbLayer& layer, const Tensor& frame_features) {
  if (frame_features.rank() != 2) {
    throw Error(ErrorKind::shape, "saggb_pose_graph: expected [N, C], got " + shape_to_string(frame_features.shape()));
  }
  expect_dim(frame_features, 1, layer.query.dim(0), "saggb_pose_graph");
  const Tensor q = matmul(frame_features, layer.query);
  const Tensor k = matmul(frame_features, layer.key);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(layer.key_dim));
  return softmax_rows(scale(matmul(q, transpose_last2(k)), inv_sqrt));
}

Tensor saggb_sample_graph(const SaggbLayer& layer, const Tensor& features) {
  auto [x, unbatched] = batched(features, 3, "saggb_sample_graph");
  expect_dim(x, 3, layer.query.dim(0), "saggb_sample_graph");
  const Tensor q = matmul(x, layer.query);  // [B, T, N, d_k]
  const Tensor k = matmul(x, layer.key);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(layer.key_dim));
  const Tensor per_frame = softmax_last(scale(matmul(q, transpose_last2(k)), inv_sqrt));  // [B, T, N, N]
  return unbatch(sum(per_frame, 1), unbatched);
}

Tensor saggb_forward(const SaggbLayer& layer, const Tensor& features) {
  auto [x, unbatched] = batched(features, 3, "saggb_forward");
  expect_dim(x, 3, layer.weight.dim(0), "saggb_forward");
  const Tensor graph = saggb_sample_graph(layer, x);  // [B, N, N]
  const std::size_t B = x.dim(0);
  const std::size_t N = x.dim(2);
  const Tensor mixed = matmul(reshape(graph, {B, 1, N, N}), x);
  return unbatch(tanh(matmul(mixed, layer.weight)), unbatched);
}

Tensor tcn_forward(const EncoderBlock& block, const Tensor& features) {
  return tanh(conv_time(features, block.tcn_kernel, block.tcn_bias));
}

Tensor encoder_forward(const Predictor& predictor, const Tensor& obs) {
  const auto& cfg = predictor.config();
  auto [x, unbatched] = batched(obs, 3, "encoder_forward");
  expect_dim(x, 1, cfg.in_frames, "encoder_forward");
  expect_dim(x, 2, cfg.n_joints, "encoder_forward");
  expect_dim(x, 3, cfg.coord_dim, "encoder_forward");
  Tensor h = add(matmul(x, predictor.input_weight), predictor.input_bias);
  for (const auto& block : predictor.blocks) {
    h = add(tcn_forward(block, saggb_forward(block.saggb, h)), h);
  }
  return unbatch(h, unbatched);
}

Tensor decoder_forward(const Predictor& predictor, const Tensor& fmap, const Tensor& last_obs) {
  const auto& cfg = predictor.config();
  auto [f, unbatched] = batched(fmap, 3, "decoder_forward");
  auto [last, last_unbatched] = batched(last_obs, 2, "decoder_forward");
  if (unbatched != last_unbatched) throw Error(ErrorKind::shape, "decoder_forward: feature map and last frame disagree on batching");
  const std::size_t B = f.dim(0);
  expect_dim(f, 1, cfg.in_frames, "decoder_forward");
  expect_dim(f, 2, cfg.n_joints, "decoder_forward");
  expect_dim(f, 3, cfg.feature_dim, "decoder_forward");
  expect_dim(last, 0, B, "decoder_forward");
  expect_dim(last, 1, cfg.n_joints, "decoder_forward");
  expect_dim(last, 2, cfg.coord_dim, "decoder_forward");

  const std::size_t N = cfg.n_joints;
  const std::size_t C = cfg.feature_dim;
  const std::size_t To = cfg.out_frames;
  const auto& dec = predictor.decoder;

  // Time as the channel axis: every (joint, feature) column is mapped alike.
  Tensor h = reshape(f, {B, cfg.in_frames, N * C});
  for (std::size_t i = 0; i < 4; ++i) {
    h = add(matmul(dec.time_weight[i], h), reshape(dec.time_bias[i], {To, 1}));
    if (i < 3) h = tanh(h);
  }
  h = reshape(h, {B, To, N, C});
  const Tensor offsets = add(matmul(h, dec.mlp_weight), dec.mlp_bias);
  const Tensor out = add(offsets, reshape(last, {B, 1, N, cfg.coord_dim}));
  return unbatch(out, unbatched);
}

Tensor predict(const Predictor& predictor, const Tensor& obs) {
  auto [x, unbatched] = batched(obs, 3, "predict");
  const std::size_t T = x.dim(1);
  const Tensor last = reshape(slice(x, 1, T - 1, 1), {x.dim(0), x.dim(2), x.dim(3)});
  return unbatch(decoder_forward(predictor, encoder_forward(predictor, x), last), unbatched);
}

std::size_t param_count(const Predictor& predictor) { return predictor.params().scalar_count(); }

std::size_t analytic_param_count(const ModelConfig& c) {
  const std::size_t C = c.feature_dim;
  const std::size_t input = c.coord_dim * C + C;
  const std::size_t block = 2 * C * c.key_dim + C * C + c.tcn_kernel * C * C + C;
  const std::size_t decoder = (c.out_frames * c.in_frames + c.out_frames) + 3 * (c.out_frames * c.out_frames + c.out_frames) +
                              (C * c.coord_dim + c.coord_dim);
  return input + c.n_blocks * block + decoder;
}

}  // namespace motionlab
