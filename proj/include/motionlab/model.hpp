#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "motionlab/autodiff.hpp"
#include "motionlab/tensor.hpp"

namespace motionlab {

struct ModelConfig {
  std::size_t n_joints = 22;
  std::size_t in_frames = 10;
  std::size_t out_frames = 25;
  std::size_t feature_dim = 128;
  std::size_t key_dim = 32;
  std::size_t n_blocks = 6;
  std::size_t tcn_kernel = 3;
  std::size_t coord_dim = 3;

  /// Throws Error(config) naming the first invalid field.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Self-attention graph generation followed by a graph convolution.
/// The graph for a sequence is the sum over frames of per-frame attention
/// maps softmax(X W_q (X W_k)^T / sqrt(d_k)).
struct SaggbLayer {
  Tensor query;   // [C_in, d_k]
  Tensor key;     // [C_in, d_k]
  Tensor weight;  // [C_in, C_out]
  std::size_t key_dim = 0;
};

struct EncoderBlock {
  SaggbLayer saggb;
  Tensor tcn_kernel;  // [K, C, C]
  Tensor tcn_bias;    // [C]
};

// Time maps act along the frame axis; they are shared by every (joint,
// channel) position.
struct Decoder {
  std::array<Tensor, 4> time_weight;  // [T_out, T_in], then [T_out, T_out] x3
  std::array<Tensor, 4> time_bias;    // [T_out]
  Tensor mlp_weight;                  // [C_f, 3]
  Tensor mlp_bias;                    // [3]
};

class Predictor {
 public:
  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  Tensor input_weight;  // [3, C_f]
  Tensor input_bias;    // [C_f]
  std::vector<EncoderBlock> blocks;
  Decoder decoder;

 private:
  friend Predictor init_model(const ModelConfig& config, std::uint64_t seed);
  ModelConfig config_;
  ParamStore params_;
};

/// Xavier-uniform weights from a seeded generator, zero biases.
Predictor init_model(const ModelConfig& config, std::uint64_t seed);

// All forward functions accept an optional leading batch axis: a [T, N, C]
// input yields an unbatched output; [B, T, N, C] yields a batched one.

/// Attention graph of one pose: [N, C_in] -> [N, N], rows sum to 1.
Tensor saggb_pose_graph(const SaggbLayer& layer, const Tensor& frame_features);
/// Per-sequence graph, the sum of per-frame graphs: [(B,) T, N, C] -> [(B,) N, N].
Tensor saggb_sample_graph(const SaggbLayer& layer, const Tensor& features);
/// tanh(A_sample X W) with one shared graph per sequence.
Tensor saggb_forward(const SaggbLayer& layer, const Tensor& features);
/// tanh(conv_time(X)), shape preserving.
Tensor tcn_forward(const EncoderBlock& block, const Tensor& features);

/// [(B,) T_in, N, 3] -> [(B,) T_in, N, C_f]
Tensor encoder_forward(const Predictor& predictor, const Tensor& obs);
/// [(B,) T_in, N, C_f] x [(B,) N, 3] -> [(B,) T_out, N, 3]
Tensor decoder_forward(const Predictor& predictor, const Tensor& fmap, const Tensor& last_obs);
/// End to end: decoder(encoder(obs), obs[last frame]).
Tensor predict(const Predictor& predictor, const Tensor& obs);

std::size_t param_count(const Predictor& predictor);
/// Closed-form count from the layer shapes alone.
std::size_t analytic_param_count(const ModelConfig& config);

}  // namespace motionlab
