#pragma once

#include <cstddef>
#include <optional>

#include "motionlab/tensor.hpp"

namespace motionlab {

// Differentiable operations. Every function validates its inputs, computes the
// value eagerly, and records a backward rule when any input requires grad.
//
// Binary elementwise operations accept equal shapes, a scalar (one-element)
// operand, or numpy-style broadcasting over leading/size-1 dimensions.

enum class Elementwise { add, sub, mul, scale, exp, log, tanh, relu, square, sqrt };

/// Dispatcher over the elementwise family. `scale` takes `factor`; the binary
/// kinds take `b`; the unary kinds ignore both.
Tensor elementwise(Elementwise kind, const Tensor& a, const std::optional<Tensor>& b = std::nullopt,
                   double factor = 1.0);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // requires a > 0
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);  // requires a >= 0; derivative at 0 is taken as 0

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

/// Batched matrix product over the trailing two axes; leading axes broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Softmax over the last axis (each "row"), max-subtracted.
Tensor softmax_last(const Tensor& a);
/// Rank-2 softmax over rows.
Tensor softmax_rows(const Tensor& a);

Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

/// Euclidean norm over the last axis. The derivative at a zero vector is 0.
Tensor norm_last(const Tensor& a);

/// Temporal convolution with "same" zero padding.
///   x:       [..., T, N, C_in]   (leading axes are batch)
///   kernels: [K, C_in, C_out]    K odd; tap k reads frame t + k - (K-1)/2
///   bias:    [C_out]
Tensor conv_time(const Tensor& x, const Tensor& kernels, const Tensor& bias);

Tensor reshape(const Tensor& a, Shape new_shape);
Tensor transpose(const Tensor& a, const std::vector<std::size_t>& permutation);
/// Swaps the last two axes.
Tensor transpose_last2(const Tensor& a);

/// Contiguous range [start, start+length) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);

}  // namespace motionlab
