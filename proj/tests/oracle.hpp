#pragma once

// Reference computations for the tests. Plain loops over std::vector, no
// library code beyond reading raw parameter values, so a bug in the tensor
// ops cannot hide in both sides of a comparison.

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

// a [m x k] times b [k x n]
inline Vec matmul(const Vec& a, const Vec& b, std::size_t m, std::size_t k, std::size_t n) {
  Vec out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      out[i * n + j] = s;
    }
  return out;
}

inline Vec softmax_rows(const Vec& a, std::size_t rows, std::size_t cols) {
  Vec out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = a[r * cols];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, a[r * cols + c]);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += std::exp(a[r * cols + c] - mx);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = std::exp(a[r * cols + c] - mx) / z;
  }
  return out;
}

// x [T, N, Cin], kernels [K, Cin, Cout], zero padded "same" convolution.
inline Vec conv_time(const Vec& x, const Vec& w, const Vec& bias, std::size_t T, std::size_t N, std::size_t Cin,
                     std::size_t Cout, std::size_t K) {
  Vec out(T * N * Cout);
  const long half = static_cast<long>(K / 2);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t co = 0; co < Cout; ++co) {
        double s = bias[co];
        for (std::size_t k = 0; k < K; ++k) {
          const long src = static_cast<long>(t) + static_cast<long>(k) - half;
          if (src < 0 || src >= static_cast<long>(T)) continue;
          for (std::size_t ci = 0; ci < Cin; ++ci) s += x[(src * N + n) * Cin + ci] * w[(k * Cin + ci) * Cout + co];
        }
        out[(t * N + n) * Cout + co] = s;
      }
  return out;
}

// Mean joint distance per frame for [T, N, 3] arrays.
inline Vec frame_errors(const Vec& p, const Vec& q, std::size_t T, std::size_t N) {
  Vec e(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t n = 0; n < N; ++n) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = p[(t * N + n) * 3 + c] - q[(t * N + n) * 3 + c];
        d2 += d * d;
      }
      e[t] += std::sqrt(d2);
    }
    e[t] /= static_cast<double>(N);
  }
  return e;
}

// Direct evaluation of fps^3/(T-3) * sum_{t=0}^{T-3} third difference, with
// samples dx[0..T].
inline double jitter(const Vec& dx, double fps) {
  const std::size_t T = dx.size() - 1;
  double s = 0.0;
  for (std::size_t t = 0; t + 3 <= T; ++t) s += dx[t + 3] - 3.0 * dx[t + 2] + 3.0 * dx[t + 1] - dx[t];
  return fps * fps * fps / static_cast<double>(T - 3) * s;
}

// Central differences of a scalar function of a flat vector.
inline Vec numeric_grad(const std::function<double(const Vec&)>& f, Vec x, double h = 1e-6) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

struct ModelShape {
  std::size_t N, T_in, T_out, C, dk, blocks, K;
};

// Full predictor forward for one unbatched sample [T_in, N, 3], reading the
// parameters by name from `p`.
inline Vec predict(const std::map<std::string, Vec>& p, const ModelShape& s, const Vec& obs) {
  const std::size_t N = s.N, T = s.T_in, C = s.C;
  Vec h = matmul(obs, p.at("input.weight"), T * N, 3, C);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += p.at("input.bias")[i % C];

  for (std::size_t b = 0; b < s.blocks; ++b) {
    const std::string pre = "block" + std::to_string(b) + ".";
    Vec graph(N * N, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const Vec xt(h.begin() + t * N * C, h.begin() + (t + 1) * N * C);
      const Vec q = matmul(xt, p.at(pre + "saggb.query"), N, C, s.dk);
      const Vec k = matmul(xt, p.at(pre + "saggb.key"), N, C, s.dk);
      Vec logits(N * N);
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
          double d = 0.0;
          for (std::size_t a = 0; a < s.dk; ++a) d += q[i * s.dk + a] * k[j * s.dk + a];
          logits[i * N + j] = d / std::sqrt(static_cast<double>(s.dk));
        }
      const Vec at = softmax_rows(logits, N, N);
      for (std::size_t i = 0; i < N * N; ++i) graph[i] += at[i];
    }
    Vec g(T * N * C);
    for (std::size_t t = 0; t < T; ++t) {
      const Vec xt(h.begin() + t * N * C, h.begin() + (t + 1) * N * C);
      const Vec mixed = matmul(graph, xt, N, N, C);
      const Vec y = matmul(mixed, p.at(pre + "saggb.weight"), N, C, C);
      for (std::size_t i = 0; i < N * C; ++i) g[t * N * C + i] = std::tanh(y[i]);
    }
    const Vec conv = conv_time(g, p.at(pre + "tcn.kernel"), p.at(pre + "tcn.bias"), T, N, C, C, s.K);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += std::tanh(conv[i]);
  }

  // Decoder: four maps along time, tanh after the first three.
  Vec d = h;
  std::size_t rows = T;
  for (std::size_t m = 0; m < 4; ++m) {
    const std::string pre = "decoder.time" + std::to_string(m) + ".";
    Vec next = matmul(p.at(pre + "weight"), d, s.T_out, rows, N * C);
    for (std::size_t r = 0; r < s.T_out; ++r)
      for (std::size_t i = 0; i < N * C; ++i) {
        double& v = next[r * N * C + i];
        v += p.at(pre + "bias")[r];
        if (m < 3) v = std::tanh(v);
      }
    d = next;
    rows = s.T_out;
  }
  Vec out = matmul(d, p.at("decoder.mlp.weight"), s.T_out * N, C, 3);
  for (std::size_t t = 0; t < s.T_out; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < 3; ++c)
        out[(t * N + n) * 3 + c] += p.at("decoder.mlp.bias")[c] + obs[((T - 1) * N + n) * 3 + c];
  return out;
}

inline Vec random_vec(std::mt19937_64& gen, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
