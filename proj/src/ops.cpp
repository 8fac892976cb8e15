#include "motionlab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "motionlab/error.hpp"

namespace motionlab {
namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

Tensor make_result(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
                   std::function<void(Node&)> rule) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool needs = std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(rule);
  }
  return Tensor(std::move(node));
}

// Grad buffers are allocated by the backward driver for every node on the
// tape; rules only ever accumulate into parents that require grad.
inline bool wants(const NodePtr& p) { return p->requires_grad && !p->grad.empty(); }

std::size_t product(const Shape& s, std::size_t begin, std::size_t end) {
  std::size_t n = 1;
  for (std::size_t i = begin; i < end; ++i) n *= s[i];
  return n;
}

void require_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::numeric, std::string(op) + " produced a non-finite value");
  }
}

// broadcasting

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw Error(ErrorKind::shape, std::string(op) + ": shapes " + shape_to_string(a) + " and " +
                                        shape_to_string(b) + " are not broadcastable");
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Flat source index for every flat index of `out`.
std::vector<std::size_t> broadcast_index(const Shape& src, const Shape& out) {
  const std::size_t rank = out.size();
  const std::size_t offset = rank - src.size();
  std::vector<std::size_t> stride(rank, 0);
  std::size_t s = 1;
  for (std::size_t i = src.size(); i-- > 0;) {
    stride[i + offset] = src[i] == 1 ? 0 : s;
    s *= src[i];
  }
  const std::size_t n = shape_numel(out);
  std::vector<std::size_t> idx(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t flat = 0;
  for (std::size_t k = 0; k < n; ++k) {
    idx[k] = flat;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      flat += stride[d];
      if (counter[d] < out[d]) break;
      flat -= stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return idx;
}

enum class BinaryKind { add, sub, mul };

Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b, const char* name) {
  const NodePtr an = a.node();
  const NodePtr bn = b.node();
  const auto& av = an->value;
  const auto& bv = bn->value;

  auto apply = [kind](double x, double y) {
    switch (kind) {
      case BinaryKind::add: return x + y;
      case BinaryKind::sub: return x - y;
      case BinaryKind::mul: return x * y;
    }
    return 0.0;
  };

  if (an->shape == bn->shape) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(av[i], bv[i]);
    return make_result(an->shape, std::move(out), {an, bn}, [kind, an, bn](Node& self) {
      const auto& g = self.grad;
      if (wants(an)) {
        for (std::size_t i = 0; i < g.size(); ++i) an->grad[i] += kind == BinaryKind::mul ? g[i] * bn->value[i] : g[i];
      }
      if (wants(bn)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          bn->grad[i] += kind == BinaryKind::add ? g[i] : kind == BinaryKind::sub ? -g[i] : g[i] * an->value[i];
        }
      }
    });
  }

  Shape out_shape = broadcast_shape(an->shape, bn->shape, name);
  auto ia = std::make_shared<std::vector<std::size_t>>(broadcast_index(an->shape, out_shape));
  auto ib = std::make_shared<std::vector<std::size_t>>(broadcast_index(bn->shape, out_shape));
  std::vector<double> out(shape_numel(out_shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = apply(av[(*ia)[i]], bv[(*ib)[i]]);
  return make_result(std::move(out_shape), std::move(out), {an, bn}, [kind, an, bn, ia, ib](Node& self) {
    const auto& g = self.grad;
    if (wants(an)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        an->grad[(*ia)[i]] += kind == BinaryKind::mul ? g[i] * bn->value[(*ib)[i]] : g[i];
      }
    }
    if (wants(bn)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double gi = g[i];
        bn->grad[(*ib)[i]] += kind == BinaryKind::add ? gi : kind == BinaryKind::sub ? -gi : gi * an->value[(*ia)[i]];
      }
    }
  });
}

// Unary map with derivative expressed through (input, output).
template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx) {
  const NodePtr an = a.node();
  std::vector<double> out(an->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(an->value[i]);
  auto node_out = make_result(an->shape, std::move(out), {an}, nullptr);
  if (node_out.requires_grad()) {
    // The rule needs this node's own output; capture it weakly via the Node&.
    node_out.node()->backward = [an, dfdx](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        an->grad[i] += self.grad[i] * dfdx(an->value[i], self.value[i]);
      }
    };
  }
  return node_out;
}

void check_axis(const Tensor& a, std::size_t axis, const char* op) {
  if (axis >= a.rank()) {
    throw Error(ErrorKind::shape, std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                                      shape_to_string(a.shape()));
  }
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += aip * b[j];
    }
  }
}

}  // namespace

// elementwise

Tensor add(const Tensor& a, const Tensor& b) { return binary(BinaryKind::add, a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinaryKind::sub, a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinaryKind::mul, a, b, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& a) {
  auto out = unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
  require_finite(out.node()->value, "exp");
  return out;
}

Tensor log(const Tensor& a) {
  for (double x : a.data()) {
    if (!(x > 0.0)) throw Error(ErrorKind::domain, "log of non-positive value " + std::to_string(x));
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  for (double x : a.data()) {
    if (!(x >= 0.0)) throw Error(ErrorKind::domain, "sqrt of negative value " + std::to_string(x));
  }
  return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor elementwise(Elementwise kind, const Tensor& a, const std::optional<Tensor>& b, double factor) {
  auto need_b = [&]() -> const Tensor& {
    if (!b) throw Error(ErrorKind::shape, "binary elementwise operation needs a second operand");
    return *b;
  };
  switch (kind) {
    case Elementwise::add: return add(a, need_b());
    case Elementwise::sub: return sub(a, need_b());
    case Elementwise::mul: return mul(a, need_b());
    case Elementwise::scale: return scale(a, factor);
    case Elementwise::exp: return exp(a);
    case Elementwise::log: return log(a);
    case Elementwise::tanh: return tanh(a);
    case Elementwise::relu: return relu(a);
    case Elementwise::square: return square(a);
    case Elementwise::sqrt: return sqrt(a);
  }
  throw Error(ErrorKind::domain, "unknown elementwise kind");
}

// matmul

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2) throw Error(ErrorKind::shape, "matmul needs rank >= 2 operands");
  const NodePtr an = a.node();
  const NodePtr bn = b.node();
  const std::size_t m = an->shape[a.rank() - 2];
  const std::size_t k = an->shape[a.rank() - 1];
  const std::size_t kb = bn->shape[b.rank() - 2];
  const std::size_t n = bn->shape[b.rank() - 1];
  if (k != kb) {
    throw Error(ErrorKind::shape, "matmul: inner dimensions differ, " + shape_to_string(an->shape) + " x " +
                                      shape_to_string(bn->shape));
  }
  const Shape lead_a(an->shape.begin(), an->shape.end() - 2);
  const Shape lead_b(bn->shape.begin(), bn->shape.end() - 2);
  Shape lead = broadcast_shape(lead_a, lead_b, "matmul");
  const std::size_t batches = shape_numel(lead);
  auto off_a = std::make_shared<std::vector<std::size_t>>(broadcast_index(lead_a, lead));
  auto off_b = std::make_shared<std::vector<std::size_t>>(broadcast_index(lead_b, lead));

  Shape out_shape = lead;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<double> out(batches * m * n, 0.0);
  for (std::size_t l = 0; l < batches; ++l) {
    gemm_nn(an->value.data() + (*off_a)[l] * m * k, bn->value.data() + (*off_b)[l] * k * n, out.data() + l * m * n, m,
            k, n);
  }
  return make_result(std::move(out_shape), std::move(out), {an, bn}, [an, bn, off_a, off_b, batches, m, k, n](Node& self) {
    for (std::size_t l = 0; l < batches; ++l) {
      const double* g = self.grad.data() + l * m * n;
      const double* A = an->value.data() + (*off_a)[l] * m * k;
      const double* B = bn->value.data() + (*off_b)[l] * k * n;
      if (wants(an)) {
        double* dA = an->grad.data() + (*off_a)[l] * m * k;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
            dA[i * k + p] += acc;
          }
        }
      }
      if (wants(bn)) {
        double* dB = bn->grad.data() + (*off_b)[l] * k * n;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * g[i * n + j];
          }
        }
      }
    }
  });
}

// softmax

Tensor softmax_last(const Tensor& a) {
  if (a.rank() < 1) throw Error(ErrorKind::shape, "softmax needs rank >= 1");
  const NodePtr an = a.node();
  const std::size_t cols = an->shape.back();
  const std::size_t rows = an->value.size() / cols;
  std::vector<double> out(an->value.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = an->value.data() + r * cols;
    double* y = out.data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      total += y[c];
    }
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  return make_result(an->shape, std::move(out), {an}, [an, rows, cols](Node& self) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[c] * g[c];
      double* dx = an->grad.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dx[c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw Error(ErrorKind::shape, "softmax_rows needs a rank-2 tensor, got " + shape_to_string(a.shape()));
  return softmax_last(a);
}

// reductions

Tensor sum(const Tensor& a, std::size_t axis) {
  check_axis(a, axis, "sum");
  const NodePtr an = a.node();
  const std::size_t outer = product(an->shape, 0, axis);
  const std::size_t len = an->shape[axis];
  const std::size_t inner = product(an->shape, axis + 1, an->shape.size());
  Shape out_shape = an->shape;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t l = 0; l < len; ++l) {
      const double* x = an->value.data() + (o * len + l) * inner;
      double* y = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) y[i] += x[i];
    }
  }
  return make_result(std::move(out_shape), std::move(out), {an}, [an, outer, len, inner](Node& self) {
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t l = 0; l < len; ++l) {
        double* dx = an->grad.data() + (o * len + l) * inner;
        const double* g = self.grad.data() + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dx[i] += g[i];
      }
    }
  });
}

Tensor mean(const Tensor& a, std::size_t axis) {
  check_axis(a, axis, "mean");
  return scale(sum(a, axis), 1.0 / static_cast<double>(a.dim(axis)));
}

Tensor sum_all(const Tensor& a) {
  const NodePtr an = a.node();
  double total = 0.0;
  for (double x : an->value) total += x;
  return make_result({}, {total}, {an}, [an](Node& self) {
    const double g = self.grad[0];
    for (auto& dx : an->grad) dx += g;
  });
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.numel())); }

Tensor norm_last(const Tensor& a) {
  if (a.rank() < 1) throw Error(ErrorKind::shape, "norm_last needs rank >= 1");
  const NodePtr an = a.node();
  const std::size_t cols = an->shape.back();
  const std::size_t rows = an->value.size() / cols;
  Shape out_shape(an->shape.begin(), an->shape.end() - 1);
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t c = 0; c < cols; ++c) ss += an->value[r * cols + c] * an->value[r * cols + c];
    out[r] = std::sqrt(ss);
  }
  return make_result(std::move(out_shape), std::move(out), {an}, [an, rows, cols](Node& self) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = self.value[r];
      if (y == 0.0) continue;
      const double g = self.grad[r] / y;
      for (std::size_t c = 0; c < cols; ++c) an->grad[r * cols + c] += g * an->value[r * cols + c];
    }
  });
}

// temporal convolution

Tensor conv_time(const Tensor& x, const Tensor& kernels, const Tensor& bias) {
  if (x.rank() < 3) throw Error(ErrorKind::shape, "conv_time input must be [..., T, N, C], got " + shape_to_string(x.shape()));
  if (kernels.rank() != 3) throw Error(ErrorKind::shape, "conv_time kernels must be [K, C_in, C_out]");
  const std::size_t K = kernels.dim(0);
  if (K % 2 == 0) throw Error(ErrorKind::shape, "conv_time kernel size must be odd, got " + std::to_string(K));
  const std::size_t r = x.rank();
  const std::size_t T = x.dim(r - 3);
  const std::size_t N = x.dim(r - 2);
  const std::size_t Cin = x.dim(r - 1);
  const std::size_t Cout = kernels.dim(2);
  if (kernels.dim(1) != Cin) {
    throw Error(ErrorKind::shape, "conv_time channel mismatch: input has " + std::to_string(Cin) + ", kernels expect " +
                                      std::to_string(kernels.dim(1)));
  }
  if (bias.rank() != 1 || bias.dim(0) != Cout) throw Error(ErrorKind::shape, "conv_time bias must be [C_out]");

  const NodePtr xn = x.node();
  const NodePtr kn = kernels.node();
  const NodePtr bn = bias.node();
  const std::size_t batches = product(xn->shape, 0, r - 3);
  const auto half = static_cast<std::ptrdiff_t>(K / 2);
  Shape out_shape = xn->shape;
  out_shape.back() = Cout;
  std::vector<double> out(batches * T * N * Cout);

  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t n = 0; n < N; ++n) {
        double* y = out.data() + ((b * T + t) * N + n) * Cout;
        std::copy(bn->value.begin(), bn->value.end(), y);
        for (std::size_t k = 0; k < K; ++k) {
          const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
          const double* xi = xn->value.data() + ((b * T + static_cast<std::size_t>(src)) * N + n) * Cin;
          gemm_nn(xi, kn->value.data() + k * Cin * Cout, y, 1, Cin, Cout);
        }
      }
    }
  }

  return make_result(std::move(out_shape), std::move(out), {xn, kn, bn},
                     [xn, kn, bn, batches, T, N, Cin, Cout, K, half](Node& self) {
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t n = 0; n < N; ++n) {
          const double* g = self.grad.data() + ((b * T + t) * N + n) * Cout;
          if (wants(bn)) {
            for (std::size_t co = 0; co < Cout; ++co) bn->grad[co] += g[co];
          }
          for (std::size_t k = 0; k < K; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(k) - half;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
            const std::size_t xoff = ((b * T + static_cast<std::size_t>(src)) * N + n) * Cin;
            const double* W = kn->value.data() + k * Cin * Cout;
            if (wants(xn)) {
              double* dx = xn->grad.data() + xoff;
              for (std::size_t ci = 0; ci < Cin; ++ci) {
                double acc = 0.0;
                for (std::size_t co = 0; co < Cout; ++co) acc += W[ci * Cout + co] * g[co];
                dx[ci] += acc;
              }
            }
            if (wants(kn)) {
              double* dW = kn->grad.data() + k * Cin * Cout;
              const double* xi = xn->value.data() + xoff;
              for (std::size_t ci = 0; ci < Cin; ++ci) {
                const double v = xi[ci];
                for (std::size_t co = 0; co < Cout; ++co) dW[ci * Cout + co] += v * g[co];
              }
            }
          }
        }
      }
    }
  });
}

// layout

Tensor reshape(const Tensor& a, Shape new_shape) {
  for (auto d : new_shape) {
    if (d == 0) throw Error(ErrorKind::shape, "reshape target has a zero dimension");
  }
  if (shape_numel(new_shape) != a.numel()) {
    throw Error(ErrorKind::shape, "reshape " + shape_to_string(a.shape()) + " -> " + shape_to_string(new_shape) +
                                      " changes the element count");
  }
  const NodePtr an = a.node();
  return make_result(std::move(new_shape), an->value, {an}, [an](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
  });
}

Tensor transpose(const Tensor& a, const std::vector<std::size_t>& permutation) {
  const std::size_t r = a.rank();
  if (permutation.size() != r) throw Error(ErrorKind::shape, "transpose permutation length differs from rank");
  std::vector<bool> seen(r, false);
  for (auto p : permutation) {
    if (p >= r || seen[p]) throw Error(ErrorKind::shape, "transpose argument is not a permutation");
    seen[p] = true;
  }
  const NodePtr an = a.node();
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = an->shape[permutation[i]];

  std::vector<std::size_t> in_stride(r);
  std::size_t s = 1;
  for (std::size_t i = r; i-- > 0;) {
    in_stride[i] = s;
    s *= an->shape[i];
  }
  // Source flat index for each destination flat index.
  const std::size_t n = an->value.size();
  auto src = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> counter(r, 0);
  std::size_t flat = 0;
  for (std::size_t k = 0; k < n; ++k) {
    (*src)[k] = flat;
    for (std::size_t d = r; d-- > 0;) {
      ++counter[d];
      flat += in_stride[permutation[d]];
      if (counter[d] < out_shape[d]) break;
      flat -= in_stride[permutation[d]] * counter[d];
      counter[d] = 0;
    }
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = an->value[(*src)[k]];
  return make_result(std::move(out_shape), std::move(out), {an}, [an, src](Node& self) {
    for (std::size_t k = 0; k < self.grad.size(); ++k) an->grad[(*src)[k]] += self.grad[k];
  });
}

Tensor transpose_last2(const Tensor& a) {
  if (a.rank() < 2) throw Error(ErrorKind::shape, "transpose_last2 needs rank >= 2");
  std::vector<std::size_t> perm(a.rank());
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[a.rank() - 1], perm[a.rank() - 2]);
  return transpose(a, perm);
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  check_axis(a, axis, "slice");
  if (length == 0 || start + length > a.dim(axis)) {
    throw Error(ErrorKind::shape, "slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                                      ") out of range for axis of size " + std::to_string(a.dim(axis)));
  }
  const NodePtr an = a.node();
  const std::size_t outer = product(an->shape, 0, axis);
  const std::size_t len = an->shape[axis];
  const std::size_t inner = product(an->shape, axis + 1, an->shape.size());
  Shape out_shape = an->shape;
  out_shape[axis] = length;
  std::vector<double> out(outer * length * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(an->value.begin() + static_cast<std::ptrdiff_t>((o * len + start) * inner), length * inner,
                out.begin() + static_cast<std::ptrdiff_t>(o * length * inner));
  }
  return make_result(std::move(out_shape), std::move(out), {an}, [an, outer, len, inner, start, length](Node& self) {
    for (std::size_t o = 0; o < outer; ++o) {
      const double* g = self.grad.data() + o * length * inner;
      double* dx = an->grad.data() + (o * len + start) * inner;
      for (std::size_t i = 0; i < length * inner; ++i) dx[i] += g[i];
    }
  });
}

}  // namespace motionlab
