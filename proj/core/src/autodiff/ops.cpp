// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string>

#include "e2eqr/errors.hpp"

namespace e2eqr::autodiff {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
Tensor<T> make_output(Shape shape, std::vector<T> data, const char* op) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->is_leaf = false;
  node->op = op;
  return Tensor<T>(std::move(node));
}

// Wires `out` to its inputs when any of them is tracked and recording is on.
// Returns whether the caller should install a backward function.
template <typename T>
bool track(const Tensor<T>& out, std::initializer_list<const Tensor<T>*> inputs) {
  if (!grad_enabled()) return false;
  bool any = false;
  for (const auto* in : inputs) any = any || in->requires_grad();
  if (!any) return false;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const auto* in : inputs) node.parents.push_back(in->node());
  return true;
}

void require_matrix(const Shape& s, const char* op, const char* arg) {
  if (s.size() != 2) {
    throw DimensionError(std::string(op) + ": " + arg + " must be a matrix, got " + shape_string(s));
  }
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

std::size_t vector_length(const Shape& s, const char* op, const char* arg) {
  if (s.size() == 1) return s[0];
  if (s.size() == 2 && s[0] == 1) return s[1];
  throw DimensionError(std::string(op) + ": " + arg + " must be a row vector, got " + shape_string(s));
}

// C(m×n) += A(m×k)·B(k×n); innermost loop runs over contiguous columns.
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(k×n) += Aᵀ·B where A is (m×k) and B is (m×n).
template <typename T>
void gemm_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
std::vector<T> transpose(std::span<const T> x, std::size_t rows, std::size_t cols) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = x[i * cols + j];
  return out;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a.shape(), "matmul", "A");
  require_matrix(b.shape(), "matmul", "B");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<T> out(m * n, T(0));
  gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  auto result = make_output<T>({m, n}, std::move(out), "matmul");
  if (track(result, {&a, &b})) {
    result.node()->backward_fn = [m, k, n](Node<T>& self) {
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      if (pa.requires_grad) {
        auto bt = transpose<T>(pb.data, k, n);
        gemm_acc(self.grad.data(), bt.data(), pa.ensure_grad().data(), m, n, k);
      }
      if (pb.requires_grad) gemm_tn_acc(pa.data.data(), self.grad.data(), pb.ensure_grad().data(), m, k, n);
    };
  }
  return result;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.size());
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  auto result = make_output<T>(a.shape(), std::move(out), "add");
  if (track(result, {&a, &b})) {
    result.node()->backward_fn = [](Node<T>& self) {
      for (auto& parent : self.parents) {
        if (!parent->requires_grad) continue;
        auto& g = parent->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.size());
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  auto result = make_output<T>(a.shape(), std::move(out), "mul");
  if (track(result, {&a, &b})) {
    result.node()->backward_fn = [](Node<T>& self) {
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      if (pa.requires_grad) {
        auto& g = pa.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
      }
      if (pb.requires_grad) {
        auto& g = pb.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row) {
  const std::size_t n = vector_length(row.shape(), "add_row", "row");
  if (a.cols() != n || a.rank() == 0) {
    throw DimensionError("add_row: " + shape_string(a.shape()) + " cannot take a row of length " + std::to_string(n));
  }
  const std::size_t m = a.rows();
  std::vector<T> out(a.data().begin(), a.data().end());
  auto rd = row.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += rd[j];
  auto result = make_output<T>(a.shape(), std::move(out), "add_row");
  if (track(result, {&a, &row})) {
    result.node()->backward_fn = [m, n](Node<T>& self) {
      auto& pa = *self.parents[0];
      auto& pr = *self.parents[1];
      if (pa.requires_grad) {
        auto& g = pa.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
      if (pr.requires_grad) {
        auto& g = pr.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& x : out) x *= factor;
  auto result = make_output<T>(a.shape(), std::move(out), "scale");
  if (track(result, {&a})) {
    result.node()->backward_fn = [factor](Node<T>& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
    };
  }
  return result;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T kA = T(0.044715);
  std::vector<T> out(a.size());
  auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = ad[i];
    out[i] = T(0.5) * x * (T(1) + std::tanh(kC * (x + kA * x * x * x)));
  }
  auto result = make_output<T>(a.shape(), std::move(out), "gelu");
  if (track(result, {&a})) {
    result.node()->backward_fn = [](Node<T>& self) {
      auto& parent = *self.parents[0];
      auto& g = parent.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T x = parent.data[i];
        const T t = std::tanh(kC * (x + kA * x * x * x));
        const T d = T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * kC * (T(1) + T(3) * kA * x * x);
        g[i] += self.grad[i] * d;
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.rank() == 0 || x.size() == 0) throw DimensionError("softmax: input must be a non-empty vector or matrix");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<T> out(x.size());
  auto xd = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = xd.data() + i * n;
    T* o = out.data() + i * n;
    const T mx = *std::max_element(row, row + n);
    T total = 0;
    for (std::size_t j = 0; j < n; ++j) total += (o[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= total;
  }
  auto result = make_output<T>(x.shape(), std::move(out), "softmax");
  if (track(result, {&x})) {
    result.node()->backward_fn = [m, n](Node<T>& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const T* y = self.data.data() + i * n;
        const T* dy = self.grad.data() + i * n;
        T dot = 0;
        for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (dy[j] - dot);
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (x.rank() == 0 || x.size() == 0) throw DimensionError("layer_norm: input must be a non-empty vector or matrix");
  const std::size_t m = x.rows(), d = x.cols();
  if (vector_length(gain.shape(), "layer_norm", "gain") != d || vector_length(bias.shape(), "layer_norm", "bias") != d) {
    throw DimensionError("layer_norm: gain/bias length must equal " + std::to_string(d));
  }
  std::vector<T> out(x.size());
  std::vector<T> xhat(x.size());
  std::vector<T> rstd(m);
  auto xd = x.data();
  auto gd = gain.data();
  auto bd = bias.data();
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = xd.data() + i * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= T(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= T(d);
    rstd[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (row[j] - mean) * rstd[i];
      out[i * d + j] = xhat[i * d + j] * gd[j] + bd[j];
    }
  }
  auto result = make_output<T>(x.shape(), std::move(out), "layer_norm");
  if (track(result, {&x, &gain, &bias})) {
    result.node()->backward_fn = [m, d, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
      auto& px = *self.parents[0];
      auto& pg = *self.parents[1];
      auto& pb = *self.parents[2];
      if (pg.requires_grad) {
        auto& g = pg.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j] * xhat[i * d + j];
      }
      if (pb.requires_grad) {
        auto& g = pb.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j];
      }
      if (px.requires_grad) {
        auto& g = px.ensure_grad();
        std::vector<T> dxhat(d);
        for (std::size_t i = 0; i < m; ++i) {
          T mean_dxhat = 0, mean_dxhat_xhat = 0;
          for (std::size_t j = 0; j < d; ++j) {
            dxhat[j] = self.grad[i * d + j] * pg.data[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xhat[i * d + j];
          }
          mean_dxhat /= T(d);
          mean_dxhat_xhat /= T(d);
          for (std::size_t j = 0; j < d; ++j)
            g[i * d + j] += rstd[i] * (dxhat[j] - mean_dxhat - xhat[i * d + j] * mean_dxhat_xhat);
        }
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids) {
  require_matrix(table.shape(), "embedding", "table");
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  std::vector<T> out(ids.size() * d);
  auto td = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw IndexError("embedding: token id " + std::to_string(ids[i]) + " outside vocabulary of size " +
                       std::to_string(vocab));
    }
    std::copy_n(td.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  auto result = make_output<T>({ids.size(), d}, std::move(out), "embedding");
  if (track(result, {&table})) {
    result.node()->backward_fn = [d, ids = std::vector<std::int32_t>(ids.begin(), ids.end())](Node<T>& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        T* dst = g.data() + static_cast<std::size_t>(ids[i]) * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += self.grad[i * d + j];
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  const std::size_t n = parts[0].cols();
  std::size_t total_rows = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2) throw DimensionError("concat_rows: parts must be matrices, got " + shape_string(p.shape()));
    if (p.cols() != n) {
      throw DimensionError("concat_rows: width mismatch " + std::to_string(p.cols()) + " vs " + std::to_string(n));
    }
    total_rows += p.rows();
  }
  if (parts.size() == 1) return parts[0];
  std::vector<T> out;
  out.reserve(total_rows * n);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  auto result = make_output<T>({total_rows, n}, std::move(out), "concat_rows");

  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (grad_enabled() && any) {
    auto& node = *result.node();
    node.requires_grad = true;
    for (const auto& p : parts) node.parents.push_back(p.node());
    node.backward_fn = [](Node<T>& self) {
      std::size_t offset = 0;
      for (auto& parent : self.parents) {
        const std::size_t count = parent->data.size();
        if (parent->requires_grad) {
          auto& g = parent->ensure_grad();
          for (std::size_t i = 0; i < count; ++i) g[i] += self.grad[offset + i];
        }
        offset += count;
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  require_matrix(x.shape(), "slice_rows", "x");
  const std::size_t n = x.cols();
  if (begin + count > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") outside " + shape_string(x.shape()));
  }
  std::vector<T> out(x.data().begin() + begin * n, x.data().begin() + (begin + count) * n);
  auto result = make_output<T>({count, n}, std::move(out), "slice_rows");
  if (track(result, {&x})) {
    result.node()->backward_fn = [offset = begin * n](Node<T>& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
    };
  }
  return result;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (auto v : x.data()) total += v;
  auto result = make_output<T>({}, {total}, "sum");
  if (track(result, {&x})) {
    result.node()->backward_fn = [](Node<T>& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (auto& v : g) v += self.grad[0];
    };
  }
  return result;
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                        std::span<const std::uint8_t> mask) {
  require_matrix(logits.shape(), "cross_entropy", "logits");
  const std::size_t rows = logits.rows(), vocab = logits.cols();
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(rows) +
                         " rows");
  }
  if (!mask.empty() && mask.size() != rows) throw DimensionError("cross_entropy: mask length mismatch");
  auto active = [&](std::size_t i) { return mask.empty() || mask[i] != 0; };

  std::size_t count = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!active(i)) continue;
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= vocab) {
      throw IndexError("cross_entropy: target " + std::to_string(targets[i]) + " outside vocabulary of size " +
                       std::to_string(vocab));
    }
    ++count;
  }
  if (count == 0) throw ContractError("cross_entropy: no unmasked positions");

  auto ld = logits.data();
  std::vector<T> probs(ld.size(), T(0));
  T total = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!active(i)) continue;
    const T* row = ld.data() + i * vocab;
    T* p = probs.data() + i * vocab;
    const T mx = *std::max_element(row, row + vocab);
    T z = 0;
    for (std::size_t j = 0; j < vocab; ++j) z += (p[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < vocab; ++j) p[j] /= z;
    total += mx + std::log(z) - row[targets[i]];
  }
  const T inv_count = T(1) / T(count);
  auto result = make_output<T>({}, {total * inv_count}, "cross_entropy");
  if (track(result, {&logits})) {
    result.node()->backward_fn = [vocab, inv_count, probs = std::move(probs),
                                  targets = std::vector<std::int32_t>(targets.begin(), targets.end()),
                                  mask = std::vector<std::uint8_t>(mask.begin(), mask.end())](Node<T>& self) {
      auto& g = self.parents[0]->ensure_grad();
      const T upstream = self.grad[0] * inv_count;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        for (std::size_t j = 0; j < vocab; ++j) g[i * vocab + j] += upstream * probs[i * vocab + j];
        g[i * vocab + static_cast<std::size_t>(targets[i])] -= upstream;
      }
    };
  }
  return result;
}

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t n_heads,
                    const AttentionMask& mask) {
  require_matrix(q.shape(), "attention", "Q");
  require_matrix(k.shape(), "attention", "K");
  require_matrix(v.shape(), "attention", "V");
  const std::size_t m = q.rows(), n = k.rows(), d = q.cols();
  if (k.cols() != d || v.cols() != d) {
    throw DimensionError("attention: width mismatch Q " + shape_string(q.shape()) + ", K " + shape_string(k.shape()) +
                         ", V " + shape_string(v.shape()));
  }
  if (v.rows() != n) throw DimensionError("attention: K and V row counts differ");
  if (n == 0) throw DimensionError("attention: no keys");
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError("attention: width " + std::to_string(d) + " not divisible into " + std::to_string(n_heads) +
                         " heads");
  }
  if (mask.prior_rows > n) throw DimensionError("attention: mask prior rows exceed key rows");

  const std::size_t dk = d / n_heads;
  const T inv_sqrt = T(1) / std::sqrt(T(dk));
  auto qd = q.data();
  auto kd = k.data();
  auto vd = v.data();
  // probs[h][i][j]; disallowed keys keep probability 0.
  std::vector<T> probs(n_heads * m * n, T(0));
  std::vector<T> out(m * d, T(0));
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t c0 = h * dk;
    for (std::size_t i = 0; i < m; ++i) {
      T* p = probs.data() + (h * m + i) * n;
      const T* qi = qd.data() + i * d + c0;
      T mx = -std::numeric_limits<T>::infinity();
      std::size_t limit = 0;  // allowed keys form a prefix [0, limit)
      for (std::size_t j = 0; j < n && mask.allowed(i, j); ++j) {
        const T* kj = kd.data() + j * d + c0;
        T s = 0;
        for (std::size_t c = 0; c < dk; ++c) s += qi[c] * kj[c];
        p[j] = s * inv_sqrt;
        mx = std::max(mx, p[j]);
        limit = j + 1;
      }
      T z = 0;
      for (std::size_t j = 0; j < limit; ++j) z += (p[j] = std::exp(p[j] - mx));
      T* oi = out.data() + i * d + c0;
      for (std::size_t j = 0; j < limit; ++j) {
        p[j] /= z;
        const T* vj = vd.data() + j * d + c0;
        for (std::size_t c = 0; c < dk; ++c) oi[c] += p[j] * vj[c];
      }
    }
  }
  auto result = make_output<T>({m, d}, std::move(out), "attention");
  if (track(result, {&q, &k, &v})) {
    result.node()->backward_fn = [m, n, d, dk, n_heads, inv_sqrt, probs = std::move(probs)](Node<T>& self) {
      auto& pq = *self.parents[0];
      auto& pk = *self.parents[1];
      auto& pv = *self.parents[2];
      T* gq = pq.requires_grad ? pq.ensure_grad().data() : nullptr;
      T* gk = pk.requires_grad ? pk.ensure_grad().data() : nullptr;
      T* gv = pv.requires_grad ? pv.ensure_grad().data() : nullptr;
      std::vector<T> dscore(n);
      for (std::size_t h = 0; h < n_heads; ++h) {
        const std::size_t c0 = h * dk;
        for (std::size_t i = 0; i < m; ++i) {
          const T* p = probs.data() + (h * m + i) * n;
          const T* go = self.grad.data() + i * d + c0;
          T weighted = 0;
          for (std::size_t j = 0; j < n; ++j) {
            if (p[j] == T(0)) {
              dscore[j] = 0;
              continue;
            }
            const T* vj = pv.data.data() + j * d + c0;
            T dp = 0;
            for (std::size_t c = 0; c < dk; ++c) dp += go[c] * vj[c];
            dscore[j] = dp;
            weighted += dp * p[j];
            if (gv) {
              T* gvj = gv + j * d + c0;
              for (std::size_t c = 0; c < dk; ++c) gvj[c] += p[j] * go[c];
            }
          }
          const T* qi = pq.data.data() + i * d + c0;
          for (std::size_t j = 0; j < n; ++j) {
            if (p[j] == T(0)) continue;
            const T ds = p[j] * (dscore[j] - weighted) * inv_sqrt;
            const T* kj = pk.data.data() + j * d + c0;
            if (gq) {
              T* gqi = gq + i * d + c0;
              for (std::size_t c = 0; c < dk; ++c) gqi[c] += ds * kj[c];
            }
            if (gk) {
              T* gkj = gk + j * d + c0;
              for (std::size_t c = 0; c < dk; ++c) gkj[c] += ds * qi[c];
            }
          }
        }
      }
    };
  }
  return result;
}

#define E2EQR_INSTANTIATE_OPS(T)                                                                            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                               \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                               \
  template Tensor<T> add_row(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> scale(const Tensor<T>&, T);                                                            \
  template Tensor<T> gelu(const Tensor<T>&);                                                                \
  template Tensor<T> softmax(const Tensor<T>&);                                                             \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                   \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const std::int32_t>);                            \
  template Tensor<T> concat_rows(std::span<const Tensor<T>>);                                               \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                                \
  template Tensor<T> sum(const Tensor<T>&);                                                                 \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const std::int32_t>,                         \
                                   std::span<const std::uint8_t>);                                          \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,           \
                               const AttentionMask&);

E2EQR_INSTANTIATE_OPS(float)
E2EQR_INSTANTIATE_OPS(double)

#undef E2EQR_INSTANTIATE_OPS

}  // namespace e2eqr::autodiff
