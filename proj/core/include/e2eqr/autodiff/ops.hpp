// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "e2eqr/autodiff/tensor.hpp"

namespace e2eqr::autodiff {

/// A·B for matrices (m×k)·(k×n). Throws DimensionError on inner mismatch.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise sum of equally shaped tensors.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise product of equally shaped tensors.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// Adds a length-n row vector (shape (n) or (1, n)) to every row of an m×n matrix.
template <typename T>
Tensor<T> add_row(const Tensor<T>& a, const Tensor<T>& row);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// Tanh-approximated GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& a);

/// Row-wise softmax with max subtraction. A rank-1 input is a single row.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x);

/// Row-wise (x - mean) / sqrt(var + eps) * gain + bias (biased variance).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps);

/// Gathers rows of `table` (V×d) for each id; output (ids.size()×d).
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids);

/// Row-wise concatenation of matrices sharing a column count.
template <typename T>
Tensor<T> concat_rows(std::span<const Tensor<T>> parts);

/// Rows [begin, begin + count) of a matrix.
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t count);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

/// Mean over unmasked rows of -log softmax(logits)[target]. An empty mask
/// means every row counts. Throws IndexError for out-of-range targets.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                        std::span<const std::uint8_t> mask = {});

/// Key visibility for accumulated attention. Keys are laid out as
/// [prior_rows rows from completed steps; current-step rows]. Every query sees
/// all prior rows. Within the current block a query sees everything, or when
/// `causal` only rows up to its own position, where query row r sits at
/// current-step position `query_offset + r`.
struct AttentionMask {
  std::size_t prior_rows = 0;
  bool causal = false;
  std::size_t query_offset = 0;

  bool allowed(std::size_t query_row, std::size_t key_row) const {
    if (key_row < prior_rows || !causal) return true;
    return key_row - prior_rows <= query_offset + query_row;
  }
};

/// Multi-head scaled dot-product attention. Q is (m×d), K and V are (n×d);
/// heads are contiguous column groups of width d / n_heads. Output (m×d).
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t n_heads,
                    const AttentionMask& mask);

}  // namespace e2eqr::autodiff
