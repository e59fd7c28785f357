// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "e2eqr/autodiff/tensor.hpp"

namespace e2eqr::model {

/// Key/value projections for one decoder layer, all heads side by side
/// (rows × d_model; head h owns columns [h·d_k, (h+1)·d_k)).
template <typename T>
struct KeyValue {
  autodiff::Tensor<T> keys;
  autodiff::Tensor<T> values;
};

/// Per-layer key/value blocks sealed by completed rewriting steps.
///
/// Append-only: `seal` adds one block per layer for self-attention (decoder
/// positions of the step, bos included, eos excluded) and one for
/// cross-attention (projections of that step's encoder output). After step t
/// the self-attention rows total Σ m_i and cross-attention rows Σ l_i.
template <typename T>
class AttentionCache {
 public:
  AttentionCache() = default;
  explicit AttentionCache(std::size_t n_layers) : layers_(n_layers) {}

  std::size_t n_layers() const { return layers_.size(); }
  std::size_t steps() const { return step_lengths_.size(); }
  const std::vector<std::size_t>& step_lengths() const { return step_lengths_; }
  const std::vector<std::size_t>& context_lengths() const { return context_lengths_; }
  std::size_t sa_rows() const;
  std::size_t ca_rows() const;

  const std::vector<KeyValue<T>>& sa_blocks(std::size_t layer) const { return layers_.at(layer).sa; }
  const std::vector<KeyValue<T>>& ca_blocks(std::size_t layer) const { return layers_.at(layer).ca; }

  /// Seals one completed step. Both vectors hold one entry per layer; row counts
  /// must agree across layers. Throws DimensionError otherwise.
  void seal(std::vector<KeyValue<T>> sa, std::vector<KeyValue<T>> ca);

 private:
  struct Layer {
    std::vector<KeyValue<T>> sa;
    std::vector<KeyValue<T>> ca;
  };
  std::vector<Layer> layers_;
  std::vector<std::size_t> step_lengths_;
  std::vector<std::size_t> context_lengths_;
};

extern template class AttentionCache<float>;
extern template class AttentionCache<double>;

}  // namespace e2eqr::model
