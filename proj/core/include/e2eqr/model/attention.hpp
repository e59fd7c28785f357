// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "e2eqr/autodiff/tensor.hpp"
#include "e2eqr/model/cache.hpp"

namespace e2eqr::model {

/// Scaled dot-product attention over the row-concatenation
/// [prior_blocks...; current] of keys and values.
///
/// Every query sees all rows of the prior blocks. Within the current block a
/// query sees all rows, or with `causal` only rows up to its own position;
/// query row r sits at current-step position `query_offset + r`. Widths must
/// match (DimensionError otherwise). With `n_heads` > 1 the columns split into
/// equal head groups, each attended independently.
template <typename T>
autodiff::Tensor<T> accumulated_attention(const autodiff::Tensor<T>& queries,
                                          std::span<const KeyValue<T>> prior_blocks,
                                          const KeyValue<T>& current, bool causal, std::size_t query_offset = 0,
                                          std::size_t n_heads = 1);

}  // namespace e2eqr::model
