// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/model/attention.hpp"

#include <vector>

#include "e2eqr/autodiff/ops.hpp"
#include "e2eqr/errors.hpp"

namespace e2eqr::model {

template <typename T>
autodiff::Tensor<T> accumulated_attention(const autodiff::Tensor<T>& queries,
                                          std::span<const KeyValue<T>> prior_blocks,
                                          const KeyValue<T>& current, bool causal, std::size_t query_offset,
                                          std::size_t n_heads) {
  const std::size_t width = queries.cols();
  std::vector<autodiff::Tensor<T>> keys, values;
  keys.reserve(prior_blocks.size() + 1);
  values.reserve(prior_blocks.size() + 1);
  std::size_t prior_rows = 0;
  for (const auto& block : prior_blocks) {
    if (block.keys.cols() != width || block.values.cols() != width) {
      throw DimensionError("accumulated attention: cached block width " + std::to_string(block.keys.cols()) +
                           " does not match query width " + std::to_string(width));
    }
    if (block.keys.rows() == 0) continue;
    prior_rows += block.keys.rows();
    keys.push_back(block.keys);
    values.push_back(block.values);
  }
  keys.push_back(current.keys);
  values.push_back(current.values);
  auto k = autodiff::concat_rows<T>(keys);
  auto v = autodiff::concat_rows<T>(values);
  autodiff::AttentionMask mask{prior_rows, causal, query_offset};
  return autodiff::attention(queries, k, v, n_heads, mask);
}

template autodiff::Tensor<float> accumulated_attention(const autodiff::Tensor<float>&,
                                                       std::span<const KeyValue<float>>, const KeyValue<float>&,
                                                       bool, std::size_t, std::size_t);
template autodiff::Tensor<double> accumulated_attention(const autodiff::Tensor<double>&,
                                                        std::span<const KeyValue<double>>, const KeyValue<double>&,
                                                        bool, std::size_t, std::size_t);

}  // namespace e2eqr::model
