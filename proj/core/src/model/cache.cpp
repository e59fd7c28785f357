// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/model/cache.hpp"

#include <string>

#include "e2eqr/errors.hpp"

namespace e2eqr::model {

namespace {

template <typename T>
std::size_t check_rows(const std::vector<KeyValue<T>>& blocks, const char* what) {
  std::size_t rows = blocks.front().keys.rows();
  for (const auto& kv : blocks) {
    if (kv.keys.rows() != rows || kv.values.rows() != rows) {
      throw DimensionError(std::string("attention cache: ") + what + " blocks disagree on row count across layers");
    }
  }
  return rows;
}

}  // namespace

template <typename T>
std::size_t AttentionCache<T>::sa_rows() const {
  std::size_t n = 0;
  for (auto m : step_lengths_) n += m;
  return n;
}

template <typename T>
std::size_t AttentionCache<T>::ca_rows() const {
  std::size_t n = 0;
  for (auto l : context_lengths_) n += l;
  return n;
}

template <typename T>
void AttentionCache<T>::seal(std::vector<KeyValue<T>> sa, std::vector<KeyValue<T>> ca) {
  if (sa.size() != layers_.size() || ca.size() != layers_.size()) {
    throw DimensionError("attention cache: expected " + std::to_string(layers_.size()) + " layers, got " +
                         std::to_string(sa.size()) + "/" + std::to_string(ca.size()));
  }
  if (layers_.empty()) return;
  const std::size_t m = check_rows(sa, "self-attention");
  const std::size_t l = check_rows(ca, "cross-attention");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].sa.push_back(std::move(sa[i]));
    layers_[i].ca.push_back(std::move(ca[i]));
  }
  step_lengths_.push_back(m);
  context_lengths_.push_back(l);
}

template class AttentionCache<float>;
template class AttentionCache<double>;

}  // namespace e2eqr::model
