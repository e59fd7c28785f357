// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "e2eqr/autodiff/tensor.hpp"
#include "e2eqr/model/cache.hpp"
#include "e2eqr/model/config.hpp"

namespace e2eqr::model {

template <typename T>
struct NormWeights {
  autodiff::Tensor<T> gain, bias;
};

template <typename T>
struct AttentionWeights {
  autodiff::Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct FeedForwardWeights {
  autodiff::Tensor<T> w1, b1, w2, b2;
};

template <typename T>
struct EncoderLayer {
  NormWeights<T> ln1;
  AttentionWeights<T> sa;
  NormWeights<T> ln2;
  FeedForwardWeights<T> ff;
};

template <typename T>
struct DecoderLayer {
  NormWeights<T> ln1;
  AttentionWeights<T> sa;
  NormWeights<T> ln2;
  AttentionWeights<T> ca;
  NormWeights<T> ln3;
  FeedForwardWeights<T> ff;
};

/// Within-step decoder state: cross-attention projections of the current
/// encoder output plus the self-attention rows produced so far this step.
template <typename T>
struct StepState {
  std::vector<KeyValue<T>> cross;  // per layer
  std::vector<KeyValue<T>> self;   // per layer; undefined tensors until the first position
  std::size_t length = 0;          // decoder positions consumed this step
};

/// Pre-norm transformer encoder-decoder with sinusoidal positions and no
/// weight tying. Decoder attention reads accumulated blocks from an
/// AttentionCache according to the config's accumulation modes.
template <typename T>
class Transformer {
 public:
  /// Random initialization, deterministic in `seed`.
  Transformer(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  /// Toggles accumulated self-/cross-attention (ablation modes).
  void set_accumulation(bool self_attention, bool cross_attention);

  autodiff::ParameterSet<T>& parameters() { return params_; }
  const autodiff::ParameterSet<T>& parameters() const { return params_; }

  /// H_t for one step's input: (tokens.size() × d_model). Throws
  /// ContractError for empty input, LengthError beyond max_len, IndexError
  /// for ids outside the vocabulary.
  autodiff::Tensor<T> encode(std::span<const TokenId> tokens) const;

  /// Fresh step state whose cross-attention keys/values project `encoded`.
  StepState<T> begin_step(const autodiff::Tensor<T>& encoded) const;

  /// Runs the decoder over `tokens`, placed at positions state.length onward,
  /// appending their self-attention rows to `state`. Returns logits
  /// (tokens.size() × vocab) or, with `want_logits` false, an undefined tensor.
  autodiff::Tensor<T> decode(std::span<const TokenId> tokens, StepState<T>& state, const AttentionCache<T>& cache,
                             bool want_logits = true) const;

  /// One incremental position; returns logits of shape (1 × vocab).
  autodiff::Tensor<T> decode_token(TokenId token, StepState<T>& state, const AttentionCache<T>& cache) const {
    return decode(std::span<const TokenId>(&token, 1), state, cache);
  }

  AttentionCache<T> empty_cache() const { return AttentionCache<T>(config_.n_dec_layers); }

  const autodiff::Tensor<T>& positions() const { return positions_; }

 private:
  ModelConfig config_;
  autodiff::ParameterSet<T> params_;
  autodiff::Tensor<T> enc_embed_;
  std::vector<EncoderLayer<T>> enc_layers_;
  NormWeights<T> enc_norm_;
  autodiff::Tensor<T> dec_embed_;
  std::vector<DecoderLayer<T>> dec_layers_;
  NormWeights<T> dec_norm_;
  autodiff::Tensor<T> out_w_, out_b_;
  autodiff::Tensor<T> positions_;  // max_len × d_model, untracked
};

extern template class Transformer<float>;
extern template class Transformer<double>;

}  // namespace e2eqr::model
