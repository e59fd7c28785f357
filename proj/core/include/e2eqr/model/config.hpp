// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace e2eqr {

using TokenId = std::int32_t;

namespace model {

/// Architecture hyperparameters. `max_len` bounds both encoder inputs and the
/// decoder sequence of one step (bos + question tokens).
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t n_enc_layers = 2;
  std::size_t n_dec_layers = 2;
  std::size_t max_len = 64;
  bool mode_accumulated_sa = true;
  bool mode_accumulated_ca = true;

  std::size_t d_k() const { return n_heads ? d_model / n_heads : 0; }
  /// Throws ContractError when the invariants do not hold.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Special token ids, in vocabulary order.
struct SpecialTokens {
  TokenId pad = 0;
  TokenId bos = 1;
  TokenId eos = 2;
  TokenId ans = 3;
  TokenId bridge = 4;
  TokenId doc = 5;
  TokenId sep = 6;
  TokenId unk = 7;
};

/// One step's encoder input C_t (already assembled with answer and bridges).
struct StepInput {
  std::vector<TokenId> tokens;
  std::size_t step_index = 1;  // 1-based
};

}  // namespace model
}  // namespace e2eqr
