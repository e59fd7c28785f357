// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/model/config.hpp"

#include <string>

#include "e2eqr/errors.hpp"

namespace e2eqr::model {

void ModelConfig::validate() const {
  if (vocab_size == 0) throw ContractError("model config: vocab_size must be positive");
  if (d_model == 0 || n_heads == 0) throw ContractError("model config: d_model and n_heads must be positive");
  if (d_model % n_heads != 0) {
    throw ContractError("model config: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                        std::to_string(n_heads));
  }
  if (d_ff == 0) throw ContractError("model config: d_ff must be positive");
  if (n_enc_layers == 0 || n_dec_layers == 0) throw ContractError("model config: need at least one layer each");
  if (max_len < 2) throw ContractError("model config: max_len must be at least 2");
}

}  // namespace e2eqr::model
