// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "e2eqr/autodiff/tensor.hpp"
#include "e2eqr/model/cache.hpp"
#include "e2eqr/model/config.hpp"
#include "e2eqr/model/transformer.hpp"

namespace e2eqr::model {

/// Result of greedy-decoding one rewriting step.
template <typename T>
struct StepOutput {
  std::vector<TokenId> question_tokens;  // Q^t without bos/eos
  bool truncated = false;                // hit max_len before eos
  autodiff::Tensor<T> encoder_output;    // H_t
};

/// Index of the largest logit in row `row`; ties go to the lowest id.
template <typename T>
TokenId argmax_row(const autodiff::Tensor<T>& logits, std::size_t row = 0);

/// Greedy decoding from bos until eos or until the step's decoder sequence
/// reaches `max_len` positions, then seals this step's self-attention rows
/// (bos and every emitted question token) and cross-attention rows
/// (projections of `encoded`) into `cache`.
template <typename T>
StepOutput<T> greedy_decode_step(const Transformer<T>& model, const autodiff::Tensor<T>& encoded,
                                 AttentionCache<T>& cache, const SpecialTokens& specials, std::size_t max_len);

/// Runs the decoder teacher-forced over [bos] + `tokens` against the sealed
/// `cache` and seals the step. Returns the logits when `want_logits`.
template <typename T>
autodiff::Tensor<T> forced_step(const Transformer<T>& model, const autodiff::Tensor<T>& encoded,
                                std::span<const TokenId> tokens, AttentionCache<T>& cache,
                                const SpecialTokens& specials, bool want_logits);

struct RewriteOptions {
  /// Final question Q^N (no eos) for teacher forcing at step N. Absent means
  /// greedy decoding at every step.
  std::optional<std::vector<TokenId>> teacher_forced_final;
  /// Intermediate questions Q^1..Q^{N-1} to use in place of greedy choices.
  std::optional<std::vector<std::vector<TokenId>>> pinned_intermediates;
};

template <typename T>
struct RewriteResult {
  std::vector<std::vector<TokenId>> intermediates;  // Q^1..Q^{N-1}
  std::vector<bool> intermediate_truncated;
  std::vector<TokenId> final_question;  // greedy mode only
  bool final_truncated = false;
  autodiff::Tensor<T> final_logits;  // teacher-forced mode only: (|Q^N| + 1) × vocab
  AttentionCache<T> cache;
};

/// Unrolls all N steps over pre-assembled step inputs with shared parameters.
///
/// Intermediate steps pick tokens greedily (or use the pinned ones). When
/// gradients are being recorded the chosen tokens are replayed
/// teacher-forced so the sealed key/value blocks stay attached to the graph;
/// gradients reach earlier steps through those blocks, never through the
/// discrete token choices.
template <typename T>
RewriteResult<T> rewrite_forward(const Transformer<T>& model, std::span<const StepInput> steps,
                                 const SpecialTokens& specials, const RewriteOptions& options = {});

/// Targets for teacher forcing: `question` followed by eos.
std::vector<TokenId> teacher_targets(std::span<const TokenId> question, TokenId eos);

/// Cross-entropy of the teacher-forced final-step logits against `targets`
/// (question + eos). Throws ContractError on a length mismatch.
template <typename T>
autodiff::Tensor<T> final_step_loss(const autodiff::Tensor<T>& logits, std::span<const TokenId> targets);

}  // namespace e2eqr::model
