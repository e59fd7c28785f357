// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/model/rewriter.hpp"

#include <string>

#include "e2eqr/autodiff/ops.hpp"
#include "e2eqr/errors.hpp"

namespace e2eqr::model {

using autodiff::Tensor;

template <typename T>
TokenId argmax_row(const Tensor<T>& logits, std::size_t row) {
  const std::size_t n = logits.cols();
  auto values = logits.data().subspan(row * n, n);
  std::size_t best = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (values[j] > values[best]) best = j;
  }
  return static_cast<TokenId>(best);
}

namespace {

template <typename T>
StepOutput<T> greedy_into(const Transformer<T>& model, StepState<T>& state, const AttentionCache<T>& cache,
                          const SpecialTokens& specials, std::size_t max_len) {
  StepOutput<T> out;
  TokenId current = specials.bos;
  for (;;) {
    auto logits = model.decode_token(current, state, cache);
    const TokenId next = argmax_row(logits);
    if (next == specials.eos) break;
    if (state.length >= max_len) {
      out.truncated = true;
      break;
    }
    out.question_tokens.push_back(next);
    current = next;
  }
  return out;
}

template <typename T>
void seal_state(AttentionCache<T>& cache, StepState<T>& state) {
  cache.seal(std::move(state.self), std::move(state.cross));
}

}  // namespace

template <typename T>
StepOutput<T> greedy_decode_step(const Transformer<T>& model, const Tensor<T>& encoded, AttentionCache<T>& cache,
                                 const SpecialTokens& specials, std::size_t max_len) {
  if (max_len == 0 || max_len > model.config().max_len) {
    throw ContractError("greedy_decode_step: max_len must be in [1, " + std::to_string(model.config().max_len) + "]");
  }
  auto state = model.begin_step(encoded);
  auto out = greedy_into(model, state, cache, specials, max_len);
  out.encoder_output = encoded;
  seal_state(cache, state);
  return out;
}

template <typename T>
Tensor<T> forced_step(const Transformer<T>& model, const Tensor<T>& encoded, std::span<const TokenId> tokens,
                      AttentionCache<T>& cache, const SpecialTokens& specials, bool want_logits) {
  std::vector<TokenId> input;
  input.reserve(tokens.size() + 1);
  input.push_back(specials.bos);
  input.insert(input.end(), tokens.begin(), tokens.end());
  auto state = model.begin_step(encoded);
  auto logits = model.decode(input, state, cache, want_logits);
  seal_state(cache, state);
  return logits;
}

template <typename T>
RewriteResult<T> rewrite_forward(const Transformer<T>& model, std::span<const StepInput> steps,
                                 const SpecialTokens& specials, const RewriteOptions& options) {
  if (steps.empty()) throw ContractError("rewrite_forward: example has no arranged steps");
  const std::size_t n = steps.size();
  if (options.pinned_intermediates && options.pinned_intermediates->size() != n - 1) {
    throw ContractError("rewrite_forward: expected " + std::to_string(n - 1) + " pinned intermediates, got " +
                        std::to_string(options.pinned_intermediates->size()));
  }
  const bool recording = autodiff::grad_enabled();
  const std::size_t max_len = model.config().max_len;

  RewriteResult<T> result;
  result.cache = model.empty_cache();
  for (std::size_t t = 0; t + 1 < n; ++t) {
    auto encoded = model.encode(steps[t].tokens);
    if (options.pinned_intermediates) {
      const auto& pinned = (*options.pinned_intermediates)[t];
      forced_step(model, encoded, pinned, result.cache, specials, /*want_logits=*/false);
      result.intermediates.push_back(pinned);
      result.intermediate_truncated.push_back(false);
    } else if (recording) {
      StepOutput<T> choice;
      {
        autodiff::NoGradGuard no_grad;
        auto state = model.begin_step(encoded);
        choice = greedy_into(model, state, result.cache, specials, max_len);
      }
      forced_step(model, encoded, choice.question_tokens, result.cache, specials, /*want_logits=*/false);
      result.intermediates.push_back(std::move(choice.question_tokens));
      result.intermediate_truncated.push_back(choice.truncated);
    } else {
      auto out = greedy_decode_step(model, encoded, result.cache, specials, max_len);
      result.intermediates.push_back(std::move(out.question_tokens));
      result.intermediate_truncated.push_back(out.truncated);
    }
  }

  auto encoded = model.encode(steps[n - 1].tokens);
  if (options.teacher_forced_final) {
    result.final_logits = forced_step(model, encoded, *options.teacher_forced_final, result.cache, specials, true);
  } else {
    auto out = greedy_decode_step(model, encoded, result.cache, specials, max_len);
    result.final_question = std::move(out.question_tokens);
    result.final_truncated = out.truncated;
  }
  return result;
}

std::vector<TokenId> teacher_targets(std::span<const TokenId> question, TokenId eos) {
  std::vector<TokenId> targets(question.begin(), question.end());
  targets.push_back(eos);
  return targets;
}

template <typename T>
Tensor<T> final_step_loss(const Tensor<T>& logits, std::span<const TokenId> targets) {
  if (!logits.defined() || logits.rank() != 2) throw ContractError("final_step_loss: teacher-forced logits required");
  if (logits.rows() != targets.size()) {
    throw ContractError("final_step_loss: " + std::to_string(logits.rows()) + " logit rows for " +
                        std::to_string(targets.size()) + " targets");
  }
  return autodiff::cross_entropy(logits, targets);
}

#define E2EQR_INSTANTIATE_REWRITER(T)                                                                           \
  template TokenId argmax_row(const Tensor<T>&, std::size_t);                                                   \
  template StepOutput<T> greedy_decode_step(const Transformer<T>&, const Tensor<T>&, AttentionCache<T>&,        \
                                            const SpecialTokens&, std::size_t);                                 \
  template Tensor<T> forced_step(const Transformer<T>&, const Tensor<T>&, std::span<const TokenId>,             \
                                 AttentionCache<T>&, const SpecialTokens&, bool);                               \
  template RewriteResult<T> rewrite_forward(const Transformer<T>&, std::span<const StepInput>,                  \
                                            const SpecialTokens&, const RewriteOptions&);                       \
  template Tensor<T> final_step_loss(const Tensor<T>&, std::span<const TokenId>);

E2EQR_INSTANTIATE_REWRITER(float)
E2EQR_INSTANTIATE_REWRITER(double)

#undef E2EQR_INSTANTIATE_REWRITER

}  // namespace e2eqr::model
