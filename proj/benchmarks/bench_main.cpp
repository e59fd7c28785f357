// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "e2eqr/autodiff/ops.hpp"
#include "e2eqr/curriculum/curriculum.hpp"
#include "e2eqr/model/attention.hpp"
#include "e2eqr/model/rewriter.hpp"

namespace {

using namespace e2eqr;
using autodiff::Tensor;

Tensor<float> random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(r * c);
  for (auto& x : v) x = dist(rng);
  return Tensor<float>::from_data({r, c}, std::move(v));
}

model::ModelConfig toy_config() {
  model::ModelConfig c;
  c.vocab_size = 335;
  return c;
}

std::vector<model::StepInput> toy_steps(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> tok(8, 334);
  std::vector<model::StepInput> steps;
  for (std::size_t t = 0; t < n; ++t) {
    model::StepInput s;
    s.step_index = t + 1;
    for (int i = 0; i < 20; ++i) s.tokens.push_back(tok(rng));
    steps.push_back(std::move(s));
  }
  return steps;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  auto a = random_mat(n, n, rng), b = random_mat(n, n, rng);
  autodiff::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(autodiff::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_AccumulatedAttention(benchmark::State& state) {
  const auto blocks_n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::vector<model::KeyValue<float>> blocks;
  for (std::size_t b = 0; b < blocks_n; ++b) blocks.push_back({random_mat(20, 64, rng), random_mat(20, 64, rng)});
  model::KeyValue<float> current{random_mat(12, 64, rng), random_mat(12, 64, rng)};
  auto q = random_mat(12, 64, rng);
  autodiff::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(model::accumulated_attention<float>(q, blocks, current, true, 0, 4));
}
BENCHMARK(BM_AccumulatedAttention)->DenseRange(0, 4);

void BM_RewriteForwardGreedy(benchmark::State& state) {
  std::mt19937_64 rng(3);
  model::Transformer<float> m(toy_config(), 3);
  const auto steps = toy_steps(static_cast<std::size_t>(state.range(0)), rng);
  autodiff::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(model::rewrite_forward(m, steps, model::SpecialTokens{}));
}
BENCHMARK(BM_RewriteForwardGreedy)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_TrainingStep(benchmark::State& state) {
  std::mt19937_64 rng(4);
  model::Transformer<float> m(toy_config(), 4);
  const auto steps = toy_steps(static_cast<std::size_t>(state.range(0)), rng);
  std::uniform_int_distribution<int> tok(8, 334);
  std::vector<TokenId> gold(12);
  for (auto& t : gold) t = tok(rng);
  model::RewriteOptions o;
  o.teacher_forced_final = gold;
  const auto targets = model::teacher_targets(gold, model::SpecialTokens{}.eos);
  curriculum::AdamW<float> opt(m.parameters(), {});
  for (auto _ : state) {
    auto r = model::rewrite_forward(m, steps, model::SpecialTokens{}, o);
    model::final_step_loss(r.final_logits, targets).backward();
    opt.step(1e-4);
    m.parameters().zero_grad();
  }
}
BENCHMARK(BM_TrainingStep)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
