// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "e2eqr/autodiff/ops.hpp"
#include "e2eqr/errors.hpp"
#include "e2eqr/model/attention.hpp"
#include "reference_model.hpp"

namespace e2eqr::model {
namespace {

using autodiff::Tensor;
using TD = Tensor<double>;
using testing::Mat;

TD random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(r * c);
  for (auto& x : v) x = dist(rng);
  return TD::from_data({r, c}, std::move(v));
}

Mat to_mat(const TD& t) {
  Mat m(t.rows(), t.cols());
  m.v.assign(t.data().begin(), t.data().end());
  return m;
}

double max_abs_diff(const TD& a, const Mat& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.v[i]));
  return worst;
}

TEST(AccumulatedAttention, NoPriorCausalEqualsMaskedSelfAttention) {
  std::mt19937_64 rng(1);
  auto q = random_mat(5, 8, rng), k = random_mat(5, 8, rng), v = random_mat(5, 8, rng);
  auto out = accumulated_attention<double>(q, {}, {k, v}, true, 0, 2);
  auto expected = testing::reference_attention(to_mat(q), to_mat(k), to_mat(v), 2, 0, true, 0);
  EXPECT_LE(max_abs_diff(out, expected), 1e-12);
}

TEST(AccumulatedAttention, NoPriorNonCausalEqualsCrossAttention) {
  std::mt19937_64 rng(2);
  auto q = random_mat(3, 8, rng), k = random_mat(7, 8, rng), v = random_mat(7, 8, rng);
  auto out = accumulated_attention<double>(q, {}, {k, v}, false, 0, 4);
  auto expected = testing::reference_attention(to_mat(q), to_mat(k), to_mat(v), 4, 0, false, 0);
  EXPECT_LE(max_abs_diff(out, expected), 1e-12);
}

TEST(AccumulatedAttention, SeparateBlocksEqualPreConcatenatedBlock) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const bool causal = trial % 2 == 0;
    std::vector<KeyValue<double>> blocks;
    for (int b = 0; b < 2; ++b) blocks.push_back({random_mat(2 + b, 4, rng), random_mat(2 + b, 4, rng)});
    KeyValue<double> current{random_mat(4, 4, rng), random_mat(4, 4, rng)};
    auto q = random_mat(3, 4, rng);
    const std::size_t offset = 1;
    auto separate = accumulated_attention<double>(q, blocks, current, causal, offset);

    const TD ks[] = {blocks[0].keys, blocks[1].keys};
    const TD vs[] = {blocks[0].values, blocks[1].values};
    std::vector<KeyValue<double>> joined{{autodiff::concat_rows<double>(ks), autodiff::concat_rows<double>(vs)}};
    auto together = accumulated_attention<double>(q, joined, current, causal, offset);
    for (std::size_t i = 0; i < separate.size(); ++i) EXPECT_NEAR(separate.data()[i], together.data()[i], 1e-12);
  }
}

TEST(AccumulatedAttention, MaskLawPriorRowsAlwaysVisibleCurrentRowsCausal) {
  std::mt19937_64 rng(4);
  const std::size_t prior = 3, current_rows = 4, d = 4;
  KeyValue<double> block{random_mat(prior, d, rng), TD::from_data({prior, d}, std::vector<double>(prior * d, 1.0))};
  // Current values: 1 for rows a query may see, huge for the future rows.
  auto q = random_mat(current_rows, d, rng);
  auto k = random_mat(current_rows, d, rng);
  for (std::size_t i = 0; i < current_rows; ++i) {
    std::vector<double> values(current_rows * d, 1e6);
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t c = 0; c < d; ++c) values[j * d + c] = 1.0;
    auto row_q = autodiff::slice_rows(q, i, 1);
    std::vector<KeyValue<double>> prior_blocks{block};
    auto out = accumulated_attention<double>(row_q, prior_blocks,
                                             {k, TD::from_data({current_rows, d}, values)}, true, i);
    // Weights over permitted rows sum to one, so the output is exactly 1.
    for (double x : out.data()) EXPECT_NEAR(x, 1.0, 1e-12);
  }
}

TEST(AccumulatedAttention, WidthMismatchIsDimensionError) {
  std::mt19937_64 rng(5);
  std::vector<KeyValue<double>> blocks{{random_mat(2, 6, rng), random_mat(2, 6, rng)}};
  KeyValue<double> current{random_mat(2, 4, rng), random_mat(2, 4, rng)};
  EXPECT_THROW(accumulated_attention<double>(random_mat(1, 4, rng), blocks, current, true), DimensionError);
}

TEST(AccumulatedAttention, RandomBlockCountsMatchReference) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> count(0, 4), rows(1, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<KeyValue<double>> blocks;
    std::vector<Mat> ks, vs;
    std::size_t prior = 0;
    const int k = count(rng);
    for (int b = 0; b < k; ++b) {
      const auto r = static_cast<std::size_t>(rows(rng));
      blocks.push_back({random_mat(r, 8, rng), random_mat(r, 8, rng)});
      ks.push_back(to_mat(blocks.back().keys));
      vs.push_back(to_mat(blocks.back().values));
      prior += r;
    }
    const auto cur = static_cast<std::size_t>(rows(rng));
    KeyValue<double> current{random_mat(cur, 8, rng), random_mat(cur, 8, rng)};
    ks.push_back(to_mat(current.keys));
    vs.push_back(to_mat(current.values));
    auto q = random_mat(cur, 8, rng);
    const bool causal = trial % 3 != 0;
    auto out = accumulated_attention<double>(q, blocks, current, causal, 0, 2);
    auto expected =
        testing::reference_attention(to_mat(q), testing::vstack(ks, 8), testing::vstack(vs, 8), 2, prior, causal, 0);
    EXPECT_LE(max_abs_diff(out, expected), 1e-12) << "trial " << trial;
  }
}

}  // namespace
}  // namespace e2eqr::model
