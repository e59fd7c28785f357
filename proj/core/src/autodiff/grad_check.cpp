// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

namespace e2eqr::autodiff {

GradCheckReport grad_check(const std::function<Tensor<double>()>& loss, ParameterSet<double>& params, double eps,
                           std::size_t n_samples, std::uint64_t seed) {
  GradCheckReport report;
  if (n_samples == 0) {
    std::clog << "warning: grad_check called with n_samples=0; nothing checked\n";
    return report;
  }
  const std::size_t total = params.element_count();
  if (total == 0) return report;

  params.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params.items()) analytic.push_back(p.tensor.grad());
  params.zero_grad();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  NoGradGuard no_grad;
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::size_t flat = pick(rng);
    std::size_t which = 0;
    while (flat >= params.items()[which].tensor.size()) flat -= params.items()[which++].tensor.size();
    auto& param = params.items()[which];
    auto values = param.tensor.mutable_data();
    const double original = values[flat];
    values[flat] = original + eps;
    const double up = loss().item();
    values[flat] = original - eps;
    const double down = loss().item();
    values[flat] = original;

    GradCheckSample sample;
    sample.parameter = param.name;
    sample.index = flat;
    sample.analytic = analytic[which][flat];
    sample.numeric = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(sample.analytic), std::abs(sample.numeric), kGradCheckFloor});
    sample.relative_error = std::abs(sample.analytic - sample.numeric) / denom;
    report.max_relative_error = std::max(report.max_relative_error, sample.relative_error);
    report.samples.push_back(std::move(sample));
  }
  return report;
}

}  // namespace e2eqr::autodiff
