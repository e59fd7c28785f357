// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "e2eqr/autodiff/tensor.hpp"

namespace e2eqr::autodiff {

struct GradCheckSample {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0;
  double numeric = 0;
  double relative_error = 0;
};

struct GradCheckReport {
  double max_relative_error = 0;
  std::vector<GradCheckSample> samples;
};

/// Denominator floor for the relative error. Central-difference round-off is
/// about 1e-16 * |f| / eps, so gradients that are zero by symmetry (key
/// biases under softmax) come out near 1e-12 numerically.
inline constexpr double kGradCheckFloor = 1e-7;

/// Compares backward() against central differences
/// (f(θ + eps·e) - f(θ - eps·e)) / (2·eps) on `n_samples` coordinates drawn
/// uniformly over all parameter elements. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, kGradCheckFloor). `loss` must be deterministic.
///
/// Parameter gradients are cleared before and after the check.
GradCheckReport grad_check(const std::function<Tensor<double>()>& loss, ParameterSet<double>& params, double eps,
                           std::size_t n_samples, std::uint64_t seed = 0);

}  // namespace e2eqr::autodiff
