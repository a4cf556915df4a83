// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scan/autodiff.hpp"

namespace scan::num {

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t entries_checked = 0;
  GradCheckEntry worst;
  /// Max relative error per parameter, in the order the parameters were given.
  std::vector<std::pair<std::string, double>> per_param;
};

/// Builds a scalar on a fresh tape from the current parameter values.
using ScalarFn = std::function<Var(Tape&)>;

/// |a - n| / max(|a|, |n|, floor); the floor keeps entries whose true
/// gradient is zero from dividing round-off by round-off.
double relative_error(double analytic, double numeric, double floor = 1e-7);

/// Compares backward() gradients of `f` with two central differences for
/// every entry of every parameter in `params`: fourth order with step `h`,
/// which keeps round-off small, and second order with step h/10, which
/// stays on one side of nearby ReLU or hinge kinks. Each entry reports the
/// closer of the two.
GradCheckReport finite_diff_check(const ScalarFn& f, const std::vector<Parameter*>& params, double h = 1e-4);

}  // namespace scan::num
