// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "scan/autodiff.hpp"
#include "scan/rng.hpp"

namespace scan {

/// Uniform in +-sqrt(6 / (in + out)).
inline num::Parameter xavier_param(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  num::Matrix m(in, out);
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return num::Parameter(name, std::move(m));
}

}  // namespace scan
