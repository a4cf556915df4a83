// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Cross-modal alignment between hyperedge representations and frame (or
// clip) features through an inexact proximal-point optimal transport solver.

#pragma once

#include <cstddef>
#include <vector>

#include "scan/autodiff.hpp"
#include "scan/matrix.hpp"

namespace scan {

/// Projections of text (T_x: d_w x d), frames (T_f: d_v x d) and clips
/// (T_m: d_v x d) into the shared alignment space.
struct ProjectionParams {
  num::Parameter text;
  num::Parameter frame;
  num::Parameter clip;
};

inline constexpr int kDefaultOtIters = 10;
inline constexpr double kCosineEps = 1e-8;
/// Smallest admissible entry of Gamma b or Gamma^T a.
inline constexpr double kDegenerateKernel = 1e-30;

// ---- Differentiable versions (recorded on a tape) -------------------------

/// c_ij = 1 - cos(x_i T_x, f_j T_f), with kCosineEps added to the denominator.
num::Var cost_matrix(num::Var x, num::Var f, num::Var t_x, num::Var t_f);
/// Unrolled solver: kernel e^-C, plan starts at all-ones, b at 1/N_f; each
/// iteration rescales Gamma = kernel * plan by a = 1/(N_s Gamma b) and
/// b = 1/(N_f Gamma^T a). Throws SolverError("degenerate kernel") when a
/// scaling denominator underflows.
num::Var ipot(num::Var cost, int iters = kDefaultOtIters);
num::Var align(num::Var x, num::Var f, num::Var t_x, num::Var t_f, int iters = kDefaultOtIters);
/// Dot-product baseline: row_softmax((X T_x)(F T_f)^T).
num::Var dot_align(num::Var x, num::Var f, num::Var t_x, num::Var t_f);

// ---- Plain versions --------------------------------------------------------

num::Matrix cost_matrix(const num::Matrix& x, const num::Matrix& f, const num::Matrix& t_x,
                        const num::Matrix& t_f);

/// Intermediate plans of one solve. `after_a[t]` is diag(a) Gamma diag(b_prev)
/// (exact row marginals); `plans[t]` is the plan after the b-update (exact
/// column marginals).
struct IpotTrace {
  std::vector<num::Matrix> after_a;
  std::vector<num::Matrix> plans;
};

num::Matrix ipot(const num::Matrix& cost, int iters = kDefaultOtIters, IpotTrace* trace = nullptr);
num::Matrix dot_align(const num::Matrix& x, const num::Matrix& f, const num::Matrix& t_x, const num::Matrix& t_f);

struct MarginalError {
  double row = 0.0;   ///< max_i |sum_j pi_ij - 1/N_s|
  double col = 0.0;   ///< max_j |sum_i pi_ij - 1/N_f|
  double mass = 0.0;  ///< |sum_ij pi_ij - 1|
};
MarginalError marginal_error(const num::Matrix& plan);

/// Shannon entropy (nats) of each row after normalizing it to sum 1, with
/// 0 log 0 = 0. Throws Error for negative entries or an all-zero row.
std::vector<double> row_entropy(const num::Matrix& g);
double mean_row_entropy(const num::Matrix& g);

}  // namespace scan
