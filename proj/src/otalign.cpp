// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/otalign.hpp"

#include <cmath>
#include <string>

#include "scan/errors.hpp"

namespace scan {

using num::Matrix;
using num::Var;

namespace {

void require_nondegenerate(const Matrix& v) {
  for (double x : v.data()) {
    if (!(x >= kDegenerateKernel)) throw SolverError("degenerate kernel");
  }
}

void require_iters(int iters) {
  if (iters < 1) throw SolverError("ipot: iteration count must be >= 1, got " + std::to_string(iters));
}

}  // namespace

Var cost_matrix(Var x, Var f, Var t_x, Var t_f) {
  return num::affine(num::cosine_similarity(num::matmul(x, t_x), num::matmul(f, t_f), kCosineEps), -1.0, 1.0);
}

Var ipot(Var cost, int iters) {
  require_iters(iters);
  num::Tape& tape = *cost.tape;
  const std::size_t ns = cost.rows();
  const std::size_t nf = cost.cols();
  const Var kernel = num::exp(num::affine(cost, -1.0));
  Var plan = tape.constant(Matrix(ns, nf, 1.0));
  Var b = tape.constant(Matrix(nf, 1, 1.0 / static_cast<double>(nf)));
  for (int t = 0; t < iters; ++t) {
    const Var gamma = num::hadamard(kernel, plan);
    const Var gb = num::matmul(gamma, b);
    require_nondegenerate(gb.value());
    const Var a = num::reciprocal(num::affine(gb, static_cast<double>(ns)));
    const Var gta = num::matmul(num::transpose(gamma), a);
    require_nondegenerate(gta.value());
    b = num::reciprocal(num::affine(gta, static_cast<double>(nf)));
    plan = num::scale_cols(num::scale_rows(gamma, a), b);
  }
  return plan;
}

Var align(Var x, Var f, Var t_x, Var t_f, int iters) { return ipot(cost_matrix(x, f, t_x, t_f), iters); }

Var dot_align(Var x, Var f, Var t_x, Var t_f) {
  return num::row_softmax(num::matmul(num::matmul(x, t_x), num::transpose(num::matmul(f, t_f))));
}

Matrix cost_matrix(const Matrix& x, const Matrix& f, const Matrix& t_x, const Matrix& t_f) {
  num::Tape tape;
  return cost_matrix(tape.constant(x), tape.constant(f), tape.constant(t_x), tape.constant(t_f)).value();
}

Matrix ipot(const Matrix& cost, int iters, IpotTrace* trace) {
  require_iters(iters);
  const std::size_t ns = cost.rows();
  const std::size_t nf = cost.cols();
  Matrix kernel = cost;
  for (double& v : kernel.data()) v = std::exp(-v);
  Matrix plan(ns, nf, 1.0);
  std::vector<double> a(ns), b(nf, 1.0 / static_cast<double>(nf));
  Matrix gamma(ns, nf);
  for (int t = 0; t < iters; ++t) {
    gamma = num::hadamard(kernel, plan);
    for (std::size_t i = 0; i < ns; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < nf; ++j) s += gamma(i, j) * b[j];
      if (!(s >= kDegenerateKernel)) throw SolverError("degenerate kernel");
      a[i] = 1.0 / (static_cast<double>(ns) * s);
    }
    if (trace) {
      Matrix rows_exact(ns, nf);
      for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nf; ++j) rows_exact(i, j) = a[i] * gamma(i, j) * b[j];
      trace->after_a.push_back(std::move(rows_exact));
    }
    for (std::size_t j = 0; j < nf; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < ns; ++i) s += gamma(i, j) * a[i];
      if (!(s >= kDegenerateKernel)) throw SolverError("degenerate kernel");
      b[j] = 1.0 / (static_cast<double>(nf) * s);
    }
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t j = 0; j < nf; ++j) plan(i, j) = a[i] * gamma(i, j) * b[j];
    if (trace) trace->plans.push_back(plan);
  }
  return plan;
}

Matrix dot_align(const Matrix& x, const Matrix& f, const Matrix& t_x, const Matrix& t_f) {
  return num::row_softmax(num::matmul(num::matmul(x, t_x), num::transpose(num::matmul(f, t_f))));
}

MarginalError marginal_error(const Matrix& plan) {
  MarginalError e;
  const double ns = static_cast<double>(plan.rows());
  const double nf = static_cast<double>(plan.cols());
  for (double s : num::row_sums(plan)) e.row = std::max(e.row, std::abs(s - 1.0 / ns));
  for (double s : num::col_sums(plan)) e.col = std::max(e.col, std::abs(s - 1.0 / nf));
  e.mass = std::abs(num::sum(plan) - 1.0);
  return e;
}

std::vector<double> row_entropy(const Matrix& g) {
  std::vector<double> out(g.rows());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    double total = 0.0;
    for (double v : g.row(r)) {
      if (v < 0.0) throw Error("row_entropy: negative entry in row " + std::to_string(r));
      total += v;
    }
    if (total <= 0.0) throw Error("row_entropy: row " + std::to_string(r) + " is all zero");
    double h = 0.0;
    for (double v : g.row(r)) {
      if (v > 0.0) {
        const double p = v / total;
        h -= p * std::log(p);
      }
    }
    out[r] = h;
  }
  return out;
}

double mean_row_entropy(const Matrix& g) {
  const auto h = row_entropy(g);
  double s = 0.0;
  for (double v : h) s += v;
  return h.empty() ? 0.0 : s / static_cast<double>(h.size());
}

}  // namespace scan
