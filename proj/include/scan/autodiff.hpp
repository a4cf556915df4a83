// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode differentiation over dense matrices.
//
// A Tape records every operation in creation order, so node indices are a
// topological order of the computation graph and backward() only needs one
// reverse sweep. Parameters live outside the tape and are linked in with
// Tape::param(); their gradients are accumulated into Parameter::grad.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "scan/matrix.hpp"

namespace scan::num {

/// A trainable matrix plus its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double scalar() const;
  bool valid() const { return tape != nullptr; }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Differentiable leaf not tied to a Parameter; read its gradient with grad().
  Var leaf(Matrix value);
  /// Registers `p` once; later calls return the same node.
  Var param(Parameter& p);

  /// Internal: used by op implementations.
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. When
  /// `accumulate_params` is set, parameter node gradients are added into the
  /// linked Parameter::grad. Throws ShapeError for a non-scalar loss.
  void backward(Var loss, bool accumulate_params = true);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  /// Gradient of the last backward() target w.r.t. node `v` (zeros if unreached).
  const Matrix& grad(Var v);
  /// Internal: gradient buffer of node `id`, allocated on first use.
  Matrix& grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Parameters registered on this tape, in registration order.
  std::vector<Parameter*> params() const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_ids_;
  std::vector<std::size_t> param_order_;
};

// ---- Operations -----------------------------------------------------------
// All inputs must belong to the same tape.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// a (r x c) plus a 1 x c row broadcast over every row.
Var add_row(Var a, Var row);
Var hadamard(Var a, Var b);
/// alpha * a + beta, elementwise.
Var affine(Var a, double alpha, double beta = 0.0);
Var exp(Var a);
Var reciprocal(Var a);
Var square(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope);
Var row_softmax(Var a);
Var layer_norm(Var a, Var gain, Var bias, double eps);
/// out(i, j) = a(i, j) * v(i); v is rows x 1.
Var scale_rows(Var a, Var v);
/// out(i, j) = a(i, j) * v(j); v is cols x 1.
Var scale_cols(Var a, Var v);
/// Scalar multiple by a 1 x 1 node.
Var scale_by(Var a, Var s);
Var sum(Var a);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var element(Var a, std::size_t r, std::size_t c);
/// S(i, j) = <u_i, v_j> / (|u_i| |v_j| + eps).
Var cosine_similarity(Var u, Var v, double eps);
/// -log softmax(logits)[target] for a 1 x K row of logits.
Var cross_entropy(Var logits, std::size_t target);
/// sum_i max(0, 1 + s_i - s_t) over a K x 1 (or 1 x K) score vector.
Var ranking_hinge(Var scores, std::size_t truth);

}  // namespace scan::num
