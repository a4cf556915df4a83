// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scan/errors.hpp"

namespace scan::num {

const Matrix& Var::value() const { return tape->value(id); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("scalar(): node is not 1x1");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return {this, it->second};
  Var v = leaf(p.value);
  nodes_[v.id].param = &p;
  param_ids_.emplace(&p, v.id);
  param_order_.push_back(v.id);
  return v;
}

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](std::size_t i) { return nodes_[i].requires_grad; });
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Matrix& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

const Matrix& Tape::grad(Var v) { return grad_buffer(v.id); }

void Tape::backward(Var loss, bool accumulate_params) {
  if (loss.tape != this) throw Error("backward: loss belongs to a different tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw ShapeError("backward: loss must be a 1x1 scalar, got " +
                     std::to_string(nodes_[loss.id].value.rows()) + "x" +
                     std::to_string(nodes_[loss.id].value.cols()));
  }
  for (Node& n : nodes_) n.grad = Matrix();
  grad_buffer(loss.id)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
  if (!accumulate_params) return;
  for (std::size_t id : param_order_) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    Parameter& p = *n.param;
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
    p.grad += n.grad;
  }
}

std::vector<Parameter*> Tape::params() const {
  std::vector<Parameter*> out;
  out.reserve(param_order_.size());
  for (std::size_t id : param_order_) out.push_back(nodes_[id].param);
  return out;
}

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) throw Error(std::string(op) + ": operands on different tapes");
  return *a.tape;
}

// Adds `g` into the gradient of `id` when that node needs one.
void accumulate(Tape& t, std::size_t id, const Matrix& g) {
  if (t.requires_grad(id)) t.grad_buffer(id) += g;
}

template <typename Fn>
Var unary(Var a, Fn f, Tape::BackwardFn back) {
  Matrix out = a.value();
  for (double& v : out.data()) v = f(v);
  return a.tape->record(std::move(out), {a.id}, std::move(back));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ia)) tp.grad_buffer(ia) += matmul(g, transpose(tp.value(ib)));
    if (tp.requires_grad(ib)) tp.grad_buffer(ib) += matmul(transpose(tp.value(ia)), g);
  });
}

Var transpose(Var a) {
  const std::size_t ia = a.id;
  return a.tape->record(transpose(a.value()), {ia}, [ia](Tape& tp, std::size_t self) {
    tp.grad_buffer(ia) += transpose(tp.grad_buffer(self));
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix g = tp.grad_buffer(self);
    accumulate(tp, ia, g);
    accumulate(tp, ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix g = tp.grad_buffer(self);
    accumulate(tp, ia, g);
    if (tp.requires_grad(ib)) tp.grad_buffer(ib) -= g;
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row, "add_row");
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeError("add_row: row must be 1 x cols");
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
  const std::size_t ia = a.id, ir = row.id;
  return t.record(std::move(out), {ia, ir}, [ia, ir](Tape& tp, std::size_t self) {
    const Matrix g = tp.grad_buffer(self);
    accumulate(tp, ia, g);
    if (tp.requires_grad(ir)) {
      Matrix& gr = tp.grad_buffer(ir);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
    }
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b, "hadamard");
  const std::size_t ia = a.id, ib = b.id;
  return t.record(hadamard(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ia)) tp.grad_buffer(ia) += hadamard(g, tp.value(ib));
    if (tp.requires_grad(ib)) tp.grad_buffer(ib) += hadamard(g, tp.value(ia));
  });
}

Var affine(Var a, double alpha, double beta) {
  const std::size_t ia = a.id;
  return unary(a, [alpha, beta](double v) { return alpha * v + beta; },
               [ia, alpha](Tape& tp, std::size_t self) { tp.grad_buffer(ia) += tp.grad_buffer(self) * alpha; });
}

Var exp(Var a) {
  const std::size_t ia = a.id;
  return unary(a, [](double v) { return std::exp(v); }, [ia](Tape& tp, std::size_t self) {
    tp.grad_buffer(ia) += hadamard(tp.grad_buffer(self), tp.value(self));
  });
}

Var reciprocal(Var a) {
  const std::size_t ia = a.id;
  return unary(a, [](double v) { return 1.0 / v; }, [ia](Tape& tp, std::size_t self) {
    // d(1/x) = -(1/x)^2 dx
    Matrix g = hadamard(tp.grad_buffer(self), hadamard(tp.value(self), tp.value(self)));
    tp.grad_buffer(ia) -= g;
  });
}

Var square(Var a) {
  const std::size_t ia = a.id;
  return unary(a, [](double v) { return v * v; }, [ia](Tape& tp, std::size_t self) {
    tp.grad_buffer(ia) += hadamard(tp.grad_buffer(self), tp.value(ia)) * 2.0;
  });
}

Var tanh(Var a) {
  const std::size_t ia = a.id;
  return unary(a, [](double v) { return std::tanh(v); }, [ia](Tape& tp, std::size_t self) {
    Matrix d = tp.value(self);
    for (double& v : d.data()) v = 1.0 - v * v;
    tp.grad_buffer(ia) += hadamard(tp.grad_buffer(self), d);
  });
}

Var leaky_relu(Var a, double slope) {
  const std::size_t ia = a.id;
  return a.tape->record(leaky_relu(a.value(), slope), {ia}, [ia, slope](Tape& tp, std::size_t self) {
    Matrix g = tp.grad_buffer(self);
    const Matrix& x = tp.value(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x.data()[i] < 0.0) g.data()[i] *= slope;
    }
    tp.grad_buffer(ia) += g;
  });
}

Var row_softmax(Var a) {
  const std::size_t ia = a.id;
  return a.tape->record(row_softmax(a.value()), {ia}, [ia](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.grad_buffer(self);
    Matrix dx(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) = y(r, c) * (g(r, c) - dot);
    }
    tp.grad_buffer(ia) += dx;
  });
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  Tape& t = same_tape(a, gain, "layer_norm");
  same_tape(a, bias, "layer_norm");
  const Matrix& x = a.value();
  const Matrix& gv = gain.value();
  const Matrix zero_bias(1, x.cols());
  // Standardized rows and per-row inverse std are kept for the backward pass.
  Matrix xhat = layer_norm(x, Matrix(1, x.cols(), 1.0), zero_bias, eps);
  std::vector<double> inv_std(x.rows());
  const double n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (double v : x.row(r)) mean += v;
    mean /= n;
    for (double v : x.row(r)) var += (v - mean) * (v - mean);
    inv_std[r] = 1.0 / std::sqrt(var / n + eps);
  }
  Matrix out = layer_norm(x, gv, bias.value(), eps);
  const std::size_t ia = a.id, ig = gain.id, ib = bias.id;
  return t.record(std::move(out), {ia, ig, ib},
                  [ia, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad_buffer(self);
                    const Matrix& gain_v = tp.value(ig);
                    const std::size_t rows = g.rows(), cols = g.cols();
                    if (tp.requires_grad(ig) || tp.requires_grad(ib)) {
                      Matrix dg(1, cols), db(1, cols);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < cols; ++c) {
                          dg(0, c) += g(r, c) * xhat(r, c);
                          db(0, c) += g(r, c);
                        }
                      accumulate(tp, ig, dg);
                      accumulate(tp, ib, db);
                    }
                    if (!tp.requires_grad(ia)) return;
                    Matrix dx(rows, cols);
                    const double n = static_cast<double>(cols);
                    for (std::size_t r = 0; r < rows; ++r) {
                      double mean_d = 0.0, mean_dx = 0.0;
                      for (std::size_t c = 0; c < cols; ++c) {
                        const double d = g(r, c) * gain_v(0, c);
                        mean_d += d;
                        mean_dx += d * xhat(r, c);
                      }
                      mean_d /= n;
                      mean_dx /= n;
                      for (std::size_t c = 0; c < cols; ++c) {
                        const double d = g(r, c) * gain_v(0, c);
                        dx(r, c) = inv_std[r] * (d - mean_d - xhat(r, c) * mean_dx);
                      }
                    }
                    tp.grad_buffer(ia) += dx;
                  });
}

Var scale_rows(Var a, Var v) {
  Tape& t = same_tape(a, v, "scale_rows");
  const Matrix& av = a.value();
  const Matrix& vv = v.value();
  if (vv.rows() != av.rows() || vv.cols() != 1) throw ShapeError("scale_rows: vector must be rows x 1");
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& x : out.row(r)) x *= vv(r, 0);
  const std::size_t ia = a.id, iv = v.id;
  return t.record(std::move(out), {ia, iv}, [ia, iv](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& A = tp.value(ia);
    const Matrix& V = tp.value(iv);
    if (tp.requires_grad(ia)) {
      Matrix da = g;
      for (std::size_t r = 0; r < da.rows(); ++r)
        for (double& x : da.row(r)) x *= V(r, 0);
      tp.grad_buffer(ia) += da;
    }
    if (tp.requires_grad(iv)) {
      Matrix& dv = tp.grad_buffer(iv);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) dv(r, 0) += g(r, c) * A(r, c);
    }
  });
}

Var scale_cols(Var a, Var v) {
  Tape& t = same_tape(a, v, "scale_cols");
  const Matrix& av = a.value();
  const Matrix& vv = v.value();
  if (vv.rows() != av.cols() || vv.cols() != 1) throw ShapeError("scale_cols: vector must be cols x 1");
  Matrix out = av;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= vv(c, 0);
  const std::size_t ia = a.id, iv = v.id;
  return t.record(std::move(out), {ia, iv}, [ia, iv](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& A = tp.value(ia);
    const Matrix& V = tp.value(iv);
    if (tp.requires_grad(ia)) {
      Matrix da = g;
      for (std::size_t r = 0; r < da.rows(); ++r)
        for (std::size_t c = 0; c < da.cols(); ++c) da(r, c) *= V(c, 0);
      tp.grad_buffer(ia) += da;
    }
    if (tp.requires_grad(iv)) {
      Matrix& dv = tp.grad_buffer(iv);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) dv(c, 0) += g(r, c) * A(r, c);
    }
  });
}

Var scale_by(Var a, Var s) {
  Tape& t = same_tape(a, s, "scale_by");
  const double k = s.scalar();
  const std::size_t ia = a.id, is = s.id;
  return t.record(a.value() * k, {ia, is}, [ia, is](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    const double kk = tp.value(is)(0, 0);
    if (tp.requires_grad(ia)) tp.grad_buffer(ia) += g * kk;
    if (tp.requires_grad(is)) tp.grad_buffer(is)(0, 0) += sum(hadamard(g, tp.value(ia)));
  });
}

Var sum(Var a) {
  const std::size_t ia = a.id;
  return a.tape->record(Matrix(1, 1, sum(a.value())), {ia}, [ia](Tape& tp, std::size_t self) {
    const double g = tp.grad_buffer(self)(0, 0);
    Matrix& ga = tp.grad_buffer(ia);
    for (double& v : ga.data()) v += g;
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
    ids.push_back(p.id);
  }
  Matrix out(rows, cols);
  std::size_t r0 = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    std::copy(v.data().begin(), v.data().end(), out.row(r0).begin());
    r0 += v.rows();
  }
  return t.record(std::move(out), ids, [ids](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    std::size_t r = 0;
    for (std::size_t id : ids) {
      const std::size_t n = tp.value(id).rows();
      if (tp.requires_grad(id)) {
        Matrix& gi = tp.grad_buffer(id);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < g.cols(); ++c) gi(i, c) += g(r + i, c);
      }
      r += n;
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Matrix& av = a.value();
  if (begin + count > av.rows()) throw ShapeError("slice_rows: range out of bounds");
  Matrix out(count, av.cols());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t c = 0; c < av.cols(); ++c) out(i, c) = av(begin + i, c);
  const std::size_t ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, begin](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& ga = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(begin + i, c) += g(i, c);
  });
}

Var element(Var a, std::size_t r, std::size_t c) {
  const Matrix& av = a.value();
  if (r >= av.rows() || c >= av.cols()) throw ShapeError("element: index out of bounds");
  const std::size_t ia = a.id;
  return a.tape->record(Matrix(1, 1, av(r, c)), {ia}, [ia, r, c](Tape& tp, std::size_t self) {
    tp.grad_buffer(ia)(r, c) += tp.grad_buffer(self)(0, 0);
  });
}

Var cosine_similarity(Var u, Var v, double eps) {
  Tape& t = same_tape(u, v, "cosine_similarity");
  const Matrix& U = u.value();
  const Matrix& V = v.value();
  if (U.cols() != V.cols()) throw ShapeError("cosine_similarity: feature dimensions differ");
  std::vector<double> nu(U.rows()), nv(V.rows());
  for (std::size_t i = 0; i < U.rows(); ++i) {
    double s = 0.0;
    for (double x : U.row(i)) s += x * x;
    nu[i] = std::sqrt(s);
  }
  for (std::size_t j = 0; j < V.rows(); ++j) {
    double s = 0.0;
    for (double x : V.row(j)) s += x * x;
    nv[j] = std::sqrt(s);
  }
  Matrix dots = matmul(U, transpose(V));
  Matrix out(U.rows(), V.rows());
  for (std::size_t i = 0; i < U.rows(); ++i)
    for (std::size_t j = 0; j < V.rows(); ++j) out(i, j) = dots(i, j) / (nu[i] * nv[j] + eps);
  const std::size_t iu = u.id, iv = v.id;
  return t.record(std::move(out), {iu, iv},
                  [iu, iv, eps, nu = std::move(nu), nv = std::move(nv), dots = std::move(dots)](Tape& tp,
                                                                                                std::size_t self) {
                    const Matrix& g = tp.grad_buffer(self);
                    const Matrix& Uv = tp.value(iu);
                    const Matrix& Vv = tp.value(iv);
                    const std::size_t d = Uv.cols();
                    Matrix du(Uv.rows(), d), dv(Vv.rows(), d);
                    for (std::size_t i = 0; i < Uv.rows(); ++i) {
                      for (std::size_t j = 0; j < Vv.rows(); ++j) {
                        const double den = nu[i] * nv[j] + eps;
                        const double gij = g(i, j);
                        if (gij == 0.0) continue;
                        const double k = gij * dots(i, j) / (den * den);
                        // d/du_i of <u_i,v_j>/(|u_i||v_j|+eps); |u|' = u/|u| (taken as 0 at u = 0).
                        const double cu = nu[i] > 0.0 ? k * nv[j] / nu[i] : 0.0;
                        const double cv = nv[j] > 0.0 ? k * nu[i] / nv[j] : 0.0;
                        for (std::size_t c = 0; c < d; ++c) {
                          du(i, c) += gij * Vv(j, c) / den - cu * Uv(i, c);
                          dv(j, c) += gij * Uv(i, c) / den - cv * Vv(j, c);
                        }
                      }
                    }
                    accumulate(tp, iu, du);
                    accumulate(tp, iv, dv);
                  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Matrix& z = logits.value();
  if (z.rows() != 1) throw ShapeError("cross_entropy: logits must be a single row");
  if (target >= z.cols()) {
    throw ShapeError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                     std::to_string(z.cols()) + " classes");
  }
  Matrix logp = row_log_softmax(z);
  const double loss = -logp(0, target);
  const std::size_t iz = logits.id;
  return logits.tape->record(Matrix(1, 1, loss), {iz}, [iz, target, logp = std::move(logp)](Tape& tp, std::size_t self) {
    const double g = tp.grad_buffer(self)(0, 0);
    Matrix& gz = tp.grad_buffer(iz);
    for (std::size_t c = 0; c < logp.cols(); ++c) {
      gz(0, c) += g * (std::exp(logp(0, c)) - (c == target ? 1.0 : 0.0));
    }
  });
}

Var ranking_hinge(Var scores, std::size_t truth) {
  const Matrix& s = scores.value();
  if (s.rows() != 1 && s.cols() != 1) throw ShapeError("ranking_hinge: scores must be a vector");
  const std::size_t n = s.size();
  if (truth >= n) throw ShapeError("ranking_hinge: truth index out of range");
  const auto sd = s.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss += std::max(0.0, 1.0 + sd[i] - sd[truth]);
  const std::size_t is = scores.id;
  return scores.tape->record(Matrix(1, 1, loss), {is}, [is, truth, n](Tape& tp, std::size_t self) {
    const double g = tp.grad_buffer(self)(0, 0);
    const auto sv = tp.value(is).data();
    auto gs = tp.grad_buffer(is).data();
    for (std::size_t i = 0; i < n; ++i) {
      if (1.0 + sv[i] - sv[truth] > 0.0) {
        gs[i] += g;
        gs[truth] -= g;
      }
    }
  });
}

}  // namespace scan::num
