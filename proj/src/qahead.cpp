// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/qahead.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scan/errors.hpp"
#include "scan/init.hpp"

namespace scan {

using num::Matrix;
using num::Parameter;
using num::Var;

namespace {

Var p(Var anchor, Parameter& param) { return anchor.tape->param(param); }

}  // namespace

void HeadParams::for_each(const std::function<void(Parameter&)>& fn) {
  for (Parameter* q : {&out_q, &out_f, &out_m, &pool_hidden, &pool_score, &classifier, &count_weight, &count_bias,
                       &choice_weight}) {
    if (q->value.size() > 0) fn(*q);
  }
}

HeadParams make_head_params(const ModelDims& dims, std::size_t n_answers, Rng& rng) {
  HeadParams h;
  h.out_q = xavier_param("head.P_q", dims.d_w, dims.d_o, rng);
  h.out_f = xavier_param("head.P_f", dims.d_v, dims.d_o, rng);
  h.out_m = xavier_param("head.P_m", dims.d_v, dims.d_o, rng);
  h.pool_hidden = xavier_param("head.W1o", dims.d_o, dims.d_o, rng);
  h.pool_score = xavier_param("head.W2o", dims.d_o, 1, rng);
  if (n_answers > 0) h.classifier = xavier_param("head.classifier", n_answers, dims.d_o, rng);
  h.count_weight = xavier_param("head.count_w", dims.d_o, 1, rng);
  h.count_bias = Parameter("head.count_b", Matrix(1, 1, 0.0));
  h.choice_weight = xavier_param("head.choice_w", dims.d_o, 1, rng);
  return h;
}

Var project_concat(Var q, Var f, Var m, HeadParams& head) {
  std::vector<Var> parts{num::matmul(q, p(q, head.out_q))};
  if (f.valid()) parts.push_back(num::matmul(f, p(q, head.out_f)));
  if (m.valid()) parts.push_back(num::matmul(m, p(q, head.out_m)));
  return num::concat_rows(parts);
}

Var attention_pool(Var y_rows, Var w1, Var w2, double slope, Matrix* weights) {
  const Var logits = num::matmul(num::leaky_relu(num::matmul(y_rows, w1), slope), w2);
  const Var alpha = num::row_softmax(num::transpose(logits));
  if (weights) *weights = alpha.value();
  return num::matmul(alpha, y_rows);
}

Var open_ended_logits(Var y, HeadParams& head) {
  if (head.classifier.value.size() == 0) throw ShapeError("open-ended head has no classifier");
  return num::matmul(y, num::transpose(p(y, head.classifier)));
}

Var open_ended_loss(Var y, HeadParams& head, std::size_t answer) {
  return num::cross_entropy(open_ended_logits(y, head), answer);
}

Var count_output(Var y, HeadParams& head) {
  return num::add(num::matmul(y, p(y, head.count_weight)), p(y, head.count_bias));
}

Var count_loss(Var y, HeadParams& head, double target) {
  if (!(target >= 0.0 && target <= kMaxCount)) {
    throw Error("count target " + std::to_string(target) + " outside [0, 10]");
  }
  return num::square(num::affine(count_output(y, head), 1.0, -target));
}

int count_predict(double raw) {
  if (std::isnan(raw)) return 0;
  return static_cast<int>(std::clamp(std::round(raw), 0.0, static_cast<double>(kMaxCount)));
}

Var choice_score(Var y, HeadParams& head) { return num::matmul(y, p(y, head.choice_weight)); }

Var hinge_loss(const std::vector<Var>& scores, const std::vector<std::size_t>& truths) {
  if (scores.empty()) throw Error("hinge_loss: empty batch");
  if (scores.size() != truths.size()) throw ShapeError("hinge_loss: one truth index per question required");
  Var total = num::ranking_hinge(scores[0], truths[0]);
  for (std::size_t j = 1; j < scores.size(); ++j) total = num::add(total, num::ranking_hinge(scores[j], truths[j]));
  return num::affine(total, 1.0 / static_cast<double>(scores.size()));
}

double hinge_loss(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& truths) {
  if (scores.empty()) throw Error("hinge_loss: empty batch");
  if (scores.size() != truths.size()) throw ShapeError("hinge_loss: one truth index per question required");
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const auto& s = scores[j];
    if (truths[j] >= s.size()) throw ShapeError("hinge_loss: truth index out of range");
    for (double si : s) total += std::max(0.0, 1.0 + si - s[truths[j]]);
  }
  return total / static_cast<double>(scores.size());
}

}  // namespace scan
