// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Output pooling and the three answer heads.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "scan/autodiff.hpp"
#include "scan/fusion.hpp"
#include "scan/rng.hpp"

namespace scan {

enum class TaskKind { kOpenEnded, kCount, kMultipleChoice };

inline constexpr int kMaxCount = 10;

struct HeadParams {
  num::Parameter out_q;          ///< d_w x d_o
  num::Parameter out_f;          ///< d_v x d_o
  num::Parameter out_m;          ///< d_v x d_o
  num::Parameter pool_hidden;    ///< W_1^o, d_o x d_o
  num::Parameter pool_score;     ///< W_2^o, d_o x 1
  num::Parameter classifier;     ///< |A| x d_o (open-ended)
  num::Parameter count_weight;   ///< d_o x 1
  num::Parameter count_bias;     ///< 1 x 1
  num::Parameter choice_weight;  ///< d_o x 1 (multiple choice)

  void for_each(const std::function<void(num::Parameter&)>& fn);
};

/// `n_answers` may be 0 when no open-ended classifier is needed.
HeadParams make_head_params(const ModelDims& dims, std::size_t n_answers, Rng& rng);

/// Y = [Q~ P_q; F~ P_f; M~ P_m] (bias-free). Invalid f or m rows are left out.
num::Var project_concat(num::Var q, num::Var f, num::Var m, HeadParams& head);

/// y = softmax(LeakyReLU(Y W1) W2)^T Y as a 1 x d_o row. The attention
/// weights (1 x rows) are stored in `weights` when given.
num::Var attention_pool(num::Var y_rows, num::Var w1, num::Var w2, double slope, num::Matrix* weights = nullptr);

num::Var open_ended_logits(num::Var y, HeadParams& head);
/// -log softmax(classifier y)[answer]; throws ShapeError for a bad index.
num::Var open_ended_loss(num::Var y, HeadParams& head, std::size_t answer);

/// Raw regression output (1 x 1).
num::Var count_output(num::Var y, HeadParams& head);
/// Squared error against `target`; throws Error unless 0 <= target <= 10.
num::Var count_loss(num::Var y, HeadParams& head, double target);
/// Rounds to the nearest integer, then clamps to [0, 10].
int count_predict(double raw);

num::Var choice_score(num::Var y, HeadParams& head);

/// (1/|Q|) sum_j sum_i max(0, 1 + s_i^j - s_t^j), the inner sum running over
/// every candidate including the truth. Each entry of `scores` is one
/// question's candidate scores (N_a x 1). Throws Error for an empty batch.
num::Var hinge_loss(const std::vector<num::Var>& scores, const std::vector<std::size_t>& truths);
double hinge_loss(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& truths);

}  // namespace scan
