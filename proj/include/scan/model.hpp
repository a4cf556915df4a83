// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Full model: optional context encoder, a stack of fusion blocks and the
// output head, plus JSON persistence.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scan/autodiff.hpp"
#include "scan/config.hpp"
#include "scan/dataset.hpp"
#include "scan/fusion.hpp"
#include "scan/gradcheck.hpp"
#include "scan/qahead.hpp"
#include "scan/rng.hpp"

namespace scan {

struct Model {
  TrainConfig config;
  TaskKind task = TaskKind::kOpenEnded;
  std::size_t n_answers = 0;
  std::vector<BlockParams> blocks;
  HeadParams head;
  std::optional<ContextEncoderParams> context;

  /// Every trainable parameter, in a fixed order.
  std::vector<num::Parameter*> parameters();
};

/// Initializes weights from the "init" substream of config.seed. Open-ended
/// models need n_answers >= 1.
Model make_model(const TrainConfig& config, TaskKind task, std::size_t n_answers);

struct Prediction {
  /// Predicted answer index (open-ended), count (count) or candidate index
  /// (multiple choice).
  std::size_t label = 0;
  /// Raw regression output for count tasks.
  double raw = 0.0;
  /// Logits or candidate scores.
  std::vector<double> scores;
};

struct ForwardResult {
  num::Var loss;  ///< task loss of this example, 1 x 1
  Prediction prediction;
  /// Block traces of the first input sequence, when requested.
  std::vector<BlockTrace> trace;
};

/// Records the forward pass of one example on `tape`.
ForwardResult forward(num::Tape& tape, Model& model, const Example& ex, bool want_trace = false);

/// The 1 x d_o pooled vector for one input sequence.
num::Var encode(num::Tape& tape, Model& model, const QuestionInput& q, const num::Matrix& frames,
                const num::Matrix& clips, std::vector<BlockTrace>* trace = nullptr);

/// Random example for gradient checks: a random tree over `n_tokens` words,
/// Gaussian embeddings and features, and a random target.
Example random_example(const ModelDims& dims, TaskKind task, std::size_t n_answers, Rng& rng,
                       std::size_t n_tokens = 4, std::size_t n_frames = 3, std::size_t n_clips = 2);

/// Finite-difference check of the task loss of `ex` against every model
/// parameter.
num::GradCheckReport check_model_gradients(Model& model, const Example& ex, double h = 1e-4);

std::string model_to_json(Model& model);
Model model_from_json(const std::string& text);
void save_model(const std::string& path, Model& model);
Model load_model(const std::string& path);

}  // namespace scan
