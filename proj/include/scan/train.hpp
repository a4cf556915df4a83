// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Mini-batch training and evaluation.

#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "scan/config.hpp"
#include "scan/dataset.hpp"
#include "scan/model.hpp"

namespace scan {

/// Per-parameter optimizer state.
class Optimizer {
 public:
  Optimizer(const TrainConfig& config, std::vector<num::Parameter*> params);

  /// Applies weight decay, clipping and one update from the accumulated
  /// gradients, then zeroes them.
  void step();
  std::size_t steps() const noexcept { return t_; }

 private:
  TrainConfig config_;
  std::vector<num::Parameter*> params_;
  std::vector<num::Matrix> m_;
  std::vector<num::Matrix> v_;
  std::size_t t_ = 0;
};

struct EvalResult {
  TaskKind task = TaskKind::kOpenEnded;
  std::size_t n = 0;
  /// Open-ended and multiple choice.
  double accuracy = 0.0;
  /// Count: mean squared error of the rounded, clamped predictions.
  double mse = 0.0;
  double mean_loss = 0.0;
  /// Mean row entropy of the first block's frame attention (softmax of the
  /// scaled alignment), averaged over examples; 0 when frames are off.
  double frame_attention_entropy = 0.0;
  /// Mean row entropy of the first block's frame alignment G_xf itself (the
  /// transport plan, or the dot-product attention), rows normalised.
  double frame_alignment_entropy = 0.0;
  std::vector<Prediction> predictions;

  /// The headline metric: accuracy, or MSE for count.
  double metric() const { return task == TaskKind::kCount ? mse : accuracy; }
};

/// Throws Error for an empty dataset or mixed task kinds.
TaskKind dataset_task(const Dataset& data);

EvalResult evaluate(Model& model, const Dataset& data, bool with_entropy = false);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_metric = 0.0;
  bool has_val = false;
  double val_metric = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochMetrics> history;
  /// One line per epoch; identical across runs with the same seed.
  std::string log;
};

struct TrainOptions {
  const Dataset* validation = nullptr;
  /// Receives each log line as it is produced.
  std::function<void(const std::string&)> on_line;
  /// Called after every optimizer step with the mean batch loss.
  std::function<void(std::size_t step, double loss)> on_step;
};

/// Trains a fresh model. Throws TrainingError (with a diagnostic) when the
/// loss or a parameter becomes non-finite.
TrainResult train(const TrainConfig& config, const Dataset& data, std::size_t n_answers,
                  const TrainOptions& options = {});

/// Continues training `model` in place for config.epochs epochs.
std::vector<EpochMetrics> train_model(Model& model, const Dataset& data, const TrainOptions& options,
                                      std::string* log);

std::string format_metrics(const EpochMetrics& m, TaskKind task);

}  // namespace scan
