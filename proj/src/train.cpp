// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "scan/errors.hpp"
#include "scan/otalign.hpp"
#include "scan/rng.hpp"

namespace scan {

using num::Matrix;

Optimizer::Optimizer(const TrainConfig& config, std::vector<num::Parameter*> params)
    : config_(config), params_(std::move(params)) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    if (config_.optimizer == OptimizerKind::kAdam) v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Optimizer::step() {
  ++t_;
  for (auto* p : params_) {
    if (config_.lambda != 0.0) p->grad += p->value * config_.lambda;
  }
  double scale = 1.0;
  if (config_.grad_clip > 0.0) {
    double sq = 0.0;
    for (auto* p : params_) {
      for (double g : p->grad.data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.grad_clip) scale = config_.grad_clip / norm;
  }
  const double lr = config_.lr;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i]->value.data();
    auto g = params_[i]->grad.data();
    auto m = m_[i].data();
    switch (config_.optimizer) {
      case OptimizerKind::kSgd:
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * scale * g[k];
        break;
      case OptimizerKind::kMomentum:
        for (std::size_t k = 0; k < w.size(); ++k) {
          m[k] = config_.momentum * m[k] + scale * g[k];
          w[k] -= lr * m[k];
        }
        break;
      case OptimizerKind::kAdam: {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        auto v = v_[i].data();
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t k = 0; k < w.size(); ++k) {
          const double gk = scale * g[k];
          m[k] = b1 * m[k] + (1.0 - b1) * gk;
          v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
          w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
        break;
      }
    }
    params_[i]->zero_grad();
  }
}

TaskKind dataset_task(const Dataset& data) {
  if (data.empty()) throw Error("dataset is empty");
  const TaskKind kind = data.front().task;
  for (const Example& ex : data) {
    if (ex.task != kind) {
      throw Error("dataset mixes task kinds (" + to_string(kind) + " and " + to_string(ex.task) + " in " + ex.id + ")");
    }
  }
  return kind;
}

namespace {

double example_error(const Example& ex, const Prediction& p) {
  if (ex.task == TaskKind::kCount) {
    const double d = static_cast<double>(p.label) - ex.count;
    return d * d;
  }
  return p.label == ex.answer ? 1.0 : 0.0;
}

Matrix attention_of(const Matrix& g, const FusionOptions& opts) {
  double scale = opts.alignment_temperature;
  if (opts.rescale_alignment) {
    scale *= static_cast<double>(g.cols()) * (opts.ot_mode == OtMode::kOt ? static_cast<double>(g.rows()) : 1.0);
  }
  return num::row_softmax(g * scale);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string describe_parameters(Model& model) {
  std::string worst_name;
  double worst = 0.0;
  bool finite = true;
  for (auto* p : model.parameters()) {
    for (double v : p->value.data()) {
      if (!std::isfinite(v)) {
        finite = false;
        worst_name = p->name;
      } else if (finite && std::abs(v) > worst) {
        worst = std::abs(v);
        worst_name = p->name;
      }
    }
    if (!finite) break;
  }
  return finite ? "largest |weight| " + fmt(worst) + " in " + worst_name : "non-finite weight in " + worst_name;
}

}  // namespace

EvalResult evaluate(Model& model, const Dataset& data, bool with_entropy) {
  EvalResult r;
  r.task = dataset_task(data);
  r.n = data.size();
  const FusionOptions opts = model.config.fusion();
  double err = 0.0, loss = 0.0, att_h = 0.0, plan_h = 0.0;
  for (const Example& ex : data) {
    num::Tape tape;
    const ForwardResult f = forward(tape, model, ex, with_entropy);
    loss += f.loss.scalar();
    err += example_error(ex, f.prediction);
    if (with_entropy && !f.trace.empty() && f.trace.front().g_xf.rows() > 0) {
      const Matrix& g = f.trace.front().g_xf;
      att_h += mean_row_entropy(attention_of(g, opts));
      plan_h += mean_row_entropy(g);
    }
    r.predictions.push_back(f.prediction);
  }
  const double n = static_cast<double>(data.size());
  if (r.task == TaskKind::kCount) r.mse = err / n;
  else r.accuracy = err / n;
  r.mean_loss = loss / n;
  r.frame_attention_entropy = att_h / n;
  r.frame_alignment_entropy = plan_h / n;
  return r;
}

std::string format_metrics(const EpochMetrics& m, TaskKind task) {
  const char* name = task == TaskKind::kCount ? "mse" : "acc";
  std::string line = "epoch " + std::to_string(m.epoch) + " train_loss " + fmt(m.train_loss);
  // The hinge sum includes the constant i = t term; the margin part excludes it.
  if (task == TaskKind::kMultipleChoice) line += " train_margin " + fmt(m.train_loss - 1.0);
  line += std::string(" train_") + name + " " + fmt(m.train_metric);
  if (m.has_val) line += std::string(" val_") + name + " " + fmt(m.val_metric);
  return line;
}

std::vector<EpochMetrics> train_model(Model& model, const Dataset& data, const TrainOptions& options,
                                      std::string* log) {
  const TaskKind task = dataset_task(data);
  if (task != model.task) throw ConfigError("dataset is " + to_string(task) + " but the model is " + to_string(model.task));
  if (options.validation && !options.validation->empty() && dataset_task(*options.validation) != task) {
    throw ConfigError("validation set task kind differs from the training set");
  }
  const TrainConfig& cfg = model.config;
  Rng shuffle = Rng(cfg.seed).substream("shuffle");
  Optimizer opt(cfg, model.parameters());
  for (auto* p : model.parameters()) p->zero_grad();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochMetrics> history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle.shuffle(order.begin(), order.end());
    double loss_sum = 0.0, err_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = data[order[i]];
        num::Tape tape;
        const ForwardResult f = forward(tape, model, ex);
        const double l = f.loss.scalar();
        if (!std::isfinite(l)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(opt.steps() + 1) + ", example " + ex.id + ": loss " + fmt(l) + "; " +
                              describe_parameters(model));
        }
        tape.backward(num::affine(f.loss, inv_b));
        batch_loss += l;
        err_sum += example_error(ex, f.prediction);
      }
      opt.step();
      loss_sum += batch_loss;
      if (options.on_step) options.on_step(opt.steps(), batch_loss * inv_b);
    }
    for (auto* p : model.parameters()) {
      if (!p->value.all_finite()) {
        throw TrainingError("non-finite parameter after epoch " + std::to_string(epoch) + ": " +
                            describe_parameters(model));
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    const double n = static_cast<double>(data.size());
    m.train_loss = loss_sum / n;
    m.train_metric = err_sum / n;
    if (options.validation && !options.validation->empty()) {
      m.has_val = true;
      m.val_metric = evaluate(model, *options.validation).metric();
    }
    const std::string line = format_metrics(m, task);
    if (log) *log += line + "\n";
    if (options.on_line) options.on_line(line);
    history.push_back(m);
  }
  return history;
}

TrainResult train(const TrainConfig& config, const Dataset& data, std::size_t n_answers, const TrainOptions& options) {
  TrainResult r{make_model(config, dataset_task(data), n_answers), {}, {}};
  r.history = train_model(r.model, data, options, &r.log);
  return r;
}

}  // namespace scan
