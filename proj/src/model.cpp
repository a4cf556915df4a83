// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/model.hpp"

#include <cmath>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "scan/errors.hpp"
#include "scan/rng.hpp"

namespace scan {

using num::Matrix;
using num::Tape;
using num::Var;

std::vector<num::Parameter*> Model::parameters() {
  std::vector<num::Parameter*> out;
  auto collect = [&out](num::Parameter& p) { out.push_back(&p); };
  if (context) context->for_each(collect);
  for (auto& b : blocks) b.for_each(collect);
  head.for_each(collect);
  return out;
}

Model make_model(const TrainConfig& config, TaskKind task, std::size_t n_answers) {
  config.validate();
  if (task == TaskKind::kOpenEnded && n_answers == 0) throw ConfigError("open-ended model needs an answer vocabulary");
  Rng rng = Rng(config.seed).substream("init");
  Model m;
  m.config = config;
  m.task = task;
  m.n_answers = task == TaskKind::kOpenEnded ? n_answers : 0;
  if (config.context_encoder) m.context = make_context_encoder(config.dims.d_w, rng);
  for (std::size_t l = 0; l < config.blocks; ++l) {
    m.blocks.push_back(make_block_params(config.dims, rng, "block" + std::to_string(l) + "."));
  }
  m.head = make_head_params(config.dims, m.n_answers, rng);
  return m;
}

Var encode(Tape& tape, Model& model, const QuestionInput& q, const Matrix& frames, const Matrix& clips,
           std::vector<BlockTrace>* trace) {
  const TrainConfig& cfg = model.config;
  if (q.embeddings.cols() != cfg.dims.d_w) {
    throw ShapeError("word embeddings have width " + std::to_string(q.embeddings.cols()) + ", model expects " +
                     std::to_string(cfg.dims.d_w));
  }
  if (frames.cols() != cfg.dims.d_v || clips.cols() != cfg.dims.d_v) {
    throw ShapeError("visual features have width " + std::to_string(frames.cols()) + ", model expects " +
                     std::to_string(cfg.dims.d_v));
  }
  Var words = tape.constant(q.embeddings);
  if (model.context) words = context_encode(words, *model.context);
  const BundleVars in{words, tape.constant(frames), tape.constant(clips)};
  const BundleVars out = stack_forward(in, q.graph, model.blocks, cfg.fusion(), trace);
  const Var y_rows =
      project_concat(out.q, cfg.use_frames ? out.f : Var{}, cfg.use_clips ? out.m : Var{}, model.head);
  return attention_pool(y_rows, tape.param(model.head.pool_hidden), tape.param(model.head.pool_score),
                        cfg.leaky_slope);
}

ForwardResult forward(Tape& tape, Model& model, const Example& ex, bool want_trace) {
  if (ex.task != model.task) {
    throw ConfigError("example " + ex.id + " is " + to_string(ex.task) + " but the model is " + to_string(model.task));
  }
  ForwardResult r;
  std::vector<BlockTrace>* trace = want_trace ? &r.trace : nullptr;
  switch (ex.task) {
    case TaskKind::kOpenEnded: {
      const Var y = encode(tape, model, ex.questions.front(), ex.frames, ex.clips, trace);
      const Var logits = open_ended_logits(y, model.head);
      if (ex.answer >= logits.cols()) throw ShapeError("example " + ex.id + ": answer index outside the vocabulary");
      r.loss = num::cross_entropy(logits, ex.answer);
      const auto row = logits.value().row(0);
      r.prediction.scores.assign(row.begin(), row.end());
      std::size_t best = 0;
      for (std::size_t k = 1; k < row.size(); ++k) {
        if (row[k] > row[best]) best = k;
      }
      r.prediction.label = best;
      break;
    }
    case TaskKind::kCount: {
      const Var y = encode(tape, model, ex.questions.front(), ex.frames, ex.clips, trace);
      r.loss = count_loss(y, model.head, ex.count);
      r.prediction.raw = count_output(y, model.head).scalar();
      r.prediction.label = static_cast<std::size_t>(count_predict(r.prediction.raw));
      r.prediction.scores = {r.prediction.raw};
      break;
    }
    case TaskKind::kMultipleChoice: {
      std::vector<Var> scores;
      for (std::size_t i = 0; i < ex.questions.size(); ++i) {
        const Var y = encode(tape, model, ex.questions[i], ex.frames, ex.clips, i == 0 ? trace : nullptr);
        scores.push_back(choice_score(y, model.head));
      }
      const Var s = num::concat_rows(scores);
      r.loss = hinge_loss({s}, {ex.answer});
      std::size_t best = 0;
      for (std::size_t i = 0; i < s.rows(); ++i) {
        r.prediction.scores.push_back(s.value()(i, 0));
        if (s.value()(i, 0) > s.value()(best, 0)) best = i;
      }
      r.prediction.label = best;
      break;
    }
  }
  return r;
}

Example random_example(const ModelDims& dims, TaskKind task, std::size_t n_answers, Rng& rng, std::size_t n_tokens,
                       std::size_t n_frames, std::size_t n_clips) {
  auto gaussian = [&rng](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.normal();
    return m;
  };
  auto random_tree = [&rng](std::size_t n) {
    std::vector<Token> tokens;
    const std::size_t root = 1 + rng.below(n);
    std::vector<std::size_t> placed{root};
    for (std::size_t i = 1; i <= n; ++i) {
      Token t;
      t.index = i;
      t.form = "w" + std::to_string(i);
      tokens.push_back(t);
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i != root) rest.push_back(i);
    }
    rng.shuffle(rest.begin(), rest.end());
    for (std::size_t i : rest) {
      tokens[i - 1].head = placed[rng.below(placed.size())];
      placed.push_back(i);
    }
    return DependencyTree::from_tokens(std::move(tokens));
  };

  Example ex;
  ex.id = "random";
  ex.task = task;
  ex.frames = gaussian(n_frames, dims.d_v);
  ex.clips = gaussian(n_clips, dims.d_v);
  const std::size_t n_seq = task == TaskKind::kMultipleChoice ? 3 : 1;
  for (std::size_t i = 0; i < n_seq; ++i) ex.questions.emplace_back(random_tree(n_tokens), gaussian(n_tokens, dims.d_w));
  switch (task) {
    case TaskKind::kOpenEnded: ex.answer = rng.below(std::max<std::size_t>(n_answers, 1)); break;
    case TaskKind::kCount: ex.count = static_cast<double>(rng.below(kMaxCount + 1)); break;
    case TaskKind::kMultipleChoice: ex.answer = rng.below(n_seq); break;
  }
  return ex;
}

num::GradCheckReport check_model_gradients(Model& model, const Example& ex, double h) {
  return num::finite_diff_check([&](Tape& tape) { return forward(tape, model, ex).loss; }, model.parameters(), h);
}

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

}  // namespace

std::string model_to_json(Model& model) {
  nlohmann::ordered_json j;
  j["format"] = "scanqa-model";
  j["version"] = 1;
  j["config"] = config_to_text(model.config);
  j["task"] = to_string(model.task);
  j["n_answers"] = model.n_answers;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (num::Parameter* p : model.parameters()) params[p->name] = matrix_json(p->value);
  j["parameters"] = std::move(params);
  return j.dump();
}

Model model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "scanqa-model") throw LoadError("not a scanqa model file");
  if (j.value("version", 0) != 1) throw LoadError("unsupported model file version");
  try {
    Model m = make_model(parse_config(j.at("config").get<std::string>()), parse_task_kind(j.at("task")),
                         j.at("n_answers").get<std::size_t>());
    const auto& params = j.at("parameters");
    for (num::Parameter* p : m.parameters()) {
      if (!params.contains(p->name)) throw LoadError("model file lacks parameter '" + p->name + "'");
      const auto& e = params.at(p->name);
      const std::size_t rows = e.at("rows").get<std::size_t>(), cols = e.at("cols").get<std::size_t>();
      if (rows != p->value.rows() || cols != p->value.cols()) {
        throw LoadError("parameter '" + p->name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", expected " + std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
      }
      p->value = Matrix::checked(rows, cols, e.at("data").get<std::vector<double>>());
      p->zero_grad();
    }
    if (params.size() != m.parameters().size()) throw LoadError("model file has unexpected parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::string& path, Model& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write model to '" + path + "'");
  out << model_to_json(model) << '\n';
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace scan
