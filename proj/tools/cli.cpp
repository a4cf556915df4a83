// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "scan/config.hpp"
#include "scan/dataset.hpp"
#include "scan/deptree.hpp"
#include "scan/embeddings.hpp"
#include "scan/errors.hpp"
#include "scan/features.hpp"
#include "scan/hypergraph.hpp"
#include "scan/model.hpp"
#include "scan/otalign.hpp"
#include "scan/synth.hpp"
#include "scan/train.hpp"

namespace scan {
namespace {

using json = nlohmann::ordered_json;
using num::Matrix;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

/// Raised for argument combinations CLI11 cannot express.
class UsageError : public Error {
 public:
  using Error::Error;
};

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw LoadError("cannot write '" + path + "'");
  f << text;
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

DependencyTree load_tree(const std::string& path, std::size_t sentence, bool drop_punct) {
  ConlluOptions opts;
  opts.drop_punct = drop_punct;
  auto trees = read_conllu_file(path, opts);
  if (sentence >= trees.size()) {
    throw LoadError(path + " has " + std::to_string(trees.size()) + " sentences, sentence " + std::to_string(sentence) +
                    " requested");
  }
  return trees[sentence];
}

std::string edge_label(const NodeSet& edge, const DependencyTree& tree) {
  std::string label;
  for (std::size_t i = 0; i < edge.size(); ++i) {
    if (i) label += '+';
    label += tree.token(edge[i]).form;
  }
  return label;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  SyntheticSpec spec;
  std::string out;
  std::string task = "open_ended";
  std::uint64_t seed = 1;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* c = app.add_subcommand("synth", "Generate a synthetic compositional dataset");
  c->add_option("--out", a.out, "Output directory")->required();
  c->add_option("--seed", a.seed, "Generator seed");
  c->add_option("--n-train", a.spec.n_train, "Training examples");
  c->add_option("--n-test", a.spec.n_test, "Test examples");
  c->add_option("--arity", a.spec.arity, "Concepts per question");
  c->add_option("--noise", a.spec.noise, "Frame noise standard deviation");
  c->add_option("--dim", a.spec.dim, "Embedding and feature width");
  c->add_option("--frames", a.spec.frames_per_video, "Frames per video");
  c->add_option("--clip-length", a.spec.clip_length, "Frames per clip");
  c->add_option("--concepts", a.spec.n_concepts, "Concept vocabulary size");
  c->add_option("--attributes", a.spec.n_attributes, "Attribute (answer) vocabulary size");
  c->add_option("--choices", a.spec.n_choices, "Candidates per multiple-choice question");
  c->add_option("--task", a.task, "open_ended | count | multiple_choice");
}

int run_synth(SynthArgs& a, std::ostream& out) {
  a.spec.task = parse_task_kind(a.task);
  const SyntheticData world = synth_generate(a.spec, a.seed);
  write_synthetic(a.out, world);
  json j;
  j["train"] = world.train.size();
  j["test"] = world.test.size();
  if (a.spec.task == TaskKind::kOpenEnded && !world.test.empty()) {
    j["word_baseline_accuracy"] = word_level_baseline_accuracy(world, world.test);
    j["composition_oracle_accuracy"] = composition_oracle_accuracy(world, world.test);
  }
  out << j.dump(2) << '\n';
  return 0;
}

// ---- build-hypergraph ------------------------------------------------------

struct HypergraphArgs {
  std::string conllu;
  std::size_t sentence = 0;
  std::string out;
  std::string csv;
  bool drop_punct = false;
  bool word_level = false;
};

void add_hypergraph(CLI::App& app, HypergraphArgs& a) {
  auto* c = app.add_subcommand("build-hypergraph", "Build the syntactic hypergraph of a parsed question");
  c->add_option("--conllu", a.conllu, "CoNLL-U file")->required();
  c->add_option("--sentence", a.sentence, "Sentence index within the file");
  c->add_option("--out", a.out, "JSON output (default stdout)");
  c->add_option("--csv", a.csv, "Incidence matrix CSV output");
  c->add_flag("--drop-punct", a.drop_punct, "Remove PUNCT tokens before building");
  c->add_flag("--word-level", a.word_level, "Use singleton edges only");
}

int run_hypergraph(const HypergraphArgs& a, std::ostream& out) {
  const DependencyTree tree = load_tree(a.conllu, a.sentence, a.drop_punct);
  const SyntacticHypergraph g = a.word_level ? identity_hypergraph(tree.size()) : build_hypergraph(tree);
  write_text(a.out, hypergraph_to_json(g, &tree) + "\n", out);
  if (!a.csv.empty()) write_text(a.csv, hypergraph_to_csv(g, &tree), out);
  return 0;
}

// ---- align -----------------------------------------------------------------

struct AlignArgs {
  std::string conllu;
  std::size_t sentence = 0;
  std::string embeddings;
  std::string features;
  std::string model;
  std::string mode = "ot";
  std::string syntax = "hypergraph";
  int iters = kDefaultOtIters;
  std::string out;
  std::string csv;
};

void add_align(CLI::App& app, AlignArgs& a) {
  auto* c = app.add_subcommand("align", "Align question hyperedges with frame features");
  c->add_option("--conllu", a.conllu, "CoNLL-U file")->required();
  c->add_option("--sentence", a.sentence, "Sentence index within the file");
  c->add_option("--embeddings", a.embeddings, "Embedding table")->required();
  c->add_option("--features", a.features, "Frame (or clip) feature container")->required();
  c->add_option("--model", a.model, "Trained model; its first block supplies W, T_x and T_f");
  c->add_option("--mode", a.mode, "ot | dot");
  c->add_option("--syntax", a.syntax, "hypergraph | word-level");
  c->add_option("--iters", a.iters, "IPOT iterations");
  c->add_option("--out", a.out, "JSON output (default stdout)");
  c->add_option("--csv", a.csv, "Alignment matrix CSV output");
}

int run_align(const AlignArgs& a, std::ostream& out) {
  if (a.mode != "ot" && a.mode != "dot") throw UsageError("--mode must be ot or dot");
  if (a.syntax != "hypergraph" && a.syntax != "word-level") throw UsageError("--syntax must be hypergraph or word-level");
  if (a.iters < 1) throw UsageError("--iters must be at least 1");
  const DependencyTree tree = load_tree(a.conllu, a.sentence, false);
  const Matrix q = EmbeddingTable::load(a.embeddings).embed(tree);
  const Matrix f = read_feature_container(a.features);
  const SyntacticHypergraph g = a.syntax == "hypergraph" ? build_hypergraph(tree) : identity_hypergraph(tree.size());

  Matrix x = num::matmul(g.edge_mean_operator(), q);
  Matrix t_x, t_f;
  if (!a.model.empty()) {
    Model m = load_model(a.model);
    if (q.cols() != m.config.dims.d_w || f.cols() != m.config.dims.d_v) {
      throw LoadError("input widths do not match the model dimensions");
    }
    x = num::matmul(x, m.blocks.front().gather.value);
    t_x = m.blocks.front().proj.text.value;
    t_f = m.blocks.front().proj.frame.value;
  } else {
    if (q.cols() != f.cols()) {
      throw LoadError("embedding width " + std::to_string(q.cols()) + " differs from feature width " +
                      std::to_string(f.cols()) + "; pass --model to project them");
    }
    t_x = Matrix::identity(q.cols());
    t_f = Matrix::identity(f.cols());
  }
  const Matrix align = a.mode == "ot" ? ipot(cost_matrix(x, f, t_x, t_f), a.iters) : dot_align(x, f, t_x, t_f);

  json j;
  j["mode"] = a.mode;
  j["n_s"] = align.rows();
  j["n_f"] = align.cols();
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back(edge_label(e, tree));
  j["edges"] = edges;
  j["G"] = matrix_rows(align);
  j["total_mass"] = num::sum(align);
  write_text(a.out, j.dump(2) + "\n", out);

  if (!a.csv.empty()) {
    std::string csv = "edge";
    for (std::size_t c = 0; c < align.cols(); ++c) csv += ",f" + std::to_string(c);
    csv += '\n';
    for (std::size_t r = 0; r < align.rows(); ++r) {
      csv += csv_field(edge_label(g.edges()[r], tree));
      for (double v : align.row(r)) csv += "," + fmt(v);
      csv += '\n';
    }
    write_text(a.csv, csv, out);
  }
  return 0;
}

// ---- train / eval ----------------------------------------------------------

struct TrainArgs {
  std::string train;
  std::string val;
  std::string config;
  std::string answers;
  std::string out;
  std::string log;
  bool quiet = false;
  std::map<std::string, std::string> overrides;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Train a model on a dataset manifest");
  c->add_option("--train", a.train, "Training manifest (JSONL)")->required();
  c->add_option("--val", a.val, "Validation manifest");
  c->add_option("--config", a.config, "Config file (key = value lines)");
  c->add_option("--answers", a.answers, "Answer vocabulary (default: answers.txt next to the manifest)");
  c->add_option("--out", a.out, "Where to save the trained model");
  c->add_option("--log", a.log, "Where to write the metrics log");
  c->add_flag("--quiet", a.quiet, "Do not echo metrics to stdout");
  for (const auto& key : config_keys()) {
    c->add_option_function<std::string>(
        "--" + key, [&a, key](const std::string& v) { a.overrides[key] = v; }, "Config override");
  }
}

std::size_t vocab_size(const std::string& answers, const std::string& manifest) {
  std::string path = answers;
  if (path.empty()) {
    const auto candidate = std::filesystem::path(manifest).parent_path() / "answers.txt";
    if (std::filesystem::exists(candidate)) path = candidate.string();
  }
  return path.empty() ? 0 : AnswerVocab::load(path).size();
}

int run_train(const TrainArgs& a, std::ostream& out) {
  // Input widths left unset (0) are taken from the training data.
  TrainConfig base;
  base.dims.d_w = 0;
  base.dims.d_v = 0;
  TrainConfig cfg = a.config.empty() ? base : load_config(a.config, base);
  apply_environment(cfg);
  for (const auto& [k, v] : a.overrides) set_config_value(cfg, k, v);

  DatasetOptions opts;
  opts.answers_path = a.answers;
  opts.d_w = cfg.dims.d_w;
  opts.d_v = cfg.dims.d_v;
  const Dataset train_set = load_dataset(a.train, opts);
  if (train_set.empty()) throw LoadError("training manifest '" + a.train + "' has no examples");
  cfg.dims.d_w = opts.d_w = train_set.front().questions.front().embeddings.cols();
  cfg.dims.d_v = opts.d_v = train_set.front().frames.cols();
  cfg.validate();
  Dataset val_set;
  if (!a.val.empty()) val_set = load_dataset(a.val, opts);

  TrainOptions topts;
  if (!val_set.empty()) topts.validation = &val_set;
  if (!a.quiet) topts.on_line = [&out](const std::string& line) { out << line << '\n' << std::flush; };
  std::size_t n_answers = vocab_size(a.answers, a.train);
  if (dataset_task(train_set) == TaskKind::kOpenEnded && n_answers == 0) {
    for (const Example& ex : train_set) n_answers = std::max(n_answers, ex.answer + 1);
  }
  TrainResult r = train(cfg, train_set, n_answers, topts);
  if (!a.log.empty()) write_text(a.log, r.log, out);
  if (!a.out.empty()) save_model(a.out, r.model);
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string answers;
  bool entropy = false;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* c = app.add_subcommand("eval", "Evaluate a trained model");
  c->add_option("--model", a.model, "Model file")->required();
  c->add_option("--data", a.data, "Dataset manifest")->required();
  c->add_option("--answers", a.answers, "Answer vocabulary");
  c->add_flag("--entropy", a.entropy, "Also report alignment entropies");
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  Model model = load_model(a.model);
  DatasetOptions opts;
  opts.answers_path = a.answers;
  opts.d_w = model.config.dims.d_w;
  opts.d_v = model.config.dims.d_v;
  const Dataset data = load_dataset(a.data, opts);
  const EvalResult r = evaluate(model, data, a.entropy);
  json j;
  j["task"] = to_string(r.task);
  j["n"] = r.n;
  if (r.task == TaskKind::kCount) j["mse"] = r.mse;
  else j["accuracy"] = r.accuracy;
  j["mean_loss"] = r.mean_loss;
  if (a.entropy) {
    j["frame_alignment_entropy"] = r.frame_alignment_entropy;
    j["frame_attention_entropy"] = r.frame_attention_entropy;
  }
  out << j.dump(2) << '\n';
  return 0;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::size_t dims = 4;
  std::uint64_t seed = 1;
  std::size_t blocks = 2;
  double tolerance = 1e-4;
};

void add_gradcheck(CLI::App& app, GradcheckArgs& a) {
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of the full model");
  c->add_option("--dims", a.dims, "Every width (d_w, d_v, d, d_o)")->check(CLI::Range(1, 8));
  c->add_option("--seed", a.seed, "Seed for weights and inputs");
  c->add_option("--blocks", a.blocks, "Stacked blocks")->check(CLI::Range(1, 5));
  c->add_option("--tolerance", a.tolerance, "Maximum accepted relative error");
}

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  json j;
  j["dims"] = a.dims;
  j["seed"] = a.seed;
  json runs = json::array();
  double worst = 0.0;
  const std::vector<std::pair<OtMode, SyntaxMode>> variants = {
      {OtMode::kOt, SyntaxMode::kHypergraph}, {OtMode::kDot, SyntaxMode::kHypergraph},
      {OtMode::kOt, SyntaxMode::kWordLevel}};
  for (const TaskKind task : {TaskKind::kOpenEnded, TaskKind::kCount, TaskKind::kMultipleChoice}) {
    for (const auto& [ot, syntax] : variants) {
      TrainConfig cfg;
      cfg.dims = {a.dims, a.dims, a.dims, a.dims};
      cfg.blocks = a.blocks;
      cfg.seed = a.seed;
      cfg.ot_mode = ot;
      cfg.syntax_mode = syntax;
      Model model = make_model(cfg, task, 3);
      Rng rng = Rng(a.seed).substream("data");
      const Example ex = random_example(cfg.dims, task, 3, rng);
      const num::GradCheckReport rep = check_model_gradients(model, ex);
      worst = std::max(worst, rep.max_rel_err);
      json run;
      run["task"] = to_string(task);
      run["ot_mode"] = to_string(ot);
      run["syntax_mode"] = to_string(syntax);
      run["entries"] = rep.entries_checked;
      run["max_rel_err"] = rep.max_rel_err;
      run["worst_param"] = rep.worst.param;
      runs.push_back(run);
    }
  }
  j["runs"] = runs;
  j["max_rel_err"] = worst;
  j["pass"] = worst <= a.tolerance;
  out << j.dump(2) << '\n';
  return worst <= a.tolerance ? 0 : 1;
}

// ---- inspect ---------------------------------------------------------------

struct InspectArgs {
  std::string conllu;
  std::string features;
  std::string model;
  std::string manifest;
};

void add_inspect(CLI::App& app, InspectArgs& a) {
  auto* c = app.add_subcommand("inspect", "Summarize a CoNLL-U file, feature container, model or manifest");
  c->add_option("--conllu", a.conllu, "CoNLL-U file");
  c->add_option("--features", a.features, "Feature container");
  c->add_option("--model", a.model, "Model file");
  c->add_option("--manifest", a.manifest, "Dataset manifest");
}

int run_inspect(const InspectArgs& a, std::ostream& out) {
  json j;
  if (a.conllu.empty() && a.features.empty() && a.model.empty() && a.manifest.empty()) {
    throw UsageError("inspect needs at least one of --conllu, --features, --model, --manifest");
  }
  if (!a.conllu.empty()) {
    std::vector<std::string> warnings;
    const auto trees = read_conllu_file(a.conllu, {}, &warnings);
    json sents = json::array();
    for (const auto& t : trees) {
      json s;
      s["tokens"] = t.forms();
      s["root"] = t.root();
      s["hyperedges"] = build_hypergraph(t).n_edges();
      sents.push_back(s);
    }
    j["conllu"] = {{"sentences", sents}, {"warnings", warnings}};
  }
  if (!a.features.empty()) {
    const Matrix f = read_feature_container(a.features);
    j["features"] = {{"rows", f.rows()}, {"cols", f.cols()}, {"max_abs", num::max_abs(f)}};
  }
  if (!a.model.empty()) {
    Model m = load_model(a.model);
    std::size_t count = 0;
    for (auto* p : m.parameters()) count += p->value.data().size();
    j["model"] = {{"task", to_string(m.task)}, {"blocks", m.blocks.size()}, {"parameters", count},
                  {"config", config_to_text(m.config)}};
  }
  if (!a.manifest.empty()) {
    const Dataset d = load_dataset(a.manifest);
    json info;
    info["examples"] = d.size();
    if (!d.empty()) {
      info["task"] = to_string(dataset_task(d));
      info["d_w"] = d.front().questions.front().embeddings.cols();
      info["d_v"] = d.front().frames.cols();
    }
    j["manifest"] = info;
  }
  out << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Syntax-aware cross-modal video question answering"};
  app.name("scanqa");
  app.require_subcommand(1);
  SynthArgs synth;
  HypergraphArgs hyper;
  AlignArgs align;
  TrainArgs train_args;
  EvalArgs eval_args;
  GradcheckArgs grad;
  InspectArgs inspect;
  add_synth(app, synth);
  add_hypergraph(app, hyper);
  add_align(app, align);
  add_train(app, train_args);
  add_eval(app, eval_args);
  add_gradcheck(app, grad);
  add_inspect(app, inspect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") return run_synth(synth, out);
    if (cmd == "build-hypergraph") return run_hypergraph(hyper, out);
    if (cmd == "align") return run_align(align, out);
    if (cmd == "train") return run_train(train_args, out);
    if (cmd == "eval") return run_eval(eval_args, out);
    if (cmd == "gradcheck") return run_gradcheck(grad, out);
    if (cmd == "inspect") return run_inspect(inspect, out);
    err << "unknown subcommand " << cmd << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace scan
