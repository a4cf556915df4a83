// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include "json.hpp"

#include "scan/errors.hpp"
#include "scan/features.hpp"

namespace scan {

namespace fs = std::filesystem;
using nlohmann::json;

QuestionInput::QuestionInput(DependencyTree t, num::Matrix e)
    : tree(std::move(t)), embeddings(std::move(e)), graph(build_hypergraph(tree)) {
  if (embeddings.rows() != tree.size()) {
    throw ShapeError("question has " + std::to_string(tree.size()) + " tokens but " +
                     std::to_string(embeddings.rows()) + " embedding rows");
  }
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kOpenEnded: return "open_ended";
    case TaskKind::kCount: return "count";
    case TaskKind::kMultipleChoice: return "multiple_choice";
  }
  return "open_ended";
}

TaskKind parse_task_kind(const std::string& s) {
  if (s == "open_ended") return TaskKind::kOpenEnded;
  if (s == "count") return TaskKind::kCount;
  if (s == "multiple_choice") return TaskKind::kMultipleChoice;
  throw LoadError("unknown task kind '" + s + "'");
}

AnswerVocab::AnswerVocab(std::vector<std::string> answers) : answers_(std::move(answers)) {
  for (std::size_t i = 0; i < answers_.size(); ++i) {
    if (!index_.emplace(answers_[i], i).second) throw LoadError("duplicate answer '" + answers_[i] + "'");
  }
}

AnswerVocab AnswerVocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open answer vocabulary '" + path + "'");
  std::vector<std::string> answers;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) answers.push_back(line);
  }
  return AnswerVocab(std::move(answers));
}

std::optional<std::size_t> AnswerVocab::find(const std::string& answer) const {
  if (auto it = index_.find(answer); it != index_.end()) return it->second;
  return std::nullopt;
}

std::string AnswerVocab::to_text() const {
  std::string out;
  for (const auto& a : answers_) out += a + "\n";
  return out;
}

void validate_example(const Example& ex) {
  if (ex.questions.empty()) throw LoadError(ex.id + ": example has no question");
  if (ex.task != TaskKind::kMultipleChoice && ex.questions.size() != 1) {
    throw LoadError(ex.id + ": only multiple-choice examples carry several sequences");
  }
  if (ex.task == TaskKind::kMultipleChoice && ex.answer >= ex.questions.size()) {
    throw LoadError(ex.id + ": truth_index out of range");
  }
  if (ex.task == TaskKind::kCount && !(ex.count >= 0.0 && ex.count <= kMaxCount)) {
    throw LoadError(ex.id + ": count target outside [0, 10]");
  }
  const std::size_t dw = ex.questions.front().embeddings.cols();
  for (const auto& q : ex.questions) {
    if (q.embeddings.cols() != dw) throw LoadError(ex.id + ": inconsistent embedding widths");
    q.embeddings.require_finite(ex.id + " embeddings");
  }
  if (ex.frames.rows() == 0 || ex.clips.rows() == 0) throw LoadError(ex.id + ": empty frame or clip features");
  if (ex.frames.cols() != ex.clips.cols()) throw LoadError(ex.id + ": frame and clip widths differ");
  ex.frames.require_finite(ex.id + " frames");
  ex.clips.require_finite(ex.id + " clips");
}

namespace {

struct ConlluRef {
  std::string path;
  std::size_t sentence = 0;
};

ConlluRef parse_ref(const std::string& ref, const fs::path& base) {
  ConlluRef out;
  std::string path = ref;
  if (auto hash = ref.rfind('#'); hash != std::string::npos) {
    path = ref.substr(0, hash);
    const std::string idx = ref.substr(hash + 1);
    try {
      std::size_t used = 0;
      out.sentence = std::stoul(idx, &used);
      if (used != idx.size()) throw std::invalid_argument(idx);
    } catch (const std::exception&) {
      throw LoadError("bad sentence index in CoNLL-U reference '" + ref + "'");
    }
  }
  const fs::path p(path);
  out.path = (p.is_absolute() ? p : base / p).string();
  return out;
}

std::string resolve(const std::string& path, const fs::path& base) {
  const fs::path p(path);
  return (p.is_absolute() ? p : base / p).string();
}

class LoaderCache {
 public:
  explicit LoaderCache(const ConlluOptions& opts) : opts_(opts) {}

  const DependencyTree& tree(const ConlluRef& ref) {
    auto it = conllu_.find(ref.path);
    if (it == conllu_.end()) it = conllu_.emplace(ref.path, read_conllu_file(ref.path, opts_)).first;
    if (ref.sentence >= it->second.size()) {
      throw LoadError(ref.path + " has " + std::to_string(it->second.size()) + " sentences, sentence " +
                      std::to_string(ref.sentence) + " requested");
    }
    return it->second[ref.sentence];
  }

  const EmbeddingTable& table(const std::string& path) {
    auto it = tables_.find(path);
    if (it == tables_.end()) it = tables_.emplace(path, EmbeddingTable::load(path)).first;
    return it->second;
  }

 private:
  ConlluOptions opts_;
  std::map<std::string, std::vector<DependencyTree>> conllu_;
  std::map<std::string, EmbeddingTable> tables_;
};

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw LoadError(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Dataset load_dataset(const std::string& manifest_path, const DatasetOptions& options) {
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("cannot open manifest '" + manifest_path + "'");
  const fs::path base = fs::path(manifest_path).parent_path();

  std::optional<AnswerVocab> vocab;
  if (!options.answers_path.empty()) {
    vocab = AnswerVocab::load(options.answers_path);
  } else if (fs::exists(base / "answers.txt")) {
    vocab = AnswerVocab::load((base / "answers.txt").string());
  }

  LoaderCache cache(options.conllu);
  Dataset data;
  std::size_t d_w = options.d_w, d_v = options.d_v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = manifest_path + ":" + std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(line);
      Example ex;
      ex.id = j.value("id", std::to_string(line_no));
      ex.task = parse_task_kind(require(j, "task").get<std::string>());
      const EmbeddingTable& table = cache.table(resolve(require(j, "embeddings").get<std::string>(), base));

      std::vector<std::string> refs;
      if (ex.task == TaskKind::kMultipleChoice) {
        refs = require(j, "candidates").get<std::vector<std::string>>();
        if (refs.empty()) throw LoadError("multiple-choice example has no candidates");
        ex.answer = require(j, "truth_index").get<std::size_t>();
      } else {
        refs.push_back(require(j, "conllu").get<std::string>());
      }
      for (const auto& r : refs) {
        const DependencyTree& tree = cache.tree(parse_ref(r, base));
        ex.questions.emplace_back(tree, table.embed(tree));
      }

      ex.frames = read_feature_container(resolve(require(j, "frames").get<std::string>(), base));
      ex.clips = read_feature_container(resolve(require(j, "clips").get<std::string>(), base));

      if (ex.task == TaskKind::kOpenEnded) {
        const json& t = require(j, "target");
        if (t.is_number_integer()) {
          ex.answer = t.get<std::size_t>();
          if (vocab && ex.answer >= vocab->size()) throw LoadError("answer index out of vocabulary range");
        } else {
          const std::string answer = t.get<std::string>();
          if (!vocab) throw LoadError("answer '" + answer + "' given as text but no answer vocabulary is loaded");
          const auto idx = vocab->find(answer);
          if (!idx) throw LoadError("unknown answer token '" + answer + "'");
          ex.answer = *idx;
        }
      } else if (ex.task == TaskKind::kCount) {
        ex.count = require(j, "target").get<double>();
      }

      const std::size_t ex_dw = ex.questions.front().embeddings.cols();
      if (d_w == 0) d_w = ex_dw;
      if (d_v == 0) d_v = ex.frames.cols();
      if (ex_dw != d_w) {
        throw LoadError("embedding width " + std::to_string(ex_dw) + " does not match " + std::to_string(d_w));
      }
      if (ex.frames.cols() != d_v || ex.clips.cols() != d_v) {
        throw LoadError("feature width mismatch: frames " + std::to_string(ex.frames.cols()) + ", clips " +
                        std::to_string(ex.clips.cols()) + ", expected " + std::to_string(d_v));
      }
      validate_example(ex);
      data.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw LoadError(where + "invalid manifest entry: " + e.what());
    } catch (const Error& e) {
      throw LoadError(where + e.what());
    }
  }
  return data;
}

void write_dataset(const std::string& dir, const std::string& name, const Dataset& data,
                   const std::string& embeddings_file, const AnswerVocab* answers) {
  const fs::path root(dir);
  fs::create_directories(root / "data");
  std::ofstream manifest(root / (name + ".jsonl"), std::ios::trunc);
  if (!manifest) throw LoadError("cannot write manifest in '" + dir + "'");
  for (const Example& ex : data) {
    const std::string stem = "data/" + ex.id;
    {
      std::ofstream c(root / (stem + ".conllu"), std::ios::trunc);
      for (const auto& q : ex.questions) c << to_conllu(q.tree);
      if (!c) throw LoadError("cannot write " + stem + ".conllu");
    }
    write_feature_container((root / (stem + ".frames.scnf")).string(), ex.frames);
    write_feature_container((root / (stem + ".clips.scnf")).string(), ex.clips);

    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["task"] = to_string(ex.task);
    j["embeddings"] = embeddings_file;
    j["frames"] = stem + ".frames.scnf";
    j["clips"] = stem + ".clips.scnf";
    switch (ex.task) {
      case TaskKind::kOpenEnded:
        j["conllu"] = stem + ".conllu";
        if (answers && ex.answer < answers->size()) j["target"] = answers->answers()[ex.answer];
        else j["target"] = ex.answer;
        break;
      case TaskKind::kCount:
        j["conllu"] = stem + ".conllu";
        j["target"] = ex.count;
        break;
      case TaskKind::kMultipleChoice: {
        std::vector<std::string> refs;
        for (std::size_t i = 0; i < ex.questions.size(); ++i) refs.push_back(stem + ".conllu#" + std::to_string(i));
        j["candidates"] = refs;
        j["truth_index"] = ex.answer;
        break;
      }
    }
    manifest << j.dump() << '\n';
  }
}

}  // namespace scan
