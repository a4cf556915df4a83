// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Examples and the JSONL dataset manifest.
//
// Each manifest line is an object with
//   id          string
//   conllu      CoNLL-U reference ("path" or "path#k" for the k-th sentence)
//   embeddings  embedding table path
//   frames      feature container path (N_f x d_v)
//   clips       feature container path (N_c x d_v)
//   task        "open_ended" | "count" | "multiple_choice"
//   target      answer token or index (open_ended), number (count)
//   candidates  CoNLL-U references, one per question+answer sequence (multiple_choice)
//   truth_index index of the correct candidate (multiple_choice)
// Relative paths resolve against the manifest's directory.

#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scan/deptree.hpp"
#include "scan/embeddings.hpp"
#include "scan/hypergraph.hpp"
#include "scan/matrix.hpp"
#include "scan/qahead.hpp"

namespace scan {

/// One model input sequence: a parsed question (or question + candidate
/// answer) with its word embeddings and syntactic hypergraph.
struct QuestionInput {
  QuestionInput(DependencyTree tree, num::Matrix embeddings);

  DependencyTree tree;
  num::Matrix embeddings;  ///< N_w x d_w
  SyntacticHypergraph graph;
};

struct Example {
  std::string id;
  /// One entry, or N_a entries for multiple choice.
  std::vector<QuestionInput> questions;
  num::Matrix frames;  ///< N_f x d_v
  num::Matrix clips;   ///< N_c x d_v
  TaskKind task = TaskKind::kOpenEnded;
  /// Answer index (open-ended) or truth index (multiple choice).
  std::size_t answer = 0;
  /// Count target.
  double count = 0.0;
};

using Dataset = std::vector<Example>;

std::string to_string(TaskKind kind);
/// Accepts "open_ended", "count", "multiple_choice"; throws LoadError otherwise.
TaskKind parse_task_kind(const std::string& s);

class AnswerVocab {
 public:
  AnswerVocab() = default;
  explicit AnswerVocab(std::vector<std::string> answers);
  static AnswerVocab load(const std::string& path);

  std::size_t size() const noexcept { return answers_.size(); }
  const std::vector<std::string>& answers() const noexcept { return answers_; }
  std::optional<std::size_t> find(const std::string& answer) const;
  std::string to_text() const;

 private:
  std::vector<std::string> answers_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct DatasetOptions {
  /// Answer vocabulary; when empty, "answers.txt" next to the manifest is
  /// used if present.
  std::string answers_path;
  ConlluOptions conllu;
  /// Expected widths; 0 accepts whatever the first example has.
  std::size_t d_w = 0;
  std::size_t d_v = 0;
};

/// Throws LoadError naming the manifest line for missing files, dimension
/// mismatches, tokens absent from the embedding table and unknown answers.
Dataset load_dataset(const std::string& manifest_path, const DatasetOptions& options = {});

/// Verifies shapes and targets of an in-memory example.
void validate_example(const Example& ex);

/// Writes `data` under `dir` (per-example CoNLL-U and feature files in
/// dir/data/) together with `<name>.jsonl`. The embedding table and answer
/// vocabulary are written by the caller.
void write_dataset(const std::string& dir, const std::string& name, const Dataset& data,
                   const std::string& embeddings_file, const AnswerVocab* answers);

}  // namespace scan
