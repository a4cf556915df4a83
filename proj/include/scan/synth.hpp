// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic compositional video-QA task.
//
// Every concept token and every attribute token owns a visual prototype, and
// a token's word embedding is its prototype. A question is rooted at the word
// "what" and mentions r + 1 distinct concepts: r of them form one subtree
// (the composition) and the remaining one hangs directly off the root. The
// video shows every r-subset of those r + 1 concepts in its own frame, each
// with a different attribute, plus filler frames. The answer is the attribute
// of the frame that shows the composition. Every question word appears in r
// frames, and the bag of question words is the same whichever subset the
// tree composes, so only the tree identifies the answer frame. With arity 1
// there is no extra concept and the task is solvable from single words.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "scan/dataset.hpp"
#include "scan/embeddings.hpp"
#include "scan/matrix.hpp"
#include "scan/qahead.hpp"

namespace scan {

struct SyntheticSpec {
  std::size_t n_concepts = 20;
  std::size_t n_attributes = 8;
  /// Width of embeddings and features. Prototypes (one per concept, one per
  /// attribute and one for the question word) are orthonormal when they fit
  /// in `dim` and random unit vectors otherwise.
  std::size_t dim = 32;
  /// Frames beyond the composition frames are fillers showing unrelated
  /// concepts.
  std::size_t frames_per_video = 4;
  std::size_t clip_length = 2;
  /// Concepts in the composed subtree.
  std::size_t arity = 2;
  /// Standard deviation of the per-coordinate Gaussian frame noise.
  double noise = 0.05;
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  TaskKind task = TaskKind::kOpenEnded;
  /// Candidate answers per multiple-choice question.
  std::size_t n_choices = 4;

  /// Throws ConfigError for an infeasible spec.
  void validate() const;
};

struct SyntheticData {
  Dataset train;
  Dataset test;
  EmbeddingTable table;
  AnswerVocab answers;
  num::Matrix concept_prototypes;    ///< n_concepts x dim
  num::Matrix attribute_prototypes;  ///< n_attributes x dim
};

inline constexpr std::string_view kQuestionWord = "what";

std::string concept_token(std::size_t k);
std::string attribute_token(std::size_t k);

/// Deterministic in (spec, seed); draws from the "data" substream.
SyntheticData synth_generate(const SyntheticSpec& spec, std::uint64_t seed);

/// Index of the attribute prototype with the largest inner product with `frame`.
std::size_t decode_attribute(const SyntheticData& world, std::span<const double> frame);

/// Frame with the highest cosine to any single question word.
std::size_t nearest_word_frame(const Example& ex);
/// Frame with the highest cosine to the summed embeddings of the composed
/// subtree: the largest hyperedge that leaves out the root word.
std::size_t nearest_composition_frame(const Example& ex);

/// Open-ended accuracy of answering with the attribute of nearest_word_frame.
double word_level_baseline_accuracy(const SyntheticData& world, const Dataset& data);
/// Open-ended accuracy of answering with the attribute of nearest_composition_frame.
double composition_oracle_accuracy(const SyntheticData& world, const Dataset& data);

/// Writes train.jsonl, test.jsonl, embeddings.txt, answers.txt and data/ under `dir`.
void write_synthetic(const std::string& dir, const SyntheticData& world);

}  // namespace scan
