// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "scan/dataset.hpp"
#include "scan/errors.hpp"
#include "scan/features.hpp"
#include "scan/synth.hpp"

using namespace scan;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_train = 200;
  s.n_test = 100;
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("default spec separates words from compositions") {
  const auto spec = small_spec();
  const auto world = synth_generate(spec, 1);
  CHECK(world.train.size() == 200);
  CHECK(world.test.size() == 100);
  CHECK(word_level_baseline_accuracy(world, world.test) <= 0.5);
  CHECK(composition_oracle_accuracy(world, world.test) == 1.0);
  CHECK(composition_oracle_accuracy(world, world.train) == 1.0);
  std::size_t misled = 0;
  for (const auto& ex : world.train) misled += nearest_word_frame(ex) != nearest_composition_frame(ex) ? 1 : 0;
  CHECK(static_cast<double>(misled) >= 0.95 * static_cast<double>(world.train.size()));
}

TEST_CASE("arity one without noise is solvable from single words") {
  auto spec = small_spec();
  spec.arity = 1;
  spec.noise = 0.0;
  const auto world = synth_generate(spec, 2);
  CHECK(composition_oracle_accuracy(world, world.test) == 1.0);
  CHECK(word_level_baseline_accuracy(world, world.test) == 1.0);
}

TEST_CASE("same seed gives byte identical datasets") {
  const auto spec = small_spec();
  fixtures::TempDir a("syn_a"), b("syn_b");
  write_synthetic(a.path().string(), synth_generate(spec, 5));
  write_synthetic(b.path().string(), synth_generate(spec, 5));
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    CHECK(slurp(entry.path()) == slurp(b.path() / rel));
    ++files;
  }
  CHECK(files > 10);
  const auto other = synth_generate(spec, 6);
  CHECK_FALSE(other.train[0].frames == synth_generate(spec, 5).train[0].frames);
}

TEST_CASE("written synthetic data loads back") {
  auto spec = small_spec();
  spec.n_train = 20;
  spec.n_test = 10;
  const auto world = synth_generate(spec, 3);
  fixtures::TempDir dir("syn_load");
  write_synthetic(dir.path().string(), world);
  const auto train = load_dataset(dir.file("train.jsonl"));
  REQUIRE(train.size() == 20);
  CHECK(train[0].answer == world.train[0].answer);
  CHECK(train[0].questions[0].tree == world.train[0].questions[0].tree);
  // Features are stored as float32.
  for (std::size_t i = 0; i < train[0].frames.size(); ++i) {
    CHECK(train[0].frames.data()[i] == static_cast<double>(static_cast<float>(world.train[0].frames.data()[i])));
  }
}

TEST_CASE("count and multiple-choice variants") {
  auto spec = small_spec();
  spec.task = TaskKind::kCount;
  const auto counts = synth_generate(spec, 4);
  for (const auto& ex : counts.train) {
    CHECK(ex.task == TaskKind::kCount);
    CHECK(ex.count >= 0.0);
    CHECK(ex.count <= 10.0);
  }
  spec.task = TaskKind::kMultipleChoice;
  const auto mc = synth_generate(spec, 4);
  for (const auto& ex : mc.train) {
    CHECK(ex.questions.size() == spec.n_choices);
    CHECK(ex.answer < spec.n_choices);
  }
}

TEST_CASE("infeasible specs are rejected") {
  auto spec = small_spec();
  spec.arity = 30;
  CHECK_THROWS_AS(synth_generate(spec, 1), ConfigError);
  spec = small_spec();
  spec.n_attributes = 1;
  CHECK_THROWS_AS(synth_generate(spec, 1), ConfigError);
  spec = small_spec();
  spec.frames_per_video = 0;
  CHECK_THROWS_AS(synth_generate(spec, 1), ConfigError);
}
