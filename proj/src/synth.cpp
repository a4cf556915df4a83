// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "scan/errors.hpp"
#include "scan/rng.hpp"

namespace scan {

using num::Matrix;

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("infeasible synthetic spec: " + msg); };
  if (dim == 0) fail("dim must be positive");
  if (arity == 0) fail("arity must be at least 1");
  if (n_concepts < 2 * arity + 1) fail("need at least 2 * arity + 1 concepts (fillers use unrelated ones)");
  if (n_attributes < 2) fail("need at least two attributes");
  const std::size_t shown = arity >= 2 ? arity + 1 : 1;
  if (n_attributes < shown) {
    fail(std::to_string(shown) + " distinct frame attributes needed, only " + std::to_string(n_attributes) +
         " available");
  }
  if (clip_length == 0) fail("clip_length must be positive");
  if (frames_per_video < shown) {
    fail("frames_per_video " + std::to_string(frames_per_video) + " cannot hold the " + std::to_string(shown) +
         " composition frames");
  }
  if (task == TaskKind::kMultipleChoice && (n_choices < 2 || n_choices > n_attributes)) {
    fail("n_choices must lie in [2, n_attributes]");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be a finite non-negative number");
}

std::string concept_token(std::size_t k) { return "c" + std::to_string(k); }
std::string attribute_token(std::size_t k) { return "a" + std::to_string(k); }

namespace {

Matrix make_prototypes(std::size_t count, std::size_t dim, Rng& rng) {
  Matrix p(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    auto row = p.row(i);
    for (;;) {
      for (auto& v : row) v = rng.normal();
      if (count <= dim) {
        for (std::size_t j = 0; j < i; ++j) {
          const auto prev = p.row(j);
          const double d = std::inner_product(row.begin(), row.end(), prev.begin(), 0.0);
          for (std::size_t c = 0; c < dim; ++c) row[c] -= d * prev[c];
        }
      }
      const double n = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
      if (n > 1e-6) {
        for (auto& v : row) v /= n;
        break;
      }
    }
  }
  return p;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb) + 1e-12);
}

std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  rng.shuffle(all.begin(), all.end());
  all.resize(k);
  return all;
}

struct FrameSpec {
  std::vector<std::size_t> concepts;
  std::size_t attribute;
};

class Generator {
 public:
  Generator(const SyntheticSpec& spec, SyntheticData& world, Rng& rng) : spec_(spec), world_(world), rng_(rng) {}

  Example make(const std::string& id) {
    // A few redraws keep the single-word nearest frame away from the answer.
    for (int attempt = 0;; ++attempt) {
      Example ex = draw(id);
      if (spec_.arity < 2 || spec_.task != TaskKind::kOpenEnded || attempt >= 50) return ex;
      if (nearest_word_frame(ex) != answer_frame_) return ex;
    }
  }

 private:
  Example draw(const std::string& id) {
    const std::size_t r = spec_.arity;
    // words[0..r) form the composition; words[r] is the extra concept.
    const std::size_t n_words = r >= 2 ? r + 1 : r;
    const std::vector<std::size_t> words = sample_distinct(spec_.n_concepts, n_words, rng_);

    // Logical node k + 1 is words[k]; node 0 is the question word.
    std::vector<std::size_t> logical_head(n_words);
    for (std::size_t k = 0; k < n_words; ++k) logical_head[k] = (k == 0 || k == r) ? 0 : 1 + rng_.below(k);
    std::vector<std::size_t> position(n_words);
    std::iota(position.begin(), position.end(), 2);
    rng_.shuffle(position.begin(), position.end());
    std::vector<Token> tokens(n_words + 1);
    tokens[0] = {1, std::string(kQuestionWord), 0, "root"};
    for (std::size_t k = 0; k < n_words; ++k) {
      Token& t = tokens[position[k] - 1];
      t.index = position[k];
      t.form = concept_token(words[k]);
      t.head = logical_head[k] == 0 ? 1 : position[logical_head[k] - 1];
      t.deprel = logical_head[k] == 0 ? "nsubj" : "nmod";
    }
    const std::size_t composition_head = position[0];

    std::vector<std::size_t> others;
    for (std::size_t c = 0; c < spec_.n_concepts; ++c) {
      if (std::find(words.begin(), words.end(), c) == words.end()) others.push_back(c);
    }
    // Attribute 0 of `attrs` is the answer; the rest go to the other subsets.
    const std::vector<std::size_t> attrs = sample_distinct(spec_.n_attributes, n_words, rng_);
    const std::size_t answer_attr = attrs[0];

    std::vector<FrameSpec> frames;
    std::size_t n_answer_frames = 1;
    if (spec_.task == TaskKind::kCount) {
      const std::size_t room = spec_.frames_per_video - (n_words - r);
      n_answer_frames = rng_.below(std::min<std::size_t>(room, kMaxCount) + 1);
    }
    const std::vector<std::size_t> composition(words.begin(), words.begin() + r);
    for (std::size_t i = 0; i < n_answer_frames; ++i) {
      const std::size_t attr = spec_.task == TaskKind::kCount ? rng_.below(spec_.n_attributes) : answer_attr;
      frames.push_back({composition, attr});
    }
    if (r >= 2) {
      // Subset that swaps composition member m for the extra concept.
      for (std::size_t m = 0; m < r; ++m) {
        std::vector<std::size_t> subset = composition;
        subset[m] = words[r];
        frames.push_back({subset, attrs[m + 1]});
      }
    }
    while (frames.size() < spec_.frames_per_video) {
      std::vector<std::size_t> filler;
      for (std::size_t c : sample_distinct(others.size(), r, rng_)) filler.push_back(others[c]);
      frames.push_back({filler, rng_.below(spec_.n_attributes)});
    }

    std::vector<std::size_t> order(frames.size());
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order.begin(), order.end());

    Example ex;
    ex.id = id;
    ex.task = spec_.task;
    ex.frames = Matrix(frames.size(), spec_.dim);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const FrameSpec& fs = frames[order[pos]];
      if (order[pos] == 0) answer_frame_ = pos;
      auto row = ex.frames.row(pos);
      for (std::size_t c : fs.concepts) add(row, world_.concept_prototypes.row(c));
      add(row, world_.attribute_prototypes.row(fs.attribute));
      for (auto& v : row) v += spec_.noise * rng_.normal();
    }
    const std::size_t n_clips = (frames.size() + spec_.clip_length - 1) / spec_.clip_length;
    ex.clips = Matrix(n_clips, spec_.dim);
    for (std::size_t c = 0; c < n_clips; ++c) {
      const std::size_t begin = c * spec_.clip_length;
      const std::size_t end = std::min(frames.size(), begin + spec_.clip_length);
      auto row = ex.clips.row(c);
      for (std::size_t f = begin; f < end; ++f) add(row, ex.frames.row(f));
      for (auto& v : row) v /= static_cast<double>(end - begin);
    }

    switch (spec_.task) {
      case TaskKind::kOpenEnded: {
        DependencyTree tree = DependencyTree::from_tokens(tokens);
        Matrix emb = world_.table.embed(tree);
        ex.questions.emplace_back(std::move(tree), std::move(emb));
        ex.answer = answer_attr;
        break;
      }
      case TaskKind::kCount: {
        DependencyTree tree = DependencyTree::from_tokens(tokens);
        Matrix emb = world_.table.embed(tree);
        ex.questions.emplace_back(std::move(tree), std::move(emb));
        ex.count = static_cast<double>(n_answer_frames);
        break;
      }
      case TaskKind::kMultipleChoice: {
        std::vector<std::size_t> cands{answer_attr};
        for (std::size_t a : sample_distinct(spec_.n_attributes, spec_.n_attributes, rng_)) {
          if (cands.size() == spec_.n_choices) break;
          if (a != answer_attr) cands.push_back(a);
        }
        rng_.shuffle(cands.begin(), cands.end());
        for (std::size_t i = 0; i < cands.size(); ++i) {
          std::vector<Token> seq = tokens;
          Token t;
          t.index = n_words + 2;
          t.form = attribute_token(cands[i]);
          t.head = composition_head;
          t.deprel = "amod";
          seq.push_back(std::move(t));
          DependencyTree tree = DependencyTree::from_tokens(std::move(seq));
          Matrix emb = world_.table.embed(tree);
          ex.questions.emplace_back(std::move(tree), std::move(emb));
          if (cands[i] == answer_attr) ex.answer = i;
        }
        break;
      }
    }
    return ex;
  }

  static void add(std::span<double> dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  const SyntheticSpec& spec_;
  SyntheticData& world_;
  Rng& rng_;
  std::size_t answer_frame_ = 0;
};

std::size_t argmax_cosine(const Matrix& frames, std::span<const double> query, double* best_out = nullptr) {
  std::size_t best = 0;
  double best_cos = -2.0;
  for (std::size_t f = 0; f < frames.rows(); ++f) {
    const double c = cosine(query, frames.row(f));
    if (c > best_cos) {
      best_cos = c;
      best = f;
    }
  }
  if (best_out) *best_out = best_cos;
  return best;
}

}  // namespace

SyntheticData synth_generate(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = Rng(seed).substream("data");

  SyntheticData world;
  const Matrix protos = make_prototypes(spec.n_concepts + spec.n_attributes + 1, spec.dim, rng);
  world.concept_prototypes = Matrix(spec.n_concepts, spec.dim);
  world.attribute_prototypes = Matrix(spec.n_attributes, spec.dim);
  world.table = EmbeddingTable(spec.dim);
  for (std::size_t k = 0; k < spec.n_concepts; ++k) {
    std::copy_n(protos.row(k).begin(), spec.dim, world.concept_prototypes.row(k).begin());
    world.table.set(concept_token(k), protos.row(k));
  }
  std::vector<std::string> answers;
  for (std::size_t k = 0; k < spec.n_attributes; ++k) {
    std::copy_n(protos.row(spec.n_concepts + k).begin(), spec.dim, world.attribute_prototypes.row(k).begin());
    world.table.set(attribute_token(k), protos.row(spec.n_concepts + k));
    answers.push_back(attribute_token(k));
  }
  world.answers = AnswerVocab(std::move(answers));
  // The question word never appears in a video.
  world.table.set(std::string(kQuestionWord), protos.row(spec.n_concepts + spec.n_attributes));

  Generator gen(spec, world, rng);
  for (std::size_t i = 0; i < spec.n_train; ++i) world.train.push_back(gen.make("train" + std::to_string(i)));
  for (std::size_t i = 0; i < spec.n_test; ++i) world.test.push_back(gen.make("test" + std::to_string(i)));
  return world;
}

std::size_t decode_attribute(const SyntheticData& world, std::span<const double> frame) {
  std::size_t best = 0;
  double best_dot = -1e300;
  for (std::size_t a = 0; a < world.attribute_prototypes.rows(); ++a) {
    const auto p = world.attribute_prototypes.row(a);
    const double d = std::inner_product(p.begin(), p.end(), frame.begin(), 0.0);
    if (d > best_dot) {
      best_dot = d;
      best = a;
    }
  }
  return best;
}

std::size_t nearest_word_frame(const Example& ex) {
  const Matrix& q = ex.questions.front().embeddings;
  std::size_t best = 0;
  double best_cos = -2.0;
  for (std::size_t w = 0; w < q.rows(); ++w) {
    double c = 0;
    const std::size_t f = argmax_cosine(ex.frames, q.row(w), &c);
    if (c > best_cos) {
      best_cos = c;
      best = f;
    }
  }
  return best;
}

std::size_t nearest_composition_frame(const Example& ex) {
  const QuestionInput& q = ex.questions.front();
  const TokenIndex root = q.tree.root();
  const NodeSet* best = nullptr;
  for (const NodeSet& e : q.graph.edges()) {
    if (std::find(e.begin(), e.end(), root) != e.end()) continue;
    if (!best || e.size() > best->size()) best = &e;
  }
  std::vector<double> comp(q.embeddings.cols(), 0.0);
  for (TokenIndex v : best ? *best : NodeSet{root}) {
    for (std::size_t c = 0; c < comp.size(); ++c) comp[c] += q.embeddings(v - 1, c);
  }
  return argmax_cosine(ex.frames, comp);
}

namespace {

template <typename Pick>
double oracle_accuracy(const SyntheticData& world, const Dataset& data, Pick pick) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Example& ex : data) {
    if (ex.task != TaskKind::kOpenEnded) throw Error("oracle accuracy is defined for open-ended examples only");
    if (decode_attribute(world, ex.frames.row(pick(ex))) == ex.answer) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace

double word_level_baseline_accuracy(const SyntheticData& world, const Dataset& data) {
  return oracle_accuracy(world, data, nearest_word_frame);
}

double composition_oracle_accuracy(const SyntheticData& world, const Dataset& data) {
  return oracle_accuracy(world, data, nearest_composition_frame);
}

void write_synthetic(const std::string& dir, const SyntheticData& world) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_dataset(dir, "train", world.train, "embeddings.txt", &world.answers);
  write_dataset(dir, "test", world.test, "embeddings.txt", &world.answers);
  std::ofstream emb(fs::path(dir) / "embeddings.txt", std::ios::trunc);
  emb << world.table.to_text();
  std::ofstream ans(fs::path(dir) / "answers.txt", std::ios::trunc);
  ans << world.answers.to_text();
  if (!emb || !ans) throw LoadError("cannot write synthetic dataset to '" + dir + "'");
}

}  // namespace scan
