// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "scan/features.hpp"
#include "scan/rng.hpp"

using namespace scan;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "scanqa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Girl fixture plus a 3-d embedding table and a 4-frame feature container.
struct GirlFiles {
  fixtures::TempDir dir{"cli"};
  std::string conllu, embeddings, frames;
  GirlFiles() {
    conllu = dir.write("q.conllu", fixtures::kGirlConllu);
    embeddings = dir.write("emb.txt", "girl 1 0 0\nin 0 1 0\ngreen 0 0 1\nsitting 1 1 0\non 0 1 1\n");
    Rng rng(1);
    frames = dir.file("f.scnf");
    write_feature_container(frames, oracle::random_matrix(4, 3, rng));
  }
};

}  // namespace

TEST_CASE("build-hypergraph emits the hypergraph json") {
  GirlFiles g;
  const auto r = cli({"build-hypergraph", "--conllu", g.conllu, "--out", g.dir.file("h.json"), "--csv",
                      g.dir.file("h.csv")});
  CHECK(r.code == 0);
  const auto j = json::parse(slurp(g.dir.file("h.json")));
  CHECK(j["n_nodes"] == 5);
  CHECK(j["edges"].size() == 7);
  CHECK(j["edges"][4] == json::array({1, 2, 3}));
  CHECK(j["H"].size() == 5);
  CHECK(j["H"][0].size() == 7);
  CHECK(slurp(g.dir.file("h.csv")).rfind("node,e0,", 0) == 0);
  const auto wl = cli({"build-hypergraph", "--conllu", g.conllu, "--word-level"});
  CHECK(wl.code == 0);
  CHECK(json::parse(wl.out)["edges"].size() == 5);
}

TEST_CASE("gradcheck --dims 4 --seed 7 passes") {
  const auto r = cli({"gradcheck", "--dims", "4", "--seed", "7"});
  const auto j = json::parse(r.out);
  CHECK(j["max_rel_err"].get<double>() <= 1e-4);
  CHECK(r.code == 0);
  CHECK(j["runs"].size() == 9);
  const auto strict = cli({"gradcheck", "--dims", "2", "--seed", "7", "--blocks", "1", "--tolerance", "1e-30"});
  CHECK(strict.code == 1);
}

TEST_CASE("align on the girl fixture emits a unit-mass csv") {
  GirlFiles g;
  for (const char* mode : {"ot", "dot"}) {
    const auto r = cli({"align", "--conllu", g.conllu, "--embeddings", g.embeddings, "--features", g.frames, "--mode",
                        mode, "--csv", g.dir.file("g.csv"), "--out", g.dir.file("g.json")});
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(g.dir.file("g.csv")));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "edge,f0,f1,f2,f3");
    double total = 0;
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
      std::istringstream fields(line);
      std::string cell;
      std::getline(fields, cell, ',');
      while (std::getline(fields, cell, ',')) total += std::stod(cell);
      ++rows;
    }
    CHECK(rows == 7);
    const auto j = json::parse(slurp(g.dir.file("g.json")));
    CHECK(j["n_s"] == 7);
    CHECK(j["n_f"] == 4);
    if (std::string(mode) == "ot") {
      CHECK(std::abs(total - 1.0) <= 1e-6);
    } else {
      CHECK(std::abs(total - 7.0) <= 1e-6);
    }
  }
}

TEST_CASE("usage errors exit 2 and data errors exit 1") {
  GirlFiles g;
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"gradcheck", "--dims", "9"}).code == 2);
  CHECK(cli({"build-hypergraph"}).code == 2);
  CHECK(cli({"inspect"}).code == 2);
  CHECK(cli({"align", "--conllu", g.conllu, "--embeddings", g.embeddings, "--features", g.frames, "--mode", "x"}).code ==
        2);
  CHECK(cli({"build-hypergraph", "--conllu", g.dir.file("missing.conllu")}).code == 1);
  const auto bad = cli({"inspect", "--features", g.embeddings});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("not a feature container") != std::string::npos);
}

TEST_CASE("synth, train, eval and inspect round trip") {
  fixtures::TempDir dir("cli_pipeline");
  const auto data = dir.file("data");
  const auto s = cli({"synth", "--out", data, "--n-train", "12", "--n-test", "6", "--dim", "8", "--concepts", "6",
                      "--attributes", "4", "--seed", "3"});
  REQUIRE(s.code == 0);
  const auto info = json::parse(s.out);
  CHECK(info["train"] == 12);

  const auto cfg = dir.write("c.cfg", "d = 4\nd_o = 4\nepochs = 2\nbatch_size = 4\n");
  const auto t = cli({"train", "--train", data + "/train.jsonl", "--val", data + "/test.jsonl", "--config", cfg,
                      "--out", dir.file("m.json"), "--log", dir.file("log.txt"), "--quiet", "--optimizer", "adam"});
  REQUIRE(t.code == 0);
  CHECK(t.out.empty());
  const auto log = slurp(dir.file("log.txt"));
  CHECK(log.rfind("epoch 1 ", 0) == 0);
  CHECK(log.find("epoch 2 ") != std::string::npos);

  const auto t2 = cli({"train", "--train", data + "/train.jsonl", "--val", data + "/test.jsonl", "--config", cfg,
                       "--log", dir.file("log2.txt"), "--quiet", "--optimizer", "adam"});
  REQUIRE(t2.code == 0);
  CHECK(slurp(dir.file("log2.txt")) == log);

  const auto e = cli({"eval", "--model", dir.file("m.json"), "--data", data + "/test.jsonl", "--entropy"});
  REQUIRE(e.code == 0);
  const auto ej = json::parse(e.out);
  CHECK(ej["n"] == 6);
  CHECK(ej.contains("accuracy"));

  const auto i = cli({"inspect", "--model", dir.file("m.json"), "--manifest", data + "/train.jsonl"});
  REQUIRE(i.code == 0);
  CHECK(json::parse(i.out)["manifest"]["examples"] == 12);

  CHECK(cli({"train", "--train", data + "/train.jsonl", "--blocks", "0"}).code == 2);
  CHECK(cli({"train", "--train", data + "/train.jsonl", "--no_such_key", "1"}).code == 2);
  CHECK(cli({"train", "--train", dir.file("nope.jsonl")}).code == 1);
}
