// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "scan/autodiff.hpp"
#include "scan/errors.hpp"
#include "scan/fusion.hpp"
#include "scan/gradcheck.hpp"
#include "scan/hypergraph.hpp"
#include "scan/rng.hpp"

using namespace scan;
using num::Matrix;
using num::Tape;
using num::Var;

namespace {

ModelDims tiny() { return ModelDims{4, 5, 3, 3}; }

/// Block with random LN affine terms so the oracle covers them too.
BlockParams random_block(Rng& rng) {
  auto bp = make_block_params(tiny(), rng, "b0");
  for (auto* ln : {&bp.ln_edge_influence, &bp.ln_frame_influence, &bp.ln_clip_influence, &bp.ln_edge,
                   &bp.ln_frame, &bp.ln_clip}) {
    for (double& v : ln->gain.value.data()) v = 1.0 + 0.3 * rng.normal();
    for (double& v : ln->bias.value.data()) v = 0.3 * rng.normal();
  }
  return bp;
}

Matrix ln_oracle(const Matrix& a, const LayerNormParams& p, double eps) {
  Matrix out = oracle::layer_norm(a, eps);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * p.gain.value(0, c) + p.bias.value(0, c);
  }
  return out;
}

Matrix mm(const Matrix& a, const Matrix& b) { return oracle::matmul(a, b); }
Matrix sm(const Matrix& a) { return oracle::softmax(a); }
Matrix tr(const Matrix& a) { return oracle::transpose(a); }
Matrix ad(const Matrix& a, const Matrix& b) { return oracle::add(a, b); }

bool in_convex_hull_box(std::span<const double> row, const std::vector<std::span<const double>>& members) {
  for (std::size_t c = 0; c < row.size(); ++c) {
    double lo = members[0][c], hi = members[0][c];
    for (const auto& m : members) {
      lo = std::min(lo, m[c]);
      hi = std::max(hi, m[c]);
    }
    if (row[c] < lo - 1e-12 || row[c] > hi + 1e-12) return false;
  }
  return true;
}

struct Inputs {
  Matrix q, f, m;
};

Inputs random_inputs(Rng& rng, std::size_t nw = 5, std::size_t nf = 4, std::size_t nc = 3) {
  return {oracle::random_matrix(nw, 4, rng), oracle::random_matrix(nf, 5, rng), oracle::random_matrix(nc, 5, rng)};
}

}  // namespace

TEST_CASE("hyperedge representation cases") {
  Rng rng(1);
  const auto q = oracle::random_matrix(5, 4, rng);
  num::Parameter eye("w", Matrix::identity(4));
  Tape tape;
  const auto t = fixtures::girl_tree();
  const auto g = build_hypergraph(t);
  const auto x = hyperedge_repr(g, tape.constant(q), tape.param(eye)).value();
  std::vector<std::vector<std::size_t>> sets(g.edges().begin(), g.edges().end());
  CHECK(num::max_abs_diff(x, oracle::set_means(sets, q)) <= 1e-12);
  // The last canonical edge is the full tree: the mean of all rows.
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < 5; ++r) mean += q(r, c) / 5.0;
    CHECK(x(6, c) == doctest::Approx(mean).epsilon(1e-14));
  }
  // Singleton {green} is Q row 3.
  for (std::size_t c = 0; c < 4; ++c) CHECK(x(0, c) == q(2, c));
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    std::vector<std::span<const double>> members;
    for (auto v : g.edges()[e]) members.push_back(q.row(v - 1));
    CHECK(in_convex_hull_box(x.row(e), members));
  }
  CHECK_THROWS_AS(hyperedge_repr(g, tape.constant(oracle::random_matrix(4, 4, rng)), tape.param(eye)), ShapeError);
}

TEST_CASE("video to hyperedge cases") {
  Rng rng(2);
  auto bp = random_block(rng);
  const FusionOptions opts;
  const auto in = random_inputs(rng, 3);
  const auto x = oracle::random_matrix(3, 4, rng);
  const auto gxf = oracle::random_matrix(3, 4, rng);
  const auto gxm = oracle::random_matrix(3, 3, rng);
  Tape tape;
  const auto got = video_to_hyperedge(tape.constant(x), tape.constant(in.f), tape.constant(in.m), tape.constant(gxf),
                                      tape.constant(gxm), bp, opts)
                       .value();
  const auto pre = ad(ad(mm(mm(sm(gxm), in.m), bp.clip_to_edge.value),
                           mm(mm(sm(gxf), in.f), bp.frame_to_edge.value)),
                       mm(x, bp.edge_self.value));
  CHECK(num::max_abs_diff(got, ln_oracle(pre, bp.ln_edge_influence, opts.ln_eps)) <= 1e-10);

  SUBCASE("constant alignment mixes uniformly") {
    bp.edge_self.value.fill(0.0);
    bp.clip_to_edge.value.fill(0.0);
    Tape t2;
    const auto r = video_to_hyperedge(t2.constant(x), t2.constant(in.f), t2.constant(in.m),
                                      t2.constant(Matrix(3, 4, 0.25)), t2.constant(gxm), bp, opts)
                       .value();
    Matrix mean(1, 5);
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t c = 0; c < 5; ++c) mean(0, c) += in.f(j, c) / 4.0;
    const auto expect = ln_oracle(mm(mean, bp.frame_to_edge.value), bp.ln_edge_influence, opts.ln_eps);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 3; ++c) CHECK(r(i, c) == doctest::Approx(expect(0, c)).epsilon(1e-10));
  }
  SUBCASE("a dominant alignment entry selects its frame") {
    bp.edge_self.value.fill(0.0);
    bp.clip_to_edge.value.fill(0.0);
    Matrix dom(3, 4);
    for (std::size_t i = 0; i < 3; ++i) dom(i, i) = 80.0;
    Tape t2;
    const auto r = video_to_hyperedge(t2.constant(x), t2.constant(in.f), t2.constant(in.m), t2.constant(dom),
                                      t2.constant(gxm), bp, opts)
                       .value();
    const auto expect = ln_oracle(mm(in.f, bp.frame_to_edge.value), bp.ln_edge_influence, opts.ln_eps);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t c = 0; c < 3; ++c) CHECK(r(i, c) == doctest::Approx(expect(i, c)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(video_to_hyperedge(tape.constant(x), tape.constant(in.f), tape.constant(in.m),
                                     tape.constant(Matrix(2, 4)), tape.constant(gxm), bp, opts),
                  ShapeError);
}

TEST_CASE("hyperedge to frame and clip match the composition oracle") {
  Rng rng(3);
  auto bp = random_block(rng);
  const FusionOptions opts;
  const auto in = random_inputs(rng, 3);
  const auto x = oracle::random_matrix(6, 4, rng);
  const auto gxf = oracle::random_matrix(6, 4, rng);
  const auto gxm = oracle::random_matrix(6, 3, rng);
  Tape tape;
  const auto fr = hyperedge_to_frame(tape.constant(x), tape.constant(in.f), tape.constant(gxf), bp, opts).value();
  const auto cl = hyperedge_to_clip(tape.constant(x), tape.constant(in.m), tape.constant(gxm), bp, opts).value();
  const auto fexp = ln_oracle(ad(mm(mm(sm(tr(gxf)), x), bp.edge_to_frame.value),
                                  mm(in.f, bp.frame_self.value)),
                              bp.ln_frame_influence, opts.ln_eps);
  const auto cexp = ln_oracle(ad(mm(mm(sm(tr(gxm)), x), bp.edge_to_clip.value),
                                  mm(in.m, bp.clip_self.value)),
                              bp.ln_clip_influence, opts.ln_eps);
  CHECK(fr.rows() == 4);
  CHECK(cl.rows() == 3);
  CHECK(num::max_abs_diff(fr, fexp) <= 1e-10);
  CHECK(num::max_abs_diff(cl, cexp) <= 1e-10);

  SUBCASE("constant alignment gives every frame the mean edge") {
    bp.frame_self.value.fill(0.0);
    Tape t2;
    const auto r = hyperedge_to_frame(t2.constant(x), t2.constant(in.f), t2.constant(Matrix(6, 4, 1.0)), bp, opts)
                       .value();
    for (std::size_t j = 1; j < 4; ++j)
      for (std::size_t c = 0; c < 3; ++c) CHECK(r(j, c) == doctest::Approx(r(0, c)).epsilon(1e-12));
  }
}

TEST_CASE("residual update cases") {
  Rng rng(4);
  auto bp = random_block(rng);
  const FusionOptions opts;
  const auto in = random_inputs(rng, 3);
  const auto x = oracle::random_matrix(3, 4, rng);
  const auto xi = oracle::random_matrix(3, 3, rng);
  const auto fi = oracle::random_matrix(4, 3, rng);
  const auto mi = oracle::random_matrix(3, 3, rng);
  {
    Tape tape;
    const auto r = residual_update(tape.constant(x), tape.constant(in.f), tape.constant(in.m), tape.constant(xi),
                                   tape.constant(fi), tape.constant(mi), bp, opts);
    CHECK(num::max_abs_diff(r.x.value(), ln_oracle(ad(mm(xi, bp.edge_out.value), x), bp.ln_edge, opts.ln_eps)) <=
          1e-10);
    CHECK(num::max_abs_diff(r.f.value(),
                            ln_oracle(ad(mm(fi, bp.frame_out.value), in.f), bp.ln_frame, opts.ln_eps)) <= 1e-10);
    CHECK(num::max_abs_diff(r.m.value(), ln_oracle(ad(mm(mi, bp.clip_out.value), in.m), bp.ln_clip, opts.ln_eps)) <=
          1e-10);
  }
  {
    auto zeroed = random_block(rng);
    zeroed.edge_out.value.fill(0.0);
    Tape tape;
    const auto r = residual_update(tape.constant(x), tape.constant(in.f), tape.constant(in.m), tape.constant(xi),
                                   tape.constant(fi), tape.constant(mi), zeroed, opts);
    CHECK(num::max_abs_diff(r.x.value(), ln_oracle(x, zeroed.ln_edge, opts.ln_eps)) <= 1e-12);
  }
  {
    Tape tape;
    const auto r = residual_update(tape.constant(Matrix(3, 4)), tape.constant(in.f), tape.constant(in.m),
                                   tape.constant(xi), tape.constant(fi), tape.constant(mi), bp, opts);
    CHECK(num::max_abs_diff(r.x.value(), ln_oracle(mm(xi, bp.edge_out.value), bp.ln_edge, opts.ln_eps)) <= 1e-12);
  }
}

TEST_CASE("node update cases") {
  const auto g = build_hypergraph(fixtures::girl_tree());
  Rng rng(5);
  const auto xt = oracle::random_matrix(7, 4, rng);
  num::Parameter eye("w", Matrix::identity(4));
  Tape tape;
  const auto q = node_update(g, tape.constant(xt), tape.param(eye)).value();
  // "girl" belongs to edges 4, 5 and 6 in canonical order.
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(q(0, c) == doctest::Approx((xt(4, c) + xt(5, c) + xt(6, c)) / 3.0).epsilon(1e-14));
  }
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<std::span<const double>> members;
    for (std::size_t e = 0; e < 7; ++e) {
      if (g.incidence()(i, e) != 0.0) members.push_back(xt.row(e));
    }
    CHECK(in_convex_hull_box(q.row(i), members));
  }
  const auto single = build_hypergraph(DependencyTree::from_tokens({Token{1, "x", 0, std::nullopt}}));
  const auto one = node_update(single, tape.constant(oracle::random_matrix(1, 4, rng)), tape.param(eye));
  CHECK(one.rows() == 1);
  Matrix uniform(7, 4);
  for (std::size_t e = 0; e < 7; ++e)
    for (std::size_t c = 0; c < 4; ++c) uniform(e, c) = static_cast<double>(c) - 1.5;
  const auto u = node_update(g, tape.constant(uniform), tape.param(eye)).value();
  for (std::size_t i = 1; i < 5; ++i)
    for (std::size_t c = 0; c < 4; ++c) CHECK(u(i, c) == doctest::Approx(u(0, c)).epsilon(1e-14));
  CHECK_THROWS_AS(node_update(g, tape.constant(Matrix(6, 4)), tape.param(eye)), ShapeError);
}

TEST_CASE("block forward keeps shapes and word-level mode uses singleton edges") {
  Rng rng(6);
  auto bp = random_block(rng);
  const auto in = random_inputs(rng);
  const auto g = build_hypergraph(fixtures::girl_tree());
  for (auto syntax : {SyntaxMode::kHypergraph, SyntaxMode::kWordLevel}) {
    for (auto ot : {OtMode::kOt, OtMode::kDot}) {
      FusionOptions opts;
      opts.syntax_mode = syntax;
      opts.ot_mode = ot;
      Tape tape;
      BlockTrace trace;
      const auto out = block_forward({tape.constant(in.q), tape.constant(in.f), tape.constant(in.m)}, g, bp, opts,
                                     &trace);
      CHECK(out.q.rows() == 5);
      CHECK(out.q.cols() == 4);
      CHECK(out.f.rows() == 4);
      CHECK(out.f.cols() == 5);
      CHECK(out.m.rows() == 3);
      CHECK(out.m.cols() == 5);
      const std::size_t ns = syntax == SyntaxMode::kWordLevel ? 5 : 7;
      CHECK(trace.g_xf.rows() == ns);
      CHECK(trace.g_xm.rows() == ns);
      if (syntax == SyntaxMode::kWordLevel) {
        const auto expect = mm(in.q, bp.gather.value);
        CHECK(num::max_abs_diff(trace.edges, expect) <= 1e-12);
      }
    }
  }
}

TEST_CASE("block forward equals the stepwise composition") {
  Rng rng(7);
  auto bp = random_block(rng);
  const auto in = random_inputs(rng);
  const auto g = build_hypergraph(fixtures::girl_tree());
  const FusionOptions opts;
  Tape tape;
  const auto out = block_forward({tape.constant(in.q), tape.constant(in.f), tape.constant(in.m)}, g, bp, opts);

  const auto x = mm(mm(g.edge_mean_operator(), in.q), bp.gather.value);
  const auto gxf = ipot(cost_matrix(x, in.f, bp.proj.text.value, bp.proj.frame.value), opts.ot_iters);
  const auto gxm = ipot(cost_matrix(x, in.m, bp.proj.text.value, bp.proj.clip.value), opts.ot_iters);
  const auto xi = ln_oracle(ad(ad(mm(mm(sm(gxm), in.m), bp.clip_to_edge.value),
                                    mm(mm(sm(gxf), in.f), bp.frame_to_edge.value)),
                                mm(x, bp.edge_self.value)),
                            bp.ln_edge_influence, opts.ln_eps);
  const auto fi = ln_oracle(ad(mm(mm(sm(tr(gxf)), x), bp.edge_to_frame.value),
                                mm(in.f, bp.frame_self.value)),
                            bp.ln_frame_influence, opts.ln_eps);
  const auto mi = ln_oracle(ad(mm(mm(sm(tr(gxm)), x), bp.edge_to_clip.value),
                                mm(in.m, bp.clip_self.value)),
                            bp.ln_clip_influence, opts.ln_eps);
  const auto xt = ln_oracle(ad(mm(xi, bp.edge_out.value), x), bp.ln_edge, opts.ln_eps);
  const auto ft = ln_oracle(ad(mm(fi, bp.frame_out.value), in.f), bp.ln_frame, opts.ln_eps);
  const auto mt = ln_oracle(ad(mm(mi, bp.clip_out.value), in.m), bp.ln_clip, opts.ln_eps);
  const auto qt = mm(mm(g.node_mean_operator(), xt), bp.scatter.value);
  CHECK(num::max_abs_diff(out.q.value(), qt) <= 1e-10);
  CHECK(num::max_abs_diff(out.f.value(), ft) <= 1e-10);
  CHECK(num::max_abs_diff(out.m.value(), mt) <= 1e-10);
}

TEST_CASE("relabeling hyperedges leaves the block output unchanged") {
  // Shuffling the edge order is equivalent to permuting X rows; compare the
  // pipeline on permuted operators against the library.
  Rng rng(8);
  auto bp = random_block(rng);
  const auto in = random_inputs(rng);
  const auto g = build_hypergraph(fixtures::girl_tree());
  const FusionOptions opts;
  Tape tape;
  const auto out = block_forward({tape.constant(in.q), tape.constant(in.f), tape.constant(in.m)}, g, bp, opts);

  std::vector<std::size_t> perm{6, 2, 4, 0, 5, 1, 3};
  Matrix emean(7, 5), nmean(5, 7);
  const auto e0 = g.edge_mean_operator();
  const auto n0 = g.node_mean_operator();
  for (std::size_t e = 0; e < 7; ++e) {
    for (std::size_t i = 0; i < 5; ++i) {
      emean(e, i) = e0(perm[e], i);
      nmean(i, e) = n0(i, perm[e]);
    }
  }
  const auto x = mm(mm(emean, in.q), bp.gather.value);
  const auto gxf = ipot(cost_matrix(x, in.f, bp.proj.text.value, bp.proj.frame.value), opts.ot_iters);
  const auto gxm = ipot(cost_matrix(x, in.m, bp.proj.text.value, bp.proj.clip.value), opts.ot_iters);
  const auto xi = ln_oracle(ad(ad(mm(mm(sm(gxm), in.m), bp.clip_to_edge.value),
                                    mm(mm(sm(gxf), in.f), bp.frame_to_edge.value)),
                                mm(x, bp.edge_self.value)),
                            bp.ln_edge_influence, opts.ln_eps);
  const auto fi = ln_oracle(ad(mm(mm(sm(tr(gxf)), x), bp.edge_to_frame.value),
                                mm(in.f, bp.frame_self.value)),
                            bp.ln_frame_influence, opts.ln_eps);
  const auto xt = ln_oracle(ad(mm(xi, bp.edge_out.value), x), bp.ln_edge, opts.ln_eps);
  const auto ft = ln_oracle(ad(mm(fi, bp.frame_out.value), in.f), bp.ln_frame, opts.ln_eps);
  const auto qt = mm(mm(nmean, xt), bp.scatter.value);
  CHECK(num::max_abs_diff(out.q.value(), qt) <= 1e-10);
  CHECK(num::max_abs_diff(out.f.value(), ft) <= 1e-10);
}

TEST_CASE("stack forward composes blocks and stays finite for depths 1 to 5") {
  Rng rng(9);
  const auto g = build_hypergraph(fixtures::girl_tree());
  const auto in = random_inputs(rng);
  const FusionOptions opts;
  std::vector<BlockParams> two;
  two.push_back(random_block(rng));
  two.push_back(random_block(rng));
  Tape tape;
  const BundleVars start{tape.constant(in.q), tape.constant(in.f), tape.constant(in.m)};
  const auto once = block_forward(start, g, two[0], opts);
  const auto twice = block_forward(once, g, two[1], opts);
  const auto stacked = stack_forward(start, g, two, opts);
  CHECK(num::max_abs_diff(stacked.q.value(), twice.q.value()) == 0.0);
  std::vector<BlockParams> one;
  one.push_back(random_block(rng));
  CHECK(num::max_abs_diff(stack_forward(start, g, one, opts).f.value(), block_forward(start, g, one[0], opts).f.value()) ==
        0.0);
  std::vector<BlockParams> none;
  CHECK_THROWS_AS(stack_forward(start, g, none, opts), ShapeError);

  for (std::size_t l = 1; l <= 5; ++l) {
    std::vector<BlockParams> blocks;
    for (std::size_t k = 0; k < l; ++k) blocks.push_back(make_block_params(tiny(), rng, "b" + std::to_string(k)));
    Tape t;
    std::vector<BlockTrace> trace;
    const auto out = stack_forward({t.constant(in.q), t.constant(in.f), t.constant(in.m)}, g, blocks, opts, &trace);
    CHECK(out.q.value().all_finite());
    CHECK(out.f.value().all_finite());
    CHECK(out.m.value().all_finite());
    CHECK(trace.size() == l);
  }
}

TEST_CASE("layer norm sites are centered") {
  Rng rng(10);
  auto bp = make_block_params(tiny(), rng, "b0");
  const auto in = random_inputs(rng);
  const auto g = build_hypergraph(fixtures::girl_tree());
  Tape tape;
  const auto out = block_forward({tape.constant(in.q), tape.constant(in.f), tape.constant(in.m)}, g, bp, {});
  for (const Matrix* m : {&out.f.value(), &out.m.value()}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      double mu = 0;
      for (double v : m->row(r)) mu += v;
      CHECK(std::abs(mu / m->cols()) <= 1e-9);
    }
  }
}

TEST_CASE("gradient of a block readout matches finite differences") {
  Rng rng(11);
  const auto g = build_hypergraph(fixtures::girl_tree());
  const auto in = random_inputs(rng);
  for (auto ot : {OtMode::kOt, OtMode::kDot}) {
    std::vector<BlockParams> blocks;
    blocks.push_back(random_block(rng));
    blocks.push_back(random_block(rng));
    std::vector<num::Parameter*> params;
    for (auto& b : blocks) b.for_each([&](num::Parameter& p) { params.push_back(&p); });
    FusionOptions opts;
    opts.ot_mode = ot;
    const auto wq = oracle::random_matrix(5, 4, rng);
    const auto wf = oracle::random_matrix(4, 5, rng);
    const auto report = num::finite_diff_check(
        [&](Tape& t) {
          const auto out = stack_forward({t.constant(in.q), t.constant(in.f), t.constant(in.m)}, g, blocks, opts);
          return num::add(num::sum(num::hadamard(out.q, t.constant(wq))), num::sum(num::hadamard(out.f, t.constant(wf))));
        },
        params);
    CAPTURE(report.worst.param);
    CHECK(report.max_rel_err <= 1e-4);
  }
}
