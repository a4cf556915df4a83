// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/fusion.hpp"

#include <cmath>
#include <optional>

#include "scan/errors.hpp"
#include "scan/init.hpp"

namespace scan {

using num::Matrix;
using num::Parameter;
using num::Var;

namespace {

LayerNormParams make_ln(const std::string& name, std::size_t width) {
  return {Parameter(name + ".gain", Matrix(1, width, 1.0)), Parameter(name + ".bias", Matrix(1, width, 0.0))};
}

Var p(Var anchor, Parameter& param) { return anchor.tape->param(param); }

Var ln(Var x, LayerNormParams& params, const FusionOptions& opts) {
  return num::layer_norm(x, p(x, params.gain), p(x, params.bias), opts.ln_eps);
}

}  // namespace

void BlockParams::for_each(const std::function<void(Parameter&)>& fn) {
  for (Parameter* q : {&gather, &proj.text, &proj.frame, &proj.clip, &clip_to_edge, &frame_to_edge, &edge_self,
                       &edge_to_frame, &frame_self, &edge_to_clip, &clip_self, &edge_out, &frame_out, &clip_out,
                       &scatter}) {
    fn(*q);
  }
  for (LayerNormParams* l :
       {&ln_edge_influence, &ln_frame_influence, &ln_clip_influence, &ln_edge, &ln_frame, &ln_clip}) {
    fn(l->gain);
    fn(l->bias);
  }
}

BlockParams make_block_params(const ModelDims& dims, Rng& rng, const std::string& prefix) {
  const auto [dw, dv, d, d_o] = dims;
  (void)d_o;
  BlockParams b;
  b.gather = xavier_param(prefix + "W", dw, dw, rng);
  b.proj.text = xavier_param(prefix + "T_x", dw, d, rng);
  b.proj.frame = xavier_param(prefix + "T_f", dv, d, rng);
  b.proj.clip = xavier_param(prefix + "T_m", dv, d, rng);
  b.clip_to_edge = xavier_param(prefix + "W_xm", dv, d, rng);
  b.frame_to_edge = xavier_param(prefix + "W_xf", dv, d, rng);
  b.edge_self = xavier_param(prefix + "W_x", dw, d, rng);
  b.edge_to_frame = xavier_param(prefix + "W_fx", dw, d, rng);
  b.frame_self = xavier_param(prefix + "W_f", dv, d, rng);
  b.edge_to_clip = xavier_param(prefix + "W_mx", dw, d, rng);
  b.clip_self = xavier_param(prefix + "W_m", dv, d, rng);
  b.edge_out = xavier_param(prefix + "W_v2x", d, dw, rng);
  b.frame_out = xavier_param(prefix + "W_x2f", d, dv, rng);
  b.clip_out = xavier_param(prefix + "W_x2m", d, dv, rng);
  b.scatter = xavier_param(prefix + "W_tilde", dw, dw, rng);
  b.ln_edge_influence = make_ln(prefix + "ln_v2x", d);
  b.ln_frame_influence = make_ln(prefix + "ln_x2f", d);
  b.ln_clip_influence = make_ln(prefix + "ln_x2m", d);
  b.ln_edge = make_ln(prefix + "ln_x", dw);
  b.ln_frame = make_ln(prefix + "ln_f", dv);
  b.ln_clip = make_ln(prefix + "ln_m", dv);
  return b;
}

void ContextEncoderParams::for_each(const std::function<void(Parameter&)>& fn) {
  fn(fwd_in);
  fn(fwd_rec);
  fn(bwd_in);
  fn(bwd_rec);
}

ContextEncoderParams make_context_encoder(std::size_t d_w, Rng& rng) {
  return {xavier_param("ctx.fwd_in", d_w, d_w, rng), xavier_param("ctx.fwd_rec", d_w, d_w, rng),
          xavier_param("ctx.bwd_in", d_w, d_w, rng), xavier_param("ctx.bwd_rec", d_w, d_w, rng)};
}

Var context_encode(Var q, ContextEncoderParams& params) {
  const std::size_t n = q.rows();
  const Var u_f = p(q, params.fwd_in), v_f = p(q, params.fwd_rec);
  const Var u_b = p(q, params.bwd_in), v_b = p(q, params.bwd_rec);
  std::vector<Var> fwd(n), bwd(n);
  for (std::size_t t = 0; t < n; ++t) {
    Var pre = num::matmul(num::slice_rows(q, t, 1), u_f);
    if (t > 0) pre = num::add(pre, num::matmul(fwd[t - 1], v_f));
    fwd[t] = num::tanh(pre);
  }
  for (std::size_t t = n; t-- > 0;) {
    Var pre = num::matmul(num::slice_rows(q, t, 1), u_b);
    if (t + 1 < n) pre = num::add(pre, num::matmul(bwd[t + 1], v_b));
    bwd[t] = num::tanh(pre);
  }
  const Var h = num::affine(num::add(num::concat_rows(fwd), num::concat_rows(bwd)), 0.5);
  return num::add(q, h);
}

Var hyperedge_repr(const SyntacticHypergraph& graph, Var q, Var w) {
  if (graph.n_nodes() != q.rows()) {
    throw ShapeError("hyperedge_repr: hypergraph has " + std::to_string(graph.n_nodes()) + " nodes but Q has " +
                     std::to_string(q.rows()) + " rows");
  }
  const Var gather = q.tape->constant(graph.edge_mean_operator());
  return num::matmul(num::matmul(gather, q), w);
}

Var alignment(Var x, Var visual, Var t_x, Var t_v, const FusionOptions& opts) {
  if (opts.ot_mode == OtMode::kDot) return dot_align(x, visual, t_x, t_v);
  return align(x, visual, t_x, t_v, opts.ot_iters);
}

Var alignment_logits(Var g, const FusionOptions& opts) {
  double scale = opts.alignment_temperature;
  if (opts.rescale_alignment) {
    const double ns = static_cast<double>(g.rows());
    const double nv = static_cast<double>(g.cols());
    scale *= opts.ot_mode == OtMode::kOt ? ns * nv : nv;
  }
  return scale == 1.0 ? g : num::affine(g, scale);
}

Var video_to_hyperedge(Var x, Var f, Var m, Var g_xf, Var g_xm, BlockParams& bp, const FusionOptions& opts) {
  Var acc = num::matmul(x, p(x, bp.edge_self));
  if (g_xm.valid()) {
    if (g_xm.rows() != x.rows() || g_xm.cols() != m.rows()) throw ShapeError("video_to_hyperedge: G_xm shape");
    const Var attn = num::row_softmax(alignment_logits(g_xm, opts));
    acc = num::add(acc, num::matmul(num::matmul(attn, m), p(x, bp.clip_to_edge)));
  }
  if (g_xf.valid()) {
    if (g_xf.rows() != x.rows() || g_xf.cols() != f.rows()) throw ShapeError("video_to_hyperedge: G_xf shape");
    const Var attn = num::row_softmax(alignment_logits(g_xf, opts));
    acc = num::add(acc, num::matmul(num::matmul(attn, f), p(x, bp.frame_to_edge)));
  }
  return ln(acc, bp.ln_edge_influence, opts);
}

namespace {

Var edge_to_visual(Var x, Var v, Var g, Parameter& w_edge, Parameter& w_self, LayerNormParams& norm,
                   const FusionOptions& opts, const char* what) {
  if (g.rows() != x.rows() || g.cols() != v.rows()) throw ShapeError(std::string(what) + ": alignment shape");
  const Var attn = num::row_softmax(num::transpose(alignment_logits(g, opts)));
  const Var mixed = num::matmul(num::matmul(attn, x), p(x, w_edge));
  return ln(num::add(mixed, num::matmul(v, p(x, w_self))), norm, opts);
}

}  // namespace

Var hyperedge_to_frame(Var x, Var f, Var g_xf, BlockParams& bp, const FusionOptions& opts) {
  return edge_to_visual(x, f, g_xf, bp.edge_to_frame, bp.frame_self, bp.ln_frame_influence, opts,
                        "hyperedge_to_frame");
}

Var hyperedge_to_clip(Var x, Var m, Var g_xm, BlockParams& bp, const FusionOptions& opts) {
  return edge_to_visual(x, m, g_xm, bp.edge_to_clip, bp.clip_self, bp.ln_clip_influence, opts,
                        "hyperedge_to_clip");
}

ResidualOut residual_update(Var x, Var f, Var m, Var x_inf, Var f_inf, Var m_inf, BlockParams& bp,
                            const FusionOptions& opts) {
  ResidualOut out{x, f, m};
  out.x = ln(num::add(num::matmul(x_inf, p(x, bp.edge_out)), x), bp.ln_edge, opts);
  if (f_inf.valid()) out.f = ln(num::add(num::matmul(f_inf, p(x, bp.frame_out)), f), bp.ln_frame, opts);
  if (m_inf.valid()) out.m = ln(num::add(num::matmul(m_inf, p(x, bp.clip_out)), m), bp.ln_clip, opts);
  return out;
}

Var node_update(const SyntacticHypergraph& graph, Var x_tilde, Var w_tilde) {
  if (graph.n_edges() != x_tilde.rows()) throw ShapeError("node_update: edge count differs from X~ rows");
  const Var scatter = x_tilde.tape->constant(graph.node_mean_operator());
  return num::matmul(num::matmul(scatter, x_tilde), w_tilde);
}

BundleVars block_forward(const BundleVars& in, const SyntacticHypergraph& graph, BlockParams& bp,
                         const FusionOptions& opts, BlockTrace* trace) {
  std::optional<SyntacticHypergraph> word_level;
  if (opts.syntax_mode == SyntaxMode::kWordLevel) word_level.emplace(identity_hypergraph(in.q.rows()));
  const SyntacticHypergraph& g = word_level ? *word_level : graph;

  const Var x = hyperedge_repr(g, in.q, p(in.q, bp.gather));
  const Var t_x = p(x, bp.proj.text);
  Var g_xf, g_xm;
  if (opts.use_frames) g_xf = alignment(x, in.f, t_x, p(x, bp.proj.frame), opts);
  if (opts.use_clips) g_xm = alignment(x, in.m, t_x, p(x, bp.proj.clip), opts);

  const Var x_inf = video_to_hyperedge(x, in.f, in.m, g_xf, g_xm, bp, opts);
  Var f_inf, m_inf;
  if (opts.use_frames) f_inf = hyperedge_to_frame(x, in.f, g_xf, bp, opts);
  if (opts.use_clips) m_inf = hyperedge_to_clip(x, in.m, g_xm, bp, opts);

  const ResidualOut r = residual_update(x, in.f, in.m, x_inf, f_inf, m_inf, bp, opts);
  if (trace) {
    if (g_xf.valid()) trace->g_xf = g_xf.value();
    if (g_xm.valid()) trace->g_xm = g_xm.value();
    trace->edges = x.value();
  }
  return {node_update(g, r.x, p(x, bp.scatter)), r.f, r.m};
}

BundleVars stack_forward(const BundleVars& in, const SyntacticHypergraph& graph, std::vector<BlockParams>& blocks,
                         const FusionOptions& opts, std::vector<BlockTrace>* trace) {
  if (blocks.empty()) throw ShapeError("stack_forward: at least one block is required");
  if (trace) trace->assign(blocks.size(), {});
  BundleVars cur = in;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    cur = block_forward(cur, graph, blocks[l], opts, trace ? &(*trace)[l] : nullptr);
  }
  return cur;
}

}  // namespace scan
