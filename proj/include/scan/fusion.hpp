// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Cross-modality-aware syntactic hypergraph convolution block.
//
// One block maps {Q, F, M} to {Q~, F~, M~}:
//   X      = De^-1 H^T Q W                          (gather words into edges)
//   G_xf   = OT(X, F),  G_xm = OT(X, M)             (or dot-product attention)
//   X_v->x = LN(sm(G_xm) M W_xm + sm(G_xf) F W_xf + X W_x)
//   F_x->f = LN(sm(G_xf^T) X W_fx + F W_f),  M_x->m likewise
//   X~ = LN(X_v->x W_v->x + X),  F~ = LN(F_x->f W_x->f + F),  M~ likewise
//   Q~     = Dv^-1 H X~ W~                           (scatter edges to words)
// where sm is a row-wise softmax.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scan/autodiff.hpp"
#include "scan/hypergraph.hpp"
#include "scan/otalign.hpp"
#include "scan/rng.hpp"

namespace scan {

struct ModelDims {
  std::size_t d_w = 300;  ///< word embedding width
  std::size_t d_v = 2048;  ///< frame / clip feature width
  std::size_t d = 256;    ///< shared alignment width
  std::size_t d_o = 256;  ///< output width
};

enum class OtMode { kOt, kDot };
enum class SyntaxMode { kHypergraph, kWordLevel };

struct FusionOptions {
  OtMode ot_mode = OtMode::kOt;
  SyntaxMode syntax_mode = SyntaxMode::kHypergraph;
  int ot_iters = kDefaultOtIters;
  /// Multiply alignments by N_s * N_f / (nominal mass) before the softmax,
  /// so that a uniform alignment becomes all-ones. The nominal mass is 1 for
  /// transport plans and N_s for dot-product attention.
  bool rescale_alignment = false;
  /// Extra multiplier applied to the alignment before the softmax.
  double alignment_temperature = 1.0;
  bool use_frames = true;
  bool use_clips = true;
  double ln_eps = 1e-5;
};

struct LayerNormParams {
  num::Parameter gain;
  num::Parameter bias;
};

/// Trainable weights of one block.
struct BlockParams {
  num::Parameter gather;         ///< W    (d_w x d_w)
  ProjectionParams proj;         ///< T_x, T_f, T_m
  num::Parameter clip_to_edge;   ///< W_xm (d_v x d)
  num::Parameter frame_to_edge;  ///< W_xf (d_v x d)
  num::Parameter edge_self;      ///< W_x  (d_w x d)
  num::Parameter edge_to_frame;  ///< W_fx (d_w x d)
  num::Parameter frame_self;     ///< W_f  (d_v x d)
  num::Parameter edge_to_clip;   ///< W_mx (d_w x d)
  num::Parameter clip_self;      ///< W_m  (d_v x d)
  num::Parameter edge_out;       ///< W_v->x (d x d_w)
  num::Parameter frame_out;      ///< W_x->f (d x d_v)
  num::Parameter clip_out;       ///< W_x->m (d x d_v)
  num::Parameter scatter;        ///< W~   (d_w x d_w)
  LayerNormParams ln_edge_influence;   // width d
  LayerNormParams ln_frame_influence;  // width d
  LayerNormParams ln_clip_influence;   // width d
  LayerNormParams ln_edge;             // width d_w
  LayerNormParams ln_frame;            // width d_v
  LayerNormParams ln_clip;             // width d_v

  void for_each(const std::function<void(num::Parameter&)>& fn);
};

/// Xavier-uniform weights, unit LN gains, zero LN biases. Parameter names
/// are prefixed with `prefix` (e.g. "block0.").
BlockParams make_block_params(const ModelDims& dims, Rng& rng, const std::string& prefix);

/// Optional bidirectional recurrent pass that adds sequence context to the
/// word embeddings before the first block: Q + (H_fwd + H_bwd) / 2 with
/// h_t = tanh(q_t U + h_{t-1} V) in each direction.
struct ContextEncoderParams {
  num::Parameter fwd_in;
  num::Parameter fwd_rec;
  num::Parameter bwd_in;
  num::Parameter bwd_rec;

  void for_each(const std::function<void(num::Parameter&)>& fn);
};

ContextEncoderParams make_context_encoder(std::size_t d_w, Rng& rng);
num::Var context_encode(num::Var q, ContextEncoderParams& params);

struct BundleVars {
  num::Var q;
  num::Var f;
  num::Var m;
};

/// Alignment matrices produced inside one block, for diagnostics.
struct BlockTrace {
  num::Matrix g_xf;
  num::Matrix g_xm;
  num::Matrix edges;  ///< X
};

/// X = De^-1 H^T Q W.
num::Var hyperedge_repr(const SyntacticHypergraph& graph, num::Var q, num::Var w);

/// G_xf (or G_xm) per the configured alignment mode, unscaled.
num::Var alignment(num::Var x, num::Var visual, num::Var t_x, num::Var t_v, const FusionOptions& opts);

/// Applies the optional rescale and temperature to an alignment before its
/// row-wise softmax.
num::Var alignment_logits(num::Var g, const FusionOptions& opts);

/// X_v->x. Either alignment may be invalid (default Var) when the
/// corresponding modality is disabled.
num::Var video_to_hyperedge(num::Var x, num::Var f, num::Var m, num::Var g_xf, num::Var g_xm, BlockParams& p,
                            const FusionOptions& opts);
num::Var hyperedge_to_frame(num::Var x, num::Var f, num::Var g_xf, BlockParams& p, const FusionOptions& opts);
num::Var hyperedge_to_clip(num::Var x, num::Var m, num::Var g_xm, BlockParams& p, const FusionOptions& opts);

struct ResidualOut {
  num::Var x;
  num::Var f;
  num::Var m;
};

/// X~, F~, M~. An invalid influence leaves that modality unchanged.
ResidualOut residual_update(num::Var x, num::Var f, num::Var m, num::Var x_inf, num::Var f_inf, num::Var m_inf,
                            BlockParams& p, const FusionOptions& opts);

/// Q~ = Dv^-1 H X~ W~.
num::Var node_update(const SyntacticHypergraph& graph, num::Var x_tilde, num::Var w_tilde);

BundleVars block_forward(const BundleVars& in, const SyntacticHypergraph& graph, BlockParams& p,
                         const FusionOptions& opts, BlockTrace* trace = nullptr);

/// Applies the blocks left to right. Throws ShapeError when `blocks` is empty.
BundleVars stack_forward(const BundleVars& in, const SyntacticHypergraph& graph, std::vector<BlockParams>& blocks,
                         const FusionOptions& opts, std::vector<BlockTrace>* trace = nullptr);

}  // namespace scan
