// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

// Training configuration. Files are flat "key = value" lines; '#' starts a
// comment. Every key can also be set from the command line, and the SCAN_SEED
// environment variable overrides `seed`.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scan/fusion.hpp"

namespace scan {

enum class OptimizerKind { kSgd, kMomentum, kAdam };

struct TrainConfig {
  ModelDims dims{};
  std::size_t blocks = 1;
  int ot_iters = kDefaultOtIters;
  double lr = 0.01;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double lambda = 1e-4;
  OtMode ot_mode = OtMode::kOt;
  SyntaxMode syntax_mode = SyntaxMode::kHypergraph;
  bool use_frames = true;
  bool use_clips = true;
  OptimizerKind optimizer = OptimizerKind::kMomentum;
  double momentum = 0.9;
  bool rescale_alignment = false;
  double alignment_temperature = 1.0;
  bool context_encoder = false;
  double leaky_slope = 0.01;
  double ln_eps = 1e-5;
  /// Global gradient-norm clip; 0 disables clipping.
  double grad_clip = 0.0;

  FusionOptions fusion() const;
  /// Throws ConfigError when a value is out of range.
  void validate() const;
};

/// Names of every recognised key, in file order.
const std::vector<std::string>& config_keys();

/// Sets one key from its textual value; throws ConfigError for unknown keys
/// or unparsable values.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);

/// Applies the `key = value` lines of `text` on top of `base`.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::string& path, TrainConfig base = {});
/// Applies SCAN_SEED when it is set.
void apply_environment(TrainConfig& config);

std::string config_to_text(const TrainConfig& config);

std::string to_string(OtMode mode);
std::string to_string(SyntaxMode mode);
std::string to_string(OptimizerKind kind);

}  // namespace scan
