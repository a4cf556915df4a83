// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#include "scan/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scan/errors.hpp"

namespace scan {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean '" + std::string(value) + "' for " + std::string(key));
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FusionOptions TrainConfig::fusion() const {
  FusionOptions o;
  o.ot_mode = ot_mode;
  o.syntax_mode = syntax_mode;
  o.ot_iters = ot_iters;
  o.rescale_alignment = rescale_alignment;
  o.alignment_temperature = alignment_temperature;
  o.use_frames = use_frames;
  o.use_clips = use_clips;
  o.ln_eps = ln_eps;
  return o;
}

void TrainConfig::validate() const {
  if (dims.d_w < 1 || dims.d_v < 1 || dims.d < 1 || dims.d_o < 1) throw ConfigError("dimensions must be >= 1");
  if (blocks < 1) throw ConfigError("blocks must be >= 1");
  if (ot_iters < 1) throw ConfigError("ot_iters must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope must lie in (0, 1)");
  if (!(ln_eps > 0.0)) throw ConfigError("ln_eps must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "d_w",       "d_v",          "d",         "d_o",       "blocks",        "ot_iters",
      "lr",        "epochs",       "batch_size", "seed",     "lambda",        "ot_mode",
      "syntax_mode", "use_frames", "use_clips", "optimizer", "momentum",      "rescale_alignment",
      "alignment_temperature", "context_encoder", "leaky_slope", "ln_eps", "grad_clip"};
  return keys;
}

void set_config_value(TrainConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "d_w") c.dims.d_w = parse_number<std::size_t>(key, value);
  else if (key == "d_v") c.dims.d_v = parse_number<std::size_t>(key, value);
  else if (key == "d") c.dims.d = parse_number<std::size_t>(key, value);
  else if (key == "d_o") c.dims.d_o = parse_number<std::size_t>(key, value);
  else if (key == "blocks") c.blocks = parse_number<std::size_t>(key, value);
  else if (key == "ot_iters") c.ot_iters = parse_number<int>(key, value);
  else if (key == "lr") c.lr = parse_number<double>(key, value);
  else if (key == "epochs") c.epochs = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "lambda") c.lambda = parse_number<double>(key, value);
  else if (key == "ot_mode") {
    if (value == "ot") c.ot_mode = OtMode::kOt;
    else if (value == "dot") c.ot_mode = OtMode::kDot;
    else throw ConfigError("ot_mode must be 'ot' or 'dot'");
  } else if (key == "syntax_mode") {
    if (value == "hypergraph") c.syntax_mode = SyntaxMode::kHypergraph;
    else if (value == "word-level" || value == "word") c.syntax_mode = SyntaxMode::kWordLevel;
    else throw ConfigError("syntax_mode must be 'hypergraph' or 'word-level'");
  } else if (key == "use_frames") c.use_frames = parse_bool(key, value);
  else if (key == "use_clips") c.use_clips = parse_bool(key, value);
  else if (key == "optimizer") {
    if (value == "sgd") c.optimizer = OptimizerKind::kSgd;
    else if (value == "momentum") c.optimizer = OptimizerKind::kMomentum;
    else if (value == "adam") c.optimizer = OptimizerKind::kAdam;
    else throw ConfigError("optimizer must be 'sgd', 'momentum' or 'adam'");
  } else if (key == "momentum") c.momentum = parse_number<double>(key, value);
  else if (key == "rescale_alignment") c.rescale_alignment = parse_bool(key, value);
  else if (key == "alignment_temperature") c.alignment_temperature = parse_number<double>(key, value);
  else if (key == "context_encoder") c.context_encoder = parse_bool(key, value);
  else if (key == "leaky_slope") c.leaky_slope = parse_number<double>(key, value);
  else if (key == "ln_eps") c.ln_eps = parse_number<double>(key, value);
  else if (key == "grad_clip") c.grad_clip = parse_number<double>(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  TrainConfig c = std::move(base);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    try {
      set_config_value(c, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return c;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const ParseError& e) {
    throw e.within(path);
  }
}

void apply_environment(TrainConfig& config) {
  if (const char* s = std::getenv("SCAN_SEED"); s != nullptr && *s != '\0') {
    set_config_value(config, "seed", s);
  }
}

std::string to_string(OtMode mode) { return mode == OtMode::kOt ? "ot" : "dot"; }
std::string to_string(SyntaxMode mode) { return mode == SyntaxMode::kHypergraph ? "hypergraph" : "word-level"; }
std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
  }
  return "momentum";
}

std::string config_to_text(const TrainConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::string out;
  auto line = [&out](const char* k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
  line("d_w", std::to_string(c.dims.d_w));
  line("d_v", std::to_string(c.dims.d_v));
  line("d", std::to_string(c.dims.d));
  line("d_o", std::to_string(c.dims.d_o));
  line("blocks", std::to_string(c.blocks));
  line("ot_iters", std::to_string(c.ot_iters));
  line("lr", fmt_double(c.lr));
  line("epochs", std::to_string(c.epochs));
  line("batch_size", std::to_string(c.batch_size));
  line("seed", std::to_string(c.seed));
  line("lambda", fmt_double(c.lambda));
  line("ot_mode", to_string(c.ot_mode));
  line("syntax_mode", to_string(c.syntax_mode));
  line("use_frames", b(c.use_frames));
  line("use_clips", b(c.use_clips));
  line("optimizer", to_string(c.optimizer));
  line("momentum", fmt_double(c.momentum));
  line("rescale_alignment", b(c.rescale_alignment));
  line("alignment_temperature", fmt_double(c.alignment_temperature));
  line("context_encoder", b(c.context_encoder));
  line("leaky_slope", fmt_double(c.leaky_slope));
  line("ln_eps", fmt_double(c.ln_eps));
  line("grad_clip", fmt_double(c.grad_clip));
  return out;
}

}  // namespace scan
