// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CoNLL-U, embedding tables, config files).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  explicit ParseError(const std::string& message) : Error(message) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

  /// Same error with `source` (usually a file name) prepended.
  ParseError within(const std::string& source) const {
    ParseError e(source + ": " + what());
    e.line_ = line_;
    return e;
  }

 private:
  std::size_t line_ = 0;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Missing files, dimension mismatches and other dataset problems.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside an iterative solver.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range index into a tree or hypergraph.
class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or parameters during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace scan
