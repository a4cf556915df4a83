// Copyright 2026 The scanqa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace scan::num {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of `data`; throws ShapeError when the size does not match.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Like the data constructor but also rejects NaN and Inf entries.
  static Matrix checked(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool all_finite() const noexcept;
  /// Throws ShapeError naming `what` if any entry is NaN or Inf.
  void require_finite(std::string_view what) const;

  void fill(double v);
  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
double sum(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
std::vector<double> row_sums(const Matrix& a);
std::vector<double> col_sums(const Matrix& a);

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view op);

// Elementary layers. The autodiff ops in autodiff.hpp reuse these for their
// forward pass.

Matrix matmul(const Matrix& a, const Matrix& b);
/// Softmax over each row with max subtraction.
Matrix row_softmax(const Matrix& a);
Matrix row_log_softmax(const Matrix& a);
/// Per-row standardization followed by `gain`/`bias` (both 1 x cols).
Matrix layer_norm(const Matrix& a, const Matrix& gain, const Matrix& bias, double eps);
Matrix leaky_relu(const Matrix& a, double slope);

}  // namespace scan::num
