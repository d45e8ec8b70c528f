#pragma once

// Dense row-major matrix of doubles. Deliberately minimal: the pipeline needs
// products, transposed products and norms, not a linear-algebra framework.

#include <cmath>
#include <cstddef>
#include <vector>

#include "tip/errors.hpp"

namespace tip {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

  double* row(std::size_t r) { return v_.data() + r * cols_; }
  const double* row(std::size_t r) const { return v_.data() + r * cols_; }

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

/// a (n x k) * b (k x m) -> n x m. Skips zero entries of `a`, which makes
/// one-hot blocks cheap.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i);
    double* orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * br[j];
    }
  }
  return out;
}

/// a^T (k x n -> from a: n x k) * b (n x m) -> k x m.
inline Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeMismatch("matmul_at: row counts differ");
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* ar = a.row(r);
    const double* br = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double v = ar[i];
      if (v == 0.0) continue;
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += v * br[j];
    }
  }
  return out;
}

/// a (n x k) * b^T (b: m x k) -> n x m.
inline Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeMismatch("matmul_bt: column counts differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += ar[k] * br[k];
      orow[j] = acc;
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace tip
