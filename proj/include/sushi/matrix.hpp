#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sushi/rational.hpp"

namespace sushi {

/// Small dense row-major matrix; T is double or Rat.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: shape mismatch");
    Matrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k)
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += a(i, k) * b(k, j);
    return out;
  }

  std::vector<T> apply(const std::vector<T>& v) const {
    if (v.size() != cols_) throw std::invalid_argument("matrix-vector product: shape mismatch");
    std::vector<T> out(rows_, T(0));
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out[i] += (*this)(i, j) * v[j];
    return out;
  }

  /// Columns that are pivots of the row echelon form; the others depend on
  /// earlier columns. Exact for Rat.
  std::vector<std::size_t> pivot_columns() const {
    Matrix m = *this;
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols_ && row < rows_; ++col) {
      std::optional<std::size_t> best;
      for (std::size_t r = row; r < rows_; ++r) {
        if (is_zero(m(r, col))) continue;
        if (!best || magnitude(m(r, col)) > magnitude(m(*best, col))) best = r;
      }
      if (!best) continue;
      m.swap_rows(row, *best);
      for (std::size_t r = row + 1; r < rows_; ++r) {
        if (is_zero(m(r, col))) continue;
        T f = m(r, col) / m(row, col);
        for (std::size_t c = col; c < cols_; ++c) m(r, c) -= f * m(row, c);
      }
      pivots.push_back(col);
      ++row;
    }
    return pivots;
  }

  std::size_t rank() const { return pivot_columns().size(); }

  /// Gauss-Jordan inverse with partial pivoting; throws when singular.
  Matrix inverse() const {
    if (rows_ != cols_) throw std::invalid_argument("inverse: matrix is not square");
    const std::size_t n = rows_;
    Matrix a = *this;
    Matrix inv = identity(n);
    for (std::size_t col = 0; col < n; ++col) {
      std::optional<std::size_t> best;
      for (std::size_t r = col; r < n; ++r) {
        if (is_zero(a(r, col))) continue;
        if (!best || magnitude(a(r, col)) > magnitude(a(*best, col))) best = r;
      }
      if (!best) throw std::domain_error("inverse: matrix is singular");
      a.swap_rows(col, *best);
      inv.swap_rows(col, *best);
      T p = a(col, col);
      for (std::size_t c = 0; c < n; ++c) {
        a(col, c) /= p;
        inv(col, c) /= p;
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col || is_zero(a(r, col))) continue;
        T f = a(r, col);
        for (std::size_t c = 0; c < n; ++c) {
          a(r, c) -= f * a(col, c);
          inv(r, c) -= f * inv(col, c);
        }
      }
    }
    return inv;
  }

 private:
  static bool is_zero(const T& v) {
    if constexpr (std::is_same_v<T, double>) {
      return v == 0.0;
    } else {
      return v.sign() == 0;
    }
  }
  static double magnitude(const T& v) {
    if constexpr (std::is_same_v<T, double>) {
      return std::abs(v);
    } else {
      return std::abs(v.to_double());
    }
  }
  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    for (std::size_t c = 0; c < cols_; ++c) std::swap((*this)(a, c), (*this)(b, c));
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

inline Matrix<double> to_double(const Matrix<Rat>& m) {
  Matrix<double> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c).to_double();
  return out;
}

}  // namespace sushi
