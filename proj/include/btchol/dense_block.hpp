#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "btchol/error.hpp"

namespace btchol {

template <typename T>
concept Scalar = std::same_as<T, float> || std::same_as<T, double>;

/// Dense rows x cols block, row-major (element (r, c) at data[r * cols + c]).
///
/// Triangular results are stored full with the strictly-upper part set to
/// exact zeros.
template <Scalar T>
class DenseBlock {
public:
  using value_type = T;

  DenseBlock() = default;
  DenseBlock(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  DenseBlock(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw ShapeMismatch("DenseBlock: data length does not match rows*cols");
  }

  /// Row-major nested initializer, e.g. {{4, 2}, {2, 5}}.
  DenseBlock(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_)
        throw ShapeMismatch("DenseBlock: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static DenseBlock zeros(std::size_t rows, std::size_t cols) { return DenseBlock(rows, cols); }
  static DenseBlock identity(std::size_t n) {
    DenseBlock b(n, n);
    for (std::size_t i = 0; i < n; ++i)
      b(i, i) = T(1);
    return b;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  T* row(std::size_t r) noexcept { return data_.data() + r * cols_; }
  const T* row(std::size_t r) const noexcept { return data_.data() + r * cols_; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  void set_zero() noexcept { std::fill(data_.begin(), data_.end(), T(0)); }

  DenseBlock transposed() const {
    DenseBlock t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        t(c, r) = (*this)(r, c);
    return t;
  }

  bool is_lower_triangular() const noexcept {
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = r + 1; c < cols_; ++c)
        if ((*this)(r, c) != T(0))
          return false;
    return true;
  }

  friend bool operator==(const DenseBlock& a, const DenseBlock& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <Scalar T>
double frobenius_norm(const DenseBlock<T>& b) {
  double s = 0.0;
  for (T v : b.data())
    s += double(v) * double(v);
  return std::sqrt(s);
}

template <Scalar T>
double frobenius_distance(const DenseBlock<T>& a, const DenseBlock<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch("frobenius_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = double(a.data()[k]) - double(b.data()[k]);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Plain product a * b (test and verification helper, not metered).
template <Scalar T>
DenseBlock<T> multiply(const DenseBlock<T>& a, const DenseBlock<T>& b) {
  if (a.cols() != b.rows())
    throw ShapeMismatch("multiply: inner dimensions differ");
  DenseBlock<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j)
        c(i, j) += aik * b(k, j);
    }
  return c;
}

} // namespace btchol
