#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "btchol/dense_block.hpp"

namespace btchol {

/// Symmetric block tridiagonal matrix with N diagonal blocks D_1..D_N (n x n,
/// lower triangle authoritative) and N-1 coupling blocks, where E_i sits at
/// block row i+1, block column i.
///
/// Indices in the public API are 1-based to match the usual block notation;
/// `diag(i)` / `offdiag(i)` accept i in [1, N] / [1, N-1].
template <Scalar T>
class BlockTridiag {
public:
  BlockTridiag() = default;

  BlockTridiag(std::size_t block_size, std::vector<DenseBlock<T>> d, std::vector<DenseBlock<T>> e)
      : n_(block_size), d_(std::move(d)), e_(std::move(e)) {
    if (n_ == 0 || d_.empty())
      throw ShapeMismatch("BlockTridiag: need N >= 1 and n >= 1");
    if (e_.size() + 1 != d_.size())
      throw ShapeMismatch("BlockTridiag: expected N-1 off-diagonal blocks");
    for (const auto& b : d_)
      if (b.rows() != n_ || b.cols() != n_)
        throw ShapeMismatch("BlockTridiag: diagonal block has wrong shape");
    for (const auto& b : e_)
      if (b.rows() != n_ || b.cols() != n_)
        throw ShapeMismatch("BlockTridiag: off-diagonal block has wrong shape");
  }

  static BlockTridiag identity(std::size_t num_blocks, std::size_t block_size) {
    std::vector<DenseBlock<T>> d(num_blocks, DenseBlock<T>::identity(block_size));
    std::vector<DenseBlock<T>> e(num_blocks ? num_blocks - 1 : 0,
                                 DenseBlock<T>::zeros(block_size, block_size));
    return BlockTridiag(block_size, std::move(d), std::move(e));
  }

  std::size_t block_size() const noexcept { return n_; }
  std::size_t num_blocks() const noexcept { return d_.size(); }
  std::size_t dim() const noexcept { return n_ * d_.size(); }

  const DenseBlock<T>& diag(std::size_t i) const { return d_.at(i - 1); }
  DenseBlock<T>& diag(std::size_t i) { return d_.at(i - 1); }
  const DenseBlock<T>& offdiag(std::size_t i) const { return e_.at(i - 1); }
  DenseBlock<T>& offdiag(std::size_t i) { return e_.at(i - 1); }

  const std::vector<DenseBlock<T>>& diag_blocks() const noexcept { return d_; }
  const std::vector<DenseBlock<T>>& offdiag_blocks() const noexcept { return e_; }

  /// Full Nn x Nn matrix (upper triangle mirrored from the lower one).
  DenseBlock<T> assemble() const {
    const std::size_t N = num_blocks(), n = n_;
    DenseBlock<T> a(N * n, N * n);
    for (std::size_t b = 0; b < N; ++b)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c <= r; ++c) {
          a(b * n + r, b * n + c) = d_[b](r, c);
          a(b * n + c, b * n + r) = d_[b](r, c);
        }
    for (std::size_t b = 0; b + 1 < N; ++b)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
          a((b + 1) * n + r, b * n + c) = e_[b](r, c);
          a(b * n + c, (b + 1) * n + r) = e_[b](r, c);
        }
    return a;
  }

  /// y = Psi * x for x of shape Nn x m.
  DenseBlock<T> apply(const DenseBlock<T>& x) const {
    const std::size_t N = num_blocks(), n = n_, m = x.cols();
    if (x.rows() != N * n)
      throw ShapeMismatch("BlockTridiag::apply: rhs has wrong row count");
    DenseBlock<T> y(N * n, m);
    auto acc = [&](std::size_t row_block, std::size_t col_block, auto&& entry) {
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < n; ++k) {
          const T a = entry(r, k);
          for (std::size_t c = 0; c < m; ++c)
            y(row_block * n + r, c) += a * x(col_block * n + k, c);
        }
    };
    for (std::size_t b = 0; b < N; ++b) {
      const auto& d = d_[b];
      acc(b, b, [&](std::size_t r, std::size_t k) { return r >= k ? d(r, k) : d(k, r); });
    }
    for (std::size_t b = 0; b + 1 < N; ++b) {
      const auto& e = e_[b];
      acc(b + 1, b, [&](std::size_t r, std::size_t k) { return e(r, k); });
      acc(b, b + 1, [&](std::size_t r, std::size_t k) { return e(k, r); });
    }
    return y;
  }

  /// Frobenius norm of the full symmetric matrix.
  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& d : d_)
      for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t c = 0; c < n_; ++c) {
          const double v = r >= c ? d(r, c) : d(c, r);
          s += v * v;
        }
    for (const auto& e : e_) {
      const double f = btchol::frobenius_norm(e);
      s += 2.0 * f * f;
    }
    return std::sqrt(s);
  }

private:
  std::size_t n_ = 0;
  std::vector<DenseBlock<T>> d_;
  std::vector<DenseBlock<T>> e_;
};

/// Splits an Nn x m dense matrix into N row blocks of n x m.
template <Scalar T>
std::vector<DenseBlock<T>> split_rows(const DenseBlock<T>& x, std::size_t num_blocks,
                                      std::size_t block_size) {
  if (x.rows() != num_blocks * block_size)
    throw ShapeMismatch("right-hand side has " + std::to_string(x.rows()) + " rows, expected " +
                        std::to_string(num_blocks * block_size));
  std::vector<DenseBlock<T>> out;
  out.reserve(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    DenseBlock<T> blk(block_size, x.cols());
    for (std::size_t r = 0; r < block_size; ++r)
      for (std::size_t c = 0; c < x.cols(); ++c)
        blk(r, c) = x(b * block_size + r, c);
    out.push_back(std::move(blk));
  }
  return out;
}

template <Scalar T>
DenseBlock<T> join_rows(const std::vector<DenseBlock<T>>& blocks) {
  if (blocks.empty())
    return {};
  const std::size_t n = blocks.front().rows(), m = blocks.front().cols();
  DenseBlock<T> x(blocks.size() * n, m);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < m; ++c)
        x(b * n + r, c) = blocks[b](r, c);
  return x;
}

} // namespace btchol
