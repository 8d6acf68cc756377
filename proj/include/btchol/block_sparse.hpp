#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "btchol/block_tridiag.hpp"
#include "btchol/permutation.hpp"

namespace btchol {

/// Block-sparse square matrix keyed by (block row, block column) positions.
/// Used for permuted matrices and assembled factors in verification paths;
/// only blocks on or below the diagonal are stored.
template <Scalar T>
class BlockSparse {
public:
  using Key = std::pair<std::size_t, std::size_t>;

  BlockSparse() = default;
  BlockSparse(std::size_t num_blocks, std::size_t block_size)
      : N_(num_blocks), n_(block_size) {}

  std::size_t num_blocks() const noexcept { return N_; }
  std::size_t block_size() const noexcept { return n_; }
  std::size_t nnz_blocks() const noexcept { return blocks_.size(); }

  /// Stores a lower block (row >= col). Overwrites any previous block.
  void set(std::size_t row, std::size_t col, DenseBlock<T> b) {
    if (row < col || row >= N_)
      throw ShapeMismatch("BlockSparse::set: expected a lower block inside the matrix");
    if (b.rows() != n_ || b.cols() != n_)
      throw ShapeMismatch("BlockSparse::set: block has wrong shape");
    blocks_.insert_or_assign(Key{row, col}, std::move(b));
  }

  const DenseBlock<T>* find(std::size_t row, std::size_t col) const {
    auto it = blocks_.find(Key{row, col});
    return it == blocks_.end() ? nullptr : &it->second;
  }

  const std::map<Key, DenseBlock<T>>& blocks() const noexcept { return blocks_; }

  /// Dense lower-triangular assembly (strictly upper blocks left zero).
  DenseBlock<T> to_dense_lower() const {
    DenseBlock<T> a(N_ * n_, N_ * n_);
    for (const auto& [key, b] : blocks_)
      for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t c = 0; c < n_; ++c)
          a(key.first * n_ + r, key.second * n_ + c) = b(r, c);
    return a;
  }

  /// Dense symmetric assembly; diagonal blocks use their lower triangle.
  DenseBlock<T> to_dense_symmetric() const {
    DenseBlock<T> a(N_ * n_, N_ * n_);
    for (const auto& [key, b] : blocks_) {
      const auto [br, bc] = key;
      for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t c = 0; c < n_; ++c) {
          if (br == bc && c > r)
            continue;
          a(br * n_ + r, bc * n_ + c) = b(r, c);
          a(bc * n_ + c, br * n_ + r) = b(r, c);
        }
    }
    return a;
  }

private:
  std::size_t N_ = 0;
  std::size_t n_ = 0;
  std::map<Key, DenseBlock<T>> blocks_;
};

/// Lower-block storage of P Psi P^T.
template <Scalar T>
BlockSparse<T> apply_block_permutation(const BlockTridiag<T>& m, const BlockPermutation& perm) {
  const std::size_t N = m.num_blocks();
  if (perm.size() != N)
    throw ShapeMismatch("apply_block_permutation: permutation size differs from N");
  BlockSparse<T> out(N, m.block_size());
  for (std::size_t i = 1; i <= N; ++i) {
    const std::size_t p = perm.position_of(i);
    out.set(p, p, m.diag(i));
  }
  for (std::size_t i = 1; i < N; ++i) {
    const std::size_t lo = perm.position_of(i), hi = perm.position_of(i + 1);
    if (hi > lo)
      out.set(hi, lo, m.offdiag(i));
    else
      out.set(lo, hi, m.offdiag(i).transposed());
  }
  return out;
}

/// ||L L^T - P Psi P^T||_F / ||Psi||_F with L given as lower blocks in
/// permuted positions. Products and norms are accumulated in binary64.
template <Scalar T>
double reconstruction_residual(const BlockSparse<T>& factor, const BlockTridiag<T>& m,
                               const BlockPermutation& perm) {
  const std::size_t N = m.num_blocks(), n = m.block_size();
  if (factor.num_blocks() != N || factor.block_size() != n)
    throw ShapeMismatch("reconstruction_residual: factor shape differs from matrix");

  std::vector<std::vector<std::pair<std::size_t, const DenseBlock<T>*>>> by_col(N);
  for (const auto& [key, b] : factor.blocks())
    by_col[key.second].emplace_back(key.first, &b);

  using Acc = std::vector<double>;
  std::map<std::pair<std::size_t, std::size_t>, Acc> prod;
  for (std::size_t c = 0; c < N; ++c) {
    const auto& col = by_col[c];
    for (const auto& [r1, b1] : col)
      for (const auto& [r2, b2] : col) {
        if (r1 < r2)
          continue;
        Acc& acc = prod[{r1, r2}];
        if (acc.empty())
          acc.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n; ++k)
              v += double((*b1)(i, k)) * double((*b2)(j, k));
            acc[i * n + j] += v;
          }
      }
  }

  const BlockSparse<T> target = apply_block_permutation(m, perm);
  for (const auto& [key, b] : target.blocks()) {
    Acc& acc = prod[key];
    if (acc.empty())
      acc.assign(n * n, 0.0);
    const bool diag = key.first == key.second;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double a = diag && j > i ? double(b(j, i)) : double(b(i, j));
        acc[i * n + j] -= a;
      }
  }

  double err = 0.0;
  for (const auto& [key, acc] : prod) {
    const double w = key.first == key.second ? 1.0 : 2.0;
    for (double v : acc)
      err += w * v * v;
  }
  return std::sqrt(err) / m.frobenius_norm();
}

} // namespace btchol
