#pragma once

// Sequential baseline: block Cholesky of a block tridiagonal matrix in natural
// order, and the matching forward/backward block substitution.

#include <string>
#include <vector>

#include "btchol/block_sparse.hpp"
#include "btchol/block_tridiag.hpp"
#include "btchol/kernels.hpp"

namespace btchol {

/// L with D̂_i on the diagonal and Ê_i at block (i+1, i).
template <Scalar T>
struct SeqFactor {
  std::size_t block_size = 0;
  std::vector<DenseBlock<T>> Dhat; // N lower-triangular blocks
  std::vector<DenseBlock<T>> Ehat; // N-1 dense blocks

  std::size_t num_blocks() const noexcept { return Dhat.size(); }

  /// Factor blocks in natural positions (0-based), for use with the identity
  /// permutation in `reconstruction_residual`.
  BlockSparse<T> lower_blocks() const {
    const std::size_t N = num_blocks();
    BlockSparse<T> l(N, block_size);
    for (std::size_t i = 0; i < N; ++i)
      l.set(i, i, Dhat[i]);
    for (std::size_t i = 0; i + 1 < N; ++i)
      l.set(i + 1, i, Ehat[i]);
    return l;
  }
};

/// Costs (7N - 6) n^3 units: N potrf, N-1 trsm and N-1 syrk.
template <Scalar T>
SeqFactor<T> factor_sequential(const BlockTridiag<T>& m, FlopMeter& meter) {
  const std::size_t N = m.num_blocks();
  SeqFactor<T> f;
  f.block_size = m.block_size();
  f.Dhat.reserve(N);
  f.Ehat.reserve(N - 1);
  f.Dhat.push_back(m.diag(1));
  for (std::size_t i = 1; i <= N; ++i) {
    DenseBlock<T>& d = f.Dhat.back();
    try {
      potrf_inplace(d, meter);
    } catch (const NotPositiveDefinite& e) {
      throw e.located("block " + std::to_string(i), i);
    }
    if (i == N)
      break;
    DenseBlock<T> e = m.offdiag(i);
    trsm_right_inplace(e, d, meter);
    DenseBlock<T> next = m.diag(i + 1);
    syrk_down_inplace(next, e, false, meter);
    f.Ehat.push_back(std::move(e));
    f.Dhat.push_back(std::move(next));
  }
  return f;
}

/// Solves Psi x = b for an Nn x m right-hand side.
template <Scalar T>
DenseBlock<T> solve_sequential(const SeqFactor<T>& f, const DenseBlock<T>& b, FlopMeter& meter) {
  const std::size_t N = f.num_blocks();
  auto y = split_rows(b, N, f.block_size);
  for (std::size_t i = 0; i < N; ++i) {
    trsm_left_inplace(y[i], f.Dhat[i], meter);
    if (i + 1 < N)
      gemm_neg_inplace(y[i + 1], f.Ehat[i], Trans::no, y[i], Trans::no, true, meter);
  }
  for (std::size_t i = N; i-- > 0;) {
    if (i + 1 < N)
      gemm_neg_inplace(y[i], f.Ehat[i], Trans::yes, y[i + 1], Trans::no, true, meter);
    trsm_left_trans_inplace(y[i], f.Dhat[i], meter);
  }
  return join_rows(y);
}

} // namespace btchol
