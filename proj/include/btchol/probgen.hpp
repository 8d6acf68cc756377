#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "btchol/block_tridiag.hpp"

namespace btchol {

/// Reproducible SPD block tridiagonal instance.
///
/// Stream: std::mt19937_64(seed); each 64-bit draw x maps to
/// 2 * ((x >> 11) * 2^-53) - 1, uniform in [-1, 1). Blocks are filled for
/// i = 1..N in order: the lower triangle of S_i row by row, then (for i < N)
/// all of E_i row by row. D_i = S_i + (2n + 1) I.
template <Scalar T>
BlockTridiag<T> generate_spd(std::size_t N, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&rng] {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
  };
  std::vector<DenseBlock<T>> d, e;
  d.reserve(N);
  e.reserve(N ? N - 1 : 0);
  const double shift = 2.0 * double(n) + 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    DenseBlock<double> s(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c <= r; ++c) {
        const double v = draw();
        s(r, c) = v;
        s(c, r) = v;
      }
    DenseBlock<T> di(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        di(r, c) = static_cast<T>(s(r, c) + (r == c ? shift : 0.0));
    d.push_back(std::move(di));
    if (i + 1 < N) {
      DenseBlock<T> ei(n, n);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          ei(r, c) = static_cast<T>(draw());
      e.push_back(std::move(ei));
    }
  }
  return BlockTridiag<T>(n, std::move(d), std::move(e));
}

/// Textbook dense Cholesky of the assembled Nn x Nn matrix, in binary64.
/// Ground truth for equivalence tests; meant for N*n up to ~2048.
template <Scalar T>
DenseBlock<double> dense_oracle_factor(const BlockTridiag<T>& m) {
  const DenseBlock<T> a = m.assemble();
  const std::size_t dim = a.rows();
  DenseBlock<double> l(dim, dim);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c <= r; ++c)
      l(r, c) = double(a(r, c));
  for (std::size_t j = 0; j < dim; ++j) {
    double* lj = l.row(j);
    double diag = lj[j];
    for (std::size_t k = 0; k < j; ++k)
      diag -= lj[k] * lj[k];
    if (!(diag > 0.0))
      throw NotPositiveDefinite(j + 1, "dense oracle");
    diag = std::sqrt(diag);
    lj[j] = diag;
    for (std::size_t i = j + 1; i < dim; ++i) {
      double* li = l.row(i);
      double v = li[j];
      for (std::size_t k = 0; k < j; ++k)
        v -= li[k] * lj[k];
      li[j] = v / diag;
    }
  }
  return l;
}

/// Solves L L^T x = b with a dense lower factor from dense_oracle_factor.
inline DenseBlock<double> dense_cholesky_solve(const DenseBlock<double>& l, DenseBlock<double> x) {
  const std::size_t dim = l.rows(), m = x.cols();
  if (x.rows() != dim)
    throw ShapeMismatch("dense_cholesky_solve: rhs row count mismatch");
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      const double lik = l(i, k);
      if (lik != 0.0)
        for (std::size_t c = 0; c < m; ++c)
          x(i, c) -= lik * x(k, c);
    }
    for (std::size_t c = 0; c < m; ++c)
      x(i, c) /= l(i, i);
  }
  for (std::size_t ii = dim; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < dim; ++k) {
      const double lki = l(k, ii);
      if (lki != 0.0)
        for (std::size_t c = 0; c < m; ++c)
          x(ii, c) -= lki * x(k, c);
    }
    for (std::size_t c = 0; c < m; ++c)
      x(ii, c) /= l(ii, ii);
  }
  return x;
}

template <Scalar T>
DenseBlock<double> dense_oracle_solve(const BlockTridiag<T>& m, const DenseBlock<T>& b) {
  DenseBlock<double> x(b.rows(), b.cols());
  for (std::size_t r = 0; r < b.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c)
      x(r, c) = double(b(r, c));
  return dense_cholesky_solve(dense_oracle_factor(m), std::move(x));
}

/// Uniform [-1, 1) right-hand side with the same stream mapping as generate_spd.
template <Scalar T>
DenseBlock<T> generate_rhs(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DenseBlock<T> b(rows, cols);
  for (auto& v : b.data())
    v = static_cast<T>(2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
  return b;
}

} // namespace btchol
