#pragma once

// The four block kernels (potrf, trsm, syrk, gemm), each charging the meter
// exactly per the kernel cost model. Triple loops over fully resident blocks.
//
// Every kernel has an in-place form used by the factorizations and a
// value-returning form.

#include <cmath>
#include <type_traits>
#include <string>

#include "btchol/dense_block.hpp"
#include "btchol/flop_meter.hpp"

namespace btchol {

namespace detail {

template <Scalar T>
void require_square(const DenseBlock<T>& b, const char* what) {
  if (b.rows() != b.cols())
    throw ShapeMismatch(std::string(what) + ": block must be square");
}

template <Scalar T>
void require_nonsingular(const DenseBlock<T>& l) {
  for (std::size_t k = 0; k < l.rows(); ++k)
    if (l(k, k) == T(0))
      throw SingularTriangular(k + 1);
}

} // namespace detail

/// In-place Cholesky of the lower triangle of `d`; the strictly-upper part is
/// zeroed. On failure `d` is left untouched.
template <Scalar T>
void potrf_inplace(DenseBlock<T>& d, FlopMeter& meter) {
  detail::require_square(d, "potrf");
  const std::size_t n = d.rows();
  DenseBlock<T> l = d;
  for (std::size_t j = 0; j < n; ++j) {
    T* lj = l.row(j);
    T diag = lj[j];
    for (std::size_t k = 0; k < j; ++k)
      diag -= lj[k] * lj[k];
    if (!(diag > T(0)))
      throw NotPositiveDefinite(j + 1);
    diag = std::sqrt(diag);
    lj[j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      T* li = l.row(i);
      T v = li[j];
      for (std::size_t k = 0; k < j; ++k)
        v -= li[k] * lj[k];
      li[j] = v / diag;
    }
    for (std::size_t c = j + 1; c < n; ++c)
      lj[c] = T(0);
  }
  d = std::move(l);
  meter.add(units::potrf(n));
}

/// e <- e * l^{-T}  (e is m x n, l lower n x n).
template <Scalar T>
void trsm_right_inplace(DenseBlock<T>& e, const DenseBlock<T>& l, FlopMeter& meter) {
  detail::require_square(l, "trsm_right");
  if (e.cols() != l.rows())
    throw ShapeMismatch("trsm_right: e.cols != l.rows");
  detail::require_nonsingular(l);
  const std::size_t m = e.rows(), n = l.rows();
  for (std::size_t r = 0; r < m; ++r) {
    T* x = e.row(r);
    for (std::size_t j = 0; j < n; ++j) {
      const T* lj = l.row(j);
      T v = x[j];
      for (std::size_t k = 0; k < j; ++k)
        v -= x[k] * lj[k];
      x[j] = v / lj[j];
    }
  }
  meter.add(units::trsm(m, n));
}

/// e <- l^{-1} * e  (e is n x m).
template <Scalar T>
void trsm_left_inplace(DenseBlock<T>& e, const DenseBlock<T>& l, FlopMeter& meter) {
  detail::require_square(l, "trsm_left");
  if (e.rows() != l.rows())
    throw ShapeMismatch("trsm_left: e.rows != l.rows");
  detail::require_nonsingular(l);
  const std::size_t n = l.rows(), m = e.cols();
  for (std::size_t i = 0; i < n; ++i) {
    T* xi = e.row(i);
    const T* li = l.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const T lik = li[k];
      const T* xk = e.row(k);
      for (std::size_t c = 0; c < m; ++c)
        xi[c] -= lik * xk[c];
    }
    const T inv = T(1) / li[i];
    for (std::size_t c = 0; c < m; ++c)
      xi[c] *= inv;
  }
  meter.add(units::trsm(m, n));
}

/// e <- l^{-T} * e  (e is n x m). Backward substitution.
template <Scalar T>
void trsm_left_trans_inplace(DenseBlock<T>& e, const DenseBlock<T>& l, FlopMeter& meter) {
  detail::require_square(l, "trsm_left_trans");
  if (e.rows() != l.rows())
    throw ShapeMismatch("trsm_left_trans: e.rows != l.rows");
  detail::require_nonsingular(l);
  const std::size_t n = l.rows(), m = e.cols();
  for (std::size_t ii = n; ii-- > 0;) {
    T* xi = e.row(ii);
    for (std::size_t k = ii + 1; k < n; ++k) {
      const T lki = l(k, ii);
      const T* xk = e.row(k);
      for (std::size_t c = 0; c < m; ++c)
        xi[c] -= lki * xk[c];
    }
    const T inv = T(1) / l(ii, ii);
    for (std::size_t c = 0; c < m; ++c)
      xi[c] *= inv;
  }
  meter.add(units::trsm(m, n));
}

/// Symmetric downdate d <- d - e e^T (e is n x k), or d <- d - e^T e when
/// `transpose_e` (e is k x n). Both triangles of d are written.
template <Scalar T>
void syrk_down_inplace(DenseBlock<T>& d, const DenseBlock<T>& e, bool transpose_e,
                       FlopMeter& meter) {
  detail::require_square(d, "syrk_down");
  const std::size_t n = d.rows();
  const std::size_t k = transpose_e ? e.rows() : e.cols();
  if ((transpose_e ? e.cols() : e.rows()) != n)
    throw ShapeMismatch("syrk_down: e does not conform to d");
  if (!transpose_e) {
    for (std::size_t i = 0; i < n; ++i) {
      const T* ei = e.row(i);
      T* di = d.row(i);
      for (std::size_t j = 0; j <= i; ++j) {
        const T* ej = e.row(j);
        T v = T(0);
        for (std::size_t l = 0; l < k; ++l)
          v += ei[l] * ej[l];
        di[j] -= v;
      }
    }
  } else {
    for (std::size_t l = 0; l < k; ++l) {
      const T* el = e.row(l);
      for (std::size_t i = 0; i < n; ++i) {
        const T a = el[i];
        T* di = d.row(i);
        for (std::size_t j = 0; j <= i; ++j)
          di[j] -= a * el[j];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d(i, j) = d(j, i);
  meter.add(units::syrk(n, k));
}

enum class Trans : bool { no = false, yes = true };

/// c <- c - op(a) op(b) when `accumulate`, else c <- -op(a) op(b).
/// `c` is resized when not accumulating.
template <Scalar T>
void gemm_neg_inplace(DenseBlock<T>& c, const DenseBlock<T>& a, Trans ta, const DenseBlock<T>& b,
                      Trans tb, bool accumulate, FlopMeter& meter) {
  const bool at = ta == Trans::yes, bt = tb == Trans::yes;
  const std::size_t m = at ? a.cols() : a.rows();
  const std::size_t kk = at ? a.rows() : a.cols();
  const std::size_t kb = bt ? b.cols() : b.rows();
  const std::size_t p = bt ? b.rows() : b.cols();
  if (kk != kb)
    throw ShapeMismatch("gemm_neg: inner dimensions differ");
  if (accumulate) {
    if (c.rows() != m || c.cols() != p)
      throw ShapeMismatch("gemm_neg: accumulator shape mismatch");
  } else if (c.rows() != m || c.cols() != p) {
    c = DenseBlock<T>(m, p);
  } else {
    c.set_zero();
  }

  if (!at && !bt) {
    for (std::size_t i = 0; i < m; ++i) {
      T* ci = c.row(i);
      const T* ai = a.row(i);
      for (std::size_t l = 0; l < kk; ++l) {
        const T ail = ai[l];
        const T* bl = b.row(l);
        for (std::size_t j = 0; j < p; ++j)
          ci[j] -= ail * bl[j];
      }
    }
  } else if (!at && bt) {
    for (std::size_t i = 0; i < m; ++i) {
      T* ci = c.row(i);
      const T* ai = a.row(i);
      for (std::size_t j = 0; j < p; ++j) {
        const T* bj = b.row(j);
        T v = T(0);
        for (std::size_t l = 0; l < kk; ++l)
          v += ai[l] * bj[l];
        ci[j] -= v;
      }
    }
  } else if (at && !bt) {
    for (std::size_t l = 0; l < kk; ++l) {
      const T* al = a.row(l);
      const T* bl = b.row(l);
      for (std::size_t i = 0; i < m; ++i) {
        const T ali = al[i];
        T* ci = c.row(i);
        for (std::size_t j = 0; j < p; ++j)
          ci[j] -= ali * bl[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        T v = T(0);
        for (std::size_t l = 0; l < kk; ++l)
          v += a(l, i) * b(j, l);
        c(i, j) -= v;
      }
  }
  meter.add(units::gemm(m, kk, p));
}

// Value-returning forms.

template <Scalar T>
DenseBlock<T> potrf(DenseBlock<T> d, FlopMeter& meter) {
  potrf_inplace(d, meter);
  return d;
}

template <Scalar T>
DenseBlock<T> trsm_right(DenseBlock<T> e, const DenseBlock<T>& l, FlopMeter& meter) {
  trsm_right_inplace(e, l, meter);
  return e;
}

template <Scalar T>
DenseBlock<T> trsm_left(DenseBlock<T> e, const DenseBlock<T>& l, FlopMeter& meter) {
  trsm_left_inplace(e, l, meter);
  return e;
}

template <Scalar T>
DenseBlock<T> syrk_down(DenseBlock<T> d, const DenseBlock<T>& e, bool transpose_e,
                        FlopMeter& meter) {
  syrk_down_inplace(d, e, transpose_e, meter);
  return d;
}

/// -a*b, or accumulate_into - a*b when an accumulator is given.
template <Scalar T>
DenseBlock<T> gemm_neg(const DenseBlock<T>& a, const DenseBlock<T>& b,
                       const std::type_identity_t<DenseBlock<T>>* accumulate_into,
                       FlopMeter& meter) {
  DenseBlock<T> c = accumulate_into ? *accumulate_into : DenseBlock<T>();
  gemm_neg_inplace(c, a, Trans::no, b, Trans::no, accumulate_into != nullptr, meter);
  return c;
}

} // namespace btchol
