#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <limits>
#include <random>

#include "btchol/kernels.hpp"

using namespace btchol;

namespace {

template <Scalar T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <Scalar T>
Mat<T> to_eigen(const DenseBlock<T>& b) {
  Mat<T> m(b.rows(), b.cols());
  for (std::size_t r = 0; r < b.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c)
      m(r, c) = b(r, c);
  return m;
}

template <Scalar T>
DenseBlock<T> random_block(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseBlock<T> b(r, c);
  for (auto& v : b.data())
    v = static_cast<T>(u(rng));
  return b;
}

template <Scalar T>
DenseBlock<T> random_spd(std::size_t n, std::mt19937_64& rng) {
  auto a = random_block<T>(n, n, rng);
  DenseBlock<T> d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T v = 0;
      for (std::size_t k = 0; k < n; ++k)
        v += a(i, k) * a(j, k);
      d(i, j) = v + (i == j ? T(n) : T(0));
    }
  return d;
}

} // namespace

TEST(DenseBlock, LayoutIsRowMajor) {
  DenseBlock<double> b{{1, 2, 3}, {4, 5, 6}};
  ASSERT_EQ(b.rows(), 2u);
  ASSERT_EQ(b.cols(), 3u);
  EXPECT_EQ(b.data()[1], 2.0);
  EXPECT_EQ(b.data()[3], 4.0);
  EXPECT_EQ(b.transposed()(2, 1), 6.0);
}

TEST(DenseBlock, RejectsWrongDataLength) {
  EXPECT_THROW(DenseBlock<double>(2, 2, std::vector<double>(3)), ShapeMismatch);
  EXPECT_THROW((DenseBlock<double>{{1, 2}, {3}}), ShapeMismatch);
}

TEST(FlopMeter, ChargesKernelUnits) {
  EXPECT_EQ(units::potrf(3), 27u);
  EXPECT_EQ(units::trsm(4, 4), 192u);
  EXPECT_EQ(units::trsm(1, 2), 12u);
  EXPECT_EQ(units::syrk(4, 4), 192u);
  EXPECT_EQ(units::gemm(2, 2, 2), 48u);
  FlopMeter m;
  m.add(27);
  EXPECT_EQ(m.units(), 27u);
  EXPECT_DOUBLE_EQ(m.flops(), 9.0);
}

TEST(Potrf, IdentityStaysIdentity) {
  FlopMeter m;
  auto l = potrf(DenseBlock<double>::identity(3), m);
  EXPECT_EQ(l, DenseBlock<double>::identity(3));
  EXPECT_EQ(m.units(), 27u);
}

TEST(Potrf, TwoByTwoExample) {
  FlopMeter m;
  auto l = potrf(DenseBlock<double>{{4, 2}, {2, 5}}, m);
  EXPECT_EQ(l, (DenseBlock<double>{{2, 0}, {1, 2}}));
  EXPECT_TRUE(l.is_lower_triangular());
  EXPECT_EQ(m.units(), 8u);
}

TEST(Potrf, ReadsOnlyLowerTriangle) {
  FlopMeter m;
  auto l = potrf(DenseBlock<double>{{4, 99}, {2, 5}}, m);
  EXPECT_EQ(l, (DenseBlock<double>{{2, 0}, {1, 2}}));
}

TEST(Potrf, IndefiniteReportsSecondPivot) {
  FlopMeter m;
  DenseBlock<double> d{{1, 2}, {2, 1}};
  const auto before = d;
  try {
    potrf_inplace(d, m);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 2u);
  }
  EXPECT_EQ(d, before) << "partial factor must be discarded";
  EXPECT_EQ(m.units(), 0u);
}

TEST(Potrf, ZeroPivotIsRejected) {
  FlopMeter m;
  EXPECT_THROW(potrf(DenseBlock<double>{{0}}, m), NotPositiveDefinite);
  EXPECT_THROW(potrf(DenseBlock<double>(2, 3), m), ShapeMismatch);
}

TEST(TrsmRight, Examples) {
  FlopMeter m;
  DenseBlock<double> l{{2, 0}, {1, 2}};
  auto x = trsm_right(DenseBlock<double>{{2, 1}}, l, m);
  EXPECT_EQ(x, (DenseBlock<double>{{1, 0}}));
  EXPECT_EQ(m.units(), 12u);

  FlopMeter m4;
  std::mt19937_64 rng(3);
  auto e = random_block<double>(4, 4, rng);
  EXPECT_EQ(trsm_right(e, DenseBlock<double>::identity(4), m4), e);
  EXPECT_EQ(m4.units(), 192u);
}

TEST(TrsmRight, SingularTriangleRejected) {
  FlopMeter m;
  DenseBlock<double> l{{1, 0}, {1, 0}};
  EXPECT_THROW(trsm_right(DenseBlock<double>{{1, 1}}, l, m), SingularTriangular);
  EXPECT_THROW(trsm_right(DenseBlock<double>{{1, 1, 1}}, DenseBlock<double>::identity(2), m),
               ShapeMismatch);
}

TEST(TrsmLeft, Examples) {
  FlopMeter m;
  DenseBlock<double> l{{2, 0}, {1, 2}};
  auto x = trsm_left(DenseBlock<double>{{2}, {3}}, l, m);
  EXPECT_EQ(x, (DenseBlock<double>{{1}, {1}}));
  EXPECT_EQ(m.units(), 12u);
  std::mt19937_64 rng(4);
  auto e = random_block<double>(3, 2, rng);
  EXPECT_EQ(trsm_left(e, DenseBlock<double>::identity(3), m), e);
  EXPECT_THROW(trsm_left(e, DenseBlock<double>{{1, 0, 0}, {0, 0, 0}, {0, 0, 1}}, m),
               SingularTriangular);
}

TEST(TrsmLeftTrans, MatchesEigen) {
  std::mt19937_64 rng(5);
  FlopMeter m;
  auto l = potrf(random_spd<double>(5, rng), m);
  auto e = random_block<double>(5, 3, rng);
  auto x = e;
  FlopMeter m2;
  trsm_left_trans_inplace(x, l, m2);
  EXPECT_EQ(m2.units(), units::trsm(3, 5));
  Mat<double> ref = to_eigen(l).transpose().triangularView<Eigen::Upper>().solve(to_eigen(e));
  EXPECT_LT((to_eigen(x) - ref).norm(), 1e-13);
}

TEST(SyrkDown, Examples) {
  FlopMeter m;
  DenseBlock<double> d{{5, 0}, {0, 5}};
  auto r = syrk_down(d, DenseBlock<double>{{1}, {2}}, false, m);
  EXPECT_EQ(r, (DenseBlock<double>{{4, -2}, {-2, 1}}));
  EXPECT_EQ(m.units(), 12u);
  EXPECT_EQ(syrk_down(d, DenseBlock<double>(2, 3), false, m), d);

  FlopMeter m4;
  std::mt19937_64 rng(6);
  auto e = random_block<double>(4, 4, rng);
  syrk_down(DenseBlock<double>::identity(4), e, false, m4);
  EXPECT_EQ(m4.units(), 192u);
}

TEST(SyrkDown, TransposedFormMatchesEigen) {
  std::mt19937_64 rng(7);
  auto d = random_spd<double>(4, rng);
  auto e = random_block<double>(3, 4, rng);
  FlopMeter m;
  auto r = syrk_down(d, e, true, m);
  EXPECT_EQ(m.units(), units::syrk(4, 3));
  Mat<double> ref = to_eigen(d) - to_eigen(e).transpose() * to_eigen(e);
  EXPECT_LT((to_eigen(r) - ref).norm(), 1e-13);
  EXPECT_THROW(syrk_down(d, DenseBlock<double>(3, 3), true, m), ShapeMismatch);
}

TEST(GemmNeg, Examples) {
  FlopMeter m;
  DenseBlock<double> b{{3, 4}, {5, 6}};
  EXPECT_EQ(gemm_neg(DenseBlock<double>::identity(2), b, nullptr, m),
            (DenseBlock<double>{{-3, -4}, {-5, -6}}));
  EXPECT_EQ(m.units(), 48u);
  EXPECT_EQ(gemm_neg(DenseBlock<double>(2, 2), b, nullptr, m), DenseBlock<double>(2, 2));
  DenseBlock<double> acc{{1, 1}, {1, 1}};
  EXPECT_EQ(gemm_neg(DenseBlock<double>::identity(2), b, &acc, m),
            (DenseBlock<double>{{-2, -3}, {-4, -5}}));
}

TEST(GemmNeg, AllTransposeCombinationsMatchEigen) {
  std::mt19937_64 rng(8);
  const auto a = random_block<double>(3, 4, rng);
  const auto b = random_block<double>(4, 2, rng);
  const Mat<double> A = to_eigen(a), B = to_eigen(b);
  const Mat<double> ref = -A * B;
  const auto at = a.transposed(), bt = b.transposed();
  for (auto [x, tx] : {std::pair{&a, Trans::no}, std::pair{&at, Trans::yes}})
    for (auto [y, ty] : {std::pair{&b, Trans::no}, std::pair{&bt, Trans::yes}}) {
      FlopMeter m;
      DenseBlock<double> c;
      gemm_neg_inplace(c, *x, tx, *y, ty, false, m);
      EXPECT_LT((to_eigen(c) - ref).norm(), 1e-14);
      EXPECT_EQ(m.units(), units::gemm(3, 4, 2));
    }
  FlopMeter m;
  DenseBlock<double> c;
  EXPECT_THROW(gemm_neg_inplace(c, a, Trans::no, a, Trans::no, false, m), ShapeMismatch);
}

template <typename T>
class KernelProperties : public ::testing::Test {};
using Precisions = ::testing::Types<float, double>;
TYPED_TEST_SUITE(KernelProperties, Precisions);

TYPED_TEST(KernelProperties, PotrfRoundTrip) {
  using T = TypeParam;
  const double eps = std::numeric_limits<T>::epsilon();
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 16; ++n)
    for (int rep = 0; rep < 5; ++rep) {
      auto d = random_spd<T>(n, rng);
      FlopMeter m;
      auto l = potrf(d, m);
      EXPECT_EQ(m.units(), units::potrf(n));
      EXPECT_TRUE(l.is_lower_triangular());
      const auto llt = multiply(l, l.transposed());
      EXPECT_LE(frobenius_distance(llt, d), 50 * eps * frobenius_norm(d)) << "n=" << n;
    }
}

TYPED_TEST(KernelProperties, TrsmRightInverseConsistency) {
  using T = TypeParam;
  const double eps = std::numeric_limits<T>::epsilon();
  std::mt19937_64 rng(12);
  for (std::size_t n = 1; n <= 12; ++n) {
    FlopMeter m;
    auto l = potrf(random_spd<T>(n, rng), m);
    auto e = random_block<T>(n + 1, n, rng);
    FlopMeter mt;
    auto x = trsm_right(e, l, mt);
    EXPECT_EQ(mt.units(), units::trsm(n + 1, n));
    const auto back = multiply(x, l.transposed());
    EXPECT_LE(frobenius_distance(back, e), 50 * eps * (1 + frobenius_norm(e)));
  }
}

TYPED_TEST(KernelProperties, MeterDeltaIsExactForEveryShape) {
  using T = TypeParam;
  std::mt19937_64 rng(13);
  for (std::size_t n = 1; n <= 6; ++n)
    for (std::size_t k = 1; k <= 6; ++k) {
      FlopMeter m;
      auto l = potrf(random_spd<T>(n, rng), m);
      std::uint64_t before = m.units();
      trsm_right(random_block<T>(k, n, rng), l, m);
      EXPECT_EQ(m.units() - before, 3u * k * n * n);
      before = m.units();
      trsm_left(random_block<T>(n, k, rng), l, m);
      EXPECT_EQ(m.units() - before, 3u * k * n * n);
      before = m.units();
      syrk_down(random_spd<T>(n, rng), random_block<T>(n, k, rng), false, m);
      EXPECT_EQ(m.units() - before, 3u * n * n * k);
      before = m.units();
      gemm_neg(random_block<T>(n, k, rng), random_block<T>(k, 2, rng), nullptr, m);
      EXPECT_EQ(m.units() - before, 6u * n * k * 2);
    }
}
