#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "btchol/btchol.hpp"

using namespace btchol;

namespace {

Eigen::MatrixXd to_eigen(const DenseBlock<double>& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      m(r, c) = a(r, c);
  return m;
}

} // namespace

TEST(ProbGen, Deterministic) {
  const auto a = generate_spd<double>(9, 4, 123), b = generate_spd<double>(9, 4, 123);
  EXPECT_EQ(a.diag_blocks(), b.diag_blocks());
  EXPECT_EQ(a.offdiag_blocks(), b.offdiag_blocks());
  const auto c = generate_spd<double>(9, 4, 124);
  EXPECT_FALSE(a.diag_blocks() == c.diag_blocks());
  EXPECT_EQ(generate_rhs<double>(10, 3, 5), generate_rhs<double>(10, 3, 5));
}

TEST(ProbGen, FloatIsRoundedDouble) {
  const auto d = generate_spd<double>(3, 2, 8);
  const auto f = generate_spd<float>(3, 2, 8);
  for (std::size_t i = 1; i <= 3; ++i)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c)
        EXPECT_EQ(f.diag(i)(r, c), static_cast<float>(d.diag(i)(r, c)));
}

TEST(ProbGen, EntriesInRange) {
  const auto m = generate_spd<double>(5, 3, 2);
  for (const auto& e : m.offdiag_blocks())
    for (double v : e.data()) {
      EXPECT_GE(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  for (const auto& d : m.diag_blocks()) {
    EXPECT_EQ(d, d.transposed());
    for (std::size_t r = 0; r < 3; ++r)
      EXPECT_GE(d(r, r), 6.0);
  }
}

TEST(ProbGen, SinglePositiveDefiniteBlock) {
  const auto m = generate_spd<double>(1, 5, 9);
  EXPECT_TRUE(m.offdiag_blocks().empty());
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(to_eigen(m.assemble())).info(), Eigen::Success);
}

TEST(ProbGen, PositiveDefiniteAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    for (std::size_t N : {1u, 2u, 17u, 64u})
      for (std::size_t n : {1u, 3u, 8u, 16u}) {
        if (N * n > 256 && seed % 10 != 0)
          continue; // large instances on a tenth of the seeds keep the test quick
        const auto a = to_eigen(generate_spd<double>(N, n, seed).assemble());
        const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly)
                                      .eigenvalues()
                                      .minCoeff();
        EXPECT_GT(lambda_min, 0.0) << "seed=" << seed << " N=" << N << " n=" << n;
      }
}

TEST(ProbGen, EightByFourSeedOne) {
  const auto a = to_eigen(generate_spd<double>(8, 4, 1).assemble());
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(a).info(), Eigen::Success);
}

TEST(ProbGen, OracleFactorMatchesEigen) {
  const auto m = generate_spd<double>(6, 3, 4);
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(to_eigen(m.assemble())).matrixL();
  EXPECT_LT((to_eigen(dense_oracle_factor(m)) - l).norm(), 1e-12);
}

TEST(ProbGen, OracleOnIdentity) {
  const auto m = BlockTridiag<double>::identity(4, 2);
  EXPECT_EQ(dense_oracle_factor(m), DenseBlock<double>::identity(8));
  const auto b = generate_rhs<double>(8, 2, 3);
  EXPECT_EQ(dense_oracle_solve(m, b), b);
}

TEST(ProbGen, OracleSolveRecoversOnes) {
  const auto m = generate_spd<double>(7, 3, 6);
  DenseBlock<double> ones(m.dim(), 1);
  for (auto& v : ones.data())
    v = 1.0;
  const auto x = dense_oracle_solve(m, m.apply(ones));
  EXPECT_LT(frobenius_distance(x, ones), 1e-12);
}
