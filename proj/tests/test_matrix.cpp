#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "btchol/btchol.hpp"

using namespace btchol;

namespace {

std::vector<std::size_t> order_of(const BlockPermutation& p) {
  std::vector<std::size_t> o;
  for (std::size_t k = 0; k < p.size(); ++k)
    o.push_back(p.original_at(k));
  return o;
}

/// Odd/even recursion written independently: take the odd positions of the
/// remaining sequence, recurse on the even ones.
std::vector<std::size_t> recursive_nd(std::vector<std::size_t> seq) {
  if (seq.empty())
    return {};
  std::vector<std::size_t> odd, even;
  for (std::size_t k = 0; k < seq.size(); ++k)
    (k % 2 == 0 ? odd : even).push_back(seq[k]);
  auto rest = recursive_nd(even);
  odd.insert(odd.end(), rest.begin(), rest.end());
  return odd;
}

/// Reference elimination tree by explicit symbolic elimination: eliminating
/// a node connects all of its later neighbours; its parent is the earliest.
std::vector<std::size_t> reference_etree(std::size_t N, const BlockPermutation& perm) {
  std::vector<std::set<std::size_t>> adj(N);
  for (std::size_t b = 1; b < N; ++b) {
    const auto u = perm.position_of(b), v = perm.position_of(b + 1);
    adj[u].insert(v);
    adj[v].insert(u);
  }
  std::vector<std::size_t> parent(N, EliminationTree::none);
  for (std::size_t j = 0; j < N; ++j) {
    std::vector<std::size_t> later;
    for (auto k : adj[j])
      if (k > j)
        later.push_back(k);
    if (!later.empty())
      parent[j] = *std::min_element(later.begin(), later.end());
    for (auto a : later)
      for (auto b : later)
        if (a != b)
          adj[a].insert(b);
  }
  return parent;
}

BlockTridiag<double> marker_matrix(std::size_t N) {
  std::vector<DenseBlock<double>> d, e;
  for (std::size_t i = 1; i <= N; ++i)
    d.push_back(DenseBlock<double>{{double(i)}});
  for (std::size_t i = 1; i < N; ++i)
    e.push_back(DenseBlock<double>{{100.0 + double(i)}});
  return BlockTridiag<double>(1, d, e);
}

} // namespace

TEST(BlockTridiag, ValidatesShapes) {
  EXPECT_THROW(BlockTridiag<double>(2, {}, {}), ShapeMismatch);
  EXPECT_THROW(BlockTridiag<double>(2, {DenseBlock<double>(2, 2)}, {DenseBlock<double>(2, 2)}),
               ShapeMismatch);
  EXPECT_THROW(BlockTridiag<double>(2, {DenseBlock<double>(2, 3)}, {}), ShapeMismatch);
  auto m = BlockTridiag<double>::identity(3, 2);
  EXPECT_EQ(m.num_blocks(), 3u);
  EXPECT_EQ(m.dim(), 6u);
}

TEST(BlockTridiag, AssembleAndApplyAgree) {
  auto m = generate_spd<double>(5, 3, 4);
  const auto a = m.assemble();
  // E_2 sits at block (3, 2), its transpose at (2, 3)
  EXPECT_EQ(a(2 * 3 + 1, 1 * 3 + 2), m.offdiag(2)(1, 2));
  EXPECT_EQ(a(1 * 3 + 2, 2 * 3 + 1), m.offdiag(2)(1, 2));
  auto x = generate_rhs<double>(15, 2, 9);
  const auto y1 = m.apply(x), y2 = multiply(a, x);
  EXPECT_LT(frobenius_distance(y1, y2), 1e-12);
  EXPECT_NEAR(m.frobenius_norm(), frobenius_norm(a), 1e-12);
}

TEST(BlockTridiag, SplitJoinRoundTrip) {
  auto x = generate_rhs<double>(12, 3, 1);
  auto parts = split_rows(x, 4, 3);
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_EQ(join_rows(parts), x);
  EXPECT_THROW(split_rows(x, 5, 3), ShapeMismatch);
}

TEST(Permutation, MultiStageExamples) {
  EXPECT_EQ(order_of(multi_stage_permutation(1)), (std::vector<std::size_t>{1}));
  EXPECT_EQ(order_of(multi_stage_permutation(8)),
            (std::vector<std::size_t>{1, 3, 5, 7, 2, 6, 4, 8}));
  const auto o = order_of(multi_stage_permutation(20));
  for (std::size_t k = 0; k < 10; ++k)
    EXPECT_EQ(o[k], 2 * k + 1);
}

TEST(Permutation, MultiStageMatchesRecursiveReference) {
  for (std::size_t N = 1; N <= 130; ++N) {
    std::vector<std::size_t> seq(N);
    std::iota(seq.begin(), seq.end(), 1);
    EXPECT_EQ(order_of(multi_stage_permutation(N)), recursive_nd(seq)) << "N=" << N;
  }
}

TEST(Permutation, PartitionExamples) {
  const std::vector<std::size_t> one{10};
  EXPECT_TRUE(partition_permutation(10, one).is_identity());
  const std::vector<std::size_t> a{3, 3}, b{1, 3};
  EXPECT_EQ(order_of(partition_permutation(7, a)),
            (std::vector<std::size_t>{1, 2, 3, 5, 6, 7, 4}));
  EXPECT_EQ(order_of(partition_permutation(5, b)), (std::vector<std::size_t>{1, 3, 4, 5, 2}));
  const std::vector<std::size_t> bad{3, 3}, empty{3, 0, 3};
  EXPECT_THROW(partition_permutation(8, bad), InfeasiblePartition);
  EXPECT_THROW(partition_permutation(8, empty), InfeasiblePartition);
}

TEST(Permutation, InverseAndCompose) {
  for (std::size_t N : {1u, 7u, 20u}) {
    const auto p = multi_stage_permutation(N);
    EXPECT_TRUE(p.compose(p.inverse()).is_identity());
    EXPECT_TRUE(p.inverse().compose(p).is_identity());
  }
  EXPECT_THROW(BlockPermutation({1, 1, 3}), ShapeMismatch);
  EXPECT_THROW(BlockPermutation({0, 1}), ShapeMismatch);
}

TEST(Permutation, SingleStageOddsFirst) {
  EXPECT_EQ(order_of(single_stage_permutation(6)), (std::vector<std::size_t>{1, 3, 5, 2, 4, 6}));
  EXPECT_EQ(num_levels(1), 1u);
  EXPECT_EQ(num_levels(20), 5u);
  EXPECT_EQ(num_levels(64), 7u);
}

TEST(EliminationTree, SequentialChain) {
  auto t1 = etree_block_tridiag_sequential(1);
  EXPECT_EQ(t1.height(), 1u);
  EXPECT_EQ(t1.roots().size(), 1u);
  auto t3 = etree_block_tridiag_sequential(3);
  EXPECT_EQ(t3.parent(0), 1u);
  EXPECT_EQ(t3.parent(1), 2u);
  EXPECT_EQ(t3.parent(2), EliminationTree::none);
  EXPECT_EQ(etree_block_tridiag_sequential(20).height(), 20u);
}

TEST(EliminationTree, IdentityPermutationGivesChain) {
  for (std::size_t N = 1; N <= 20; ++N)
    EXPECT_EQ(etree_of_permuted(N, BlockPermutation::identity(N)).parents(),
              etree_block_tridiag_sequential(N).parents());
}

TEST(EliminationTree, SingleStageTwenty) {
  const auto perm = single_stage_permutation(20);
  const auto t = etree_of_permuted(20, perm);
  EXPECT_EQ(t.height(), 11u);
  // the 10 odd blocks are leaves whose parents are even blocks
  for (std::size_t pos = 0; pos < 10; ++pos) {
    const auto par = t.parent(pos);
    ASSERT_NE(par, EliminationTree::none);
    EXPECT_EQ(perm.original_at(par) % 2, 0u);
  }
  EXPECT_EQ(t.roots().size(), 1u);
}

TEST(EliminationTree, MultiStageTwenty) {
  EXPECT_EQ(etree_of_permuted(20, multi_stage_permutation(20)).height(), 5u);
}

TEST(EliminationTree, HeightsForAllSmallN) {
  for (std::size_t N = 1; N <= 64; ++N) {
    const auto ms = multi_stage_permutation(N), ss = single_stage_permutation(N);
    const auto tm = etree_of_permuted(N, ms), ts = etree_of_permuted(N, ss);
    EXPECT_EQ(tm.height(), num_levels(N)) << N;
    EXPECT_EQ(ts.height(), N / 2 + 1) << N;
    EXPECT_EQ(tm.parents(), reference_etree(N, ms)) << N;
    EXPECT_EQ(ts.parents(), reference_etree(N, ss)) << N;
    EXPECT_EQ(tm.roots().size(), 1u);
  }
}

TEST(EliminationTree, LevelsPartitionTheNodes) {
  const auto t = etree_of_permuted(20, multi_stage_permutation(20));
  const auto lv = t.levels();
  ASSERT_EQ(lv.size(), 5u);
  EXPECT_EQ(lv[0].size(), 10u);
  std::size_t total = 0;
  for (const auto& l : lv)
    total += l.size();
  EXPECT_EQ(total, 20u);
}

TEST(ApplyBlockPermutation, MarkerBlocksLandWherePredicted) {
  const auto m = marker_matrix(3);
  const auto perm = multi_stage_permutation(3); // [1, 3, 2]
  const auto pm = apply_block_permutation(m, perm);
  EXPECT_EQ((*pm.find(0, 0))(0, 0), 1.0);
  EXPECT_EQ((*pm.find(1, 1))(0, 0), 3.0);
  EXPECT_EQ((*pm.find(2, 2))(0, 0), 2.0);
  // E_1 couples blocks 2 and 1 -> positions (2, 0); E_2 couples 3 and 2 -> (2, 1)
  EXPECT_EQ((*pm.find(2, 0))(0, 0), 101.0);
  EXPECT_EQ((*pm.find(2, 1))(0, 0), 102.0);
  EXPECT_EQ(pm.find(1, 0), nullptr);
}

TEST(ApplyBlockPermutation, IdentityKeepsPattern) {
  const auto m = generate_spd<double>(6, 2, 3);
  const auto pm = apply_block_permutation(m, BlockPermutation::identity(6));
  EXPECT_EQ(pm.nnz_blocks(), 11u);
  const auto dense = pm.to_dense_symmetric();
  EXPECT_LT(frobenius_distance(dense, m.assemble()), 1e-15);
}

TEST(ApplyBlockPermutation, PermutationThenInverseIsIdentityLayout) {
  const auto m = generate_spd<double>(9, 2, 3);
  const auto p = multi_stage_permutation(9);
  const auto pm = apply_block_permutation(m, p.compose(p.inverse()));
  EXPECT_LT(frobenius_distance(pm.to_dense_symmetric(), m.assemble()), 1e-15);
}

TEST(LeveledFactorLayout, LevelsCoverEveryBlockOnce) {
  for (std::size_t N = 1; N <= 70; ++N) {
    const auto f = LeveledFactor<double>(BlockTridiag<double>::identity(N, 1));
    EXPECT_EQ(f.num_levels(), num_levels(N));
    std::multiset<std::size_t> seen;
    for (std::size_t lv = 1; lv <= f.num_levels(); ++lv) {
      const auto s = LeveledFactor<double>::stride(lv);
      const auto cols = level_columns(N, s);
      EXPECT_EQ(f.level_diag(lv).size(), cols.size());
      seen.insert(cols.begin(), cols.end());
      EXPECT_EQ(f.off_count(s), N / s - 1);
    }
    EXPECT_EQ(seen.size(), N);
    EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), N);
  }
}

TEST(LeveledFactorLayout, FillExistsIffBothNeighbours) {
  for (std::size_t N = 1; N <= 70; ++N)
    for (std::size_t s = 1; 2 * s <= N; s *= 2) {
      // fill Ê(2s, k) is produced by column (2k+1)s, which has both neighbours
      std::set<std::size_t> produced;
      for (auto i : level_columns(N, s))
        if (i > s && i + s <= N)
          produced.insert((i - s) / (2 * s));
      std::set<std::size_t> stored;
      for (std::size_t k = 1; k <= N / (2 * s) - 1; ++k)
        stored.insert(k);
      EXPECT_EQ(produced, stored) << "N=" << N << " s=" << s;
    }
}

TEST(Io, BtriRoundTripBothPrecisions) {
  const auto md = generate_spd<double>(4, 3, 2);
  std::stringstream ss;
  write_btri(ss, md);
  auto back = read_btri(ss);
  ASSERT_TRUE(std::holds_alternative<BlockTridiag<double>>(back));
  const auto& bd = std::get<BlockTridiag<double>>(back);
  EXPECT_EQ(bd.diag_blocks(), md.diag_blocks());
  EXPECT_EQ(bd.offdiag_blocks(), md.offdiag_blocks());

  const auto mf = generate_spd<float>(3, 2, 2);
  std::stringstream sf;
  write_btri(sf, mf);
  auto backf = read_btri(sf);
  ASSERT_TRUE(std::holds_alternative<BlockTridiag<float>>(backf));
  EXPECT_EQ(std::get<BlockTridiag<float>>(backf).offdiag_blocks(), mf.offdiag_blocks());
}

TEST(Io, BtriHeaderIsLittleEndian) {
  std::stringstream ss;
  write_btri(ss, BlockTridiag<double>::identity(2, 1));
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.substr(0, 4), "BTRI");
  EXPECT_EQ(bytes[4], 1); // version
  EXPECT_EQ(bytes[8], 8); // scalar bytes
  EXPECT_EQ(bytes[12], 2); // N
  EXPECT_EQ(bytes[20], 1); // n
  EXPECT_EQ(bytes.size(), 28u + 3 * 8);
  // 1.0 as binary64, little-endian: last byte 0x3f
  EXPECT_EQ(static_cast<unsigned char>(bytes[28 + 7]), 0x3f);
}

TEST(Io, RejectsCorruptInput) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_btri(bad), FormatError);
  std::stringstream ss;
  write_btri(ss, BlockTridiag<double>::identity(3, 2));
  std::string s = ss.str();
  std::stringstream truncated(s.substr(0, s.size() - 5));
  EXPECT_THROW(read_btri(truncated), FormatError);
  s[8] = 5;
  std::stringstream wrong_tag(s);
  EXPECT_THROW(read_btri(wrong_tag), FormatError);
}

TEST(Io, BrhsRoundTripThroughFile) {
  const auto x = generate_rhs<double>(6, 2, 3);
  const auto path = (std::filesystem::temp_directory_path() / "btchol_test.brhs").string();
  save_brhs(path, x, 3, 2);
  const auto f = load_brhs(path);
  EXPECT_EQ(f.num_blocks, 3u);
  EXPECT_EQ(f.block_size, 2u);
  EXPECT_EQ(std::get<DenseBlock<double>>(f.values), x);
  std::remove(path.c_str());
  EXPECT_THROW(save_brhs(path, x, 4, 2), ShapeMismatch);
  EXPECT_THROW(load_brhs("/nonexistent/dir/file.brhs"), FormatError);
}
