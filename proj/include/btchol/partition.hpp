#pragma once

// Partition strategy: p chunks separated by p-1 pivot blocks. Chunks are
// eliminated independently, then the pivot chain is factored sequentially.

#include <boost/rational.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "btchol/block_sparse.hpp"
#include "btchol/block_tridiag.hpp"
#include "btchol/kernels.hpp"
#include "btchol/permutation.hpp"
#include "btchol/schedule/scheduler.hpp"

namespace btchol {

using Rational = boost::rational<std::int64_t>;

/// Phase costs in units of n^3 (closed forms):
///   chunk 1: 7 N_1 - 3, chunk k > 1: 19 N_k - 3, pivot chain: 10 p - 16,
/// and 7N - 6 for the single-chunk case.
namespace partition_cost {
constexpr std::int64_t first(std::int64_t n1) { return 7 * n1 - 3; }
constexpr std::int64_t other(std::int64_t nk) { return 19 * nk - 3; }
constexpr std::int64_t sequential(std::int64_t p) { return p > 1 ? 10 * p - 16 : 0; }
} // namespace partition_cost

struct PartitionPlan {
  std::size_t N = 0;
  std::vector<std::size_t> sizes;        // N_1..N_p
  std::uint64_t parallel_units = 0;      // max chunk cost, n = 1
  std::uint64_t sequential_units = 0;    // pivot chain, n = 1
  std::uint64_t predicted_cost_units = 0; // parallel + sequential, n = 1

  std::size_t p() const noexcept { return sizes.size(); }
};

inline void check_partition_feasible(std::size_t N, std::size_t p) {
  if (p == 0)
    throw InfeasiblePartition("partition count must be >= 1");
  if (N < 2 * p - 1)
    throw InfeasiblePartition("N = " + std::to_string(N) + " is too small for p = " +
                              std::to_string(p) + " partitions (need N >= 2p-1)");
}

/// Builds a plan from explicit sizes and fills in the predicted costs.
inline PartitionPlan make_partition_plan(std::size_t N, std::vector<std::size_t> sizes) {
  (void)partition_permutation(N, sizes); // validates
  PartitionPlan plan;
  plan.N = N;
  plan.sizes = std::move(sizes);
  const std::size_t p = plan.p();
  if (p == 1) {
    plan.parallel_units = 7 * N - 6;
  } else {
    std::int64_t worst = partition_cost::first(static_cast<std::int64_t>(plan.sizes[0]));
    for (std::size_t k = 1; k < p; ++k)
      worst = std::max(worst, partition_cost::other(static_cast<std::int64_t>(plan.sizes[k])));
    plan.parallel_units = static_cast<std::uint64_t>(worst);
    plan.sequential_units = static_cast<std::uint64_t>(partition_cost::sequential(p));
  }
  plan.predicted_cost_units = plan.parallel_units + plan.sequential_units;
  return plan;
}

/// Continuous optimum (N_1*, N_k*) balancing 7 N_1 - 3 = 19 N_k - 3 under
/// N_1 + (p-1) N_k = N - (p-1).
inline std::pair<Rational, Rational> continuous_optimum(std::size_t N, std::size_t p) {
  check_partition_feasible(N, p);
  const auto Ni = static_cast<std::int64_t>(N), pi = static_cast<std::int64_t>(p);
  const Rational nk(7 * (Ni - pi + 1), 7 * pi + 12);
  return {nk * Rational(19, 7), nk};
}

/// Rounds N_k* down and up, derives N_1 from the size constraint, and keeps
/// the candidate with the smaller maximum phase cost. Ties go to the larger
/// N_k.
inline PartitionPlan optimal_partition(std::size_t N, std::size_t p) {
  check_partition_feasible(N, p);
  if (p == 1)
    return make_partition_plan(N, {N});
  const auto nk_star = continuous_optimum(N, p).second;
  const auto lo = static_cast<std::size_t>(nk_star.numerator() / nk_star.denominator());
  std::optional<std::size_t> best_nk;
  std::int64_t best_cost = 0;
  for (std::size_t nk : {lo + 1, lo}) { // larger first so ties keep it
    if (nk == 0 || (p - 1) * (nk + 1) >= N)
      continue;
    const std::size_t n1 = N - (p - 1) * (nk + 1);
    const std::int64_t cost =
        std::max(partition_cost::first(static_cast<std::int64_t>(n1)),
                 partition_cost::other(static_cast<std::int64_t>(nk)));
    if (!best_nk || cost < best_cost) {
      best_nk = nk;
      best_cost = cost;
    }
  }
  const std::size_t nk = best_nk.value_or(1);
  std::vector<std::size_t> sizes(p, nk);
  sizes[0] = N - (p - 1) * (nk + 1);
  return make_partition_plan(N, std::move(sizes));
}

/// Limit of the partition speedup for N -> infinity: 7p/19 + 12/19.
inline Rational max_speedup_partition(std::size_t p) {
  return Rational(7 * static_cast<std::int64_t>(p) + 12, 19);
}

/// Partition-permuted factor. Chunk k covers original blocks
/// first[k] .. first[k] + N_k - 1; pivot k (k >= 2) is the block just before
/// chunk k. Per-k arrays are indexed 1..p and unused entries stay empty.
template <Scalar T>
struct PartitionFactor {
  struct Chunk {
    std::size_t first = 0;
    std::vector<DenseBlock<T>> Dhat; // N_k
    std::vector<DenseBlock<T>> Ehat; // N_k - 1, L(first+j, first+j-1)
    std::vector<DenseBlock<T>> Bhat; // N_k for k > 1, L(pivot_k, first+j-1)
  };

  std::size_t block_size = 0;
  std::size_t N = 0;
  std::vector<std::size_t> sizes;
  std::vector<Chunk> chunks;          // [k-1]
  std::vector<std::size_t> pivot;     // [k], original index of pivot k (k >= 2)
  std::vector<DenseBlock<T>> Ahat;    // [k], k = 2..p
  std::vector<DenseBlock<T>> Fhat;    // [k], k = 1..p-1, L(pivot_{k+1}, last_k)
  std::vector<DenseBlock<T>> Hhat;    // [k], k = 2..p-1, L(pivot_{k+1}, pivot_k)

  std::size_t p() const noexcept { return sizes.size(); }
  BlockPermutation permutation() const { return partition_permutation(N, sizes); }

  BlockSparse<T> lower_blocks() const {
    const auto perm = permutation();
    auto pos = [&](std::size_t i) { return perm.position_of(i); };
    BlockSparse<T> l(N, block_size);
    for (std::size_t k = 1; k <= p(); ++k) {
      const Chunk& c = chunks[k - 1];
      for (std::size_t j = 0; j < c.Dhat.size(); ++j) {
        l.set(pos(c.first + j), pos(c.first + j), c.Dhat[j]);
        if (j + 1 < c.Dhat.size())
          l.set(pos(c.first + j + 1), pos(c.first + j), c.Ehat[j]);
        if (k > 1)
          l.set(pos(pivot[k]), pos(c.first + j), c.Bhat[j]);
      }
      if (k > 1)
        l.set(pos(pivot[k]), pos(pivot[k]), Ahat[k]);
      if (k < p())
        l.set(pos(pivot[k + 1]), pos(c.first + c.Dhat.size() - 1), Fhat[k]);
      if (k > 1 && k < p())
        l.set(pos(pivot[k + 1]), pos(pivot[k]), Hhat[k]);
    }
    return l;
  }
};

namespace detail {

/// Records which chunk task first wrote each factor block during the
/// parallel phase and rejects a write by any other task.
class OwnershipTracker {
public:
  void claim(const BlockId& b, std::size_t owner) {
    std::lock_guard lock(mu_);
    auto [it, fresh] = owner_.emplace(b, owner);
    if (!fresh && it->second != owner)
      throw std::logic_error("partition block " + b.to_string() + " written by chunks " +
                             std::to_string(it->second) + " and " + std::to_string(owner));
  }

private:
  std::mutex mu_;
  std::map<BlockId, std::size_t> owner_;
};

} // namespace detail

/// Two-phase partition factorization. The chunk tasks run as a parallel-for
/// on `sched`; the pivot chain runs on the calling thread afterwards. Report:
/// one parallel phase with a task per chunk, one serial entry.
///
/// Ownership of factor blocks is checked when a write log is attached or in
/// builds without NDEBUG.
template <Scalar T>
PartitionFactor<T> factor_partition(const BlockTridiag<T>& m, const PartitionPlan& plan,
                                    Scheduler& sched, FlopMeter& meter,
                                    CostReport* report = nullptr) {
  const std::size_t N = m.num_blocks(), n = m.block_size(), p = plan.p();
  if (plan.N != N)
    throw ShapeMismatch("factor_partition: plan was made for N = " + std::to_string(plan.N));
  (void)partition_permutation(N, plan.sizes);

  PartitionFactor<T> f;
  f.block_size = n;
  f.N = N;
  f.sizes = plan.sizes;
  f.chunks.resize(p);
  f.pivot.assign(p + 1, 0);
  f.Ahat.assign(p + 1, DenseBlock<T>());
  f.Fhat.assign(p + 1, DenseBlock<T>());
  f.Hhat.assign(p + 1, DenseBlock<T>());
  std::size_t next = 1;
  for (std::size_t k = 1; k <= p; ++k) {
    if (k > 1)
      f.pivot[k] = next++;
    f.chunks[k - 1].first = next;
    next += plan.sizes[k - 1];
  }

  WriteLog* log = sched.write_log();
#ifdef NDEBUG
  const bool track = log != nullptr;
#else
  const bool track = true;
#endif
  detail::OwnershipTracker owners;
  auto wrote = [&](std::size_t k, BlockId b) {
    if (track)
      owners.claim(b, k);
    if (log)
      log->record({1, k, b, false});
  };
  auto factor_block = [&](DenseBlock<T>& d, std::size_t i, const char* what, FlopMeter& mt) {
    try {
      potrf_inplace(d, mt);
    } catch (const NotPositiveDefinite& e) {
      throw e.located(std::string(what) + " block " + std::to_string(i), i);
    }
  };

  std::vector<std::uint64_t> chunk_units(p, 0);
  sched.pool().parallel_for(p, [&](std::size_t t, std::size_t) {
    const std::size_t k = t + 1, Nk = plan.sizes[t];
    auto& c = f.chunks[t];
    const std::size_t first = c.first, last = first + Nk - 1;
    FlopMeter local;
    c.Dhat.reserve(Nk);
    for (std::size_t j = 0; j < Nk; ++j)
      c.Dhat.push_back(m.diag(first + j));
    DenseBlock<T> bt;
    if (k > 1) {
      f.Ahat[k] = m.diag(f.pivot[k]);
      bt = m.offdiag(f.pivot[k]).transposed();
      wrote(k, BlockId::L(f.pivot[k], f.pivot[k]));
    }
    for (std::size_t j = 0; j < Nk; ++j) {
      const std::size_t i = first + j;
      factor_block(c.Dhat[j], i, "chunk", local);
      wrote(k, BlockId::L(i, i));
      if (j + 1 < Nk) {
        DenseBlock<T> e = m.offdiag(i);
        trsm_right_inplace(e, c.Dhat[j], local);
        syrk_down_inplace(c.Dhat[j + 1], e, false, local);
        c.Ehat.push_back(std::move(e));
        wrote(k, BlockId::L(i + 1, i));
      }
      if (k > 1) {
        trsm_right_inplace(bt, c.Dhat[j], local);
        syrk_down_inplace(f.Ahat[k], bt, false, local);
        wrote(k, BlockId::L(f.pivot[k], i));
        DenseBlock<T> next_bt;
        if (j + 1 < Nk)
          gemm_neg_inplace(next_bt, bt, Trans::no, c.Ehat.back(), Trans::yes, false, local);
        c.Bhat.push_back(std::move(bt));
        bt = std::move(next_bt);
      }
    }
    if (k < p) {
      DenseBlock<T> fk = m.offdiag(last);
      trsm_right_inplace(fk, c.Dhat.back(), local);
      f.Fhat[k] = std::move(fk);
      wrote(k, BlockId::L(last + 1, last));
    }
    if (k > 1 && k < p) {
      gemm_neg_inplace(f.Hhat[k], f.Fhat[k], Trans::no, c.Bhat.back(), Trans::yes, false, local);
      wrote(k, BlockId::L(f.pivot[k + 1], f.pivot[k]));
    }
    chunk_units[t] = local.units();
    meter.add(local.units());
  });

  // pivot chain; the F̂ downdates of the pivots were deferred to here
  FlopMeter tail;
  for (std::size_t k = 2; k <= p; ++k) {
    syrk_down_inplace(f.Ahat[k], f.Fhat[k - 1], false, tail);
    factor_block(f.Ahat[k], f.pivot[k], "pivot", tail);
    if (k < p) {
      trsm_right_inplace(f.Hhat[k], f.Ahat[k], tail);
      syrk_down_inplace(f.Ahat[k + 1], f.Hhat[k], false, tail);
    }
  }
  meter.add(tail.units());

  if (report) {
    report->task_units = {std::move(chunk_units)};
    report->serial_units = {tail.units()};
    report->finalize(sched.workers());
  }
  return f;
}

} // namespace btchol
