#pragma once

// Single-stage (odd/even) factorization: odd columns are eliminated in
// parallel, the even columns then form a sequential chain coupled by fill.

#include <string>
#include <vector>

#include "btchol/block_sparse.hpp"
#include "btchol/block_tridiag.hpp"
#include "btchol/kernels.hpp"
#include "btchol/permutation.hpp"
#include "btchol/schedule/scheduler.hpp"

namespace btchol {

/// Factor of P Psi P^T for the odd/even permutation.
///
/// Ehat[k-1] holds Ê_k: for odd k the block L(k+1, k), for even k the
/// transpose of L(k, k+1). Hhat[k-1] holds H_k = L(2k+2, 2k), the fill
/// coupling consecutive even columns.
template <Scalar T>
struct SingleStageFactor {
  std::size_t block_size = 0;
  std::vector<DenseBlock<T>> Dhat; // by original index
  std::vector<DenseBlock<T>> Ehat; // N-1
  std::vector<DenseBlock<T>> Hhat; // floor(N/2)-1 (empty when N < 4)

  std::size_t num_blocks() const noexcept { return Dhat.size(); }
  BlockPermutation permutation() const { return single_stage_permutation(num_blocks()); }

  BlockSparse<T> lower_blocks() const {
    const std::size_t N = num_blocks();
    const auto perm = permutation();
    auto pos = [&](std::size_t i) { return perm.position_of(i); };
    BlockSparse<T> l(N, block_size);
    for (std::size_t i = 1; i <= N; ++i)
      l.set(pos(i), pos(i), Dhat[i - 1]);
    for (std::size_t k = 1; k < N; ++k) {
      if (k % 2 == 1)
        l.set(pos(k + 1), pos(k), Ehat[k - 1]);
      else
        l.set(pos(k), pos(k + 1), Ehat[k - 1].transposed());
    }
    for (std::size_t k = 1; k <= Hhat.size(); ++k)
      l.set(pos(2 * k + 2), pos(2 * k), Hhat[k - 1]);
    return l;
  }
};

/// Runs the odd-column phase and the even downdates as parallel-for loops on
/// `sched`, then the even chain on the calling thread. The report has two
/// parallel phases and one serial entry.
template <Scalar T>
SingleStageFactor<T> factor_single_stage(const BlockTridiag<T>& m, Scheduler& sched,
                                         FlopMeter& meter, CostReport* report = nullptr) {
  const std::size_t N = m.num_blocks(), n = m.block_size();
  SingleStageFactor<T> f;
  f.block_size = n;
  f.Dhat = m.diag_blocks();
  f.Ehat = m.offdiag_blocks();
  f.Hhat.assign(N >= 4 ? N / 2 - 1 : 0, DenseBlock<T>(n, n));
  WriteLog* log = sched.write_log();
  auto D = [&](std::size_t i) -> DenseBlock<T>& { return f.Dhat[i - 1]; };
  auto E = [&](std::size_t k) -> DenseBlock<T>& { return f.Ehat[k - 1]; };
  auto factor_block = [&](std::size_t i, FlopMeter& mt) {
    try {
      potrf_inplace(D(i), mt);
    } catch (const NotPositiveDefinite& e) {
      throw e.located("block " + std::to_string(i), i);
    }
  };
  auto note = [&](std::size_t phase, std::size_t task, BlockId b) {
    if (log)
      log->record({phase, task, b, false});
  };

  // odd columns
  const std::size_t odd = (N + 1) / 2;
  std::vector<std::uint64_t> phase1(odd), phase2;
  sched.pool().parallel_for(odd, [&](std::size_t t, std::size_t) {
    const std::size_t i = 2 * t + 1;
    FlopMeter local;
    factor_block(i, local);
    note(1, i, BlockId::D(i));
    if (i + 1 <= N) {
      trsm_right_inplace(E(i), D(i), local);
      syrk_down_inplace(D(i + 1), E(i), false, local);
      note(1, i, BlockId::E(1, i));
      note(1, i, BlockId::D(i + 1));
    }
    if (i > 1) {
      trsm_left_inplace(E(i - 1), D(i), local);
      note(1, i, BlockId::E(1, i - 1));
    }
    if (i > 1 && i + 1 <= N) {
      gemm_neg_inplace(f.Hhat[(i - 1) / 2 - 1], E(i), Trans::no, E(i - 1), Trans::no, false, local);
      note(1, i, BlockId::L(i + 1, i - 1));
    }
    phase1[t] = local.units();
    meter.add(local.units());
  });

  // even downdates from the right neighbour
  const std::size_t evens = N >= 3 ? (N - 1) / 2 : 0;
  phase2.assign(evens, 0);
  sched.pool().parallel_for(evens, [&](std::size_t t, std::size_t) {
    const std::size_t i = 2 * t + 2;
    FlopMeter local;
    syrk_down_inplace(D(i), E(i), true, local);
    note(2, i, BlockId::D(i));
    phase2[t] = local.units();
    meter.add(local.units());
  });

  // sequential chain over the even columns
  FlopMeter tail;
  if (N >= 2)
    factor_block(2, tail);
  for (std::size_t i = 4; i <= N; i += 2) {
    DenseBlock<T>& h = f.Hhat[i / 2 - 2];
    trsm_right_inplace(h, D(i - 2), tail);
    syrk_down_inplace(D(i), h, false, tail);
    factor_block(i, tail);
  }
  meter.add(tail.units());

  if (report) {
    report->task_units = {std::move(phase1)};
    if (!phase2.empty())
      report->task_units.push_back(std::move(phase2));
    report->serial_units = {tail.units()};
    report->finalize(sched.workers());
  }
  return f;
}

} // namespace btchol
