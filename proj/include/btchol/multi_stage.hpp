#pragma once

// Multi-stage (nested-dissection) factorization and the leveled solve.

#include <bit>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "btchol/block_sparse.hpp"
#include "btchol/block_tridiag.hpp"
#include "btchol/kernels.hpp"
#include "btchol/permutation.hpp"
#include "btchol/schedule/scheduler.hpp"
#include "btchol/stage_program.hpp"

namespace btchol {

/// Factor of P Psi P^T for the multi-stage permutation P.
///
/// D̂ blocks are stored in permuted order, so the columns of one level form a
/// contiguous range. Ê(s, k) blocks are stored per level, k = 1..floor(N/s)-1;
/// level 1 starts as a copy of E, deeper levels hold fill and are allocated
/// up front.
template <Scalar T>
class LeveledFactor {
public:
  LeveledFactor() = default;

  explicit LeveledFactor(const BlockTridiag<T>& m)
      : n_(m.block_size()), N_(m.num_blocks()), perm_(multi_stage_permutation(N_)) {
    d_.resize(N_);
    for (std::size_t i = 1; i <= N_; ++i)
      d_[perm_.position_of(i)] = m.diag(i);
    level_begin_.push_back(0);
    for (std::size_t s = 1; s <= N_; s *= 2) {
      const std::size_t count = N_ / s - 1;
      std::vector<DenseBlock<T>> level;
      level.reserve(count);
      for (std::size_t k = 1; k <= count; ++k)
        level.push_back(s == 1 ? m.offdiag(k) : DenseBlock<T>(n_, n_));
      e_.push_back(std::move(level));
      level_begin_.push_back(level_begin_.back() + (N_ - s) / (2 * s) + 1);
    }
  }

  std::size_t block_size() const noexcept { return n_; }
  std::size_t num_blocks() const noexcept { return N_; }
  std::size_t num_levels() const noexcept { return e_.size(); }
  static constexpr std::size_t stride(std::size_t level) noexcept { return std::size_t{1} << (level - 1); }
  const BlockPermutation& permutation() const noexcept { return perm_; }

  /// D̂_i for original block index i.
  DenseBlock<T>& diag(std::size_t i) { return d_[perm_.position_of(i)]; }
  const DenseBlock<T>& diag(std::size_t i) const { return d_[perm_.position_of(i)]; }

  /// Ê(s, k).
  DenseBlock<T>& off(std::size_t s, std::size_t k) { return e_.at(level_of(s)).at(k - 1); }
  const DenseBlock<T>& off(std::size_t s, std::size_t k) const { return e_.at(level_of(s)).at(k - 1); }
  std::size_t off_count(std::size_t s) const { return e_.at(level_of(s)).size(); }

  /// Diagonal factors of one level (1-based), ascending column order.
  std::span<const DenseBlock<T>> level_diag(std::size_t level) const {
    return std::span<const DenseBlock<T>>(d_).subspan(level_begin_.at(level - 1),
                                                      level_begin_.at(level) - level_begin_.at(level - 1));
  }

  /// L̂ blocks at permuted positions: D̂_i on the diagonal, Ê(s, i/s) at
  /// (i+s, i) and Ê(s, i/s-1)^T at (i-s, i).
  BlockSparse<T> lower_blocks() const {
    BlockSparse<T> l(N_, n_);
    for (std::size_t s = 1; s <= N_; s *= 2)
      for (std::size_t i = s; i <= N_; i += 2 * s) {
        const std::size_t c = perm_.position_of(i);
        l.set(c, c, diag(i));
        if (i + s <= N_)
          l.set(perm_.position_of(i + s), c, off(s, i / s));
        if (i > s)
          l.set(perm_.position_of(i - s), c, off(s, i / s - 1).transposed());
      }
    return l;
  }

private:
  static std::size_t level_of(std::size_t s) { return static_cast<std::size_t>(std::countr_zero(s)); }

  std::size_t n_ = 0, N_ = 0;
  BlockPermutation perm_;
  std::vector<DenseBlock<T>> d_;
  std::vector<std::vector<DenseBlock<T>>> e_;
  std::vector<std::size_t> level_begin_;
};

namespace detail {

/// d += delta under the block's lock.
template <Scalar T>
void locked_add(DenseBlock<T>& d, const DenseBlock<T>& delta, std::mutex& mu) {
  std::lock_guard lock(mu);
  auto dst = d.data();
  auto src = delta.data();
  for (std::size_t k = 0; k < dst.size(); ++k)
    dst[k] += src[k];
}

template <Scalar T>
void apply_stage_op(LeveledFactor<T>& f, const StageOp& op, UpdateMode mode,
                    std::vector<std::mutex>& locks, FlopMeter& meter) {
  const std::size_t s = op.stride, i = op.column, n = f.block_size();
  const bool atomic = mode == UpdateMode::right_looking_atomic;
  switch (op.code) {
  case OpCode::pull_self:
    syrk_down_inplace(f.diag(i), f.off(s / 2, 2 * i / s), true, meter);
    break;
  case OpCode::potrf:
    try {
      potrf_inplace(f.diag(i), meter);
    } catch (const NotPositiveDefinite& e) {
      throw e.located("level " + std::to_string(std::bit_width(s)) + ", column " + std::to_string(i), i);
    }
    break;
  case OpCode::pull_right:
    syrk_down_inplace(f.diag(i + s), f.off(s / 2, 2 * i / s + 2), true, meter);
    break;
  case OpCode::trsm_right:
    trsm_right_inplace(f.off(s, i / s), f.diag(i), meter);
    break;
  case OpCode::push_right:
    if (atomic) {
      DenseBlock<T> delta(n, n);
      syrk_down_inplace(delta, f.off(s, i / s), false, meter);
      locked_add(f.diag(i + s), delta, locks[i + s - 1]);
    } else {
      syrk_down_inplace(f.diag(i + s), f.off(s, i / s), false, meter);
    }
    break;
  case OpCode::trsm_left:
    trsm_left_inplace(f.off(s, i / s - 1), f.diag(i), meter);
    break;
  case OpCode::push_left: {
    DenseBlock<T> delta(n, n);
    syrk_down_inplace(delta, f.off(s, i / s - 1), true, meter);
    locked_add(f.diag(i - s), delta, locks[i - s - 1]);
    break;
  }
  case OpCode::fill:
    gemm_neg_inplace(f.off(2 * s, (i - s) / (2 * s)), f.off(s, i / s), Trans::no,
                     f.off(s, i / s - 1), Trans::no, false, meter);
    break;
  default:
    throw ShapeMismatch("apply_stage_op: solve steps are not factor operations");
  }
}

inline void log_writes(WriteLog* log, const StageOp& op, std::size_t N, UpdateMode mode) {
  if (!log)
    return;
  const auto a = access_of(op, N, mode);
  const std::size_t level = static_cast<std::size_t>(std::bit_width(op.stride));
  for (const auto& b : a.writes)
    log->record({level, op.column, b, false});
  for (const auto& b : a.accumulates)
    log->record({level, op.column, b, true});
}

} // namespace detail

/// Factors `f` (freshly built from the matrix) in place. Fires
/// `events->signal(level)` after each level when given, and closes the
/// events on exit either way.
template <Scalar T>
void factor_multi_stage_into(LeveledFactor<T>& f, UpdateMode mode, Scheduler& sched,
                             FlopMeter& meter, CostReport* report = nullptr,
                             LevelEvents* events = nullptr) {
  struct Closer {
    LevelEvents* ev;
    ~Closer() {
      if (ev)
        ev->close();
    }
  } closer{events};

  const std::size_t N = f.num_blocks(), L = f.num_levels();
  std::vector<std::mutex> locks(N);
  std::vector<std::vector<std::uint64_t>> units(L);
  WriteLog* log = sched.write_log();

  if (sched.policy() == ExecPolicy::dag) {
    const TaskGraph g = build_task_graph(N, mode);
    std::vector<std::uint64_t> node_units(g.size(), 0);
    execute(
        g, sched.workers(),
        [&](const TaskNode& node) {
          FlopMeter local;
          detail::apply_stage_op(f, node.op, mode, locks, local);
          detail::log_writes(log, node.op, N, mode);
          node_units[node.id] = local.units();
          meter.add(local.units());
        },
        {TickMode::logical, false});
    for (std::size_t level = 1; level <= L; ++level)
      units[level - 1].assign(level_columns(N, LeveledFactor<T>::stride(level)).size(), 0);
    for (const auto& node : g.nodes())
      units[node.level - 1][(node.column() - node.op.stride) / (2 * node.op.stride)] +=
          node_units[node.id];
    if (events)
      for (std::size_t level = 1; level <= L; ++level)
        events->signal(level);
  } else {
    for (std::size_t level = 1; level <= L; ++level) {
      const std::size_t s = LeveledFactor<T>::stride(level);
      const auto cols = level_columns(N, s);
      units[level - 1].assign(cols.size(), 0);
      sched.pool().parallel_for(cols.size(), [&](std::size_t k, std::size_t) {
        FlopMeter local;
        for (const auto& op : column_program(N, s, cols[k], mode)) {
          detail::apply_stage_op(f, op, mode, locks, local);
          detail::log_writes(log, op, N, mode);
        }
        units[level - 1][k] = local.units();
        meter.add(local.units());
      });
      if (events)
        events->signal(level);
    }
  }
  if (report) {
    report->task_units = std::move(units);
    report->serial_units.clear();
    report->finalize(sched.workers());
  }
}

/// Multi-stage factorization; level iterations = floor(log2 N) + 1.
template <Scalar T>
LeveledFactor<T> factor_multi_stage(const BlockTridiag<T>& m, UpdateMode mode, Scheduler& sched,
                                    FlopMeter& meter, CostReport* report = nullptr) {
  LeveledFactor<T> f(m);
  factor_multi_stage_into(f, mode, sched, meter, report);
  return f;
}

/// A multi-stage factorization running on its own thread and scheduler,
/// publishing per-level completion events.
template <Scalar T>
class InFlightFactor {
public:
  InFlightFactor(const BlockTridiag<T>& m, UpdateMode mode, Workers workers, FlopMeter& meter)
      : factor_(std::make_unique<LeveledFactor<T>>(m)),
        events_(std::make_unique<LevelEvents>(factor_->num_levels())),
        sched_(std::make_unique<Scheduler>(workers)) {
    thread_ = std::jthread([this, mode, &meter] {
      try {
        factor_multi_stage_into(*factor_, mode, *sched_, meter, &report_, events_.get());
      } catch (...) {
        error_ = std::current_exception();
      }
    });
  }

  InFlightFactor(const InFlightFactor&) = delete;
  InFlightFactor& operator=(const InFlightFactor&) = delete;

  /// The factor under construction; levels are readable once signalled.
  const LeveledFactor<T>& factor() const noexcept { return *factor_; }
  const LevelEvents& events() const noexcept { return *events_; }

  /// Joins the factorization and rethrows its failure, if any.
  LeveledFactor<T> get(CostReport* report = nullptr) {
    if (thread_.joinable())
      thread_.join();
    if (error_)
      std::rethrow_exception(error_);
    if (report)
      *report = report_;
    return std::move(*factor_);
  }

  ~InFlightFactor() {
    if (thread_.joinable())
      thread_.join();
  }

private:
  std::unique_ptr<LeveledFactor<T>> factor_;
  std::unique_ptr<LevelEvents> events_;
  std::unique_ptr<Scheduler> sched_;
  CostReport report_;
  std::exception_ptr error_;
  std::jthread thread_;
};

/// Solves Psi x = b with the multi-stage factor: forward sweep over
/// ascending strides, backward sweep over descending ones.
///
/// With `events`, forward level l waits until the factorization signalled
/// level l, and the backward sweep waits for every level. Missing levels
/// raise IncompleteFactor.
///
/// The forward sweep is deterministic: each column writes its neighbour
/// contributions to private blocks, which are then applied per target in a
/// fixed order.
template <Scalar T>
DenseBlock<T> solve_multi_stage(const LeveledFactor<T>& f, const DenseBlock<T>& b,
                                Scheduler& sched, FlopMeter& meter, CostReport* report = nullptr,
                                const LevelEvents* events = nullptr) {
  const std::size_t N = f.num_blocks(), L = f.num_levels();
  auto y = split_rows(b, N, f.block_size());
  std::vector<std::vector<std::uint64_t>> units;
  WorkerPool& pool = sched.pool();

  for (std::size_t level = 1; level <= L; ++level) {
    if (events)
      events->wait(level);
    const std::size_t s = LeveledFactor<T>::stride(level);
    const auto cols = level_columns(N, s);
    std::vector<DenseBlock<T>> to_right(cols.size()), to_left(cols.size());
    std::vector<std::uint64_t> lu(cols.size());
    pool.parallel_for(cols.size(), [&](std::size_t k, std::size_t) {
      const std::size_t i = cols[k];
      FlopMeter local;
      trsm_left_inplace(y[i - 1], f.diag(i), local);
      if (i + s <= N)
        gemm_neg_inplace(to_right[k], f.off(s, i / s), Trans::no, y[i - 1], Trans::no, false, local);
      if (i > s)
        gemm_neg_inplace(to_left[k], f.off(s, i / s - 1), Trans::yes, y[i - 1], Trans::no, false,
                         local);
      lu[k] = local.units();
      meter.add(local.units());
    });
    // targets are the multiples of 2s; column j-s pushes right, j+s pushes left
    const std::size_t targets = N / (2 * s);
    pool.parallel_for(targets, [&](std::size_t t, std::size_t) {
      const std::size_t j = (t + 1) * 2 * s;
      auto acc = y[j - 1].data();
      for (const DenseBlock<T>* c : {&to_right[(j - 2 * s) / (2 * s)],
                                     j + s <= N ? &to_left[j / (2 * s)] : nullptr}) {
        if (!c)
          continue;
        auto src = c->data();
        for (std::size_t q = 0; q < acc.size(); ++q)
          acc[q] += src[q];
      }
    });
    units.push_back(std::move(lu));
  }

  for (std::size_t level = L; level >= 1; --level) {
    if (events)
      events->wait(level);
    const std::size_t s = LeveledFactor<T>::stride(level);
    const auto cols = level_columns(N, s);
    std::vector<std::uint64_t> lu(cols.size());
    pool.parallel_for(cols.size(), [&](std::size_t k, std::size_t) {
      const std::size_t i = cols[k];
      FlopMeter local;
      if (i + s <= N)
        gemm_neg_inplace(y[i - 1], f.off(s, i / s), Trans::yes, y[i + s - 1], Trans::no, true, local);
      if (i > s)
        gemm_neg_inplace(y[i - 1], f.off(s, i / s - 1), Trans::no, y[i - s - 1], Trans::no, true,
                         local);
      trsm_left_trans_inplace(y[i - 1], f.diag(i), local);
      lu[k] = local.units();
      meter.add(local.units());
    });
    units.push_back(std::move(lu));
  }

  if (report) {
    report->task_units = std::move(units);
    report->serial_units.clear();
    report->finalize(sched.workers());
  }
  return join_rows(y);
}

} // namespace btchol
