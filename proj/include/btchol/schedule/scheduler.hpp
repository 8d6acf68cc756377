#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <vector>

#include "btchol/schedule/executor.hpp"
#include "btchol/schedule/workers.hpp"

namespace btchol {

enum class ExecPolicy {
  level_synchronous, // parallel-for over the columns of a level, barrier between levels
  dag,               // kernel-level dependency graph, no level barriers
};

/// One block write made by a column task, for conflict analysis.
struct WriteRecord {
  std::size_t level;
  std::size_t column;
  BlockId block;
  bool accumulate;
};

/// Thread-safe record of every block write of an instrumented run.
class WriteLog {
public:
  void record(const WriteRecord& r) {
    std::lock_guard lock(mu_);
    records_.push_back(r);
  }

  std::vector<WriteRecord> records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  void clear() {
    std::lock_guard lock(mu_);
    records_.clear();
  }

  /// Largest number of distinct tasks of one level writing one block.
  std::size_t max_writers_per_block() const {
    std::size_t best = 0;
    for (const auto& [key, tasks] : writers(false))
      best = std::max(best, tasks.size());
    return best;
  }

  /// (level, block) pairs written by more than one task of that level.
  std::size_t same_level_conflicts() const { return conflicts(false); }

  /// Conflicts that involve at least one non-accumulating write; these are
  /// races even with a linearizable accumulate.
  std::size_t exclusive_conflicts() const { return conflicts(true); }

private:
  using Key = std::pair<std::size_t, BlockId>;

  std::map<Key, std::set<std::size_t>> writers(bool exclusive_only) const {
    std::lock_guard lock(mu_);
    std::map<Key, std::set<std::size_t>> all, plain;
    for (const auto& r : records_) {
      all[{r.level, r.block}].insert(r.column);
      if (!r.accumulate)
        plain[{r.level, r.block}].insert(r.column);
    }
    if (!exclusive_only)
      return all;
    std::map<Key, std::set<std::size_t>> out;
    for (const auto& [key, tasks] : plain)
      out[key] = all[key];
    return out;
  }

  std::size_t conflicts(bool exclusive_only) const {
    std::size_t c = 0;
    for (const auto& [key, tasks] : writers(exclusive_only))
      c += tasks.size() > 1;
    return c;
  }

  mutable std::mutex mu_;
  std::vector<WriteRecord> records_;
};

/// Owns the worker pool and the execution policy for factor/solve calls.
/// Not reentrant: one factorization or solve at a time per scheduler.
class Scheduler {
public:
  explicit Scheduler(Workers workers = Workers(1),
                     ExecPolicy policy = ExecPolicy::level_synchronous)
      : workers_(workers), policy_(policy) {}

  const Workers& workers() const noexcept { return workers_; }
  ExecPolicy policy() const noexcept { return policy_; }

  WorkerPool& pool() {
    if (!pool_)
      pool_ = std::make_unique<WorkerPool>(workers_.threads());
    return *pool_;
  }

  /// Optional instrumentation sink; null disables recording.
  void set_write_log(WriteLog* log) noexcept { log_ = log; }
  WriteLog* write_log() const noexcept { return log_; }

private:
  Workers workers_;
  ExecPolicy policy_;
  std::unique_ptr<WorkerPool> pool_;
  WriteLog* log_ = nullptr;
};

/// Per-task cost units of a parallel run and the resulting cost figures.
/// `total_units` is all work done; `critical_units` is the wave-model
/// critical path for the run's worker count.
struct CostReport {
  std::vector<std::vector<std::uint64_t>> task_units; // [phase or level][task]
  std::vector<std::uint64_t> serial_units;            // work outside parallel regions
  std::uint64_t total_units = 0;
  std::uint64_t critical_units = 0;

  void finalize(const Workers& w) {
    total_units = 0;
    critical_units = 0;
    for (const auto& level : task_units) {
      total_units += std::accumulate(level.begin(), level.end(), std::uint64_t{0});
      critical_units += wave_cost(level, w);
    }
    for (auto u : serial_units) {
      total_units += u;
      critical_units += u;
    }
  }
};

/// Completion events, one per stride level, fired by a running
/// factorization so that a solve can start on finished levels.
class LevelEvents {
public:
  explicit LevelEvents(std::size_t levels) : done_(levels, false) {}

  std::size_t levels() const noexcept { return done_.size(); }

  void signal(std::size_t level) {
    {
      std::lock_guard lock(mu_);
      done_.at(level - 1) = true;
    }
    cv_.notify_all();
  }

  /// Marks the run as ended; levels not yet signalled will never be.
  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  bool is_done(std::size_t level) const {
    std::lock_guard lock(mu_);
    return done_.at(level - 1);
  }

  /// Blocks until `level` completes. Throws IncompleteFactor if the run ended
  /// without it or the optional timeout passes.
  void wait(std::size_t level,
            std::chrono::milliseconds timeout = std::chrono::milliseconds::max()) const {
    std::unique_lock lock(mu_);
    auto ok = [&] { return done_.at(level - 1) || closed_; };
    if (timeout == std::chrono::milliseconds::max())
      cv_.wait(lock, ok);
    else
      cv_.wait_for(lock, timeout, ok);
    if (!done_.at(level - 1))
      throw IncompleteFactor("level " + std::to_string(level) + " of the factorization never completed");
  }

private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<bool> done_;
  bool closed_ = false;
};

} // namespace btchol
