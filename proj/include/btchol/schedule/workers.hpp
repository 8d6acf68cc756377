#pragma once

#include <algorithm>
#include <charconv>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "btchol/error.hpp"

namespace btchol {

/// Worker count p used both for execution and for the cost model. The
/// unbounded value stands for "enough workers for every task of a level".
class Workers {
public:
  explicit Workers(std::size_t count) : count_(count) {
    if (count == 0)
      throw ShapeMismatch("Workers: count must be >= 1");
  }
  static Workers unbounded() { return Workers(); }

  /// Accepts a positive integer or "inf".
  static Workers parse(std::string_view text) {
    if (text == "inf" || text == "INF" || text == "unbounded")
      return unbounded();
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0)
      throw ShapeMismatch("invalid worker count '" + std::string(text) + "'");
    return Workers(v);
  }

  bool is_unbounded() const noexcept { return !count_; }
  /// Finite count; unbounded maps to SIZE_MAX.
  std::size_t count() const noexcept { return count_.value_or(std::numeric_limits<std::size_t>::max()); }

  /// OS threads to use when executing. Unbounded means one per hardware thread.
  std::size_t threads() const noexcept {
    if (count_)
      return *count_;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }

  std::string to_string() const { return count_ ? std::to_string(*count_) : "inf"; }

  friend bool operator==(const Workers&, const Workers&) = default;

private:
  Workers() = default;
  std::optional<std::size_t> count_;
};

/// Level cost under the wave model: tasks (ascending column order) are issued
/// in waves of p and each wave costs its most expensive task.
inline std::uint64_t wave_cost(std::span<const std::uint64_t> tasks, const Workers& w) {
  std::uint64_t total = 0;
  const std::size_t p = std::min(w.count(), std::max<std::size_t>(tasks.size(), 1));
  for (std::size_t start = 0; start < tasks.size(); start += p) {
    const std::size_t end = std::min(tasks.size(), start + p);
    total += *std::max_element(tasks.begin() + start, tasks.begin() + end);
  }
  return total;
}

/// Persistent fork-join pool. The calling thread takes part as worker 0, so a
/// pool of size 1 starts no threads at all.
///
/// `parallel_for` returns only after every index ran (a barrier). The first
/// exception thrown by a task is rethrown in the caller; later tasks of the
/// same call are skipped.
class WorkerPool {
public:
  explicit WorkerPool(std::size_t threads) : size_(std::max<std::size_t>(1, threads)) {
    threads_.reserve(size_ - 1);
    for (std::size_t id = 1; id < size_; ++id)
      threads_.emplace_back([this, id] { loop(id); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    wake_.notify_all();
    threads_.clear(); // joins
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const noexcept { return size_; }

  /// Runs fn(index, worker) for index in [0, count).
  template <typename F>
  void parallel_for(std::size_t count, F&& fn) {
    if (count == 0)
      return;
    if (size_ == 1 || count == 1) {
      for (std::size_t k = 0; k < count; ++k)
        fn(k, std::size_t{0});
      return;
    }
    std::unique_lock lock(mu_);
    job_ = [&fn](std::size_t k, std::size_t w) { fn(k, w); };
    count_ = count;
    next_ = 0;
    error_ = nullptr;
    busy_ = size_ - 1;
    ++generation_;
    lock.unlock();
    wake_.notify_all();

    drain(0);

    lock.lock();
    done_.wait(lock, [this] { return busy_ == 0; });
    job_ = nullptr;
    if (error_)
      std::rethrow_exception(std::exchange(error_, nullptr));
  }

private:
  void drain(std::size_t worker) {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mu_);
        if (next_ >= count_ || error_)
          return;
        k = next_++;
      }
      try {
        job_(k, worker);
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_)
          error_ = std::current_exception();
      }
    }
  }

  void loop(std::size_t id) {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mu_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_)
          return;
        seen = generation_;
      }
      drain(id);
      {
        std::lock_guard lock(mu_);
        --busy_;
      }
      done_.notify_one();
    }
  }

  std::size_t size_;
  std::vector<std::jthread> threads_;
  std::mutex mu_;
  std::condition_variable wake_, done_;
  std::function<void(std::size_t, std::size_t)> job_;
  std::size_t count_ = 0, next_ = 0, busy_ = 0, generation_ = 0;
  std::exception_ptr error_;
  bool stop_ = false;
};

} // namespace btchol
