#pragma once

#include <atomic>
#include <cstdint>

namespace btchol {

/// Exact operation counter in flop-thirds (1 flop = 3 units), so that the
/// n^3/3 cost of a Cholesky factorization stays an integer.
///
/// Shareable across workers: increments are relaxed atomics. Read the value
/// after the run has joined.
class FlopMeter {
public:
  FlopMeter() = default;
  FlopMeter(const FlopMeter&) = delete;
  FlopMeter& operator=(const FlopMeter&) = delete;

  void add(std::uint64_t units) noexcept { units_.fetch_add(units, std::memory_order_relaxed); }
  std::uint64_t units() const noexcept { return units_.load(std::memory_order_relaxed); }
  double flops() const noexcept { return static_cast<double>(units()) / 3.0; }

private:
  std::atomic<std::uint64_t> units_{0};
};

/// Kernel charges, in thirds. Shapes follow the usual BLAS naming:
/// potrf on n x n, trsm of an m x n block against an n x n triangle,
/// syrk producing m x m from m x n, gemm of (m x n)(n x p).
namespace units {
constexpr std::uint64_t potrf(std::uint64_t n) { return n * n * n; }
constexpr std::uint64_t trsm(std::uint64_t m, std::uint64_t n) { return 3 * m * n * n; }
constexpr std::uint64_t syrk(std::uint64_t m, std::uint64_t n) { return 3 * m * m * n; }
constexpr std::uint64_t gemm(std::uint64_t m, std::uint64_t n, std::uint64_t p) {
  return 6 * m * n * p;
}
} // namespace units

} // namespace btchol
