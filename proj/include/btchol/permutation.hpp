#pragma once

#include <bit>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "btchol/error.hpp"

namespace btchol {

/// Block reordering P. `order()[k]` is the (1-based) original block placed at
/// new position k (0-based); `position_of(i)` is the inverse map.
class BlockPermutation {
public:
  BlockPermutation() = default;

  explicit BlockPermutation(std::vector<std::size_t> order) : order_(std::move(order)) {
    const std::size_t N = order_.size();
    position_.assign(N, N);
    for (std::size_t k = 0; k < N; ++k) {
      const std::size_t b = order_[k];
      if (b < 1 || b > N || position_[b - 1] != N)
        throw ShapeMismatch("BlockPermutation: not a bijection on 1..N");
      position_[b - 1] = k;
    }
  }

  static BlockPermutation identity(std::size_t N) {
    std::vector<std::size_t> o(N);
    std::iota(o.begin(), o.end(), std::size_t{1});
    return BlockPermutation(std::move(o));
  }

  std::size_t size() const noexcept { return order_.size(); }
  std::span<const std::size_t> order() const noexcept { return order_; }
  std::size_t original_at(std::size_t position) const { return order_.at(position); }
  std::size_t position_of(std::size_t block) const { return position_.at(block - 1); }

  BlockPermutation inverse() const {
    std::vector<std::size_t> o(size());
    for (std::size_t k = 0; k < size(); ++k)
      o[k] = position_[k] + 1;
    return BlockPermutation(std::move(o));
  }

  /// (this o other): applies `other` first, then this.
  BlockPermutation compose(const BlockPermutation& other) const {
    if (other.size() != size())
      throw ShapeMismatch("BlockPermutation::compose: size mismatch");
    std::vector<std::size_t> o(size());
    for (std::size_t k = 0; k < size(); ++k)
      o[k] = other.order_[order_[k] - 1];
    return BlockPermutation(std::move(o));
  }

  bool is_identity() const noexcept {
    for (std::size_t k = 0; k < size(); ++k)
      if (order_[k] != k + 1)
        return false;
    return true;
  }

  friend bool operator==(const BlockPermutation&, const BlockPermutation&) = default;

private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_;
};

/// Number of stride levels ceil-free: floor(log2 N) + 1.
constexpr std::size_t num_levels(std::size_t N) noexcept { return std::bit_width(N); }

/// Odd blocks first, then even ones (one odd/even split).
inline BlockPermutation single_stage_permutation(std::size_t N) {
  std::vector<std::size_t> o;
  o.reserve(N);
  for (std::size_t i = 1; i <= N; i += 2)
    o.push_back(i);
  for (std::size_t i = 2; i <= N; i += 2)
    o.push_back(i);
  return BlockPermutation(std::move(o));
}

/// Nested-dissection order: columns s, 3s, 5s, ... for s = 1, 2, 4, ...
inline BlockPermutation multi_stage_permutation(std::size_t N) {
  if (N == 0)
    throw ShapeMismatch("multi_stage_permutation: N must be >= 1");
  std::vector<std::size_t> o;
  o.reserve(N);
  for (std::size_t s = 1; s <= N; s *= 2)
    for (std::size_t i = s; i <= N; i += 2 * s)
      o.push_back(i);
  return BlockPermutation(std::move(o));
}

/// Chunks of `sizes` in original order, separated by one pivot block each;
/// the p-1 pivots are moved to the end in ascending order.
inline BlockPermutation partition_permutation(std::size_t N, std::span<const std::size_t> sizes) {
  if (sizes.empty())
    throw InfeasiblePartition("partition_permutation: need at least one partition");
  std::size_t total = sizes.size() - 1;
  for (std::size_t s : sizes) {
    if (s == 0)
      throw InfeasiblePartition("partition_permutation: empty partition");
    total += s;
  }
  if (total != N)
    throw InfeasiblePartition("partition_permutation: sizes plus pivots sum to " +
                              std::to_string(total) + ", expected " + std::to_string(N));
  std::vector<std::size_t> o, pivots;
  o.reserve(N);
  std::size_t next = 1;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (std::size_t j = 0; j < sizes[k]; ++j)
      o.push_back(next++);
    if (k + 1 < sizes.size())
      pivots.push_back(next++);
  }
  o.insert(o.end(), pivots.begin(), pivots.end());
  return BlockPermutation(std::move(o));
}

} // namespace btchol
