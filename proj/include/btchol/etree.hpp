#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "btchol/permutation.hpp"

namespace btchol {

/// Block elimination tree. Nodes are positions in elimination order
/// (0-based); `parent(v) == EliminationTree::none` marks a root.
class EliminationTree {
public:
  static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  EliminationTree() = default;
  explicit EliminationTree(std::vector<std::size_t> parent) : parent_(std::move(parent)) {
    for (std::size_t v = 0; v < parent_.size(); ++v)
      if (parent_[v] != none && parent_[v] <= v)
        throw ShapeMismatch("EliminationTree: parent must come later in elimination order");
  }

  std::size_t size() const noexcept { return parent_.size(); }
  std::size_t parent(std::size_t v) const { return parent_.at(v); }
  const std::vector<std::size_t>& parents() const noexcept { return parent_; }

  std::vector<std::size_t> roots() const {
    std::vector<std::size_t> r;
    for (std::size_t v = 0; v < size(); ++v)
      if (parent_[v] == none)
        r.push_back(v);
    return r;
  }

  /// Wave index of each node: leaves are 1, a parent is 1 + max over children.
  /// Nodes with equal wave can be eliminated concurrently.
  std::vector<std::size_t> node_levels() const {
    std::vector<std::size_t> lvl(size(), 1);
    // parents always come later, so one forward sweep settles every node
    for (std::size_t v = 0; v < size(); ++v)
      if (parent_[v] != none)
        lvl[parent_[v]] = std::max(lvl[parent_[v]], lvl[v] + 1);
    return lvl;
  }

  std::size_t height() const {
    const auto lvl = node_levels();
    return lvl.empty() ? 0 : *std::max_element(lvl.begin(), lvl.end());
  }

  std::vector<std::vector<std::size_t>> levels() const {
    const auto lvl = node_levels();
    std::vector<std::vector<std::size_t>> out(height());
    for (std::size_t v = 0; v < size(); ++v)
      out[lvl[v] - 1].push_back(v);
    return out;
  }

private:
  std::vector<std::size_t> parent_;
};

/// Natural ordering of a block tridiagonal pattern: a chain.
inline EliminationTree etree_block_tridiag_sequential(std::size_t N) {
  std::vector<std::size_t> parent(N);
  for (std::size_t v = 0; v < N; ++v)
    parent[v] = v + 1 < N ? v + 1 : EliminationTree::none;
  return EliminationTree(std::move(parent));
}

/// Elimination tree of P Psi P^T for the block tridiagonal pattern, using
/// Liu's ancestor-compression algorithm on the block graph.
inline EliminationTree etree_of_permuted(std::size_t N, const BlockPermutation& perm) {
  if (perm.size() != N)
    throw ShapeMismatch("etree_of_permuted: permutation size differs from N");
  const auto none = EliminationTree::none;
  std::vector<std::size_t> parent(N, none), ancestor(N, none);
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t b = perm.original_at(j);
    std::size_t nbr[2];
    std::size_t count = 0;
    if (b > 1)
      nbr[count++] = perm.position_of(b - 1);
    if (b < N)
      nbr[count++] = perm.position_of(b + 1);
    for (std::size_t t = 0; t < count; ++t) {
      std::size_t i = nbr[t];
      if (i >= j)
        continue;
      while (i != none && i != j) {
        const std::size_t next = ancestor[i];
        ancestor[i] = j;
        if (next == none)
          parent[i] = j;
        i = next;
      }
    }
  }
  return EliminationTree(std::move(parent));
}

} // namespace btchol
