#pragma once

// Per-column operation lists of the multi-stage (nested-dissection) ordering.
// The level-synchronous factorization, the dependency-graph builder and the
// graph executor all walk the same lists, so they cannot drift apart.
//
// Levels use stride s = 1, 2, 4, ...; the columns of a level are s, 3s, 5s, ...
// Ê(s, k) couples columns ks and (k+1)s and is stored for k = 1..floor(N/s)-1.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace btchol {

enum class UpdateMode {
  deferred,             // neighbour downdates pulled one level later (left-looking)
  right_looking_atomic, // both downdates pushed at once through an accumulate
};

inline const char* to_string(UpdateMode m) {
  return m == UpdateMode::deferred ? "deferred" : "atomic";
}

enum class OpCode : std::uint8_t {
  pull_self,  // D̂_i     -= Ê(s/2, 2i/s)^T Ê(s/2, 2i/s)         deferred, s > 1, i <= N - s/2
  potrf,      // D̂_i      = chol(D̂_i)
  pull_right, // D̂_{i+s} -= Ê(s/2, 2i/s+2)^T Ê(s/2, 2i/s+2)     deferred, s > 1, i + s <= N - s/2
  trsm_right, // Ê(s, i/s) = Ê(s, i/s) D̂_i^{-T}                 i + s <= N
  push_right, // D̂_{i+s} -= Ê(s, i/s) Ê(s, i/s)^T               i + s <= N
  trsm_left,  // Ê(s, i/s-1) = D̂_i^{-1} Ê(s, i/s-1)             i > s
  push_left,  // D̂_{i-s} -= Ê(s, i/s-1)^T Ê(s, i/s-1)           atomic mode, i > s
  fill,       // Ê(2s, (i-s)/2s) = -Ê(s, i/s) Ê(s, i/s-1)       i > s, i + s <= N
  fwd_solve,  // y_i = D̂_i^{-1} y_i, then push to y_{i+s}, y_{i-s}
  bwd_solve,  // x_i -= Ê^T x_{i+s} + Ê x_{i-s}, then x_i = D̂_i^{-T} x_i
};

enum class KernelKind : std::uint8_t { potrf, trsm, syrk, gemm, solve_step };

inline const char* to_string(KernelKind k) {
  switch (k) {
  case KernelKind::potrf: return "potrf";
  case KernelKind::trsm: return "trsm";
  case KernelKind::syrk: return "syrk";
  case KernelKind::gemm: return "gemm";
  case KernelKind::solve_step: return "solve-step";
  }
  return "?";
}

inline const char* to_string(OpCode c) {
  switch (c) {
  case OpCode::pull_self: return "pull_self";
  case OpCode::potrf: return "potrf";
  case OpCode::pull_right: return "pull_right";
  case OpCode::trsm_right: return "trsm_right";
  case OpCode::push_right: return "push_right";
  case OpCode::trsm_left: return "trsm_left";
  case OpCode::push_left: return "push_left";
  case OpCode::fill: return "fill";
  case OpCode::fwd_solve: return "fwd_solve";
  case OpCode::bwd_solve: return "bwd_solve";
  }
  return "?";
}

inline KernelKind kernel_of(OpCode c) {
  switch (c) {
  case OpCode::potrf: return KernelKind::potrf;
  case OpCode::trsm_right:
  case OpCode::trsm_left: return KernelKind::trsm;
  case OpCode::fill: return KernelKind::gemm;
  case OpCode::fwd_solve:
  case OpCode::bwd_solve: return KernelKind::solve_step;
  default: return KernelKind::syrk;
  }
}

/// Presentation lanes (one per stream in a three-stream pipeline): lane 1
/// carries the diagonal factor and the left panel, lane 2 the right panel,
/// lane 3 the fill product.
inline int lane_of(OpCode c) {
  switch (c) {
  case OpCode::trsm_right:
  case OpCode::push_right:
  case OpCode::pull_right: return 2;
  case OpCode::fill: return 3;
  default: return 1;
  }
}

/// Identifies one block of mutable state touched by an operation.
struct BlockId {
  enum Tag : char { diag = 'D', off = 'E', rhs = 'Y', factor = 'L' };
  Tag tag = diag;
  std::size_t a = 0; // column (D, Y), stride (E) or row (L)
  std::size_t b = 0; // k for E, column for L

  static BlockId D(std::size_t i) { return {diag, i, 0}; }
  static BlockId E(std::size_t s, std::size_t k) { return {off, s, k}; }
  static BlockId Y(std::size_t i) { return {rhs, i, 0}; }
  /// Factor block at original block row r, column c.
  static BlockId L(std::size_t r, std::size_t c) { return {factor, r, c}; }

  std::string to_string() const {
    if (tag == off || tag == factor)
      return std::string(1, static_cast<char>(tag)) + "(" + std::to_string(a) + "," +
             std::to_string(b) + ")";
    return std::string(1, static_cast<char>(tag)) + std::to_string(a);
  }

  friend auto operator<=>(const BlockId&, const BlockId&) = default;
};

struct StageOp {
  OpCode code;
  std::size_t stride;
  std::size_t column;
};

struct OpAccess {
  std::vector<BlockId> reads;
  std::vector<BlockId> writes;      // plain (exclusive) writes
  std::vector<BlockId> accumulates; // commutative subtract-accumulate
};

/// Operation list of column i at stride s, in program order.
inline std::vector<StageOp> column_program(std::size_t N, std::size_t s, std::size_t i,
                                           UpdateMode mode) {
  std::vector<StageOp> ops;
  const bool right = i + s <= N;
  const bool left = i > s;
  auto add = [&](OpCode c) { ops.push_back({c, s, i}); };
  if (mode == UpdateMode::deferred) {
    if (s > 1 && i <= N - s / 2)
      add(OpCode::pull_self);
    add(OpCode::potrf);
    if (s > 1 && i + s + s / 2 <= N)
      add(OpCode::pull_right);
    if (right) {
      add(OpCode::trsm_right);
      add(OpCode::push_right);
    }
    if (left)
      add(OpCode::trsm_left);
  } else {
    add(OpCode::potrf);
    if (left)
      add(OpCode::trsm_left);
    if (right)
      add(OpCode::trsm_right);
    if (left)
      add(OpCode::push_left);
    if (right)
      add(OpCode::push_right);
  }
  if (left && right)
    add(OpCode::fill);
  return ops;
}

/// Columns of stride level s in ascending order.
inline std::vector<std::size_t> level_columns(std::size_t N, std::size_t s) {
  std::vector<std::size_t> cols;
  for (std::size_t i = s; i <= N; i += 2 * s)
    cols.push_back(i);
  return cols;
}

/// Blocks read, written and accumulated by `op`.
inline OpAccess access_of(const StageOp& op, std::size_t N, UpdateMode mode) {
  const std::size_t s = op.stride, i = op.column;
  OpAccess a;
  switch (op.code) {
  case OpCode::pull_self:
    a.reads = {BlockId::E(s / 2, 2 * i / s)};
    a.writes = {BlockId::D(i)};
    break;
  case OpCode::potrf:
    a.writes = {BlockId::D(i)};
    break;
  case OpCode::pull_right:
    a.reads = {BlockId::E(s / 2, 2 * i / s + 2)};
    a.writes = {BlockId::D(i + s)};
    break;
  case OpCode::trsm_right:
    a.reads = {BlockId::D(i)};
    a.writes = {BlockId::E(s, i / s)};
    break;
  case OpCode::push_right:
    a.reads = {BlockId::E(s, i / s)};
    if (mode == UpdateMode::right_looking_atomic)
      a.accumulates = {BlockId::D(i + s)};
    else
      a.writes = {BlockId::D(i + s)};
    break;
  case OpCode::trsm_left:
    a.reads = {BlockId::D(i)};
    a.writes = {BlockId::E(s, i / s - 1)};
    break;
  case OpCode::push_left:
    a.reads = {BlockId::E(s, i / s - 1)};
    a.accumulates = {BlockId::D(i - s)};
    break;
  case OpCode::fill:
    a.reads = {BlockId::E(s, i / s), BlockId::E(s, i / s - 1)};
    a.writes = {BlockId::E(2 * s, (i - s) / (2 * s))};
    break;
  case OpCode::fwd_solve:
    a.reads = {BlockId::D(i)};
    a.writes = {BlockId::Y(i)};
    if (i + s <= N) {
      a.reads.push_back(BlockId::E(s, i / s));
      a.accumulates.push_back(BlockId::Y(i + s));
    }
    if (i > s) {
      a.reads.push_back(BlockId::E(s, i / s - 1));
      a.accumulates.push_back(BlockId::Y(i - s));
    }
    break;
  case OpCode::bwd_solve:
    a.reads = {BlockId::D(i)};
    a.writes = {BlockId::Y(i)};
    if (i + s <= N) {
      a.reads.push_back(BlockId::E(s, i / s));
      a.reads.push_back(BlockId::Y(i + s));
    }
    if (i > s) {
      a.reads.push_back(BlockId::E(s, i / s - 1));
      a.reads.push_back(BlockId::Y(i - s));
    }
    break;
  }
  return a;
}

/// Kernel charge of `op` in units of n^3 (factor ops) or n^2 m (solve steps).
inline std::uint64_t unit_weight(const StageOp& op, std::size_t N) {
  switch (kernel_of(op.code)) {
  case KernelKind::potrf: return 1;
  case KernelKind::trsm:
  case KernelKind::syrk: return 3;
  case KernelKind::gemm: return 6;
  case KernelKind::solve_step: {
    std::uint64_t w = 3;
    if (op.column + op.stride <= N)
      w += 6;
    if (op.column > op.stride)
      w += 6;
    return w;
  }
  }
  return 0;
}

} // namespace btchol
