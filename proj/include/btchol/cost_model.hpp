#pragma once

// Closed-form cost models in flop-thirds (see flop_meter.hpp). All
// arithmetic is exact integer or rational; an unbounded worker count makes
// every ceil(x / p) collapse to 1.

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "btchol/partition.hpp"
#include "btchol/schedule/workers.hpp"

namespace btchol {

/// ceil(a / p) with ceil(a / inf) = 1 for a >= 1.
inline std::uint64_t ceil_div(std::uint64_t a, const Workers& p) {
  if (a == 0)
    return 0;
  if (p.is_unbounded())
    return 1;
  return (a + p.count() - 1) / p.count();
}

constexpr std::uint64_t cube(std::uint64_t n) { return n * n * n; }

/// (7N - 6) n^3.
inline std::uint64_t cost_sequential(std::size_t N, std::size_t n) {
  return (7 * static_cast<std::uint64_t>(N) - 6) * cube(n);
}

struct PartitionCost {
  std::vector<std::uint64_t> phase_units; // per chunk
  std::uint64_t parallel_units = 0;       // max over chunks
  std::uint64_t sequential_units = 0;     // pivot chain
  std::uint64_t total_units = 0;          // wall model with p workers
};

/// Chunk k = 1 costs (7 N_1 - 3) n^3, chunks k > 1 cost (19 N_k - 3) n^3 and
/// the pivot chain (10p - 16) n^3. A single chunk is the sequential method.
inline PartitionCost cost_partition(std::size_t N, const PartitionPlan& plan, std::size_t n) {
  PartitionCost c;
  if (plan.p() == 1) {
    c.phase_units = {cost_sequential(N, n)};
  } else {
    c.phase_units.push_back(static_cast<std::uint64_t>(partition_cost::first(plan.sizes[0])) * cube(n));
    for (std::size_t k = 1; k < plan.p(); ++k)
      c.phase_units.push_back(static_cast<std::uint64_t>(partition_cost::other(plan.sizes[k])) *
                              cube(n));
    c.sequential_units = static_cast<std::uint64_t>(partition_cost::sequential(plan.p())) * cube(n);
  }
  for (auto u : c.phase_units)
    c.parallel_units = std::max(c.parallel_units, u);
  c.total_units = c.parallel_units + c.sequential_units;
  return c;
}

/// (ceil(ceil(N/2)/p) 19 + floor(N/2) 7 - 6) n^3, stated for N >= 3. For
/// N < 3 the odd/even split degenerates to the sequential method, whose cost
/// is returned instead.
inline std::uint64_t cost_single_stage(std::size_t N, const Workers& p, std::size_t n) {
  if (N < 3)
    return cost_sequential(N, n);
  return (ceil_div((N + 1) / 2, p) * 19 + (N / 2) * 7 - 6) * cube(n);
}

/// Multi-stage factorization:
/// (ceil((N/2)/p) 16 + sum_{i=1}^{floor(log2 N)-1} ceil(ceil(N/2^{i+1})/p) 22 + 4) n^3
/// for N >= 2, and n^3 for N = 1.
inline std::uint64_t cost_multi_stage_factor(std::size_t N, const Workers& p, std::size_t n) {
  if (N <= 1)
    return cube(n);
  const std::size_t lg = std::bit_width(N) - 1;
  // ceil((N/2)/p) = ceil(N / 2p)
  std::uint64_t u = p.is_unbounded() ? 1 : (N + 2 * p.count() - 1) / (2 * p.count());
  u *= 16;
  for (std::size_t i = 1; i + 1 <= lg; ++i) {
    const std::uint64_t cols = (N + (std::uint64_t{1} << (i + 1)) - 1) >> (i + 1);
    u += ceil_div(cols, p) * 22;
  }
  return (u + 4) * cube(n);
}

/// Multi-stage solve:
/// (sum_{i=0}^{floor(log2 N)} ceil(ceil(N/2^{i+1})/p) 30 - 24 (ceil((N/2)/p) + 1)) n^2 m.
/// For N = 1 the expression is negative; the solve is then two triangular
/// solves, 6 n^2 m.
inline std::uint64_t cost_multi_stage_solve(std::size_t N, const Workers& p, std::size_t n,
                                            std::size_t m) {
  const std::uint64_t scale = static_cast<std::uint64_t>(n) * n * m;
  if (N <= 1)
    return 6 * scale;
  const std::size_t lg = std::bit_width(N) - 1;
  std::uint64_t u = 0;
  for (std::size_t i = 0; i <= lg; ++i) {
    const std::uint64_t cols = (N + (std::uint64_t{1} << (i + 1)) - 1) >> (i + 1);
    u += ceil_div(cols, p) * 30;
  }
  const std::uint64_t half = p.is_unbounded() ? 1 : (N + 2 * p.count() - 1) / (2 * p.count());
  return (u - 24 * (half + 1)) * scale;
}

enum class Strategy { sequential, partition, single, multi };

inline const char* to_string(Strategy s) {
  switch (s) {
  case Strategy::sequential: return "seq";
  case Strategy::partition: return "partition";
  case Strategy::single: return "single";
  case Strategy::multi: return "multi";
  }
  return "?";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "seq" || s == "sequential")
    return Strategy::sequential;
  if (s == "partition")
    return Strategy::partition;
  if (s == "single")
    return Strategy::single;
  if (s == "multi")
    return Strategy::multi;
  throw ShapeMismatch("unknown strategy '" + s + "'");
}

/// Speedup limit for N -> infinity, if finite.
inline std::optional<Rational> speedup_asymptote(Strategy s, const Workers& p) {
  switch (s) {
  case Strategy::sequential: return Rational(1);
  case Strategy::partition:
    if (p.is_unbounded())
      return std::nullopt;
    return max_speedup_partition(p.count());
  case Strategy::single:
    // 7N / (19N/(2p) + 7N/2) = 14p / (7p + 19); 2 without a worker limit
    if (p.is_unbounded())
      return Rational(2);
    return Rational(14 * static_cast<std::int64_t>(p.count()),
                    7 * static_cast<std::int64_t>(p.count()) + 19);
  case Strategy::multi:
    // 7N / (8N/p + 11N/p) = 7p/19; unbounded grows like N / log N
    if (p.is_unbounded())
      return std::nullopt;
    return Rational(7 * static_cast<std::int64_t>(p.count()), 19);
  }
  return std::nullopt;
}

struct SpeedupRow {
  Strategy strategy;
  std::size_t N;
  Workers p;
  std::uint64_t model_units;      // strategy cost, n = 1
  std::uint64_t sequential_units; // 7N - 6
  Rational speedup;               // sequential / model
  std::vector<std::size_t> sizes; // partition only
};

/// One row per (N, p). Partition rows are skipped when N < 2p-1 or p is
/// unbounded.
inline std::vector<SpeedupRow> speedup_table(Strategy s, std::size_t N_from, std::size_t N_to,
                                             const std::vector<Workers>& ps) {
  std::vector<SpeedupRow> rows;
  for (const auto& p : ps)
    for (std::size_t N = std::max<std::size_t>(N_from, 1); N <= N_to; ++N) {
      SpeedupRow r{s, N, p, 0, cost_sequential(N, 1), Rational(0), {}};
      switch (s) {
      case Strategy::sequential: r.model_units = r.sequential_units; break;
      case Strategy::partition: {
        if (p.is_unbounded() || N < 2 * p.count() - 1)
          continue;
        const auto plan = optimal_partition(N, p.count());
        r.model_units = cost_partition(N, plan, 1).total_units;
        r.sizes = plan.sizes;
        break;
      }
      case Strategy::single: r.model_units = cost_single_stage(N, p, 1); break;
      case Strategy::multi: r.model_units = cost_multi_stage_factor(N, p, 1); break;
      }
      r.speedup = Rational(static_cast<std::int64_t>(r.sequential_units),
                           static_cast<std::int64_t>(r.model_units));
      rows.push_back(std::move(r));
    }
  return rows;
}

} // namespace btchol
