#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "btchol/error.hpp"
#include "btchol/schedule/workers.hpp"
#include "btchol/stage_program.hpp"

namespace btchol {

struct TaskNode {
  std::size_t id = 0;
  StageOp op{};
  KernelKind kind = KernelKind::potrf;
  std::size_t level = 0; // 1-based stride level (stride 2^(level-1))
  int lane = 1;
  OpAccess access;
  std::uint64_t weight = 1; // cost units for n = m = 1

  std::size_t column() const noexcept { return op.column; }
};

/// Kernel-level dependency graph. Nodes are added in a valid sequential
/// program order; edges are inferred from block accesses:
/// read-after-write, write-after-read and write-after-write. Accumulations
/// into the same block commute and get no edges among themselves.
class TaskGraph {
public:
  std::size_t size() const noexcept { return nodes_.size(); }
  const TaskNode& node(std::size_t id) const { return nodes_.at(id); }
  const std::vector<TaskNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::size_t>& successors(std::size_t id) const { return succ_.at(id); }
  const std::vector<std::size_t>& predecessors(std::size_t id) const { return pred_.at(id); }

  std::size_t num_edges() const noexcept {
    std::size_t e = 0;
    for (const auto& s : succ_)
      e += s.size();
    return e;
  }

  bool has_edge(std::size_t from, std::size_t to) const {
    const auto& s = succ_.at(from);
    return std::find(s.begin(), s.end(), to) != s.end();
  }

  std::size_t add(TaskNode node) {
    const std::size_t id = nodes_.size();
    node.id = id;
    succ_.emplace_back();
    pred_.emplace_back();
    for (const auto& b : node.access.reads) {
      auto& st = state_[b];
      if (st.writer)
        link(*st.writer, id);
      for (auto a : st.accumulators)
        link(a, id);
      st.readers.push_back(id);
    }
    for (const auto& b : node.access.accumulates) {
      auto& st = state_[b];
      if (st.writer)
        link(*st.writer, id);
      for (auto r : st.readers)
        link(r, id);
      st.accumulators.push_back(id);
    }
    for (const auto& b : node.access.writes) {
      auto& st = state_[b];
      if (st.writer)
        link(*st.writer, id);
      for (auto a : st.accumulators)
        link(a, id);
      for (auto r : st.readers)
        link(r, id);
      st.writer = id;
      st.accumulators.clear();
      st.readers.clear();
    }
    nodes_.push_back(std::move(node));
    return id;
  }

  /// Extra happens-before edge for hand-built graphs. No cycle check here;
  /// executors detect cycles as a deadlock.
  void add_edge(std::size_t from, std::size_t to) {
    if (from >= size() || to >= size())
      throw ShapeMismatch("TaskGraph::add_edge: node out of range");
    link(from, to);
  }

  /// Kahn's algorithm; true when every node can be ordered.
  bool is_acyclic() const { return topological_order().size() == size(); }

  std::vector<std::size_t> topological_order() const {
    std::vector<std::size_t> indeg(size()), order;
    for (std::size_t v = 0; v < size(); ++v)
      indeg[v] = pred_[v].size();
    std::queue<std::size_t> q;
    for (std::size_t v = 0; v < size(); ++v)
      if (indeg[v] == 0)
        q.push(v);
    while (!q.empty()) {
      auto v = q.front();
      q.pop();
      order.push_back(v);
      for (auto w : succ_[v])
        if (--indeg[w] == 0)
          q.push(w);
    }
    return order;
  }

  /// Longest path where each node costs `weight` (or 1 when `unit`).
  std::uint64_t critical_path(bool unit = false) const {
    std::vector<std::uint64_t> finish(size(), 0);
    std::uint64_t best = 0;
    for (std::size_t v : topological_order()) {
      std::uint64_t start = 0;
      for (auto u : pred_[v])
        start = std::max(start, finish[u]);
      finish[v] = start + (unit ? 1 : nodes_[v].weight);
      best = std::max(best, finish[v]);
    }
    return best;
  }

  /// Longest kernel chain among the nodes of one (level, column) task,
  /// counting only edges inside the task.
  std::size_t column_chain_length(std::size_t level, std::size_t column) const {
    std::map<std::size_t, std::size_t> depth;
    std::size_t best = 0;
    for (const auto& n : nodes_) {
      if (n.level != level || n.column() != column || n.kind == KernelKind::solve_step)
        continue;
      std::size_t d = 1;
      for (auto u : pred_[n.id]) {
        auto it = depth.find(u);
        if (it != depth.end())
          d = std::max(d, it->second + 1);
      }
      depth[n.id] = d;
      best = std::max(best, d);
    }
    return best;
  }

  /// Maximum of `column_chain_length` over all factor tasks.
  std::size_t max_column_chain() const {
    std::size_t best = 0;
    for (const auto& n : nodes_)
      if (n.kind != KernelKind::solve_step)
        best = std::max(best, column_chain_length(n.level, n.column()));
    return best;
  }

private:
  struct BlockState {
    std::optional<std::size_t> writer;
    std::vector<std::size_t> accumulators;
    std::vector<std::size_t> readers;
  };

  void link(std::size_t from, std::size_t to) {
    if (from == to || has_edge(from, to))
      return;
    succ_[from].push_back(to);
    pred_[to].push_back(from);
  }

  std::vector<TaskNode> nodes_;
  std::vector<std::vector<std::size_t>> succ_, pred_;
  std::map<BlockId, BlockState> state_;
};

inline void append_stage_op(TaskGraph& g, const StageOp& op, std::size_t N, UpdateMode mode) {
  TaskNode node;
  node.op = op;
  node.kind = kernel_of(op.code);
  node.level = static_cast<std::size_t>(std::bit_width(op.stride));
  node.lane = lane_of(op.code);
  node.access = access_of(op, N, mode);
  node.weight = unit_weight(op, N);
  g.add(std::move(node));
}

/// Kernel graph of the multi-stage factorization. With `with_solve`, the
/// forward and backward solve steps are appended; their edges into the
/// factor nodes expose how far the solve can run ahead of the factorization.
inline TaskGraph build_task_graph(std::size_t N, UpdateMode mode, bool with_solve = false) {
  if (N == 0)
    throw ShapeMismatch("build_task_graph: N must be >= 1");
  TaskGraph g;
  std::vector<std::size_t> strides;
  for (std::size_t s = 1; s <= N; s *= 2)
    strides.push_back(s);
  for (auto s : strides)
    for (auto i : level_columns(N, s))
      for (const auto& op : column_program(N, s, i, mode))
        append_stage_op(g, op, N, mode);
  if (with_solve) {
    for (auto s : strides)
      for (auto i : level_columns(N, s))
        append_stage_op(g, {OpCode::fwd_solve, s, i}, N, mode);
    for (auto it = strides.rbegin(); it != strides.rend(); ++it)
      for (auto i : level_columns(N, *it))
        append_stage_op(g, {OpCode::bwd_solve, *it, i}, N, mode);
  }
  return g;
}

enum class TickWeight { unit, flops };

struct Schedule {
  std::vector<std::uint64_t> start, end;
  std::uint64_t makespan = 0;
};

/// Deterministic list scheduling on p identical workers: whenever a worker
/// is free it takes the ready node with the smallest id.
inline Schedule simulate(const TaskGraph& g, const Workers& workers,
                         TickWeight weighting = TickWeight::unit) {
  const std::size_t V = g.size();
  Schedule out;
  out.start.assign(V, 0);
  out.end.assign(V, 0);
  std::vector<std::size_t> indeg(V);
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < V; ++v) {
    indeg[v] = g.predecessors(v).size();
    if (indeg[v] == 0)
      ready.push(v);
  }
  using Running = std::pair<std::uint64_t, std::size_t>;
  std::priority_queue<Running, std::vector<Running>, std::greater<>> running;
  std::size_t free = std::min(workers.count(), std::max<std::size_t>(V, 1));
  std::uint64_t now = 0;
  std::size_t done = 0;
  while (done < V) {
    while (free > 0 && !ready.empty()) {
      auto v = ready.top();
      ready.pop();
      const std::uint64_t w = weighting == TickWeight::unit ? 1 : g.node(v).weight;
      out.start[v] = now;
      out.end[v] = now + w;
      running.emplace(out.end[v], v);
      --free;
    }
    if (running.empty())
      throw DeadlockDetected("simulate: no ready node but " + std::to_string(V - done) +
                             " nodes unfinished");
    now = running.top().first;
    while (!running.empty() && running.top().first == now) {
      auto v = running.top().second;
      running.pop();
      ++done;
      ++free;
      for (auto w : g.successors(v))
        if (--indeg[w] == 0)
          ready.push(w);
    }
  }
  out.makespan = now;
  return out;
}

} // namespace btchol
