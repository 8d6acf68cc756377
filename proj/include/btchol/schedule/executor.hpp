#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <queue>
#include <thread>
#include <vector>

#include "btchol/schedule/task_graph.hpp"

namespace btchol {

enum class TickMode {
  logical, // one tick per kernel
  flops,   // ticks weighted by the node's cost units
  wall,    // steady-clock nanoseconds since the run started
};

/// One access recorded while a node ran. For reads, `version` is the block
/// version observed when the node started; for writes and accumulations it
/// is the version the node produced.
struct AccessEvent {
  std::size_t node;
  BlockId block;
  std::uint64_t version;
  enum Kind : char { read = 'R', write = 'W', accumulate = 'A' } kind;
};

struct RunReport {
  std::vector<std::uint64_t> start, end;
  std::vector<std::size_t> worker;
  std::vector<AccessEvent> log;
  std::uint64_t makespan = 0;

  /// CSV: node,kind,level,column,lane,start,end
  void write_csv(std::ostream& os, const TaskGraph& g) const {
    os << "node,kind,level,column,lane,start,end\n";
    for (std::size_t v = 0; v < g.size(); ++v) {
      const auto& n = g.node(v);
      os << v << ',' << to_string(n.kind) << ',' << n.level << ',' << n.column() << ',' << n.lane
         << ',' << start[v] << ',' << end[v] << '\n';
    }
  }
};

struct ExecuteOptions {
  TickMode ticks = TickMode::logical;
  bool record_accesses = true;
};

/// Runs `body(node)` for every node on `workers.threads()` OS threads,
/// respecting all edges.
///
/// Logical and flop ticks are the deterministic list schedule of `simulate`
/// on p virtual processors, and ready nodes are claimed in order of their
/// simulated start (ties by id). The report therefore does not depend on how
/// the OS interleaved the threads. In wall mode nodes are claimed lowest id
/// first.
inline RunReport execute(const TaskGraph& g, const Workers& workers,
                         const std::function<void(const TaskNode&)>& body,
                         ExecuteOptions opt = {}) {
  const std::size_t V = g.size();
  RunReport rep;
  rep.start.assign(V, 0);
  rep.end.assign(V, 0);
  rep.worker.assign(V, 0);
  if (V == 0)
    return rep;

  std::map<BlockId, std::atomic<std::uint64_t>> versions;
  for (const auto& n : g.nodes()) {
    for (const auto& b : n.access.reads)
      versions[b];
    for (const auto& b : n.access.writes)
      versions[b];
    for (const auto& b : n.access.accumulates)
      versions[b];
  }

  const bool simulated = opt.ticks != TickMode::wall;
  if (simulated) {
    // also rejects cyclic graphs before any thread starts
    const auto plan =
        simulate(g, workers, opt.ticks == TickMode::logical ? TickWeight::unit : TickWeight::flops);
    rep.start = plan.start;
    rep.end = plan.end;
  }
  using Key = std::pair<std::uint64_t, std::size_t>;
  std::mutex mu;
  std::condition_variable cv;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  auto key = [&](std::size_t v) { return Key{simulated ? rep.start[v] : 0, v}; };
  std::vector<std::size_t> indeg(V);
  for (std::size_t v = 0; v < V; ++v) {
    indeg[v] = g.predecessors(v).size();
    if (indeg[v] == 0)
      ready.push(key(v));
  }
  std::size_t done = 0, running = 0;
  bool deadlock = false;
  std::exception_ptr error;
  std::vector<AccessEvent> log;
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
            .count());
  };

  auto worker_fn = [&](std::size_t wid) {
    std::vector<AccessEvent> local;
    for (;;) {
      std::size_t v;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] {
          if (!ready.empty() || done == V || error || deadlock)
            return true;
          if (running == 0) {
            deadlock = true;
            cv.notify_all();
            return true;
          }
          return false;
        });
        if (done == V || error || deadlock || ready.empty())
          break;
        v = ready.top().second;
        ready.pop();
        ++running;
        rep.worker[v] = wid;
      }
      const TaskNode& node = g.node(v);
      if (opt.record_accesses)
        for (const auto& b : node.access.reads)
          local.push_back({v, b, versions.at(b).load(), AccessEvent::read});
      if (opt.ticks == TickMode::wall)
        rep.start[v] = wall();
      try {
        body(node);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error)
          error = std::current_exception();
        --running;
        cv.notify_all();
        break;
      }
      if (opt.ticks == TickMode::wall)
        rep.end[v] = wall();
      for (const auto& b : node.access.writes) {
        auto ver = versions.at(b).fetch_add(1) + 1;
        if (opt.record_accesses)
          local.push_back({v, b, ver, AccessEvent::write});
      }
      for (const auto& b : node.access.accumulates) {
        auto ver = versions.at(b).fetch_add(1) + 1;
        if (opt.record_accesses)
          local.push_back({v, b, ver, AccessEvent::accumulate});
      }
      {
        std::lock_guard lock(mu);
        --running;
        ++done;
        for (auto w : g.successors(v))
          if (--indeg[w] == 0)
            ready.push(key(w));
      }
      cv.notify_all();
    }
    std::lock_guard lock(mu);
    log.insert(log.end(), local.begin(), local.end());
  };

  {
    const std::size_t threads = std::min(workers.threads(), V);
    std::vector<std::jthread> pool;
    for (std::size_t k = 1; k < threads; ++k)
      pool.emplace_back(worker_fn, k);
    worker_fn(0);
  }
  if (error)
    std::rethrow_exception(error);
  if (deadlock || done != V)
    throw DeadlockDetected("execute: ready set empty with " + std::to_string(V - done) +
                           " of " + std::to_string(V) + " nodes unfinished");
  rep.log = std::move(log);
  for (std::size_t v = 0; v < V; ++v)
    rep.makespan = std::max(rep.makespan, rep.end[v]);
  return rep;
}

/// Happens-before soundness of a recorded run: every read saw at least the
/// version produced by each predecessor that wrote the block, and writes on
/// each edge are ordered along the edge.
inline bool happens_before_sound(const TaskGraph& g, const RunReport& rep) {
  std::map<std::pair<std::size_t, BlockId>, std::uint64_t> produced, seen;
  for (const auto& e : rep.log) {
    if (e.kind == AccessEvent::read)
      seen[{e.node, e.block}] = e.version;
    else
      produced[{e.node, e.block}] = e.version;
  }
  for (const auto& [key, ver] : seen)
    for (auto u : g.predecessors(key.first)) {
      auto it = produced.find({u, key.second});
      if (it != produced.end() && it->second > ver)
        return false;
    }
  for (std::size_t v = 0; v < g.size(); ++v)
    for (auto w : g.successors(v))
      for (const auto* list : {&g.node(v).access.writes, &g.node(v).access.accumulates})
        for (const auto& b : *list) {
          auto a = produced.find({v, b}), c = produced.find({w, b});
          if (a != produced.end() && c != produced.end() && c->second <= a->second)
            return false;
        }
  return true;
}

} // namespace btchol
