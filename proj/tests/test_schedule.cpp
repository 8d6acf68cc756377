#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <sstream>

#include "btchol/btchol.hpp"

using namespace btchol;

namespace {

TaskNode plain_node(BlockId reads, BlockId writes) {
  TaskNode n;
  n.op = {OpCode::potrf, 1, 1};
  n.level = 1;
  n.access.reads = {reads};
  n.access.writes = {writes};
  return n;
}

std::size_t count_kind(const TaskGraph& g, KernelKind k) {
  std::size_t c = 0;
  for (const auto& n : g.nodes())
    c += n.kind == k;
  return c;
}

} // namespace

TEST(Workers, ParseAndWaves) {
  EXPECT_TRUE(Workers::parse("inf").is_unbounded());
  EXPECT_EQ(Workers::parse("8").count(), 8u);
  EXPECT_THROW(Workers::parse("0"), ShapeMismatch);
  EXPECT_THROW(Workers::parse("3x"), ShapeMismatch);
  const std::vector<std::uint64_t> tasks{5, 1, 2, 7, 3};
  EXPECT_EQ(wave_cost(tasks, Workers(1)), 18u);
  EXPECT_EQ(wave_cost(tasks, Workers(2)), 5u + 7u + 3u);
  EXPECT_EQ(wave_cost(tasks, Workers::unbounded()), 7u);
  EXPECT_EQ(wave_cost({}, Workers(3)), 0u);
}

TEST(WorkerPool, RunsEveryIndexOnce) {
  WorkerPool pool(4);
  std::vector<std::atomic<int>> hits(100);
  std::set<std::size_t> workers_seen;
  std::mutex mu;
  pool.parallel_for(hits.size(), [&](std::size_t k, std::size_t w) {
    hits[k]++;
    std::lock_guard lock(mu);
    workers_seen.insert(w);
  });
  for (auto& h : hits)
    EXPECT_EQ(h.load(), 1);
  for (auto w : workers_seen)
    EXPECT_LT(w, 4u);
}

TEST(WorkerPool, RethrowsTaskException) {
  WorkerPool pool(3);
  EXPECT_THROW(pool.parallel_for(10,
                                 [](std::size_t k, std::size_t) {
                                   if (k == 4)
                                     throw std::runtime_error("boom");
                                 }),
               std::runtime_error);
  // the pool stays usable
  std::atomic<int> n{0};
  pool.parallel_for(5, [&](std::size_t, std::size_t) { n++; });
  EXPECT_EQ(n.load(), 5);
}

TEST(StageProgram, ColumnProgramsPerMode) {
  using enum OpCode;
  auto codes = [](std::size_t N, std::size_t s, std::size_t i, UpdateMode m) {
    std::vector<OpCode> out;
    for (const auto& op : column_program(N, s, i, m))
      out.push_back(op.code);
    return out;
  };
  // interior column of stride 2 in N = 16
  EXPECT_EQ(codes(16, 2, 6, UpdateMode::deferred),
            (std::vector<OpCode>{pull_self, potrf, pull_right, trsm_right, push_right, trsm_left, fill}));
  EXPECT_EQ(codes(16, 2, 6, UpdateMode::right_looking_atomic),
            (std::vector<OpCode>{potrf, trsm_left, trsm_right, push_left, push_right, fill}));
  EXPECT_EQ(codes(1, 1, 1, UpdateMode::deferred), (std::vector<OpCode>{potrf}));
  EXPECT_EQ(level_columns(20, 4), (std::vector<std::size_t>{4, 12, 20}));
}

TEST(StageProgram, Lanes) {
  EXPECT_EQ(lane_of(OpCode::potrf), 1);
  EXPECT_EQ(lane_of(OpCode::trsm_left), 1);
  EXPECT_EQ(lane_of(OpCode::trsm_right), 2);
  EXPECT_EQ(lane_of(OpCode::push_right), 2);
  EXPECT_EQ(lane_of(OpCode::fill), 3);
}

TEST(TaskGraph, SingleBlockIsOneNode) {
  const auto g = build_task_graph(1, UpdateMode::deferred);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.node(0).kind, KernelKind::potrf);
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_EQ(g.critical_path(true), 1u);
}

TEST(TaskGraph, KernelCountsMatchProgram) {
  const auto g = build_task_graph(8, UpdateMode::deferred);
  EXPECT_EQ(count_kind(g, KernelKind::potrf), 8u);
  EXPECT_TRUE(g.is_acyclic());
  std::size_t ops = 0;
  for (std::size_t s = 1; s <= 8; s *= 2)
    for (auto i : level_columns(8, s))
      ops += column_program(8, s, i, UpdateMode::deferred).size();
  EXPECT_EQ(g.size(), ops);
}

TEST(TaskGraph, ColumnChainLength) {
  for (std::size_t N : {5u, 8u, 16u, 33u}) {
    EXPECT_EQ(build_task_graph(N, UpdateMode::right_looking_atomic).max_column_chain(), 3u) << N;
    EXPECT_EQ(build_task_graph(N, UpdateMode::deferred).max_column_chain(), 4u) << N;
  }
}

TEST(TaskGraph, DependenciesFollowAccesses) {
  TaskGraph g;
  const auto a = g.add(plain_node(BlockId::D(1), BlockId::D(2)));
  const auto b = g.add(plain_node(BlockId::D(2), BlockId::D(3)));
  const auto c = g.add(plain_node(BlockId::D(1), BlockId::D(1)));
  EXPECT_TRUE(g.has_edge(a, b)); // read after write
  EXPECT_TRUE(g.has_edge(a, c)); // write after read
  EXPECT_FALSE(g.has_edge(b, c));
  TaskNode acc1, acc2;
  acc1.access.accumulates = {BlockId::D(9)};
  acc2.access.accumulates = {BlockId::D(9)};
  const auto x = g.add(acc1), y = g.add(acc2);
  EXPECT_FALSE(g.has_edge(x, y));
  const auto r = g.add(plain_node(BlockId::D(9), BlockId::D(10)));
  EXPECT_TRUE(g.has_edge(x, r));
  EXPECT_TRUE(g.has_edge(y, r));
}

TEST(TaskGraph, ChainSpanEqualsLength) {
  TaskGraph g;
  for (std::size_t k = 0; k < 6; ++k)
    g.add(plain_node(BlockId::D(k + 1), BlockId::D(k + 2)));
  EXPECT_EQ(g.critical_path(true), 6u);
  EXPECT_EQ(simulate(g, Workers(4)).makespan, 6u);
}

TEST(TaskGraph, UnboundedSimulationReachesCriticalPath) {
  for (auto mode : {UpdateMode::deferred, UpdateMode::right_looking_atomic})
    for (std::size_t N : {2u, 7u, 16u, 31u}) {
      const auto g = build_task_graph(N, mode, true);
      EXPECT_EQ(simulate(g, Workers::unbounded()).makespan, g.critical_path(true));
      EXPECT_EQ(simulate(g, Workers::unbounded(), TickWeight::flops).makespan, g.critical_path());
      EXPECT_EQ(simulate(g, Workers(1)).makespan, g.size());
    }
}

TEST(TaskGraph, AtomicSpanNotLongerThanDeferred) {
  for (std::size_t N : {4u, 8u, 15u, 32u, 63u})
    EXPECT_LE(build_task_graph(N, UpdateMode::right_looking_atomic).critical_path(true),
              build_task_graph(N, UpdateMode::deferred).critical_path(true));
}

TEST(TaskGraph, CycleIsDeadlock) {
  TaskGraph g;
  const auto a = g.add(plain_node(BlockId::D(1), BlockId::D(2)));
  const auto b = g.add(plain_node(BlockId::D(2), BlockId::D(3)));
  g.add_edge(b, a);
  EXPECT_FALSE(g.is_acyclic());
  EXPECT_THROW(simulate(g, Workers(2)), DeadlockDetected);
  EXPECT_THROW(execute(g, Workers(2), [](const TaskNode&) {}), DeadlockDetected);
}

TEST(Executor, FirstLevelPotrfsOverlap) {
  const auto g = build_task_graph(8, UpdateMode::deferred);
  const auto rep = execute(g, Workers(4), [](const TaskNode&) {});
  std::vector<std::size_t> potrfs;
  for (const auto& n : g.nodes())
    if (n.level == 1 && n.kind == KernelKind::potrf)
      potrfs.push_back(n.id);
  ASSERT_EQ(potrfs.size(), 4u);
  for (auto v : potrfs)
    EXPECT_EQ(rep.start[v], 0u);
}

TEST(Executor, RespectsEdgesAndIsSound) {
  for (std::size_t w : {1u, 2u, 4u})
    for (auto mode : {UpdateMode::deferred, UpdateMode::right_looking_atomic}) {
      const auto g = build_task_graph(21, mode, true);
      const auto rep = execute(g, Workers(w), [](const TaskNode&) {});
      for (std::size_t v = 0; v < g.size(); ++v)
        for (auto s : g.successors(v))
          EXPECT_LE(rep.end[v], rep.start[s]);
      EXPECT_TRUE(happens_before_sound(g, rep));
    }
}

TEST(Executor, LogicalTicksAreDeterministic) {
  const auto g = build_task_graph(17, UpdateMode::deferred);
  const auto a = execute(g, Workers(3), [](const TaskNode&) {});
  const auto b = execute(g, Workers(3), [](const TaskNode&) {});
  EXPECT_EQ(a.start, b.start);
  EXPECT_EQ(a.makespan, b.makespan);
}

TEST(Executor, BodyExceptionPropagates) {
  const auto g = build_task_graph(8, UpdateMode::deferred);
  EXPECT_THROW(execute(g, Workers(2),
                       [](const TaskNode& n) {
                         if (n.id == 5)
                           throw std::runtime_error("kernel failed");
                       }),
               std::runtime_error);
}

TEST(Executor, CsvTrace) {
  const auto g = build_task_graph(2, UpdateMode::deferred);
  const auto rep = execute(g, Workers(1), [](const TaskNode&) {});
  std::ostringstream os;
  rep.write_csv(os, g);
  const auto text = os.str();
  EXPECT_EQ(text.rfind("node,kind,level,column,lane,start,end\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), g.size() + 1);
}

TEST(Scheduler, CostReportWaves) {
  CostReport r;
  r.task_units = {{4, 4, 4}, {2}};
  r.serial_units = {5};
  r.finalize(Workers(2));
  EXPECT_EQ(r.total_units, 19u);
  EXPECT_EQ(r.critical_units, 8u + 2u + 5u);
}

TEST(Scheduler, LevelEventsTimeout) {
  LevelEvents ev(2);
  ev.signal(1);
  EXPECT_NO_THROW(ev.wait(1));
  EXPECT_THROW(ev.wait(2, std::chrono::milliseconds(10)), IncompleteFactor);
  ev.close();
  EXPECT_THROW(ev.wait(2), IncompleteFactor);
}
