// btchol_cli: generate, factor, solve, verify, model and benchmark block
// tridiagonal Cholesky runs.
//
// Exit codes: 0 ok, 2 verification failure, 3 infeasible arguments,
// 4 matrix not positive definite. Failures print one line to stderr:
//   error=<kind> exit=<code> message="<text>"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "btchol/btchol.hpp"

using namespace btchol;

namespace {

enum ExitCode { exit_ok = 0, exit_verify = 2, exit_args = 3, exit_not_pd = 4 };

struct CliFailure {
  int code;
  std::string kind;
  std::string message;
};

[[noreturn]] void fail(int code, std::string kind, std::string message) {
  throw CliFailure{code, std::move(kind), std::move(message)};
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<Workers> parse_worker_list(const std::string& text) {
  std::vector<Workers> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(Workers::parse(item));
  if (out.empty())
    fail(exit_args, "arguments", "empty --p-list");
  return out;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const auto v = std::stoull(text);
      return {v, v};
    }
    return {std::stoull(text.substr(0, colon)), std::stoull(text.substr(colon + 1))};
  } catch (const std::exception&) {
    fail(exit_args, "arguments", "bad range '" + text + "', expected a:b");
  }
}

UpdateMode parse_mode(const std::string& s) {
  if (s == "deferred")
    return UpdateMode::deferred;
  if (s == "atomic")
    return UpdateMode::right_looking_atomic;
  fail(exit_args, "arguments", "unknown mode '" + s + "'");
}

ExecPolicy parse_policy(const std::string& s) {
  if (s == "level")
    return ExecPolicy::level_synchronous;
  if (s == "dag")
    return ExecPolicy::dag;
  fail(exit_args, "arguments", "unknown policy '" + s + "'");
}

template <Scalar T>
double default_tolerance() {
  return std::is_same_v<T, double> ? 1e-12 : 1e-4;
}

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct RunConfig {
  Strategy strategy = Strategy::multi;
  UpdateMode mode = UpdateMode::deferred;
  Workers workers = Workers(1);
  ExecPolicy policy = ExecPolicy::level_synchronous;
};

/// Result of one factorization, with the factor kept for solves.
template <Scalar T>
struct FactorRun {
  std::uint64_t meter_units = 0;
  std::uint64_t critical_units = 0;
  std::int64_t wall_ns = 0;
  double residual = 0.0;
  std::vector<std::size_t> sizes; // partition plan
  std::optional<SeqFactor<T>> seq;
  std::optional<LeveledFactor<T>> multi;
};

template <Scalar T>
FactorRun<T> run_factor(const BlockTridiag<T>& m, const RunConfig& cfg, bool check = true) {
  FactorRun<T> run;
  FlopMeter meter;
  CostReport report;
  Scheduler sched(cfg.workers, cfg.policy);
  const std::size_t N = m.num_blocks();
  std::int64_t t0 = 0;
  switch (cfg.strategy) {
  case Strategy::sequential: {
    t0 = now_ns();
    run.seq = factor_sequential(m, meter);
    run.wall_ns = now_ns() - t0;
    run.critical_units = meter.units();
    if (check)
      run.residual = reconstruction_residual(run.seq->lower_blocks(), m, BlockPermutation::identity(N));
    break;
  }
  case Strategy::partition: {
    if (cfg.workers.is_unbounded())
      fail(exit_args, "infeasible", "partition strategy needs a finite --workers count");
    const auto plan = optimal_partition(N, cfg.workers.count());
    run.sizes = plan.sizes;
    t0 = now_ns();
    auto f = factor_partition(m, plan, sched, meter, &report);
    run.wall_ns = now_ns() - t0;
    run.critical_units = report.critical_units;
    if (check)
      run.residual = reconstruction_residual(f.lower_blocks(), m, f.permutation());
    break;
  }
  case Strategy::single: {
    t0 = now_ns();
    auto f = factor_single_stage(m, sched, meter, &report);
    run.wall_ns = now_ns() - t0;
    run.critical_units = report.critical_units;
    if (check)
      run.residual = reconstruction_residual(f.lower_blocks(), m, f.permutation());
    break;
  }
  case Strategy::multi: {
    t0 = now_ns();
    run.multi = factor_multi_stage(m, cfg.mode, sched, meter, &report);
    run.wall_ns = now_ns() - t0;
    run.critical_units = report.critical_units;
    if (check)
      run.residual = reconstruction_residual(run.multi->lower_blocks(), m, run.multi->permutation());
    break;
  }
  }
  run.meter_units = meter.units();
  return run;
}

/// ||Psi x - b||_F / ||b||_F in binary64.
template <Scalar T>
double solve_residual(const BlockTridiag<T>& m, const DenseBlock<T>& x, const DenseBlock<T>& b) {
  const auto r = m.apply(x);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double d = double(r.data()[k]) - double(b.data()[k]);
    num += d * d;
    den += double(b.data()[k]) * double(b.data()[k]);
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

template <Scalar T>
DenseBlock<T> load_rhs_as(const std::string& path, const BlockTridiag<T>& m) {
  RhsFile f = load_brhs(path);
  if (f.num_blocks != m.num_blocks() || f.block_size != m.block_size())
    fail(exit_args, "arguments", "right-hand side layout does not match the matrix");
  return std::visit(
      [](const auto& v) {
        DenseBlock<T> out(v.rows(), v.cols());
        for (std::size_t k = 0; k < v.size(); ++k)
          out.data()[k] = static_cast<T>(v.data()[k]);
        return out;
      },
      f.values);
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::uint64_t N = 0, n = 0, seed = 0;
  std::string out, precision = "double";
};

int cmd_gen(const GenArgs& a) {
  if (a.N == 0 || a.n == 0)
    fail(exit_args, "arguments", "--N and --n must be positive");
  if (a.precision == "float")
    save_btri(a.out, generate_spd<float>(a.N, a.n, a.seed));
  else
    save_btri(a.out, generate_spd<double>(a.N, a.n, a.seed));
  std::cout << "wrote=" << a.out << " N=" << a.N << " n=" << a.n << " seed=" << a.seed
            << " precision=" << a.precision << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------- factor

struct FactorArgs {
  std::string in, strategy = "multi", mode = "deferred", workers = "1", policy = "level";
  bool interlace = false;
  std::string rhs, report, trace;
  double tol = 0.0;
};

template <Scalar T>
int factor_impl(const BlockTridiag<T>& m, const FactorArgs& a) {
  RunConfig cfg{parse_strategy(a.strategy), parse_mode(a.mode), Workers::parse(a.workers),
                parse_policy(a.policy)};
  const double tol = a.tol > 0 ? a.tol : default_tolerance<T>();
  const std::size_t N = m.num_blocks(), n = m.block_size();

  FactorRun<T> run;
  std::optional<double> solve_res;
  if (a.interlace) {
    if (cfg.strategy != Strategy::multi)
      fail(exit_args, "arguments", "--interlace-solve needs --strategy multi");
    if (a.rhs.empty())
      fail(exit_args, "arguments", "--interlace-solve needs --rhs");
    const auto b = load_rhs_as(a.rhs, m);
    FlopMeter fmeter, smeter;
    CostReport freport;
    Scheduler solver(cfg.workers);
    const auto t0 = now_ns();
    InFlightFactor<T> inflight(m, cfg.mode, cfg.workers, fmeter);
    DenseBlock<T> x;
    try {
      x = solve_multi_stage(inflight.factor(), b, solver, smeter, nullptr, &inflight.events());
    } catch (const IncompleteFactor&) {
      inflight.get(); // surfaces the factorization error
      throw;
    }
    run.multi = inflight.get(&freport);
    run.wall_ns = now_ns() - t0;
    run.meter_units = fmeter.units();
    run.critical_units = freport.critical_units;
    run.residual = reconstruction_residual(run.multi->lower_blocks(), m, run.multi->permutation());
    solve_res = solve_residual(m, x, b);
  } else {
    run = run_factor(m, cfg);
  }

  if (!a.trace.empty()) {
    if (cfg.strategy != Strategy::multi)
      fail(exit_args, "arguments", "--trace is available for --strategy multi only");
    // replay the run on the kernel graph to record per-node ticks
    LeveledFactor<T> f(m);
    const TaskGraph g = build_task_graph(N, cfg.mode);
    std::vector<std::mutex> locks(N);
    FlopMeter scratch;
    const auto rep = execute(g, cfg.workers, [&](const TaskNode& node) {
      detail::apply_stage_op(f, node.op, cfg.mode, locks, scratch);
    }, {TickMode::logical, false});
    std::ofstream os(a.trace);
    rep.write_csv(os, g);
  }

  std::cout << "strategy=" << a.strategy << " mode=" << a.mode << " N=" << N << " n=" << n
            << " workers=" << cfg.workers.to_string() << " meter_units=" << run.meter_units
            << " critical_units=" << run.critical_units << " wall_ns=" << run.wall_ns
            << std::scientific << std::setprecision(3) << " residual=" << run.residual;
  if (solve_res)
    std::cout << " solve_residual=" << *solve_res;
  std::cout << std::defaultfloat << "\n";

  if (!a.report.empty()) {
    std::ofstream os(a.report);
    os << "strategy,N,n,p,mode,meter_units,critical_units,wall_ns,residual\n"
       << a.strategy << ',' << N << ',' << n << ',' << cfg.workers.to_string() << ',' << a.mode
       << ',' << run.meter_units << ',' << run.critical_units << ',' << run.wall_ns << ','
       << std::setprecision(6) << std::scientific << run.residual << '\n';
  }
  if (!(run.residual <= tol) || (solve_res && !(*solve_res <= tol * 1e4)))
    fail(exit_verify, "verification", "residual above threshold " + std::to_string(tol));
  return exit_ok;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  std::string in, strategy = "multi", mode = "deferred", workers = "1", rhs, out;
};

template <Scalar T>
int solve_impl(const BlockTridiag<T>& m, const SolveArgs& a) {
  RunConfig cfg{parse_strategy(a.strategy), parse_mode(a.mode), Workers::parse(a.workers),
                ExecPolicy::level_synchronous};
  if (cfg.strategy == Strategy::partition || cfg.strategy == Strategy::single)
    fail(exit_args, "arguments", "solve is available for the seq and multi orderings only");
  const auto b = load_rhs_as(a.rhs, m);
  auto run = run_factor(m, cfg, false);
  FlopMeter meter;
  DenseBlock<T> x;
  if (run.seq) {
    x = solve_sequential(*run.seq, b, meter);
  } else {
    Scheduler sched(cfg.workers);
    x = solve_multi_stage(*run.multi, b, sched, meter);
  }
  save_brhs(a.out, x, m.num_blocks(), m.block_size());
  std::cout << "wrote=" << a.out << " solve_units=" << meter.units() << std::scientific
            << std::setprecision(3) << " solve_residual=" << solve_residual(m, x, b)
            << std::defaultfloat << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string in, strategy = "multi", mode = "deferred", workers = "1";
  bool oracle = false;
  double tol = 0.0;
  std::uint64_t seed = 1;
};

template <Scalar T>
int verify_impl(const BlockTridiag<T>& m, const VerifyArgs& a) {
  RunConfig cfg{parse_strategy(a.strategy), parse_mode(a.mode), Workers::parse(a.workers),
                ExecPolicy::level_synchronous};
  const double tol = a.tol > 0 ? a.tol : default_tolerance<T>();
  auto run = run_factor(m, cfg);
  bool ok = run.residual <= tol;
  std::cout << std::scientific << std::setprecision(3) << "strategy=" << a.strategy
            << " reconstruction_residual=" << run.residual;

  if (a.oracle && (run.seq || run.multi)) {
    if (m.dim() > 2048) {
      std::cout << " oracle=skipped(dim>2048)";
    } else {
      const auto b = generate_rhs<T>(m.dim(), 1, a.seed);
      FlopMeter meter;
      DenseBlock<T> x;
      if (run.seq) {
        x = solve_sequential(*run.seq, b, meter);
      } else {
        Scheduler sched(cfg.workers);
        x = solve_multi_stage(*run.multi, b, sched, meter);
      }
      const auto xo = dense_oracle_solve(m, b);
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < xo.size(); ++k) {
        const double d = double(x.data()[k]) - xo.data()[k];
        num += d * d;
        den += xo.data()[k] * xo.data()[k];
      }
      const double rel = std::sqrt(num / den);
      const double solve_tol = std::is_same_v<T, double> ? 1e-8 : 1e-3;
      ok = ok && rel <= solve_tol;
      std::cout << " oracle_solve_error=" << rel;
    }
  } else if (a.oracle) {
    std::cout << " oracle=not-applicable";
  }
  std::cout << std::defaultfloat << " status=" << (ok ? "ok" : "fail") << "\n";
  if (!ok)
    fail(exit_verify, "verification", "residual above threshold");
  return exit_ok;
}

// ---------------------------------------------------------------- model

struct ModelArgs {
  std::string strategy = "multi", range = "2:64", plist = "1,2,4,inf", out, what = "factor";
  std::uint64_t n = 1, m = 1;
  bool measure = false;
};

std::string fmt_rational(const Rational& r) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed
     << static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
  return os.str();
}

/// Critical units of an instrumented run on a generated instance.
std::uint64_t measured_units(Strategy s, std::size_t N, const Workers& p, std::size_t n,
                             std::size_t m, bool solve) {
  const auto mat = generate_spd<double>(N, n, 1);
  Scheduler sched(p.is_unbounded() ? Workers(1) : p);
  FlopMeter meter;
  CostReport rep;
  switch (s) {
  case Strategy::sequential: {
    auto f = factor_sequential(mat, meter);
    if (!solve)
      return meter.units();
    FlopMeter sm;
    solve_sequential(f, generate_rhs<double>(mat.dim(), m, 2), sm);
    return sm.units();
  }
  case Strategy::partition: factor_partition(mat, optimal_partition(N, p.count()), sched, meter, &rep); break;
  case Strategy::single: factor_single_stage(mat, sched, meter, &rep); break;
  case Strategy::multi: {
    auto f = factor_multi_stage(mat, UpdateMode::deferred, sched, meter, &rep);
    if (solve) {
      FlopMeter sm;
      solve_multi_stage(f, generate_rhs<double>(mat.dim(), m, 2), sched, sm, &rep);
    }
    break;
  }
  }
  // wave model for the requested p, independent of the threads used
  rep.finalize(p);
  return rep.critical_units;
}

int cmd_model(const ModelArgs& a) {
  const Strategy s = parse_strategy(a.strategy);
  const auto [lo, hi] = parse_range(a.range);
  if (lo == 0 || hi < lo)
    fail(exit_args, "arguments", "--N-range must satisfy 1 <= a <= b");
  const auto ps = parse_worker_list(a.plist);
  const bool solve = a.what == "solve";
  if (solve && s != Strategy::multi && s != Strategy::sequential)
    fail(exit_args, "arguments", "--what solve needs --strategy multi or seq");

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!a.out.empty()) {
    file.open(a.out);
    os = &file;
  }
  *os << "strategy,N,p,n,m,model_units,measured_units,speedup,asymptote\n";
  bool piecewise_ok = true;
  std::optional<std::uint64_t> prev_units;
  for (const auto& p : ps) {
    prev_units.reset();
    for (std::size_t N = lo; N <= hi; ++N) {
      std::uint64_t model = 0, baseline = 0;
      if (solve) {
        baseline = 18 * N * a.n * a.n * a.m - 12 * a.n * a.n * a.m;
        model = s == Strategy::multi ? cost_multi_stage_solve(N, p, a.n, a.m) : baseline;
      } else {
        auto rows = speedup_table(s, N, N, {p});
        if (rows.empty())
          continue;
        baseline = rows[0].sequential_units * a.n * a.n * a.n;
        model = rows[0].model_units * a.n * a.n * a.n;
      }
      // the multi-stage denominator must be flat between powers of two
      if (s == Strategy::multi && p.is_unbounded() && prev_units && !std::has_single_bit(N) &&
          *prev_units != model)
        piecewise_ok = false;
      prev_units = model;
      *os << a.strategy << ',' << N << ',' << p.to_string() << ',' << a.n << ',' << a.m << ','
          << model << ',';
      if (a.measure)
        *os << measured_units(s, N, p, a.n, a.m, solve);
      const auto asym = solve ? std::nullopt : speedup_asymptote(s, p);
      *os << ',' << std::setprecision(6) << std::fixed << double(baseline) / double(model)
          << std::defaultfloat << ',' << (asym ? fmt_rational(*asym) : std::string("inf")) << '\n';
    }
  }
  if (!piecewise_ok)
    fail(exit_verify, "verification", "multi-stage model is not piecewise constant for p=inf");
  return exit_ok;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string suite = "default", out;
  std::size_t reps = 20, warmup = 3;
};

struct BenchCase {
  Strategy strategy;
  UpdateMode mode;
  std::size_t N, n;
  Workers p;
};

std::vector<BenchCase> bench_suite(const std::string& name) {
  std::vector<std::size_t> Ns;
  std::size_t n = 8;
  std::vector<std::size_t> ps{1, 2, 4};
  if (name == "default") {
    Ns = {64, 256, 1024};
  } else if (name == "smoke") {
    Ns = {16, 33};
    n = 4;
    ps = {1, 2};
  } else if (name == "scaling") {
    Ns = {4096};
    n = 16;
    ps = {1, 8};
  } else {
    fail(exit_args, "arguments", "unknown suite '" + name + "' (default, smoke, scaling)");
  }
  std::vector<BenchCase> cases;
  for (auto N : Ns) {
    if (name != "scaling")
      cases.push_back({Strategy::sequential, UpdateMode::deferred, N, n, Workers(1)});
    for (auto p : ps) {
      if (name != "scaling") {
        if (N >= 2 * p - 1)
          cases.push_back({Strategy::partition, UpdateMode::deferred, N, n, Workers(p)});
        cases.push_back({Strategy::single, UpdateMode::deferred, N, n, Workers(p)});
      }
      cases.push_back({Strategy::multi, UpdateMode::deferred, N, n, Workers(p)});
      cases.push_back({Strategy::multi, UpdateMode::right_looking_atomic, N, n, Workers(p)});
    }
  }
  return cases;
}

int cmd_bench(const BenchArgs& a) {
  const auto cases = bench_suite(a.suite);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!a.out.empty()) {
    file.open(a.out);
    os = &file;
  }
  *os << "strategy,N,n,p,mode,wall_ns,meter_units,residual\n";
  bool ok = true;
  for (const auto& c : cases) {
    const auto m = generate_spd<double>(c.N, c.n, 1);
    RunConfig cfg{c.strategy, c.mode, c.p, ExecPolicy::level_synchronous};
    for (std::size_t w = 0; w < a.warmup; ++w)
      run_factor(m, cfg, false);
    std::vector<std::int64_t> times;
    std::uint64_t units = 0;
    for (std::size_t r = 0; r < std::max<std::size_t>(a.reps, 1); ++r) {
      auto run = run_factor(m, cfg, false);
      times.push_back(run.wall_ns);
      units = run.meter_units;
    }
    std::nth_element(times.begin(), times.begin() + times.size() / 2, times.end());
    const double residual = run_factor(m, cfg, true).residual;
    ok = ok && residual <= default_tolerance<double>();
    *os << to_string(c.strategy) << ',' << c.N << ',' << c.n << ',' << c.p.to_string() << ','
        << (c.strategy == Strategy::multi ? to_string(c.mode) : "-") << ','
        << times[times.size() / 2] << ',' << units << ',' << std::scientific
        << std::setprecision(3) << residual << std::defaultfloat << '\n';
    os->flush();
  }
  if (!ok)
    fail(exit_verify, "verification", "a benchmark row has a residual above threshold");
  return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cholesky factorization of SPD block tridiagonal matrices"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "write a random SPD instance (BTRI file)");
  g->add_option("--N", gen.N, "block count")->required();
  g->add_option("--n", gen.n, "block size")->required();
  g->add_option("--seed", gen.seed, "PRNG seed")->required();
  g->add_option("--out", gen.out, "output path")->required();
  g->add_option("--precision", gen.precision, "float or double")
      ->check(CLI::IsMember({"float", "double"}));

  FactorArgs fac;
  auto* f = app.add_subcommand("factor", "factor a BTRI matrix and check the reconstruction");
  f->add_option("--in", fac.in)->required();
  f->add_option("--strategy", fac.strategy, "seq|partition|single|multi");
  f->add_option("--mode", fac.mode, "deferred|atomic (multi only)");
  f->add_option("--workers", fac.workers, "worker count or inf");
  f->add_option("--policy", fac.policy, "level|dag (multi only)");
  f->add_flag("--interlace-solve", fac.interlace, "run the solve concurrently with the factorization");
  f->add_option("--rhs", fac.rhs, "BRHS right-hand side for --interlace-solve");
  f->add_option("--report", fac.report, "summary CSV");
  f->add_option("--trace", fac.trace, "per-kernel CSV of a graph-scheduled run (multi only)");
  f->add_option("--tol", fac.tol, "residual threshold");

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "solve Psi x = b");
  s->add_option("--in", sol.in)->required();
  s->add_option("--factor-strategy", sol.strategy, "seq|multi");
  s->add_option("--mode", sol.mode);
  s->add_option("--workers", sol.workers);
  s->add_option("--rhs", sol.rhs)->required();
  s->add_option("--out", sol.out)->required();

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "reconstruction and oracle checks");
  v->add_option("--in", ver.in)->required();
  v->add_option("--strategy", ver.strategy);
  v->add_option("--mode", ver.mode);
  v->add_option("--workers", ver.workers);
  v->add_flag("--oracle", ver.oracle, "compare a solve against the dense oracle");
  v->add_option("--tol", ver.tol);
  v->add_option("--seed", ver.seed, "seed of the oracle right-hand side");

  ModelArgs mod;
  auto* mo = app.add_subcommand("model", "closed-form speedup tables");
  mo->add_option("--strategy", mod.strategy)->required();
  mo->add_option("--N-range", mod.range, "a:b");
  mo->add_option("--p-list", mod.plist, "comma separated, e.g. 1,2,4,inf");
  mo->add_option("--n", mod.n);
  mo->add_option("--m", mod.m);
  mo->add_option("--what", mod.what, "factor|solve")->check(CLI::IsMember({"factor", "solve"}));
  mo->add_flag("--measure", mod.measure, "add instrumented critical-path units");
  mo->add_option("--out", mod.out);

  BenchArgs ben;
  auto* b = app.add_subcommand("bench", "timing sweep");
  b->add_option("--suite", ben.suite, "default|smoke|scaling");
  b->add_option("--out", ben.out);
  b->add_option("--reps", ben.reps);
  b->add_option("--warmup", ben.warmup);

  auto report = [](int code, const std::string& kind, const std::string& message) {
    std::cerr << "error=" << kind << " exit=" << code << " message=" << quoted(message) << "\n";
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(exit_args, "arguments", e.what());
  }

  try {
    if (*g)
      return cmd_gen(gen);
    if (*f)
      return std::visit([&](const auto& m) { return factor_impl(m, fac); }, load_btri(fac.in));
    if (*s)
      return std::visit([&](const auto& m) { return solve_impl(m, sol); }, load_btri(sol.in));
    if (*v)
      return std::visit([&](const auto& m) { return verify_impl(m, ver); }, load_btri(ver.in));
    if (*mo)
      return cmd_model(mod);
    if (*b)
      return cmd_bench(ben);
  } catch (const CliFailure& e) {
    return report(e.code, e.kind, e.message);
  } catch (const NotPositiveDefinite& e) {
    return report(exit_not_pd, "not-positive-definite", e.what());
  } catch (const InfeasiblePartition& e) {
    return report(exit_args, "infeasible", e.what());
  } catch (const IncompleteFactor& e) {
    return report(exit_verify, "incomplete-factor", e.what());
  } catch (const Error& e) {
    return report(exit_args, "arguments", e.what());
  }
  return exit_ok;
}
