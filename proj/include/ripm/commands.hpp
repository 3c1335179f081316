#ifndef RIPM_COMMANDS_HPP
#define RIPM_COMMANDS_HPP

#include <algorithm>
#include <filesystem>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "ripm/io.hpp"
#include "ripm/oracle.hpp"
#include "ripm/rcp.hpp"

namespace ripm::cli {

struct RunConfig {
  double delta = 1e-3;
  ParamMode mode = ParamMode::Practical;
  std::uint64_t seed = 1;
  Index sketch_rows = 0;  // 0: default size
  bool identity_sketch = false;
  double batch_exp = 0.31;
  double eps_mp = 0.0;    // 0: default
  Index max_iters = 50'000'000;
  std::string log_path;
  bool check_oracle = false;
};

enum ExitCode : int { Ok = 0, IterationLimitHit = 1, InvalidInput = 2, Breakdown = 3 };

inline std::string check(const RunConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) return "delta must lie in (0, 1)";
  if (!(cfg.batch_exp > 0.0 && cfg.batch_exp < 1.0)) return "batch exponent must lie in (0, 1)";
  if (cfg.sketch_rows < 0) return "sketch rows must be positive";
  if (cfg.eps_mp < 0.0) return "eps_mp must be positive";
  if (cfg.max_iters < 1) return "max iterations must be positive";
  return {};
}

inline SolveConfig solve_config(const RunConfig& cfg) {
  SolveConfig sc;
  sc.delta = cfg.delta;
  sc.mode = cfg.mode;
  sc.maintenance.seed = cfg.seed;
  sc.maintenance.sketch_rows = cfg.sketch_rows;
  sc.maintenance.identity_sketch = cfg.identity_sketch;
  sc.maintenance.batch_exp = cfg.batch_exp;
  sc.maintenance.eps_mp = cfg.eps_mp;
  sc.path.max_iters = cfg.max_iters;
  return sc;
}

// ---------------------------------------------------------------------------
// Generators. Every instance is built around a strictly interior witness.

enum class GenKind { RandomLp, L1Regression, Quantile };

inline GenKind parse_gen_kind(const std::string& s) {
  if (s == "random_lp") return GenKind::RandomLp;
  if (s == "l1_regression") return GenKind::L1Regression;
  if (s == "quantile") return GenKind::Quantile;
  throw Error(ErrorKind::InvalidArgument, "unknown generator kind '" + s + "'");
}

inline const char* to_tag(GenKind k) {
  switch (k) {
    case GenKind::RandomLp: return "random_lp";
    case GenKind::L1Regression: return "l1_regression";
    case GenKind::Quantile: return "quantile";
  }
  return "?";
}

/// Box LP on [0,1]^n with d = max(1, n/4) Gaussian rows and b = A·w for a
/// witness w drawn from [0.1, 0.9]^n.
inline io::Instance random_lp(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> inner(0.1, 0.9);
  const Index d = std::max<Index>(1, n / 4);
  StandardProblem p;
  p.a.resize(d, n);
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < n; ++c) p.a(r, c) = gauss(rng);
  }
  Vector w(n);
  for (Index c = 0; c < n; ++c) w(c) = inner(rng);
  p.c.resize(n);
  for (Index c = 0; c < n; ++c) p.c(c) = gauss(rng);
  p.b = p.a * w;
  p.structure = BlockStructure::uniform(n, 1);
  p.barriers.assign(std::size_t(n), Barrier::log_box(0.0, 1.0));
  p.radius = std::sqrt(double(n));
  p.name = fmt::format("random_lp_n{}_s{}", n, seed);
  return {p, w};
}

/// N = n terms over d = max(1, n/2) features; offsets come from a planted
/// x in [−R/2, R/2]^d plus Laplace noise.
inline io::Instance regression(GenKind kind, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::exponential_distribution<double> expo(10.0);
  std::bernoulli_distribution coin(0.5);
  const Index terms = n, d = std::max<Index>(1, n / 2);
  ErmInstance e;
  e.radius = 1.0;
  e.data.resize(terms, d);
  for (Index r = 0; r < terms; ++r) {
    for (Index c = 0; c < d; ++c) e.data(r, c) = gauss(rng);
  }
  Vector planted(d);
  for (Index c = 0; c < d; ++c) planted(c) = e.radius * unit(rng);
  e.offsets = -(e.data * planted);
  for (Index r = 0; r < terms; ++r) e.offsets(r) += coin(rng) ? expo(rng) : -expo(rng);
  const LossKind loss = kind == GenKind::Quantile ? LossKind::Quantile : LossKind::Abs;
  e.losses.assign(std::size_t(terms), loss);
  if (kind == GenKind::Quantile) e.theta.assign(std::size_t(terms), 0.3);
  e.name = fmt::format("{}_n{}_s{}", to_tag(kind), n, seed);

  // Standard-form witness: x = 0, y = b (hinge-free), z halfway to the cap.
  const double cap = erm_cap(e);
  Vector w = Vector::Zero(d + 2 * terms);
  for (Index i = 0; i < terms; ++i) {
    const double y = e.offsets(i);
    w(d + 2 * i) = y;
    w(d + 2 * i + 1) = 0.5 * (std::abs(y) + cap);
  }
  return {e, w};
}

inline io::Instance generate(GenKind kind, Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "generator size must be positive");
  return kind == GenKind::RandomLp ? random_lp(n, seed) : regression(kind, n, seed);
}

inline int gen_command(const std::string& kind_tag, const std::vector<Index>& sizes,
                       std::uint64_t seed, const std::string& out_dir, std::ostream& msg) {
  GenKind kind;
  try {
    kind = parse_gen_kind(kind_tag);
  } catch (const Error& e) {
    msg << "error: " << e.what() << "\n";
    return InvalidInput;
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  for (Index n : sizes) {
    try {
      const io::Instance inst = generate(kind, n, seed);
      const auto path = std::filesystem::path(out_dir) / (inst.name() + ".json");
      io::write_instance(path.string(), inst);
      msg << path.string() << "\n";
    } catch (const Error& e) {
      msg << "error: " << e.what() << "\n";
      return InvalidInput;
    }
  }
  return Ok;
}

// ---------------------------------------------------------------------------
// solve

namespace detail {

inline bool is_breakdown(ErrorKind k) {
  switch (k) {
    case ErrorKind::SingularBlock:
    case ErrorKind::FactorizationFailure:
    case ErrorKind::UpdateSingular:
    case ErrorKind::OutOfDomain:
    case ErrorKind::NumericalBreakdown:
      return true;
    default:
      return false;
  }
}

inline std::string default_output(const std::string& instance) {
  std::filesystem::path p(instance);
  p.replace_extension(".solution.json");
  return p.string();
}

/// Oracle cross-check: the dense robust IPM always, vertex enumeration when
/// the problem is a small box LP.
inline io::Json oracle_report(const StandardProblem& p, const Solution& sol, const RunConfig& cfg) {
  io::Json out;
  const auto [dense_sol, dense_run] = oracle::dense_solve(p, cfg.delta, cfg.mode);
  out["dense_objective"] = dense_sol.objective;
  out["dense_iterations"] = dense_run.iterations;
  out["objective_diff"] = std::abs(dense_sol.objective - sol.objective);
  const auto bounds = oracle::lp_bounds(p.structure, p.barriers);
  if (bounds && p.cols() <= 24) {
    try {
      const auto v = oracle::vertex_lp_solve(p.a, p.b, p.c, bounds->first, bounds->second);
      out["vertex_objective"] = v.objective;
      out["excess"] = sol.objective - v.objective;
      out["excess_within_bound"] = sol.objective - v.objective <= sol.objective_bound;
    } catch (const Error& e) {
      out["vertex_error"] = e.what();
    }
  }
  return out;
}

}  // namespace detail

inline int solve_command(const std::string& instance_path, const RunConfig& cfg,
                         std::string out_path, std::ostream& msg) {
  if (const std::string bad = check(cfg); !bad.empty()) {
    msg << "error: " << bad << "\n";
    return InvalidInput;
  }
  io::Instance inst;
  StandardProblem problem;
  try {
    inst = io::read_instance(instance_path);
    problem = inst.standard();
  } catch (const Error& e) {
    msg << "error: " << e.what() << "\n";
    return InvalidInput;
  }
  const ValidationReport rep = validate(problem);
  if (!rep.ok()) {
    msg << "error: instance failed validation\n";
    for (const auto& f : rep.failures) msg << "  " << f << "\n";
    return InvalidInput;
  }
  if (out_path.empty()) out_path = detail::default_output(instance_path);

  SolveConfig sc = solve_config(cfg);
  std::unique_ptr<io::CsvLog> log;
  IterationRecord last;
  try {
    if (!cfg.log_path.empty()) log = std::make_unique<io::CsvLog>(cfg.log_path);
  } catch (const Error& e) {
    msg << "error: " << e.what() << "\n";
    return InvalidInput;
  }
  sc.path.on_record = [&](const IterationRecord& r) {
    last = r;
    if (log) log->write(r);
  };

  SolveReport report;
  try {
    report = solve(problem, sc);
  } catch (const Error& e) {
    io::Json diag;
    diag["error"] = to_string(e.kind());
    diag["message"] = e.what();
    diag["iteration"] = last.iter;
    diag["t"] = last.t;
    diag["log_phi"] = last.log_phi;
    diag["max_gamma"] = last.max_gamma;
    diag["rebuilds"] = last.rebuilds;
    const std::string diag_path = out_path + ".diagnostics.json";
    try {
      io::write_text(diag_path, io::dump(diag));
    } catch (const Error&) {
    }
    msg << "error: " << e.what() << " (diagnostics in " << diag_path << ")\n";
    if (e.kind() == ErrorKind::IterationLimit) return IterationLimitHit;
    return detail::is_breakdown(e.kind()) ? Breakdown : InvalidInput;
  }

  io::Json doc = io::solution_json(report.solution, &report.path);
  doc["name"] = problem.name;
  doc["delta"] = report.modified.delta;
  doc["mode"] = to_string(cfg.mode);
  doc["max_log_phi"] = report.path.max_log_phi;
  doc["potential_ok"] = report.path.potential_ok;
  if (inst.is_erm()) {
    const auto& e = std::get<ErmInstance>(inst.problem);
    const Vector xe = decode_erm(e, report.solution.x);
    doc["erm_x"] = io::detail::to_json(xe);
    doc["erm_objective"] = erm_objective(e, xe);
  }
  if (cfg.check_oracle) {
    try {
      doc["oracle"] = detail::oracle_report(report.modified.original, report.solution, cfg);
    } catch (const Error& e) {
      doc["oracle"] = io::Json{{"error", e.what()}};
    }
  }
  try {
    io::write_text(out_path, io::dump(doc));
  } catch (const Error& e) {
    msg << "error: " << e.what() << "\n";
    return InvalidInput;
  }
  const Solution& s = report.solution;
  msg << fmt::format("{}: {} objective={:.10g} gap_bound={:.3g} infeas={:.3g} iterations={}\n",
                     problem.name.empty() ? instance_path : problem.name, to_string(s.status),
                     s.objective, s.gap_bound, s.primal_infeas, report.path.iterations);
  switch (s.status) {
    case SolveStatus::Converged: return Ok;
    case SolveStatus::IterationLimit: return IterationLimitHit;
    default: return Breakdown;
  }
}

// ---------------------------------------------------------------------------
// bench

inline constexpr const char* bench_header =
    "instance,n,d,m,iterations,rebuilds,total_ms,update_ms,multiply_ms,step_ms,final_gap,status";

/// Solves every *.json in `dir` (sorted by name) and writes one CSV row each.
inline int bench_command(const std::string& dir, const RunConfig& cfg, std::ostream& csv) {
  if (const std::string bad = check(cfg); !bad.empty()) {
    spdlog::error("{}", bad);
    return InvalidInput;
  }
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    spdlog::error("'{}' is not a directory", dir);
    return InvalidInput;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  csv << bench_header << "\n";
  for (const auto& f : files) {
    const std::string label = f.filename().string();
    StandardProblem p;
    try {
      p = io::read_instance(f.string()).standard();
      const ValidationReport rep = validate(p);
      if (!rep.ok()) throw Error(ErrorKind::InvalidArgument, rep.failures.front());
    } catch (const Error& e) {
      spdlog::warn("skipping {}: {}", label, e.what());
      csv << label << ",,,,,,,,,,,skipped\n";
      continue;
    }
    try {
      const SolveReport r = solve(p, solve_config(cfg));
      csv << fmt::format("{},{},{},{},{},{},{:.3f},{:.3f},{:.3f},{:.3f},{:.6g},{}\n", label,
                         p.cols(), p.rows(), p.structure.num_blocks(), r.path.iterations,
                         r.path.rebuilds, r.path.wall_ms, r.path.phases.update_ms,
                         r.path.phases.multiply_ms, r.path.phases.step_ms,
                         r.solution.gap_bound, to_string(r.solution.status));
    } catch (const Error& e) {
      spdlog::warn("{} failed: {}", label, e.what());
      csv << fmt::format("{},{},{},{},,,,,,,,{}\n", label, p.cols(), p.rows(),
                         p.structure.num_blocks(), to_string(e.kind()));
    }
    csv.flush();
  }
  return Ok;
}

}  // namespace ripm::cli

#endif  // RIPM_COMMANDS_HPP
