#ifndef RIPM_RCP_HPP
#define RIPM_RCP_HPP

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ripm/barrier.hpp"
#include "ripm/cpm.hpp"
#include "ripm/problem.hpp"

namespace ripm {

enum class ParamMode { Paper, Practical };

inline const char* to_string(ParamMode m) {
  return m == ParamMode::Paper ? "paper" : "practical";
}

/// Multipliers of the practical parameter family
///   λ = c_λ·ln m,  α = min(c_α/λ², 1/(100λ)),  κ = c_κ·α,
/// with coefficients switched off below c_thr·√α.
struct PracticalConstants {
  double c_lambda = 0.25;
  double c_alpha = 0.02;
  double c_kappa = 0.5;
  double c_threshold = 1.0;
};

struct PathParams {
  double lambda = 1.0;
  double alpha = 1e-3;
  double kappa = 1e-6;
  double threshold = 1.0;  // γ_i below this gets c_i = 0
  double nu = 1.0;
  double delta = 0.1;
  ParamMode mode = ParamMode::Practical;

  /// λ = 2¹⁶ ln m, α = 2⁻²⁰λ⁻², κ = 2⁻¹⁰α, threshold 96√α; δ ← min(1/λ, δ).
  static PathParams paper(Index m, double nu, double delta) {
    PathParams p;
    p.mode = ParamMode::Paper;
    p.lambda = std::ldexp(1.0, 16) * std::log(std::max<double>(double(m), 2.0));
    p.alpha = std::ldexp(1.0, -20) / (p.lambda * p.lambda);
    p.kappa = std::ldexp(1.0, -10) * p.alpha;
    p.threshold = 96.0 * std::sqrt(p.alpha);
    p.nu = nu;
    p.delta = std::min(1.0 / p.lambda, delta);
    p.check();
    return p;
  }

  static PathParams practical(Index m, double nu, double delta, PracticalConstants c = {}) {
    PathParams p;
    p.mode = ParamMode::Practical;
    p.lambda = c.c_lambda * std::log(std::max<double>(double(m), 2.0));
    p.alpha = std::min(c.c_alpha / (p.lambda * p.lambda), 1.0 / (100.0 * p.lambda));
    p.kappa = c.c_kappa * p.alpha;
    p.threshold = c.c_threshold * std::sqrt(p.alpha);
    p.nu = nu;
    p.delta = std::min(1.0 / p.lambda, delta);
    p.check();
    return p;
  }

  void check() const {
    if (!(lambda > 0.0 && alpha > 0.0 && kappa > 0.0 && nu >= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "path parameters must be positive, nu >= 1");
    }
    if (lambda * alpha > 0.01 * (1.0 + 1e-12)) {
      throw Error(ErrorKind::InvalidArgument, "need λα ≤ 1/100");
    }
    if (!(threshold < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "activation threshold must be below 1");
    }
    if (!(kappa < std::sqrt(nu))) {
      throw Error(ErrorKind::InvalidArgument, "κ must be below √ν");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
    }
  }

  double shrink() const { return 1.0 - kappa / std::sqrt(nu); }
  double t_final() const { return delta * delta / (4.0 * nu); }
  /// t after k steps, (1 − κ/√ν)^k.
  double t_at(Index k) const { return std::pow(shrink(), double(k)); }
  /// ⌈log(4ν/δ²) / −log(1 − κ/√ν)⌉.
  Index iteration_count() const {
    return static_cast<Index>(std::ceil(std::log(4.0 * nu / (delta * delta)) /
                                        -std::log(shrink())));
  }
  /// 80m/α.
  double potential_bound(Index m) const { return 80.0 * double(m) / alpha; }
};

// ---------------------------------------------------------------------------
// Per-block quantities.

/// μ_i = s_i/t + ∇φ_i(x_i).
inline Vector mu(const Barrier& bar, const Vector& x_i, const Vector& s_i, double t) {
  return s_i / t + bar.grad(x_i);
}

/// γ_i = ‖μ_i‖_{∇²φ_i(x_i)⁻¹}.
inline double gamma(const Barrier& bar, const Vector& mu_i, const Vector& x_i) {
  return dual_norm(bar.hess(x_i), mu_i);
}

/// c_i = exp(λγ_i)/γ_i / (Σ_j exp(2λγ_j))^{1/2} for γ_i ≥ threshold, else 0.
/// exp(λ·max γ) is factored out of numerator and denominator.
inline Vector soft_coeff(const Vector& gammas, double lambda, double threshold) {
  Vector c = Vector::Zero(gammas.size());
  if (gammas.size() == 0) return c;
  const double gmax = gammas.maxCoeff();
  const double denom = std::sqrt((2.0 * lambda * (gammas.array() - gmax)).exp().sum());
  for (Index i = 0; i < gammas.size(); ++i) {
    if (gammas(i) >= threshold && gammas(i) > 0.0) {
      c(i) = std::exp(lambda * (gammas(i) - gmax)) / gammas(i) / denom;
    }
  }
  return c;
}

/// log Φ with Φ = Σ exp(λγ_i).
inline double log_potential(const Vector& gammas, double lambda) {
  if (gammas.size() == 0) return -std::numeric_limits<double>::infinity();
  const double top = lambda * gammas.maxCoeff();
  return top + std::log((lambda * gammas.array() - top).exp().sum());
}

struct StepDirection {
  Vector h;
  BlockDiagMatrix w_bar;  // ∇²φ(x̄)⁻¹
  BlockDiagMatrix hess;   // ∇²φ(x̄)
  Vector gammas;
  Vector coeffs;
  double log_phi = 0.0;
  /// (Σ_i ‖h_i‖*²_{x̄_i})^{1/2}
  double h_norm = 0.0;
};

/// h_i = −α·c_i·μ_i evaluated at (x̄, s̄), and W̄ = ∇²φ(x̄)⁻¹.
inline StepDirection step_direction(const Vector& x_bar, const Vector& s_bar, double t,
                                    const PathParams& params, const BlockStructure& structure,
                                    const std::vector<Barrier>& barriers) {
  const Index m = structure.num_blocks();
  StepDirection out;
  out.gammas.resize(m);
  std::vector<Vector> mus(static_cast<std::size_t>(m));
  std::vector<DenseMatrix> hess(static_cast<std::size_t>(m)), inv(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const Index o = structure.offset(i), k = structure.size(i);
    const Barrier& bar = barriers[std::size_t(i)];
    const Vector xi = x_bar.segment(o, k);
    if (!bar.is_interior(xi, 0.0)) {
      throw Error(ErrorKind::OutOfDomain, "x̄ left the domain", std::size_t(i));
    }
    DenseMatrix h = bar.hess(xi);
    mus[std::size_t(i)] = mu(bar, xi, s_bar.segment(o, k), t);
    if (k == 1) {
      inv[std::size_t(i)] = DenseMatrix::Constant(1, 1, 1.0 / h(0, 0));
    } else {
      inv[std::size_t(i)] = detail::symmetrized(h.inverse());
    }
    out.gammas(i) = std::sqrt(std::max(
        mus[std::size_t(i)].dot(inv[std::size_t(i)] * mus[std::size_t(i)]), 0.0));
    hess[std::size_t(i)] = std::move(h);
  }
  if (!out.gammas.allFinite()) {
    throw Error(ErrorKind::NumericalBreakdown, "non-finite centrality error");
  }
  out.coeffs = soft_coeff(out.gammas, params.lambda, params.threshold);
  out.h.resize(structure.dim());
  double hn2 = 0.0;
  for (Index i = 0; i < m; ++i) {
    const Index o = structure.offset(i), k = structure.size(i);
    out.h.segment(o, k) = -params.alpha * out.coeffs(i) * mus[std::size_t(i)];
    const double hi = params.alpha * out.coeffs(i) * out.gammas(i);
    hn2 += hi * hi;
  }
  out.h_norm = std::sqrt(hn2);
  out.log_phi = log_potential(out.gammas, params.lambda);
  out.w_bar = BlockDiagMatrix(structure, std::move(inv), 1e-6);
  out.hess = BlockDiagMatrix(structure, std::move(hess), 1e-6);
  return out;
}

struct PotentialValue {
  double log_phi = 0.0;
  double phi = 0.0;  // may be +inf when log_phi is huge
};

/// Φᵗ(x̄, s̄) = Σ exp(λγ_i).
inline PotentialValue potential(const Vector& x_bar, const Vector& s_bar, double t,
                                const PathParams& params, const BlockStructure& structure,
                                const std::vector<Barrier>& barriers) {
  const Index m = structure.num_blocks();
  Vector g(m);
  for (Index i = 0; i < m; ++i) {
    const Index o = structure.offset(i), k = structure.size(i);
    const Barrier& bar = barriers[std::size_t(i)];
    const Vector xi = x_bar.segment(o, k);
    g(i) = gamma(bar, mu(bar, xi, s_bar.segment(o, k), t), xi);
  }
  PotentialValue v;
  v.log_phi = log_potential(g, params.lambda);
  v.phi = std::exp(v.log_phi);
  return v;
}

// ---------------------------------------------------------------------------
// The path-following loop.

struct IterationRecord {
  Index iter = 0;
  double t = 0.0;
  double log_phi = 0.0;
  double max_gamma = 0.0;
  double h_norm = 0.0;
  UpdateBranch branch = UpdateBranch::Partial;
  Index r = 0;
  Index rebuilds = 0;
  double wall_ms = 0.0;
};

enum class HookPhase { BeforeMove, AfterMove };

/// What a test hook sees around each multiply_move.
struct StepContext {
  Index iter = 0;
  double t = 0.0;
  const Vector* x_bar = nullptr;
  const Vector* s_bar = nullptr;
  const StepDirection* step = nullptr;
  const CentralPathMaintenance* cpm = nullptr;
};

struct PathOptions {
  Index max_iters = 50'000'000;
  /// Stop after this many steps regardless of t (for bounded experiments).
  std::optional<Index> step_limit;
  std::function<void(const IterationRecord&)> on_record;
  std::function<void(HookPhase, const StepContext&)> hook;
};

struct PhaseTimes {
  double step_ms = 0.0;
  double update_ms = 0.0;
  double multiply_ms = 0.0;
};

struct PathResult {
  Vector x;  // exact final iterate
  Vector s;
  Vector x_bar;
  Vector s_bar;
  double t = 1.0;
  Index iterations = 0;
  Index rebuilds = 0;
  Index full_updates = 0;
  double max_log_phi = -std::numeric_limits<double>::infinity();
  bool potential_ok = true;  // Φ ≤ 80m/α at every iteration
  PhaseTimes phases;
  double wall_ms = 0.0;
  SolveStatus status = SolveStatus::Converged;
};

/// Runs t = 1 → δ²/(4ν) on min cᵀx, Ax = b, x ∈ ∏K_i from the given
/// primal-dual pair, stepping only with the maintained (x̄, s̄).
inline PathResult follow_path(const DenseMatrix& a, const BlockStructure& structure,
                              const std::vector<Barrier>& barriers, const Vector& x0,
                              const Vector& s0, const PathParams& params,
                              const MaintenanceConfig& cfg, const PathOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point a0) {
    return std::chrono::duration<double, std::milli>(clock::now() - a0).count();
  };
  const auto start = clock::now();
  const Index m = structure.num_blocks();
  const double log_bound = std::log(params.potential_bound(m));

  CentralPathMaintenance cpm(a, structure, cfg);
  {
    // W = ∇²φ(x₀)⁻¹
    std::vector<DenseMatrix> blocks;
    for (Index i = 0; i < m; ++i) {
      const Vector xi = x0.segment(structure.offset(i), structure.size(i));
      blocks.push_back(detail::symmetrized(barriers[std::size_t(i)].hess(xi).inverse()));
    }
    cpm.initialize(x0, s0, BlockDiagMatrix(structure, std::move(blocks), 1e-6), 1.0);
  }

  PathResult res;
  const double t_end = params.t_final();
  double t = 1.0;
  Index k = 0;
  bool warned = false;
  while (t > t_end) {
    if (opts.step_limit && k >= *opts.step_limit) break;
    if (k >= opts.max_iters) {
      throw Error(ErrorKind::IterationLimit,
                  "iteration limit " + std::to_string(opts.max_iters) + " reached at t=" +
                      std::to_string(t));
    }
    const double t_new = params.t_at(k + 1);
    auto tp = clock::now();
    const auto [x_bar, s_bar] = cpm.query();
    const StepDirection step = step_direction(x_bar, s_bar, t, params, structure, barriers);
    res.phases.step_ms += ms_since(tp);

    tp = clock::now();
    const UpdateInfo up = cpm.update(step.w_bar, t);
    res.phases.update_ms += ms_since(tp);

    StepContext ctx{k, t, &x_bar, &s_bar, &step, &cpm};
    if (opts.hook) opts.hook(HookPhase::BeforeMove, ctx);
    tp = clock::now();
    cpm.multiply_move(step.h, t);
    res.phases.multiply_ms += ms_since(tp);
    if (opts.hook) opts.hook(HookPhase::AfterMove, ctx);

    res.max_log_phi = std::max(res.max_log_phi, step.log_phi);
    if (step.log_phi > log_bound) {
      res.potential_ok = false;
      if (!warned) {
        spdlog::warn("potential log Φ = {:.3f} exceeds log(80m/α) = {:.3f} at iteration {}",
                     step.log_phi, log_bound, k);
        warned = true;
      }
    }
    if (opts.on_record) {
      IterationRecord rec;
      rec.iter = k;
      rec.t = t;
      rec.log_phi = step.log_phi;
      rec.max_gamma = step.gammas.maxCoeff();
      rec.h_norm = step.h_norm;
      rec.branch = up.branch;
      rec.r = up.branch == UpdateBranch::Full ? up.r : up.violations;
      rec.rebuilds = cpm.rebuilds();
      rec.wall_ms = ms_since(start);
      opts.on_record(rec);
    }
    t = t_new;
    ++k;
  }
  auto [x, s] = cpm.exact_iterates();
  std::tie(res.x_bar, res.s_bar) = cpm.query();
  res.x = std::move(x);
  res.s = std::move(s);
  res.t = t;
  res.iterations = k;
  res.rebuilds = cpm.rebuilds();
  res.full_updates = cpm.full_updates();
  res.wall_ms = ms_since(start);
  if (!res.x.allFinite() || !res.s.allFinite()) {
    throw Error(ErrorKind::NumericalBreakdown, "non-finite final iterate");
  }
  return res;
}

struct SolveConfig {
  double delta = 1e-3;
  ParamMode mode = ParamMode::Practical;
  PracticalConstants constants{};
  MaintenanceConfig maintenance{};
  PathOptions path{};
};

struct SolveReport {
  Solution solution;
  PathResult path;
  PathParams params;
  ModifiedProblem modified;
};

inline PathParams make_params(ParamMode mode, Index m, double nu, double delta,
                              const PracticalConstants& c = {}) {
  return mode == ParamMode::Paper ? PathParams::paper(m, nu, delta)
                                  : PathParams::practical(m, nu, delta, c);
}

/// Builds the modified problem, follows the path, and extracts the solution
/// of the original problem from the exact final iterate.
inline SolveReport solve(const StandardProblem& problem, const SolveConfig& cfg = {}) {
  // λ depends only on m, so clamp δ before building the modified program.
  const Index m = problem.structure.num_blocks() + 1;
  const PathParams probe = make_params(cfg.mode, m, problem.nu() + 1.0, cfg.delta, cfg.constants);
  SolveReport rep;
  rep.modified = build_modified(problem, probe.delta);
  rep.params = make_params(cfg.mode, rep.modified.structure.num_blocks(), rep.modified.nu(),
                           probe.delta, cfg.constants);
  rep.path = follow_path(rep.modified.a, rep.modified.structure, rep.modified.barriers,
                         rep.modified.x_init, rep.modified.s_init, rep.params, cfg.maintenance,
                         cfg.path);
  rep.solution = extract_solution(rep.modified, rep.path.x, rep.path.t);
  rep.solution.status = rep.solution.interior ? SolveStatus::Converged
                                              : SolveStatus::NumericalBreakdown;
  if (rep.path.t > rep.params.t_final()) rep.solution.status = SolveStatus::IterationLimit;
  return rep;
}

}  // namespace ripm

#endif  // RIPM_RCP_HPP
