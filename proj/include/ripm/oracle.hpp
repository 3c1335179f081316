#ifndef RIPM_ORACLE_HPP
#define RIPM_ORACLE_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ripm/rcp.hpp"

namespace ripm::oracle {

/// One iteration of the dense reference method.
struct DenseTraceRow {
  Vector x;  // iterate before the step
  Vector s;
  double t = 0.0;
  double log_phi = 0.0;
  Vector gammas;
  Vector dx;
  Vector ds;
  Vector alphas;          // ‖δ_{x,i}‖_{x_i}
  double h_dual_sq = 0.0; // Σ_i ‖h_i‖*²_{x_i}
};

using DenseTrace = std::vector<DenseTraceRow>;

struct DenseStep {
  Vector x;
  Vector s;
  DenseTraceRow row;
};

/// Exact step from (x, s) at t: h from the robust rule at (x, s) itself,
/// δ_x = Ṽ^{1/2}(I − P̃)Ṽ^{1/2}h, δ_s = t·Ṽ^{−1/2}P̃Ṽ^{1/2}h with P̃ from a
/// fresh factorization. Ṽ defaults to ∇²φ(x)⁻¹.
inline DenseStep dense_step(const Vector& x, const Vector& s, double t, const PathParams& params,
                            const BlockStructure& structure, const std::vector<Barrier>& barriers,
                            const DenseMatrix& a,
                            const std::optional<BlockDiagMatrix>& v_override = std::nullopt) {
  const StepDirection step = step_direction(x, s, t, params, structure, barriers);
  const BlockDiagMatrix& v = v_override ? *v_override : step.w_bar;
  const Vector y = v.apply(step.h);
  const DenseMatrix normal = normal_matrix(a, v);
  const Vector lam = cholesky_solve(normal, a * y);
  const Vector mw = a.transpose() * lam;  // Aᵀ(AṼAᵀ)⁻¹AṼh
  DenseStep out;
  out.row.x = x;
  out.row.s = s;
  out.row.t = t;
  out.row.log_phi = step.log_phi;
  out.row.gammas = step.gammas;
  out.row.dx = y - v.apply(mw);
  out.row.ds = t * mw;
  out.row.alphas.resize(structure.num_blocks());
  for (Index i = 0; i < structure.num_blocks(); ++i) {
    const Index o = structure.offset(i), k = structure.size(i);
    out.row.alphas(i) = local_norm(step.hess.block(i), out.row.dx.segment(o, k));
  }
  out.row.h_dual_sq = step.h.dot(step.w_bar.apply(step.h));
  out.x = x + out.row.dx;
  out.s = s + out.row.ds;
  return out;
}

struct DenseResult {
  Vector x;
  Vector s;
  double t = 1.0;
  Index iterations = 0;
  double max_log_phi = -std::numeric_limits<double>::infinity();
  double max_alpha_sq_ratio = 0.0;  // max_k Σα_i² / α²
  double max_h_ratio = 0.0;         // max_k Σ‖h_i‖*² / α²
  DenseTrace trace;
};

/// Robust IPM with exact iterates and exact projections each step.
inline DenseResult dense_follow_path(const DenseMatrix& a, const BlockStructure& structure,
                                     const std::vector<Barrier>& barriers, const Vector& x0,
                                     const Vector& s0, const PathParams& params,
                                     bool keep_trace = false,
                                     std::optional<Index> step_limit = std::nullopt) {
  DenseResult res;
  res.x = x0;
  res.s = s0;
  double t = 1.0;
  Index k = 0;
  const double a2 = params.alpha * params.alpha;
  while (t > params.t_final()) {
    if (step_limit && k >= *step_limit) break;
    DenseStep st = dense_step(res.x, res.s, t, params, structure, barriers, a);
    res.max_log_phi = std::max(res.max_log_phi, st.row.log_phi);
    res.max_alpha_sq_ratio = std::max(res.max_alpha_sq_ratio, st.row.alphas.squaredNorm() / a2);
    res.max_h_ratio = std::max(res.max_h_ratio, st.row.h_dual_sq / a2);
    res.x = std::move(st.x);
    res.s = std::move(st.s);
    if (keep_trace) res.trace.push_back(std::move(st.row));
    ++k;
    t = params.t_at(k);
  }
  res.t = t;
  res.iterations = k;
  return res;
}

/// Dense reference for a whole standard problem (same reduction as solve()).
inline std::pair<Solution, DenseResult> dense_solve(const StandardProblem& problem,
                                                    double delta, ParamMode mode,
                                                    const PracticalConstants& c = {}) {
  const Index m = problem.structure.num_blocks() + 1;
  const PathParams probe = make_params(mode, m, problem.nu() + 1.0, delta, c);
  const ModifiedProblem mp = build_modified(problem, probe.delta);
  const PathParams params = make_params(mode, mp.structure.num_blocks(), mp.nu(), probe.delta, c);
  DenseResult r = dense_follow_path(mp.a, mp.structure, mp.barriers, mp.x_init, mp.s_init, params);
  Solution sol = extract_solution(mp, r.x, r.t);
  return {sol, std::move(r)};
}

struct VertexResult {
  Vector x;
  double objective = 0.0;
  long long bases = 0;
};

namespace detail {

template <typename F>
void for_each_combination(Index n, Index k, F&& f) {
  std::vector<Index> comb(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) comb[std::size_t(i)] = i;
  while (true) {
    if (!f(comb)) return;
    Index i = k - 1;
    while (i >= 0 && comb[std::size_t(i)] == n - k + i) --i;
    if (i < 0) return;
    ++comb[std::size_t(i)];
    for (Index j = i + 1; j < k; ++j) comb[std::size_t(j)] = comb[std::size_t(j - 1)] + 1;
  }
}

inline double binomial(Index n, Index k) {
  double r = 1.0;
  for (Index i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

}  // namespace detail

/// min cᵀx s.t. Ax = b, lo ≤ x ≤ hi by enumerating basic solutions. `lo` must
/// be finite; `hi` may be +∞. Requires full row rank A and n ≤ 24.
inline VertexResult vertex_lp_solve(const DenseMatrix& a, const Vector& b, const Vector& c,
                                    const Vector& lo, const Vector& hi,
                                    double budget = 2e6, double feas_tol = 1e-9) {
  const Index d = a.rows(), n = a.cols();
  if (n > 24) throw Error(ErrorKind::InvalidArgument, "vertex enumeration limited to n <= 24");
  if (b.size() != d || c.size() != n || lo.size() != n || hi.size() != n || d > n) {
    throw Error(ErrorKind::Structural, "vertex_lp_solve: dimension mismatch");
  }
  if (!lo.allFinite()) throw Error(ErrorKind::InvalidArgument, "lower bounds must be finite");
  const Index finite_hi = static_cast<Index>((hi.array() < std::numeric_limits<double>::infinity()).count());
  const double work = detail::binomial(n, d) * std::pow(2.0, double(std::min(finite_hi, n - d)));
  if (work > budget) {
    throw Error(ErrorKind::InvalidArgument, "vertex enumeration exceeds the basis budget");
  }
  std::vector<Index> infinite;
  for (Index j = 0; j < n; ++j) {
    if (!(hi(j) < std::numeric_limits<double>::infinity())) infinite.push_back(j);
  }

  // Unbounded iff some ray d ≥ 0 supported on the infinite-hi variables has
  // Ad = 0 and cᵀd < 0; check the vertices of {A_J d = 0, 1ᵀd = 1, d ≥ 0}.
  {
    const Index nj = static_cast<Index>(infinite.size());
    DenseMatrix aj(d + 1, nj);
    for (Index k = 0; k < nj; ++k) {
      aj.col(k).head(d) = a.col(infinite[std::size_t(k)]);
      aj(d, k) = 1.0;
    }
    Vector rhs = Vector::Zero(d + 1);
    rhs(d) = 1.0;
    const Index rank = nj > 0 ? Eigen::FullPivLU<DenseMatrix>(aj).rank() : 0;
    bool unbounded = false;
    if (nj > 0 && rank >= 1) {
      detail::for_each_combination(nj, std::min(rank, nj), [&](const std::vector<Index>& sub) {
        DenseMatrix bmat = aj(Eigen::all, sub);
        Eigen::ColPivHouseholderQR<DenseMatrix> qr(bmat);
        if (qr.rank() < Index(sub.size())) return true;
        const Vector dsub = qr.solve(rhs);
        if ((bmat * dsub - rhs).norm() > 1e-9) return true;
        if (dsub.minCoeff() < -feas_tol) return true;
        double cd = 0.0;
        for (std::size_t k = 0; k < sub.size(); ++k) cd += c(infinite[std::size_t(sub[k])]) * dsub(Index(k));
        if (cd < -1e-12) {
          unbounded = true;
          return false;
        }
        return true;
      });
    }
    if (unbounded) throw Error(ErrorKind::Unbounded, "LP is unbounded");
  }

  VertexResult best;
  best.objective = std::numeric_limits<double>::infinity();
  long long bases = 0;
  std::vector<char> is_basic(static_cast<std::size_t>(n));
  detail::for_each_combination(n, d, [&](const std::vector<Index>& basis) {
    ++bases;
    const DenseMatrix bmat = a(Eigen::all, basis);
    Eigen::PartialPivLU<DenseMatrix> lu(bmat);
    if (d > 0 && !(std::abs(lu.determinant()) > 1e-12 * std::max(1.0, bmat.cwiseAbs().maxCoeff()))) {
      return true;
    }
    std::fill(is_basic.begin(), is_basic.end(), 0);
    for (Index j : basis) is_basic[std::size_t(j)] = 1;
    std::vector<Index> nonbasic, flip;
    for (Index j = 0; j < n; ++j) {
      if (is_basic[std::size_t(j)]) continue;
      nonbasic.push_back(j);
      if (hi(j) < std::numeric_limits<double>::infinity()) flip.push_back(j);
    }
    const unsigned long long patterns = 1ULL << flip.size();
    Vector x(n);
    for (unsigned long long mask = 0; mask < patterns; ++mask) {
      for (Index j : nonbasic) x(j) = lo(j);
      for (std::size_t k = 0; k < flip.size(); ++k) {
        if (mask >> k & 1ULL) x(flip[k]) = hi(flip[k]);
      }
      Vector rhs = b;
      for (Index j : nonbasic) rhs -= a.col(j) * x(j);
      const Vector xb = d > 0 ? Vector(lu.solve(rhs)) : Vector();
      bool ok = true;
      for (Index k = 0; k < d && ok; ++k) {
        const Index j = basis[std::size_t(k)];
        const double scale = std::max(1.0, std::abs(xb(k)));
        if (xb(k) < lo(j) - feas_tol * scale || xb(k) > hi(j) + feas_tol * scale) ok = false;
        x(j) = std::clamp(xb(k), lo(j), hi(j));
      }
      if (!ok) continue;
      const double obj = c.dot(x);
      if (obj < best.objective) {
        best.objective = obj;
        best.x = x;
      }
    }
    return true;
  });
  best.bases = bases;
  if (!std::isfinite(best.objective)) throw Error(ErrorKind::Infeasible, "no feasible vertex");
  return best;
}

/// Bounds implied by LogBox / LogPositive blocks; nullopt for other kinds.
inline std::optional<std::pair<Vector, Vector>> lp_bounds(const BlockStructure& structure,
                                                          const std::vector<Barrier>& barriers) {
  Vector lo(structure.dim()), hi(structure.dim());
  for (Index i = 0; i < structure.num_blocks(); ++i) {
    const Barrier& bar = barriers[std::size_t(i)];
    const Index o = structure.offset(i);
    if (bar.kind() == BarrierKind::LogBox) {
      lo(o) = *bar.lo();
      hi(o) = *bar.hi();
    } else if (bar.kind() == BarrierKind::LogPositive) {
      lo(o) = 0.0;
      hi(o) = std::numeric_limits<double>::infinity();
    } else {
      return std::nullopt;
    }
  }
  return std::make_pair(lo, hi);
}

struct DriftReport {
  double c1 = 0.0;         // max_k (Σ_i drift_i²)^{1/2}
  double c2 = 0.0;         // max_k (Σ_i drift_i⁴)^{1/2}
  double max_drift = 0.0;  // max_{k,i} drift_i
  std::vector<double> per_step_sq;  // Σ_i drift_i² per step
};

/// drift_i = ‖w_i^{−1/2}(w_i^new − w_i)w_i^{−1/2}‖_F with w = ∇²φ(x)⁻¹ between
/// consecutive trace rows.
inline DriftReport drift_diagnostics(const DenseTrace& trace, const BlockStructure& structure,
                                     const std::vector<Barrier>& barriers) {
  DriftReport rep;
  if (trace.size() < 2) return rep;
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    double sq = 0.0, quad = 0.0;
    for (Index i = 0; i < structure.num_blocks(); ++i) {
      const Index o = structure.offset(i), sz = structure.size(i);
      const Barrier& bar = barriers[std::size_t(i)];
      const DenseMatrix h_old = bar.hess(trace[k].x.segment(o, sz));
      const DenseMatrix h_new = bar.hess(trace[k + 1].x.segment(o, sz));
      // w^{−1/2} = H^{1/2}
      const DenseMatrix hs = ripm::detail::spectral_map(h_old, [](double v) { return std::sqrt(v); });
      const DenseMatrix w_new = ripm::detail::symmetrized(h_new.inverse());
      const DenseMatrix w_old = ripm::detail::symmetrized(h_old.inverse());
      const double dr = (hs * (w_new - w_old) * hs).norm();
      sq += dr * dr;
      quad += dr * dr * dr * dr;
      rep.max_drift = std::max(rep.max_drift, dr);
    }
    rep.per_step_sq.push_back(sq);
    rep.c1 = std::max(rep.c1, std::sqrt(sq));
    rep.c2 = std::max(rep.c2, std::sqrt(quad));
  }
  return rep;
}

}  // namespace ripm::oracle

#endif  // RIPM_ORACLE_HPP
