#ifndef RIPM_PROBLEM_HPP
#define RIPM_PROBLEM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ripm/barrier.hpp"
#include "ripm/blocklin.hpp"

namespace ripm {

/// min cᵀx s.t. Ax = b, x_i ∈ K_i.
struct StandardProblem {
  DenseMatrix a;
  Vector b;
  Vector c;
  BlockStructure structure;
  std::vector<Barrier> barriers;
  /// Bound on ‖x‖₂ over the feasible set; required when a block is unbounded.
  std::optional<double> radius;
  std::optional<double> lipschitz;
  std::string name;

  Index rows() const { return a.rows(); }
  Index cols() const { return a.cols(); }
  double nu() const {
    double total = 0.0;
    for (const auto& bar : barriers) total += bar.nu();
    return total;
  }
};

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Structural checks: shapes, barrier dimensions, finite data, rank(A) = d.
inline ValidationReport validate(const StandardProblem& p, double rank_tol = 1e-10) {
  ValidationReport rep;
  auto fail = [&](std::string msg) { rep.failures.push_back(std::move(msg)); };
  const Index d = p.a.rows(), n = p.a.cols();
  if (p.b.size() != d) fail("b has length " + std::to_string(p.b.size()) + ", expected " + std::to_string(d));
  if (p.c.size() != n) fail("c has length " + std::to_string(p.c.size()) + ", expected " + std::to_string(n));
  if (p.structure.dim() != n) fail("blocks cover " + std::to_string(p.structure.dim()) + " coordinates, A has " + std::to_string(n) + " columns");
  if (static_cast<Index>(p.barriers.size()) != p.structure.num_blocks()) {
    fail("barrier count does not match block count");
  } else {
    for (Index i = 0; i < p.structure.num_blocks(); ++i) {
      if (p.barriers[std::size_t(i)].dim() != p.structure.size(i)) {
        fail("block " + std::to_string(i) + ": barrier dimension " +
             std::to_string(p.barriers[std::size_t(i)].dim()) + " but block size " +
             std::to_string(p.structure.size(i)));
      }
    }
  }
  if (!p.a.allFinite()) fail("A has non-finite entries");
  if (!p.b.allFinite()) fail("b has non-finite entries");
  if (!p.c.allFinite()) fail("c has non-finite entries");
  if (d == 0) fail("A has no rows");
  if (d > n) fail("A has more rows than columns");
  if (d > 0 && d <= n && p.a.allFinite()) {
    // Pivoted QR of Aᵀ: rows not picked as pivots within the numerical rank
    // are linear combinations of the others.
    Eigen::ColPivHouseholderQR<DenseMatrix> qr(p.a.transpose());
    const auto rdiag = qr.matrixQR().diagonal().cwiseAbs();
    const double top = rdiag.size() ? rdiag(0) : 0.0;
    Index rank = 0;
    while (rank < rdiag.size() && rdiag(rank) > rank_tol * std::max(top, 1e-300)) ++rank;
    if (rank < d) {
      std::string rows;
      for (Index k = rank; k < d; ++k) {
        if (!rows.empty()) rows += ", ";
        rows += std::to_string(qr.colsPermutation().indices()(k));
      }
      fail("A is rank deficient (rank " + std::to_string(rank) + " < " + std::to_string(d) +
           "); dependent rows: " + rows);
    }
  }
  if (p.radius && !(*p.radius > 0.0)) fail("radius must be positive");
  return rep;
}

/// Upper bound on ‖x‖₂ over K_i, if K_i is bounded.
inline std::optional<double> radius_bound(const Barrier& bar) {
  switch (bar.kind()) {
    case BarrierKind::LogBox: return std::max(std::abs(*bar.lo()), std::abs(*bar.hi()));
    case BarrierKind::Ball: return *bar.radius();
    case BarrierKind::EpigraphAbs:
      if (bar.cap()) return std::sqrt(2.0) * *bar.cap();
      return std::nullopt;
    default: return std::nullopt;
  }
}

/// The problem with the extra column b − Ax⁽⁰⁾ and variable τ ≥ 0 whose
/// initial primal-dual point is explicit and δ-central.
struct ModifiedProblem {
  DenseMatrix a;
  Vector b;
  Vector c;
  BlockStructure structure;
  std::vector<Barrier> barriers;
  Vector center;      // x⁽⁰⁾
  Vector x_init;      // [x⁽⁰⁾; 1]
  Vector y_init;      // 0
  Vector s_init;      // c̄
  double delta = 0.0;
  double lipschitz = 1.0;
  double radius = 1.0;
  /// Problem actually solved (unbounded blocks compactified).
  StandardProblem original;

  Index original_dim() const { return original.cols(); }
  double nu() const {
    double total = 0.0;
    for (const auto& bar : barriers) total += bar.nu();
    return total;
  }
};

/// Replaces unbounded LogPositive blocks by LogBox(0, 2R) using the radius
/// metadata; with ‖x‖₂ ≤ R on the feasible set this leaves the optimum intact.
inline StandardProblem compactify(const StandardProblem& p) {
  StandardProblem out = p;
  for (auto& bar : out.barriers) {
    if (radius_bound(bar)) continue;
    if (bar.kind() == BarrierKind::LogPositive && p.radius) {
      bar = Barrier::log_box(0.0, 2.0 * *p.radius);
      continue;
    }
    if (bar.kind() == BarrierKind::EpigraphAbs && p.radius) {
      bar = Barrier::epigraph_abs(2.0 * *p.radius);
      continue;
    }
    if (bar.kind() == BarrierKind::Custom && bar.analytic_center()) continue;
    throw Error(ErrorKind::MissingAnalyticCenter,
                std::string("unbounded ") + to_tag(bar.kind()) +
                    " block needs the radius metadata R");
  }
  return out;
}

inline ModifiedProblem build_modified(const StandardProblem& problem, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
  }
  const ValidationReport rep = validate(problem);
  if (!rep.ok()) throw Error(ErrorKind::Structural, rep.failures.front());
  StandardProblem p = compactify(problem);
  const Index n = p.cols(), d = p.rows();

  Vector x0(n);
  double r2 = 0.0;
  bool all_bounded = true;
  for (Index i = 0; i < p.structure.num_blocks(); ++i) {
    const Barrier& bar = p.barriers[std::size_t(i)];
    const auto c = bar.analytic_center();
    if (!c) {
      throw Error(ErrorKind::MissingAnalyticCenter,
                  std::string(to_tag(bar.kind())) + " block has no analytic center",
                  static_cast<std::size_t>(i));
    }
    x0.segment(p.structure.offset(i), p.structure.size(i)) = *c;
    if (const auto rb = radius_bound(bar)) {
      r2 += *rb * *rb;
    } else {
      all_bounded = false;
    }
  }
  double radius = all_bounded ? std::sqrt(r2) : p.radius.value_or(0.0);
  if (!(radius > 0.0)) {
    throw Error(ErrorKind::MissingAnalyticCenter, "cannot bound the domain diameter");
  }
  double lip = p.c.norm();
  if (p.lipschitz && *p.lipschitz >= lip) lip = *p.lipschitz;
  if (!(lip > 0.0)) lip = 1.0;

  ModifiedProblem mp;
  mp.a.resize(d, n + 1);
  mp.a.leftCols(n) = p.a;
  mp.a.col(n) = p.b - p.a * x0;
  mp.b = p.b;
  mp.c.resize(n + 1);
  mp.c.head(n) = (delta / (lip * radius)) * p.c;
  mp.c(n) = 1.0;
  std::vector<Index> sizes = p.structure.sizes();
  sizes.push_back(1);
  mp.structure = BlockStructure(sizes, std::max<Index>(4, p.structure.max_size()));
  mp.barriers = p.barriers;
  mp.barriers.push_back(Barrier::log_positive());
  mp.center = x0;
  mp.x_init.resize(n + 1);
  mp.x_init.head(n) = x0;
  mp.x_init(n) = 1.0;
  mp.y_init = Vector::Zero(d);
  mp.s_init = mp.c;
  mp.delta = delta;
  mp.lipschitz = lip;
  mp.radius = radius;
  mp.original = std::move(p);
  return mp;
}

/// ‖s̄ + ∇φ̄(x̄)‖*_{x̄} at the initial point.
inline double initial_centrality(const ModifiedProblem& mp) {
  double total = 0.0;
  for (Index i = 0; i < mp.structure.num_blocks(); ++i) {
    const Index o = mp.structure.offset(i), k = mp.structure.size(i);
    const Barrier& bar = mp.barriers[std::size_t(i)];
    const Vector xi = mp.x_init.segment(o, k);
    const Vector mu = mp.s_init.segment(o, k) + bar.grad(xi);
    const double g = dual_norm(bar.hess(xi), mu);
    total += g * g;
  }
  return std::sqrt(total);
}

enum class SolveStatus { Converged, IterationLimit, NumericalBreakdown, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalBreakdown: return "NumericalBreakdown";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

struct Solution {
  Vector x;
  double objective = 0.0;
  double gap_bound = 0.0;            // 4tν on the modified problem
  double primal_infeas = 0.0;        // ‖Ax − b‖₁
  double tau = 0.0;
  double objective_bound = 0.0;      // LR·δ
  double infeas_bound = 0.0;         // 3δ(RΣ|A_ij| + ‖b‖₁)
  bool interior = false;
  SolveStatus status = SolveStatus::Converged;
};

/// First n coordinates of the final modified iterate and their certificates.
inline Solution extract_solution(const ModifiedProblem& mp, const Vector& x_final, double t_final) {
  const StandardProblem& p = mp.original;
  const Index n = p.cols();
  if (x_final.size() != n + 1) {
    throw Error(ErrorKind::Structural, "final iterate has wrong length");
  }
  Solution sol;
  sol.x = x_final.head(n);
  sol.tau = x_final(n);
  sol.objective = p.c.dot(sol.x);
  sol.gap_bound = 4.0 * t_final * mp.nu();
  sol.primal_infeas = (p.a * sol.x - p.b).lpNorm<1>();
  sol.objective_bound = mp.lipschitz * mp.radius * mp.delta;
  sol.infeas_bound =
      3.0 * mp.delta * (mp.radius * p.a.cwiseAbs().sum() + p.b.lpNorm<1>());
  sol.interior = true;
  for (Index i = 0; i < p.structure.num_blocks(); ++i) {
    const Vector xi = sol.x.segment(p.structure.offset(i), p.structure.size(i));
    if (!p.barriers[std::size_t(i)].is_interior(xi, 0.0)) sol.interior = false;
  }
  return sol;
}

/// 4tν, after checking ‖μ_i‖*_{x_i} ≤ 1 for all blocks, Aᵀy + s = c and Ax = b.
inline double gap_certificate(const DenseMatrix& a, const Vector& b, const Vector& c,
                              const BlockStructure& structure,
                              const std::vector<Barrier>& barriers, const Vector& x,
                              const Vector& s, const Vector& y, double t,
                              double tol = 1e-6) {
  double nu = 0.0;
  for (Index i = 0; i < structure.num_blocks(); ++i) {
    const Index o = structure.offset(i), k = structure.size(i);
    const Barrier& bar = barriers[std::size_t(i)];
    const Vector xi = x.segment(o, k);
    if (!bar.is_interior(xi, 0.0)) {
      throw Error(ErrorKind::CertificateInvalid, "x is not interior", std::size_t(i));
    }
    const Vector mu = s.segment(o, k) / t + bar.grad(xi);
    if (dual_norm(bar.hess(xi), mu) > 1.0 + tol) {
      throw Error(ErrorKind::CertificateInvalid, "centrality ‖μ_i‖* exceeds 1", std::size_t(i));
    }
    nu += bar.nu();
  }
  const double dual_res = (a.transpose() * y + s - c).norm();
  if (dual_res > tol * std::max(1.0, c.norm())) {
    throw Error(ErrorKind::CertificateInvalid, "dual residual Aᵀy + s − c too large");
  }
  const double primal_res = (a * x - b).norm();
  if (primal_res > tol * std::max(1.0, b.norm())) {
    throw Error(ErrorKind::CertificateInvalid, "primal residual Ax − b too large");
  }
  return 4.0 * t * nu;
}

/// Least-squares y with Aᵀy ≈ c − s.
inline Vector recover_dual(const DenseMatrix& a, const Vector& c, const Vector& s) {
  return a.transpose().colPivHouseholderQr().solve(c - s);
}

// ---------------------------------------------------------------------------
// Empirical risk minimization frontends.

enum class LossKind { Abs, Quantile, Hinge };

inline const char* to_tag(LossKind k) {
  switch (k) {
    case LossKind::Abs: return "abs";
    case LossKind::Quantile: return "quantile";
    case LossKind::Hinge: return "hinge";
  }
  return "unknown";
}

inline LossKind parse_loss(const std::string& tag) {
  if (tag == "abs" || tag == "l1") return LossKind::Abs;
  if (tag == "quantile") return LossKind::Quantile;
  if (tag == "hinge") return LossKind::Hinge;
  throw Error(ErrorKind::UnsupportedLoss, "unsupported loss '" + tag + "'");
}

/// min_x Σ f_i(a_iᵀx + b_i) over ‖x‖_∞ ≤ R, where
///   abs:      f(u) = |u|
///   quantile: f(u) = θ·max(u,0) + (1−θ)·max(−u,0)
///   hinge:    f(u) = max(0, 1 − u)
struct ErmInstance {
  DenseMatrix data;              // rows a_i
  Vector offsets;                // b_i
  std::vector<LossKind> losses;  // one per row
  std::vector<double> theta;     // quantile levels, one per row (ignored otherwise)
  double radius = 1.0;           // R
  std::string name;
};

inline double erm_loss(LossKind k, double theta, double u) {
  switch (k) {
    case LossKind::Abs: return std::abs(u);
    case LossKind::Quantile: return u >= 0.0 ? theta * u : (theta - 1.0) * u;
    case LossKind::Hinge: return std::max(0.0, 1.0 - u);
  }
  return 0.0;
}

inline double erm_objective(const ErmInstance& e, const Vector& x) {
  const Vector u = e.data * x + e.offsets;
  double total = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    total += erm_loss(e.losses[std::size_t(i)], e.theta.empty() ? 0.5 : e.theta[std::size_t(i)], u(i));
  }
  return total;
}

/// Height of the z-cap: 4·√max(d, N)·M·R with M = max(‖A‖₂, ‖b‖₂/R).
inline double erm_cap(const ErmInstance& e) {
  const Index big = std::max(e.data.cols(), e.data.rows());
  const double spec = e.data.rows() && e.data.cols()
                          ? Eigen::JacobiSVD<DenseMatrix>(e.data).singularValues()(0)
                          : 0.0;
  const double m = std::max({spec, e.offsets.norm() / e.radius, 1e-12});
  return 4.0 * std::sqrt(double(big)) * m * e.radius;
}

/// Variables [x (d, boxes) ; (y_1, z_1) ; … ; (y_N, z_N)], constraints
/// y_i − a_iᵀx = b_i (b_i − 1 for hinge), |y_i| < z_i < cap.
inline StandardProblem erm_to_standard(const ErmInstance& e) {
  const Index d = e.data.cols(), terms = e.data.rows();
  if (e.offsets.size() != terms || static_cast<Index>(e.losses.size()) != terms) {
    throw Error(ErrorKind::Structural, "ERM data, offsets and losses disagree in length");
  }
  if (!e.theta.empty() && static_cast<Index>(e.theta.size()) != terms) {
    throw Error(ErrorKind::Structural, "ERM theta must be empty or one per term");
  }
  if (!(e.radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "ERM radius must be positive");
  const double cap = erm_cap(e);
  StandardProblem p;
  const Index n = d + 2 * terms;
  p.a = DenseMatrix::Zero(terms, n);
  p.b.resize(terms);
  p.c = Vector::Zero(n);
  std::vector<Index> sizes(std::size_t(d), 1);
  for (Index i = 0; i < d; ++i) p.barriers.push_back(Barrier::log_box(-e.radius, e.radius));
  for (Index i = 0; i < terms; ++i) {
    const Index col = d + 2 * i;
    p.a.row(i).head(d) = -e.data.row(i);
    p.a(i, col) = 1.0;
    const LossKind kind = e.losses[std::size_t(i)];
    const double theta = e.theta.empty() ? 0.5 : e.theta[std::size_t(i)];
    p.b(i) = e.offsets(i) - (kind == LossKind::Hinge ? 1.0 : 0.0);
    switch (kind) {
      case LossKind::Abs: p.c(col) = 0.0; p.c(col + 1) = 1.0; break;
      case LossKind::Quantile:
        if (!(theta > 0.0 && theta < 1.0)) {
          throw Error(ErrorKind::UnsupportedLoss, "quantile level must lie in (0, 1)");
        }
        p.c(col) = theta - 0.5;
        p.c(col + 1) = 0.5;
        break;
      case LossKind::Hinge: p.c(col) = -0.5; p.c(col + 1) = 0.5; break;
    }
    sizes.push_back(2);
    p.barriers.push_back(Barrier::epigraph_abs(cap));
  }
  p.structure = BlockStructure(sizes);
  p.radius = std::sqrt(double(d) * e.radius * e.radius + double(terms) * 2.0 * cap * cap);
  p.name = e.name;
  return p;
}

/// x part of a standard-form ERM solution.
inline Vector decode_erm(const ErmInstance& e, const Vector& x_standard) {
  return x_standard.head(e.data.cols());
}

}  // namespace ripm

#endif  // RIPM_PROBLEM_HPP
