#ifndef RIPM_CPM_HPP
#define RIPM_CPM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ripm/blocklin.hpp"
#include "ripm/sketch.hpp"

namespace ripm {

/// 1/max(4, ⌈ln²n⌉), capped at 0.24.
inline double default_eps_mp(Index n) {
  const double l = std::log(std::max<double>(double(n), 2.0));
  return std::min(1.0 / std::max(4.0, std::ceil(l * l)), 0.24);
}

/// ⌈√n·ln n⌉, at least 1 and at most n.
inline Index default_sketch_rows(Index n) {
  const double v = std::ceil(std::sqrt(double(n)) * std::log(std::max<double>(double(n), 2.0)));
  return std::clamp<Index>(static_cast<Index>(v), 1, n);
}

struct MaintenanceConfig {
  double eps_mp = 0.0;       // <= 0 picks default_eps_mp(n)
  double batch_exp = 0.31;   // a
  Index sketch_rows = 0;     // <= 0 picks default_sketch_rows(n)
  bool identity_sketch = false;
  Index bank_count = 0;      // <= 0 picks default_bank_count(n)
  std::uint64_t seed = 1;
  double omega = 2.38;
  Tolerances tol{};
};

// ψ envelope and g weights. Both are diagnostics only.

/// ψ as a function of q = ‖X‖_F².
inline double psi_of_sq(double q, double eps) {
  const double e2 = eps * eps;
  if (q <= e2) return q / (2.0 * eps);
  if (q <= 4.0 * e2) {
    const double d = 4.0 * e2 - q;
    return eps - d * d / (18.0 * e2 * eps);
  }
  return eps;
}

inline double psi(const DenseMatrix& x, double eps) {
  return psi_of_sq(x.squaredNorm(), eps);
}

/// g_i for 1-based rank i.
inline double g_weight(Index i, Index n, double a, double omega = 2.38) {
  const double na = std::pow(double(n), a);
  if (double(i) < na) return 1.0 / na;
  const double e = (omega - 2.0) / (1.0 - a);
  return std::pow(double(i), e) * std::pow(double(n), -a * e);
}

/// Σ g_i ψ(x_(i)) with the x sorted by decreasing Frobenius norm.
inline double psi_potential(std::vector<double> fro_norms, Index n, double eps, double a,
                            double omega = 2.38) {
  std::sort(fro_norms.begin(), fro_norms.end(), std::greater<>());
  double total = 0.0;
  for (std::size_t k = 0; k < fro_norms.size(); ++k) {
    total += g_weight(static_cast<Index>(k + 1), n, a, omega) *
             psi_of_sq(fro_norms[k] * fro_norms[k], eps);
  }
  return total;
}

enum class UpdateBranch { Partial, Full };

inline const char* to_string(UpdateBranch b) {
  return b == UpdateBranch::Partial ? "partial" : "full";
}

struct UpdateInfo {
  UpdateBranch branch = UpdateBranch::Partial;
  Index violations = 0;  // #{‖ȳ_i‖_F ≥ ε_mp}
  Index r = 0;           // blocks moved into V (full branch)
  Index changed = 0;     // |Ŝ|
  Index s_tilde = 0;     // |S̃| afterwards
  bool fallback = false; // Woodbury failed, rebuilt from scratch
  double psi_potential = 0.0;
};

struct MoveInfo {
  bool rebuilt = false;
  bool fallback = false;
  Index s_tilde = 0;
};

/// Maintains M = Aᵀ(AVAᵀ)⁻¹A and its sketch Q = R√V·M under a slowly moving
/// target W̄, and the iterates x, s in the implicit form
///   x = u₁ + Ṽ·M·u₂,   s = u₃ + M·u₄,
/// together with explicit approximations x̄, s̄ maintained through sketches.
class CentralPathMaintenance {
 public:
  CentralPathMaintenance(DenseMatrix a, BlockStructure structure, MaintenanceConfig cfg = {})
      : a_(std::move(a)), structure_(std::move(structure)), cfg_(cfg) {
    const Index n = structure_.dim();
    if (a_.cols() != n) {
      throw Error(ErrorKind::Structural, "A columns do not match block structure");
    }
    if (cfg_.eps_mp <= 0.0) cfg_.eps_mp = default_eps_mp(n);
    if (!(cfg_.eps_mp > 0.0 && cfg_.eps_mp < 0.25)) {
      throw Error(ErrorKind::InvalidArgument, "eps_mp must lie in (0, 1/4)");
    }
    if (!(cfg_.batch_exp > 0.0 && cfg_.batch_exp < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "batch exponent must lie in (0, 1)");
    }
    if (cfg_.sketch_rows <= 0) cfg_.sketch_rows = default_sketch_rows(n);
    if (cfg_.bank_count <= 0) cfg_.bank_count = default_bank_count(n);
    batch_threshold_ = std::pow(double(n), cfg_.batch_exp);
  }

  /// Sets W̄ = V = Ṽ = W, computes M and Q exactly, and stores x, s.
  void initialize(const Vector& x, const Vector& s, const BlockDiagMatrix& w, double t = 1.0) {
    check_vec(x, "x");
    check_vec(s, "s");
    check_target(w);
    w_bar_ = w;
    v_ = w;
    v_tilde_ = w;
    sqrt_v_ = w.sqrt();
    inv_sqrt_v_ = w.inv_sqrt();
    sqrt_v_tilde_ = sqrt_v_;
    inv_sqrt_v_tilde_ = inv_sqrt_v_;
    const DenseMatrix s_mat = normal_matrix(a_, v_);
    m_ = detail::symmetrized(a_.transpose() * cholesky_solve(s_mat, a_, cfg_.tol));

    const std::uint64_t bank_seed = detail::counter_word(cfg_.seed, generation_);
    bank_ = cfg_.identity_sketch
                ? SketchBank::identity(dim(), cfg_.bank_count)
                : SketchBank(cfg_.sketch_rows, dim(), cfg_.bank_count, bank_seed);
    r_stack_ = cfg_.identity_sketch ? DenseMatrix() : bank_.stacked();
    const DenseMatrix sv_m = left_multiply(sqrt_v_, m_);
    q_ = cfg_.identity_sketch ? sv_m : DenseMatrix(r_stack_ * sv_m);

    u1_ = x;
    u2_ = Vector::Zero(dim());
    u3_ = s;
    u4_ = Vector::Zero(dim());
    x_bar_ = x;
    s_bar_ = s;
    s_tilde_.clear();
    cursor_ = 0;
    t_pre_ = t;
    t_last_ = t;
    ++generation_;
    initialized_ = true;
  }

  /// Moves the target to W̄_new. Blocks whose V drifted by ε_mp or more are
  /// either patched lazily into Ṽ (few of them) or folded into M by a
  /// Woodbury update (many of them). `t` is the current path parameter.
  UpdateInfo update(const BlockDiagMatrix& w_bar_new, std::optional<double> t = std::nullopt) {
    require_init();
    check_target(w_bar_new);
    const Index m = structure_.num_blocks();
    std::vector<double> norms(static_cast<std::size_t>(m));
    std::vector<char> inside(static_cast<std::size_t>(m));
    Index violations = 0;
    for (Index i = 0; i < m; ++i) {
      const DenseMatrix& ivs = inv_sqrt_v_.block(i);
      DenseMatrix y = ivs * w_bar_new.block(i) * ivs;
      y = detail::symmetrized(y);
      y.diagonal().array() -= 1.0;
      const double fro = y.norm();
      norms[std::size_t(i)] = fro;
      const Vector ev = detail::eigenvalues(y);
      inside[std::size_t(i)] = ev.minCoeff() >= -cfg_.eps_mp && ev.maxCoeff() <= cfg_.eps_mp;
      if (fro >= cfg_.eps_mp) ++violations;
    }
    UpdateInfo info;
    info.violations = violations;
    info.psi_potential = psi_potential(norms, dim(), cfg_.eps_mp, cfg_.batch_exp, cfg_.omega);
    if (double(violations) < batch_threshold_) {
      info.branch = UpdateBranch::Partial;
      partial_update(w_bar_new, inside, info);
    } else {
      info.branch = UpdateBranch::Full;
      full_update(w_bar_new, norms, inside, t.value_or(t_last_), info);
    }
    info.s_tilde = static_cast<Index>(s_tilde_.size());
    return info;
  }

  /// Implicitly applies x += Ṽ^{1/2}(I − P̃)Ṽ^{1/2}h and s += t·Ṽ^{−1/2}P̃Ṽ^{1/2}h,
  /// updates x̄, s̄ with the sketched estimate, then resets everything from the
  /// exact iterates if the bank is spent or t halved since the last rebuild.
  MoveInfo multiply_move(const Vector& h, double t) {
    require_init();
    check_vec(h, "h");
    if (!(t > 0.0) || t > t_last_ * (1.0 + 1e-14)) {
      throw Error(ErrorKind::InvalidArgument, "path parameter must be positive and non-increasing");
    }
    MoveInfo info;
    std::vector<Index> idx = structure_.indices_of(s_tilde_);
    DenseMatrix kmat;
    if (!idx.empty()) {
      try {
        const DenseMatrix delta = v_tilde_.restricted(s_tilde_) - v_.restricted(s_tilde_);
        kmat = woodbury_factor(m_(idx, idx), delta);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::UpdateSingular) throw;
        rebuild(w_bar_, t_last_);
        info.fallback = true;
        idx.clear();
      }
    }
    info.s_tilde = static_cast<Index>(s_tilde_.size());

    // M̃y = M·w with w = y − 1_S̃·δ_m, where M̃ = Aᵀ(AṼAᵀ)⁻¹A.
    const Vector y = v_tilde_.apply(h);
    Vector w = y;
    Vector g;
    if (!idx.empty()) {
      const Vector delta_m = kmat * (m_(idx, Eigen::all) * y);
      w(idx) -= delta_m;
      g = m_(idx, Eigen::all) * w;
    }

    // z = R_l·√Ṽ·M·w = Q_l·w + R_l[:,S̃]·Γ̃_S̃·(M_{S̃,*}w)
    const Index b = bank_.rows();
    const Index off = bank_.stacked_offset(cursor_);
    Vector z = q_.middleRows(off, b) * w;
    if (!idx.empty()) {
      const DenseMatrix gamma = sqrt_v_tilde_.restricted(s_tilde_) - sqrt_v_.restricted(s_tilde_);
      const Vector corr = gamma * g;
      if (bank_.is_identity()) {
        z(idx) += corr;
      } else {
        z.noalias() += r_stack_(Eigen::seqN(off, b), idx) * corr;
      }
    }
    const Vector rt_z = bank_.is_identity() ? z : Vector(r_stack_.middleRows(off, b).transpose() * z);
    const Vector dx = y - sqrt_v_tilde_.apply(rt_z);
    const Vector ds = t * inv_sqrt_v_tilde_.apply(rt_z);

    u1_ += y;
    u2_ -= w;
    u4_ += t * w;
    ++cursor_;
    t_last_ = t;

    if (cursor_ >= bank_.count() || t <= 0.5 * t_pre_) {
      rebuild(w_bar_, t);
      info.rebuilt = true;
    } else {
      x_bar_ += dx;
      s_bar_ += ds;
    }
    if (!x_bar_.allFinite() || !s_bar_.allFinite()) {
      throw Error(ErrorKind::NumericalBreakdown, "non-finite iterate after multiply_move");
    }
    ++moves_;
    return info;
  }

  std::pair<Vector, Vector> query() const {
    require_init();
    return {x_bar_, s_bar_};
  }

  std::pair<Vector, Vector> exact_iterates() const {
    require_init();
    return {u1_ + v_tilde_.apply(m_ * u2_), u3_ + m_ * u4_};
  }

  Index dim() const { return structure_.dim(); }
  const DenseMatrix& a() const { return a_; }
  const BlockStructure& structure() const { return structure_; }
  const MaintenanceConfig& config() const { return cfg_; }
  double eps_mp() const { return cfg_.eps_mp; }
  double batch_threshold() const { return batch_threshold_; }
  const BlockDiagMatrix& w_bar() const { return w_bar_; }
  const BlockDiagMatrix& v() const { return v_; }
  const BlockDiagMatrix& v_tilde() const { return v_tilde_; }
  const DenseMatrix& m() const { return m_; }
  const DenseMatrix& q() const { return q_; }
  const SketchBank& bank() const { return bank_; }
  const std::vector<Index>& s_tilde() const { return s_tilde_; }
  const Vector& u1() const { return u1_; }
  const Vector& u2() const { return u2_; }
  const Vector& u3() const { return u3_; }
  const Vector& u4() const { return u4_; }
  Index cursor() const { return cursor_; }
  double t_pre() const { return t_pre_; }
  std::uint64_t generation() const { return generation_; }
  Index rebuilds() const { return rebuilds_; }
  Index full_updates() const { return full_updates_; }

  /// (‖x̄ − x‖_{Ṽ⁻¹}, t⁻¹‖s̄ − s‖_{Ṽ}); costs one exact materialization.
  std::pair<double, double> approximation_error(double t) const {
    const auto [x, s] = exact_iterates();
    const Vector dx = x_bar_ - x;
    const Vector ds = s_bar_ - s;
    const double ex = inv_sqrt_v_tilde_.apply(dx).norm();
    const double es = std::sqrt(std::max(ds.dot(v_tilde_.apply(ds)), 0.0)) / t;
    return {ex, es};
  }

 private:
  void partial_update(const BlockDiagMatrix& w_bar_new, const std::vector<char>& inside,
                      UpdateInfo& info) {
    const Index m = structure_.num_blocks();
    std::vector<Index> changed;
    std::vector<DenseMatrix> new_blocks;
    for (Index i = 0; i < m; ++i) {
      const DenseMatrix& target = inside[std::size_t(i)] ? v_.block(i) : w_bar_new.block(i);
      if (target != v_tilde_.block(i)) {
        changed.push_back(i);
        new_blocks.push_back(target);
      }
    }
    info.changed = static_cast<Index>(changed.size());
    if (!changed.empty()) {
      // u₁ += (Ṽ − Ṽ_new)_Ŝ·(M_{Ŝ,*}u₂) keeps u₁ + Ṽ·M·u₂ fixed.
      const std::vector<Index> idx = structure_.indices_of(changed);
      const Vector mu2 = m_(idx, Eigen::all) * u2_;
      const Vector mu4 = m_(idx, Eigen::all) * u4_;
      Index pos = 0;
      for (std::size_t k = 0; k < changed.size(); ++k) {
        const Index i = changed[k];
        const Index o = structure_.offset(i), sz = structure_.size(i);
        const Vector p = mu2.segment(pos, sz);
        u1_.segment(o, sz) += (v_tilde_.block(i) - new_blocks[k]) * p;
        set_v_tilde_block(i, new_blocks[k]);
        x_bar_.segment(o, sz) = u1_.segment(o, sz) + v_tilde_.block(i) * p;
        s_bar_.segment(o, sz) = u3_.segment(o, sz) + mu4.segment(pos, sz);
        pos += sz;
      }
    }
    w_bar_ = w_bar_new;
    refresh_s_tilde();
  }

  void full_update(const BlockDiagMatrix& w_bar_new, const std::vector<double>& norms,
                   const std::vector<char>& inside, double t, UpdateInfo& info) {
    const Index m = structure_.num_blocks();
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) {
      return norms[std::size_t(p)] > norms[std::size_t(q)];
    });
    Index r = info.violations;
    const double shrink = 1.0 - 1.0 / std::log(double(m));
    auto norm_at = [&](Index rank) { return norms[std::size_t(order[std::size_t(rank - 1)])]; };
    while (1.5 * double(r) < double(m)) {
      const Index next = static_cast<Index>(std::ceil(1.5 * double(r)));
      if (!(norm_at(next) >= shrink * norm_at(r))) break;
      r = std::min(next, m);
    }
    info.r = r;
    std::vector<Index> set(order.begin(), order.begin() + r);
    std::sort(set.begin(), set.end());
    const std::vector<Index> idx = structure_.indices_of(set);

    const DenseMatrix cols = m_(Eigen::all, idx);
    DenseMatrix kmat;
    try {
      const DenseMatrix delta = w_bar_new.restricted(set) - v_.restricted(set);
      kmat = woodbury_factor(cols(idx, Eigen::all), delta);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UpdateSingular) throw;
      rebuild(w_bar_new, t);
      info.fallback = true;
      info.changed = m;
      return;
    }
    const DenseMatrix m_new = detail::symmetrized(m_ - cols * kmat * cols.transpose());
    DenseMatrix gamma = -sqrt_v_.restricted(set);
    {
      Index pos = 0;
      for (Index i : set) {
        const Index sz = structure_.size(i);
        gamma.block(pos, pos, sz, sz) +=
            detail::spectral_map(w_bar_new.block(i), [](double x) { return std::sqrt(x); });
        pos += sz;
      }
    }
    // Q_new = Q + R·Γ·M_new + R·√V·(M_new − M), with R√V·M_{*,S} = Q_{*,S}.
    DenseMatrix q_new = q_ - q_(Eigen::all, idx) * (kmat * cols.transpose());
    const DenseMatrix gmn = gamma * m_new(idx, Eigen::all);
    if (bank_.is_identity()) {
      q_new(idx, Eigen::all) += gmn;
    } else {
      q_new.noalias() += r_stack_(Eigen::all, idx) * gmn;
    }

    const Vector mu2_old = m_ * u2_;
    const Vector mu4_old = m_ * u4_;
    const BlockDiagMatrix v_tilde_old = v_tilde_;
    for (Index i : set) {
      v_.set_block(i, w_bar_new.block(i));
      sqrt_v_.set_block(i, detail::spectral_map(v_.block(i), [](double x) { return std::sqrt(x); }));
      inv_sqrt_v_.set_block(i, detail::spectral_map(v_.block(i), [](double x) { return 1.0 / std::sqrt(x); }));
    }
    m_ = m_new;
    q_ = std::move(q_new);
    w_bar_ = w_bar_new;

    std::vector<Index> changed;
    std::vector<char> in_set(static_cast<std::size_t>(m), 0);
    for (Index i : set) in_set[std::size_t(i)] = 1;
    for (Index i = 0; i < m; ++i) {
      const bool keep_v = in_set[std::size_t(i)] || inside[std::size_t(i)];
      const DenseMatrix& target = keep_v ? v_.block(i) : w_bar_new.block(i);
      if (target != v_tilde_.block(i)) {
        changed.push_back(i);
        set_v_tilde_block(i, target);
      }
    }
    info.changed = static_cast<Index>(changed.size());

    const Vector mu2 = m_ * u2_;
    const Vector mu4 = m_ * u4_;
    u1_ += v_tilde_old.apply(mu2_old) - v_tilde_.apply(mu2);
    u3_ += mu4_old - mu4;
    for (Index i : changed) {
      const Index o = structure_.offset(i), sz = structure_.size(i);
      x_bar_.segment(o, sz) = u1_.segment(o, sz) + v_tilde_.block(i) * mu2.segment(o, sz);
      s_bar_.segment(o, sz) = u3_.segment(o, sz) + mu4.segment(o, sz);
    }
    refresh_s_tilde();
    t_pre_ = t;
    ++full_updates_;
  }

  /// Materializes x, s and re-initializes with a fresh bank.
  void rebuild(const BlockDiagMatrix& w, double t) {
    auto [x, s] = exact_iterates();
    initialize(x, s, w, t);
    ++rebuilds_;
  }

  void set_v_tilde_block(Index i, const DenseMatrix& b) {
    v_tilde_.set_block(i, b);
    sqrt_v_tilde_.set_block(i, detail::spectral_map(b, [](double x) { return std::sqrt(x); }));
    inv_sqrt_v_tilde_.set_block(i, detail::spectral_map(b, [](double x) { return 1.0 / std::sqrt(x); }));
  }

  void refresh_s_tilde() {
    s_tilde_.clear();
    for (Index i = 0; i < structure_.num_blocks(); ++i) {
      if (v_tilde_.block(i) != v_.block(i)) s_tilde_.push_back(i);
    }
  }

  void check_vec(const Vector& v, const char* name) const {
    if (v.size() != dim()) {
      throw Error(ErrorKind::Structural, std::string(name) + " has wrong length");
    }
    if (!v.allFinite()) {
      throw Error(ErrorKind::NumericalBreakdown, std::string(name) + " has non-finite entries");
    }
  }

  void check_target(const BlockDiagMatrix& w) const {
    if (!(w.structure() == structure_)) {
      throw Error(ErrorKind::Structural, "target has a different block structure");
    }
    for (Index i = 0; i < structure_.num_blocks(); ++i) {
      const Vector ev = detail::eigenvalues(w.block(i));
      // Relative test: W = ∇²φ⁻¹ legitimately reaches 1e-16 near the boundary.
      if (!ev.allFinite() || !(ev.minCoeff() > 0.0) ||
          !(ev.minCoeff() > cfg_.tol.pd_tol * ev.maxCoeff())) {
        throw Error(ErrorKind::SingularBlock, "target block is not positive definite",
                    static_cast<std::size_t>(i));
      }
    }
  }

  void require_init() const {
    if (!initialized_) throw Error(ErrorKind::InvalidArgument, "maintenance not initialized");
  }

  DenseMatrix a_;
  BlockStructure structure_;
  MaintenanceConfig cfg_;
  double batch_threshold_ = 1.0;

  BlockDiagMatrix w_bar_, v_, v_tilde_;
  BlockDiagMatrix sqrt_v_, inv_sqrt_v_, sqrt_v_tilde_, inv_sqrt_v_tilde_;
  DenseMatrix m_, q_, r_stack_;
  SketchBank bank_;
  Vector u1_, u2_, u3_, u4_, x_bar_, s_bar_;
  std::vector<Index> s_tilde_;
  Index cursor_ = 0;
  double t_pre_ = 1.0;
  double t_last_ = 1.0;
  std::uint64_t generation_ = 0;
  Index rebuilds_ = 0;
  Index full_updates_ = 0;
  Index moves_ = 0;
  bool initialized_ = false;
};

}  // namespace ripm

#endif  // RIPM_CPM_HPP
