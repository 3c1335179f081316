#ifndef RIPM_BARRIER_HPP
#define RIPM_BARRIER_HPP

#include <spdlog/spdlog.h>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include "ripm/blocklin.hpp"

namespace ripm {

enum class BarrierKind { LogPositive, LogBox, Ball, EpigraphAbs, Custom };

inline const char* to_tag(BarrierKind k) {
  switch (k) {
    case BarrierKind::LogPositive: return "log_positive";
    case BarrierKind::LogBox: return "log_box";
    case BarrierKind::Ball: return "ball";
    case BarrierKind::EpigraphAbs: return "epigraph_abs";
    case BarrierKind::Custom: return "custom";
  }
  return "unknown";
}

/// User-supplied barrier. `nu` is trusted but spot-checked.
struct CustomBarrier {
  Index dim = 1;
  double nu = 1.0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<DenseMatrix(const Vector&)> hessian;
  std::function<bool(const Vector&, double)> interior;
  /// Closed-form minimizer, if known.
  std::optional<Vector> center;
  /// Any interior point; the center is then found by damped Newton.
  std::optional<Vector> start;
};

namespace barriers {

/// −log x on x > 0.
struct LogPositive {
  static constexpr Index dim = 1;
  static constexpr double nu = 1.0;
  bool interior(const Vector& x, double margin) const { return x(0) > margin; }
  double value(const Vector& x) const { return -std::log(x(0)); }
  Vector grad(const Vector& x) const { return Vector::Constant(1, -1.0 / x(0)); }
  DenseMatrix hess(const Vector& x) const {
    return DenseMatrix::Constant(1, 1, 1.0 / (x(0) * x(0)));
  }
  std::optional<Vector> center() const { return std::nullopt; }
};

/// −log(x − l) − log(u − x) on l < x < u.
struct LogBox {
  double lo = 0.0;
  double hi = 1.0;
  static constexpr Index dim = 1;
  static constexpr double nu = 2.0;
  bool interior(const Vector& x, double margin) const {
    return x(0) - lo > margin && hi - x(0) > margin;
  }
  double value(const Vector& x) const {
    return -std::log(x(0) - lo) - std::log(hi - x(0));
  }
  Vector grad(const Vector& x) const {
    return Vector::Constant(1, -1.0 / (x(0) - lo) + 1.0 / (hi - x(0)));
  }
  DenseMatrix hess(const Vector& x) const {
    const double a = x(0) - lo, b = hi - x(0);
    return DenseMatrix::Constant(1, 1, 1.0 / (a * a) + 1.0 / (b * b));
  }
  std::optional<Vector> center() const {
    return Vector::Constant(1, 0.5 * (lo + hi));
  }
};

/// −log(r² − ‖x‖²) on the open ball of radius r.
struct Ball {
  Index dim = 1;
  double radius = 1.0;
  static constexpr double nu = 2.0;
  double slack(const Vector& x) const { return radius * radius - x.squaredNorm(); }
  bool interior(const Vector& x, double margin) const { return slack(x) > margin; }
  double value(const Vector& x) const { return -std::log(slack(x)); }
  Vector grad(const Vector& x) const { return 2.0 * x / slack(x); }
  DenseMatrix hess(const Vector& x) const {
    const double d = slack(x);
    return 2.0 / d * DenseMatrix::Identity(dim, dim) + 4.0 / (d * d) * x * x.transpose();
  }
  std::optional<Vector> center() const { return Vector::Zero(dim); }
};

/// −log(z² − y²) on |y| < z, optionally with −log(cap − z).
struct EpigraphAbs {
  std::optional<double> cap;
  static constexpr Index dim = 2;
  double nu_value() const { return cap ? 3.0 : 2.0; }
  bool interior(const Vector& x, double margin) const {
    const double y = x(0), z = x(1);
    if (!(z - y > margin && z + y > margin)) return false;
    return !cap || *cap - z > margin;
  }
  double value(const Vector& x) const {
    const double y = x(0), z = x(1);
    double v = -std::log(z - y) - std::log(z + y);
    if (cap) v -= std::log(*cap - z);
    return v;
  }
  Vector grad(const Vector& x) const {
    const double y = x(0), z = x(1), d = z * z - y * y;
    Vector g(2);
    g << 2.0 * y / d, -2.0 * z / d;
    if (cap) g(1) += 1.0 / (*cap - z);
    return g;
  }
  DenseMatrix hess(const Vector& x) const {
    const double y = x(0), z = x(1), d = z * z - y * y, d2 = d * d;
    DenseMatrix h(2, 2);
    h << 2.0 / d + 4.0 * y * y / d2, -4.0 * y * z / d2,
        -4.0 * y * z / d2, -2.0 / d + 4.0 * z * z / d2;
    if (cap) {
      const double c = *cap - z;
      h(1, 1) += 1.0 / (c * c);
    }
    return h;
  }
  std::optional<Vector> center() const {
    if (!cap) return std::nullopt;
    Vector c(2);
    c << 0.0, 2.0 * *cap / 3.0;
    return c;
  }
};

}  // namespace barriers

/// Self-concordant barrier for one block K_i.
class Barrier {
 public:
  using Impl = std::variant<barriers::LogPositive, barriers::LogBox, barriers::Ball,
                            barriers::EpigraphAbs, CustomBarrier>;

  static Barrier log_positive() { return Barrier(barriers::LogPositive{}); }

  static Barrier log_box(double lo, double hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw Error(ErrorKind::InvalidArgument, "log_box needs finite lo < hi");
    }
    return Barrier(barriers::LogBox{lo, hi});
  }

  static Barrier ball(Index dim, double radius = 1.0) {
    if (dim < 1 || !(radius > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "ball needs dim >= 1 and radius > 0");
    }
    return Barrier(barriers::Ball{dim, radius});
  }

  static Barrier epigraph_abs(std::optional<double> cap = std::nullopt) {
    if (cap && !(*cap > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "epigraph cap must be positive");
    }
    return Barrier(barriers::EpigraphAbs{cap});
  }

  static Barrier custom(CustomBarrier c);

  BarrierKind kind() const { return static_cast<BarrierKind>(impl_.index()); }
  const Impl& impl() const { return impl_; }

  Index dim() const {
    return std::visit(
        [](const auto& b) -> Index {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, barriers::Ball> ||
                        std::is_same_v<T, CustomBarrier>) {
            return b.dim;
          } else {
            return T::dim;
          }
        },
        impl_);
  }

  double nu() const {
    return std::visit(
        [](const auto& b) -> double {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, barriers::EpigraphAbs>) {
            return b.nu_value();
          } else {
            return b.nu;
          }
        },
        impl_);
  }

  bool is_interior(const Vector& x, double margin = 1e-12) const {
    if (x.size() != dim() || !x.allFinite()) return false;
    return std::visit([&](const auto& b) { return b.interior(x, margin); }, impl_);
  }

  double value(const Vector& x) const {
    require_interior(x);
    return std::visit(
        [&](const auto& b) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(b)>, CustomBarrier>) {
            return b.value(x);
          } else {
            return b.value(x);
          }
        },
        impl_);
  }

  Vector grad(const Vector& x) const {
    require_interior(x);
    return std::visit(
        [&](const auto& b) -> Vector {
          if constexpr (std::is_same_v<std::decay_t<decltype(b)>, CustomBarrier>) {
            return b.gradient(x);
          } else {
            return b.grad(x);
          }
        },
        impl_);
  }

  DenseMatrix hess(const Vector& x) const {
    require_interior(x);
    DenseMatrix h = std::visit(
        [&](const auto& b) -> DenseMatrix {
          if constexpr (std::is_same_v<std::decay_t<decltype(b)>, CustomBarrier>) {
            return b.hessian(x);
          } else {
            return b.hess(x);
          }
        },
        impl_);
    return detail::symmetrized(h);
  }

  /// Minimizer of φ over int K, if K is bounded.
  std::optional<Vector> analytic_center() const;

  /// Parameters used by the instance file format.
  std::optional<double> lo() const { return field(&barriers::LogBox::lo); }
  std::optional<double> hi() const { return field(&barriers::LogBox::hi); }
  std::optional<double> radius() const { return field(&barriers::Ball::radius); }
  std::optional<double> cap() const {
    if (const auto* e = std::get_if<barriers::EpigraphAbs>(&impl_)) return e->cap;
    return std::nullopt;
  }

  bool operator==(const Barrier& o) const {
    if (kind() != o.kind() || dim() != o.dim()) return false;
    if (kind() == BarrierKind::Custom) return false;
    return lo() == o.lo() && hi() == o.hi() && radius() == o.radius() && cap() == o.cap();
  }

 private:
  explicit Barrier(Impl impl) : impl_(std::move(impl)) {}

  template <typename T>
  std::optional<double> field(double T::*member) const {
    if (const auto* p = std::get_if<T>(&impl_)) return p->*member;
    return std::nullopt;
  }

  void require_interior(const Vector& x) const {
    if (x.size() != dim()) {
      throw Error(ErrorKind::Structural, "point has wrong dimension for barrier");
    }
    if (!is_interior(x, 0.0)) {
      throw Error(ErrorKind::OutOfDomain,
                  std::string("point outside ") + to_tag(kind()) + " domain");
    }
  }

  Impl impl_;
};

/// Minimizer of φ from an interior start by damped Newton.
inline Vector damped_newton_center(const Barrier& bar, Vector x, double tol = 1e-10,
                                   int max_iter = 200) {
  for (int it = 0; it < max_iter; ++it) {
    const Vector g = bar.grad(x);
    const DenseMatrix h = bar.hess(x);
    const Vector step = h.ldlt().solve(g);
    const double dec = std::sqrt(std::max(g.dot(step), 0.0));
    if (dec < tol) return x;
    x -= step / (1.0 + dec);
  }
  throw Error(ErrorKind::MissingAnalyticCenter, "damped Newton did not converge");
}

inline std::optional<Vector> Barrier::analytic_center() const {
  if (const auto* c = std::get_if<CustomBarrier>(&impl_)) {
    if (c->center) return c->center;
    if (c->start) return damped_newton_center(*this, *c->start);
    return std::nullopt;
  }
  return std::visit(
      [](const auto& b) -> std::optional<Vector> {
        if constexpr (std::is_same_v<std::decay_t<decltype(b)>, CustomBarrier>) {
          return std::nullopt;
        } else {
          return b.center();
        }
      },
      impl_);
}

/// ‖v‖_H for v in the block.
inline double local_norm(const DenseMatrix& h, const Vector& v) {
  return std::sqrt(std::max(v.dot(h * v), 0.0));
}

/// ‖v‖_{H⁻¹}.
inline double dual_norm(const DenseMatrix& h, const Vector& v) {
  if (h.rows() == 1) return std::abs(v(0)) / std::sqrt(h(0, 0));
  Eigen::LLT<DenseMatrix> llt(h);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularBlock, "barrier Hessian is not positive definite");
  }
  return std::sqrt(std::max(v.dot(llt.solve(v)), 0.0));
}

/// (1 − r)²∇²φ(x) ⪯ ∇²φ(y) ⪯ (1 − r)⁻²∇²φ(x) with r = ‖y − x‖ₓ < 1.
inline bool check_hessian_stability(const Barrier& bar, const Vector& x,
                                    const Vector& y, double sc_tol = 1e-9) {
  const DenseMatrix hx = bar.hess(x);
  const double r = local_norm(hx, y - x);
  if (!(r < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "displacement must satisfy ‖y−x‖ₓ < 1");
  }
  if (!bar.is_interior(y, 0.0)) return false;
  const DenseMatrix hy = bar.hess(y);
  const double k = (1.0 - r) * (1.0 - r);
  const double scale = std::max(hx.norm() / k, hy.norm());
  const double lower = detail::eigenvalues(hy - k * hx).minCoeff();
  const double upper = detail::eigenvalues(hx / k - hy).minCoeff();
  return lower >= -sc_tol * scale && upper >= -sc_tol * scale;
}

/// ‖∇φ(x)‖*ₓ ≤ √ν.
inline bool check_gradient_bound(const Barrier& bar, const Vector& x,
                                 double sc_tol = 1e-9) {
  const double g = dual_norm(bar.hess(x), bar.grad(x));
  return g <= std::sqrt(bar.nu()) + sc_tol;
}

inline Barrier Barrier::custom(CustomBarrier c) {
  if (c.dim < 1 || !(c.nu >= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "custom barrier needs dim >= 1 and nu >= 1");
  }
  if (!c.value || !c.gradient || !c.hessian || !c.interior) {
    throw Error(ErrorKind::InvalidArgument, "custom barrier is missing an evaluator");
  }
  Barrier bar{Impl(std::move(c))};
  const auto& cb = std::get<CustomBarrier>(bar.impl_);
  std::optional<Vector> anchor = cb.center ? cb.center : cb.start;
  if (!anchor) return bar;
  // Spot-check the declared ν inside the Dikin ellipsoid around the anchor.
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 0.9);
  const DenseMatrix h = bar.hess(*anchor);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(h);
  const DenseMatrix inv_sqrt = eig.eigenvectors() *
                               eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                               eig.eigenvectors().transpose();
  int violations = 0;
  const int samples = 64;
  for (int k = 0; k < samples; ++k) {
    Vector u(cb.dim);
    for (Index j = 0; j < cb.dim; ++j) u(j) = normal(rng);
    const Vector y = *anchor + inv_sqrt * (unif(rng) * u / u.norm());
    if (bar.is_interior(y) && !check_gradient_bound(bar, y, 1e-6)) ++violations;
  }
  if (violations > 0) {
    spdlog::warn("custom barrier: declared nu={} violated at {}/{} sampled points",
                 cb.nu, violations, samples);
  }
  return bar;
}

}  // namespace ripm

#endif  // RIPM_BARRIER_HPP
