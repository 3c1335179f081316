#ifndef RIPM_TESTS_SUPPORT_HPP
#define RIPM_TESTS_SUPPORT_HPP

#include <random>
#include <vector>

#include "ripm/blocklin.hpp"
#include "ripm/barrier.hpp"
#include "ripm/problem.hpp"

namespace ripm::fx {

using Rng = std::mt19937_64;

inline DenseMatrix gaussian(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  DenseMatrix a(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) a(r, c) = g(rng);
  return a;
}

inline Vector gaussian_vec(Rng& rng, Index n) { return gaussian(rng, n, 1).col(0); }

inline Vector uniform_vec(Rng& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

/// GGᵀ + shift·I with G Gaussian.
inline DenseMatrix random_spd(Rng& rng, Index k, double shift = 0.1) {
  const DenseMatrix g = gaussian(rng, k, k);
  DenseMatrix s = g * g.transpose();
  s.diagonal().array() += shift;
  return 0.5 * (s + s.transpose());
}

inline BlockStructure random_structure(Rng& rng, Index n, Index max_size = 3) {
  std::uniform_int_distribution<Index> pick(1, max_size);
  std::vector<Index> sizes;
  Index used = 0;
  while (used < n) {
    const Index k = std::min(pick(rng), n - used);
    sizes.push_back(k);
    used += k;
  }
  return BlockStructure(sizes);
}

inline BlockDiagMatrix random_block_spd(Rng& rng, const BlockStructure& s, double shift = 0.1) {
  std::vector<DenseMatrix> blocks;
  for (Index i = 0; i < s.num_blocks(); ++i) blocks.push_back(random_spd(rng, s.size(i), shift));
  return BlockDiagMatrix(s, blocks);
}

/// Box LP on [0,1]^n around an interior witness in [0.1, 0.9]^n.
inline StandardProblem random_box_lp(Rng& rng, Index n, Index d) {
  StandardProblem p;
  p.a = gaussian(rng, d, n);
  const Vector w = uniform_vec(rng, n, 0.1, 0.9);
  p.b = p.a * w;
  p.c = gaussian_vec(rng, n);
  p.structure = BlockStructure::uniform(n, 1);
  p.barriers.assign(std::size_t(n), Barrier::log_box(0.0, 1.0));
  return p;
}

/// A problem mixing every built-in barrier kind, with a strictly feasible witness.
inline StandardProblem random_mixed(Rng& rng, Index d) {
  StandardProblem p;
  p.structure = BlockStructure({1, 1, 2, 3, 1, 2});
  p.barriers = {Barrier::log_box(-1.0, 2.0), Barrier::log_positive(), Barrier::epigraph_abs(4.0),
                Barrier::ball(3, 1.5),        Barrier::log_box(0.0, 1.0), Barrier::epigraph_abs(3.0)};
  Vector w(10);
  w << 0.5, 1.0, 0.3, 1.2, 0.2, -0.4, 0.5, 0.6, -0.2, 1.0;
  const Index n = p.structure.dim();
  p.a = gaussian(rng, d, n);
  p.b = p.a * w;
  p.c = gaussian_vec(rng, n);
  p.radius = 8.0;
  return p;
}

/// A well-separated interior point of the barrier's domain.
inline Vector sample_interior(Rng& rng, const Barrier& bar) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (bar.kind()) {
    case BarrierKind::LogPositive: return Vector::Constant(1, 0.1 + 10.0 * u(rng));
    case BarrierKind::LogBox: {
      const double f = 0.05 + 0.9 * u(rng);
      return Vector::Constant(1, *bar.lo() + f * (*bar.hi() - *bar.lo()));
    }
    case BarrierKind::Ball: {
      Vector v = gaussian_vec(rng, bar.dim());
      return *bar.radius() * 0.95 * std::pow(u(rng), 1.0 / double(bar.dim())) * v / v.norm();
    }
    case BarrierKind::EpigraphAbs: {
      const double top = bar.cap() ? 0.95 * *bar.cap() : 10.0;
      const double z = 0.05 * top + 0.9 * top * u(rng);
      Vector x(2);
      x << z * (1.9 * u(rng) - 0.95), z;
      return x;
    }
    default: break;
  }
  throw Error(ErrorKind::InvalidArgument, "no sampler for this barrier kind");
}

/// x + r·H^{-1/2}u/‖u‖ for a random direction u, i.e. ‖y − x‖ₓ = r.
inline Vector dikin_point(Rng& rng, const Barrier& bar, const Vector& x, double r) {
  const DenseMatrix h = bar.hess(x);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(h);
  const DenseMatrix isq = eig.eigenvectors() *
                          eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
  const Vector u = gaussian_vec(rng, x.size());
  return x + r * isq * u / u.norm();
}

/// One barrier of every built-in kind.
inline std::vector<Barrier> all_kinds() {
  return {Barrier::log_positive(), Barrier::log_box(-1.0, 3.0), Barrier::ball(1, 1.0),
          Barrier::ball(3, 2.0),    Barrier::epigraph_abs(),      Barrier::epigraph_abs(5.0)};
}

inline double rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace ripm::fx

#endif  // RIPM_TESTS_SUPPORT_HPP
