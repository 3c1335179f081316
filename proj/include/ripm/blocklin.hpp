#ifndef RIPM_BLOCKLIN_HPP
#define RIPM_BLOCKLIN_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ripm/errors.hpp"

namespace ripm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Numerical tolerances shared by the linear-algebra layer.
struct Tolerances {
  double sym_tol = 1e-9;
  double psd_tol = 1e-9;
  double pd_tol = 1e-12;
  double solve_tol = 1e-8;
  Index max_block_dim = 4;
};

/// Partition of n coordinates into m consecutive blocks of size n_i.
class BlockStructure {
 public:
  BlockStructure() = default;

  explicit BlockStructure(std::vector<Index> sizes, Index max_block_dim = 4)
      : sizes_(std::move(sizes)) {
    offsets_.assign(1, 0);
    offsets_.reserve(sizes_.size() + 1);
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (sizes_[i] < 1 || sizes_[i] > max_block_dim) {
        throw Error(ErrorKind::Structural,
                    "block size " + std::to_string(sizes_[i]) +
                        " outside [1, " + std::to_string(max_block_dim) + "]",
                    i);
      }
      offsets_.push_back(offsets_.back() + sizes_[i]);
    }
  }

  static BlockStructure uniform(Index blocks, Index size,
                                Index max_block_dim = 4) {
    return BlockStructure(std::vector<Index>(static_cast<std::size_t>(blocks), size),
                          max_block_dim);
  }

  Index num_blocks() const { return static_cast<Index>(sizes_.size()); }
  Index dim() const { return offsets_.empty() ? 0 : offsets_.back(); }
  Index size(Index i) const { return sizes_[static_cast<std::size_t>(i)]; }
  Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  Index max_size() const {
    return sizes_.empty() ? 0 : *std::max_element(sizes_.begin(), sizes_.end());
  }
  const std::vector<Index>& sizes() const { return sizes_; }
  const std::vector<Index>& offsets() const { return offsets_; }

  /// Coordinates covered by `blocks`, concatenated in ascending block order.
  /// This is the canonical index map used for every M_{*,S} extraction.
  std::vector<Index> indices_of(std::vector<Index> blocks) const {
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
    std::vector<Index> out;
    for (Index b : blocks) {
      check_block(b);
      for (Index k = 0; k < size(b); ++k) out.push_back(offset(b) + k);
    }
    return out;
  }

  void check_block(Index i) const {
    if (i < 0 || i >= num_blocks()) {
      throw Error(ErrorKind::Structural,
                  "block index " + std::to_string(i) + " out of range");
    }
  }

  bool operator==(const BlockStructure& other) const {
    return sizes_ == other.sizes_;
  }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_{0};
};

namespace detail {

/// f applied to the eigenvalues of a small symmetric matrix.
template <typename F>
DenseMatrix spectral_map(const DenseMatrix& s, F f) {
  if (s.rows() == 1) {
    DenseMatrix out(1, 1);
    out(0, 0) = f(s(0, 0));
    return out;
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(s);
  Vector vals = eig.eigenvalues().unaryExpr(f);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

inline Vector eigenvalues(const DenseMatrix& s) {
  if (s.rows() == 1) return Vector::Constant(1, s(0, 0));
  return Eigen::SelfAdjointEigenSolver<DenseMatrix>(s, Eigen::EigenvaluesOnly)
      .eigenvalues();
}

inline double asymmetry(const DenseMatrix& s) {
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

inline DenseMatrix symmetrized(const DenseMatrix& s) {
  return 0.5 * (s + s.transpose());
}

inline bool all_finite(const DenseMatrix& s) { return s.allFinite(); }

}  // namespace detail

/// Block-diagonal symmetric matrix stored as its dense diagonal blocks.
class BlockDiagMatrix {
 public:
  BlockDiagMatrix() = default;

  BlockDiagMatrix(BlockStructure structure, std::vector<DenseMatrix> blocks,
                  double sym_tol = Tolerances{}.sym_tol)
      : structure_(std::move(structure)), blocks_(std::move(blocks)) {
    if (static_cast<Index>(blocks_.size()) != structure_.num_blocks()) {
      throw Error(ErrorKind::Structural, "block count does not match structure");
    }
    for (Index i = 0; i < structure_.num_blocks(); ++i) {
      const DenseMatrix& b = blocks_[static_cast<std::size_t>(i)];
      if (b.rows() != structure_.size(i) || b.cols() != structure_.size(i)) {
        throw Error(ErrorKind::Structural, "block has wrong shape", i);
      }
      if (!b.allFinite()) {
        throw Error(ErrorKind::Structural, "block has non-finite entries", i);
      }
      if (detail::asymmetry(b) > sym_tol * std::max(1.0, b.cwiseAbs().maxCoeff())) {
        throw Error(ErrorKind::Structural, "block is not symmetric", i);
      }
    }
  }

  static BlockDiagMatrix identity(const BlockStructure& s) {
    return scaled_identity(s, 1.0);
  }

  static BlockDiagMatrix scaled_identity(const BlockStructure& s, double scale) {
    std::vector<DenseMatrix> blocks;
    blocks.reserve(static_cast<std::size_t>(s.num_blocks()));
    for (Index i = 0; i < s.num_blocks(); ++i) {
      blocks.push_back(scale * DenseMatrix::Identity(s.size(i), s.size(i)));
    }
    return BlockDiagMatrix(s, std::move(blocks));
  }

  /// Diagonal matrix with the given entries; every block of `s` must be 1x1
  /// or the entries are spread along each block's diagonal.
  static BlockDiagMatrix diagonal(const BlockStructure& s, const Vector& d) {
    if (d.size() != s.dim()) {
      throw Error(ErrorKind::Structural, "diagonal length mismatch");
    }
    std::vector<DenseMatrix> blocks;
    for (Index i = 0; i < s.num_blocks(); ++i) {
      blocks.push_back(d.segment(s.offset(i), s.size(i)).asDiagonal());
    }
    return BlockDiagMatrix(s, std::move(blocks));
  }

  const BlockStructure& structure() const { return structure_; }
  Index num_blocks() const { return structure_.num_blocks(); }
  Index dim() const { return structure_.dim(); }

  const DenseMatrix& block(Index i) const {
    return blocks_[static_cast<std::size_t>(i)];
  }
  void set_block(Index i, DenseMatrix b) {
    structure_.check_block(i);
    if (b.rows() != structure_.size(i) || b.cols() != structure_.size(i)) {
      throw Error(ErrorKind::Structural, "replacement block has wrong shape", i);
    }
    blocks_[static_cast<std::size_t>(i)] = std::move(b);
  }
  const std::vector<DenseMatrix>& blocks() const { return blocks_; }

  Vector apply(const Vector& v) const {
    check_length(v);
    Vector out(v.size());
    for (Index i = 0; i < num_blocks(); ++i) {
      const Index o = structure_.offset(i), k = structure_.size(i);
      out.segment(o, k).noalias() = block(i) * v.segment(o, k);
    }
    return out;
  }

  /// New matrix whose blocks are f(eigenvalues) of this one's blocks.
  template <typename F>
  BlockDiagMatrix spectral(F f) const {
    std::vector<DenseMatrix> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(detail::spectral_map(b, f));
    return BlockDiagMatrix(structure_, std::move(out), 1e-6);
  }

  BlockDiagMatrix sqrt() const {
    return spectral([](double x) { return std::sqrt(std::max(x, 0.0)); });
  }
  BlockDiagMatrix inv_sqrt() const {
    return spectral([](double x) { return 1.0 / std::sqrt(x); });
  }
  BlockDiagMatrix inverse() const {
    return spectral([](double x) { return 1.0 / x; });
  }

  double min_eigenvalue(Index i) const {
    return detail::eigenvalues(block(i)).minCoeff();
  }

  bool is_psd(double psd_tol = Tolerances{}.psd_tol) const {
    for (Index i = 0; i < num_blocks(); ++i) {
      if (min_eigenvalue(i) < -psd_tol) return false;
    }
    return true;
  }

  DenseMatrix to_dense() const {
    DenseMatrix out = DenseMatrix::Zero(dim(), dim());
    for (Index i = 0; i < num_blocks(); ++i) {
      const Index o = structure_.offset(i), k = structure_.size(i);
      out.block(o, o, k, k) = block(i);
    }
    return out;
  }

  /// Dense block-diagonal matrix restricted to `blocks` (canonical order).
  DenseMatrix restricted(std::vector<Index> blocks) const {
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
    Index total = 0;
    for (Index b : blocks) {
      structure_.check_block(b);
      total += structure_.size(b);
    }
    DenseMatrix out = DenseMatrix::Zero(total, total);
    Index pos = 0;
    for (Index b : blocks) {
      const Index k = structure_.size(b);
      out.block(pos, pos, k, k) = block(b);
      pos += k;
    }
    return out;
  }

  BlockDiagMatrix operator-(const BlockDiagMatrix& rhs) const {
    check_same(rhs);
    std::vector<DenseMatrix> out;
    for (Index i = 0; i < num_blocks(); ++i) out.push_back(block(i) - rhs.block(i));
    return BlockDiagMatrix(structure_, std::move(out));
  }

 private:
  void check_length(const Vector& v) const {
    if (v.size() != dim()) {
      throw Error(ErrorKind::Structural,
                  "vector length " + std::to_string(v.size()) +
                      " does not match dimension " + std::to_string(dim()));
    }
  }
  void check_same(const BlockDiagMatrix& rhs) const {
    if (!(structure_ == rhs.structure_)) {
      throw Error(ErrorKind::Structural, "block structures differ");
    }
  }

  BlockStructure structure_;
  std::vector<DenseMatrix> blocks_;
};

/// (v_iᵀ H_i v_i)^{1/2} for a vector living in block i.
inline double block_quadform(const BlockDiagMatrix& h, const Vector& v, Index i) {
  h.structure().check_block(i);
  if (v.size() != h.structure().size(i)) {
    throw Error(ErrorKind::Structural, "vector does not match block size", i);
  }
  const double q = v.dot(h.block(i) * v);
  return std::sqrt(std::max(q, 0.0));
}

/// H⁻¹v, block by block. Throws SingularBlock for a block that is not
/// safely positive definite.
inline Vector block_solve(const BlockDiagMatrix& h, const Vector& v,
                          const Tolerances& tol = {}) {
  if (v.size() != h.dim()) {
    throw Error(ErrorKind::Structural, "vector length does not match dimension");
  }
  const BlockStructure& s = h.structure();
  Vector out(v.size());
  for (Index i = 0; i < s.num_blocks(); ++i) {
    const Index o = s.offset(i), k = s.size(i);
    const DenseMatrix& b = h.block(i);
    const Vector rhs = v.segment(o, k);
    if (k == 1) {
      if (!(b(0, 0) > tol.pd_tol)) {
        throw Error(ErrorKind::SingularBlock, "non-positive 1x1 block", i);
      }
      out(o) = rhs(0) / b(0, 0);
      continue;
    }
    const Vector ev = detail::eigenvalues(b);
    if (!(ev.minCoeff() > tol.pd_tol * std::max(1.0, ev.maxCoeff()))) {
      throw Error(ErrorKind::SingularBlock, "block is not positive definite", i);
    }
    Eigen::LLT<DenseMatrix> llt(b);
    Vector x = llt.solve(rhs);
    if ((b * x - rhs).norm() > tol.solve_tol * std::max(rhs.norm(), 1e-300)) {
      throw Error(ErrorKind::SingularBlock, "block solve residual too large", i);
    }
    out.segment(o, k) = x;
  }
  return out;
}

/// A V Aᵀ for block-diagonal V.
inline DenseMatrix normal_matrix(const DenseMatrix& a, const BlockDiagMatrix& v) {
  if (a.cols() != v.dim()) {
    throw Error(ErrorKind::Structural, "A columns do not match V dimension");
  }
  const BlockStructure& s = v.structure();
  DenseMatrix av(a.rows(), a.cols());
  for (Index i = 0; i < s.num_blocks(); ++i) {
    const Index o = s.offset(i), k = s.size(i);
    av.middleCols(o, k).noalias() = a.middleCols(o, k) * v.block(i);
  }
  DenseMatrix out = av * a.transpose();
  return detail::symmetrized(out);
}

/// S⁻¹B by Cholesky. A failed pivot is retried with diagonal jitter
/// 1e-12·trace/d, growing ×10, at most three times.
inline DenseMatrix cholesky_solve(const DenseMatrix& s, const DenseMatrix& b,
                                  const Tolerances& tol = {}) {
  if (s.rows() != s.cols() || s.rows() != b.rows()) {
    throw Error(ErrorKind::Structural, "cholesky_solve dimension mismatch");
  }
  if (!s.allFinite() || !b.allFinite()) {
    throw Error(ErrorKind::FactorizationFailure, "non-finite input");
  }
  const Index d = s.rows();
  if (d == 0) return DenseMatrix(0, b.cols());
  double jitter = 1e-12 * std::max(s.trace(), 0.0) / static_cast<double>(d);
  DenseMatrix work = s;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::LLT<DenseMatrix> llt(work);
    if (llt.info() == Eigen::Success) {
      DenseMatrix x = llt.solve(b);
      // Backward-error style check: ill-conditioned normal matrices near the
      // end of a path-following run are expected.
      const double res = (s * x - b).norm();
      const double scale = b.norm() + s.norm() * x.norm();
      if (x.allFinite() && res <= tol.solve_tol * std::max(scale, 1e-300)) {
        return x;
      }
    }
    if (attempt == 3) break;
    if (jitter <= 0.0) jitter = 1e-12;
    work = s;
    work.diagonal().array() += jitter;
    jitter *= 10.0;
  }
  throw Error(ErrorKind::FactorizationFailure,
              "matrix is not positive definite (Cholesky failed after jitter)");
}

/// K = Δ (I + M_SS Δ)⁻¹, which equals (Δ⁻¹ + M_SS)⁻¹ when Δ is invertible
/// but stays defined when Δ has zero blocks.
inline DenseMatrix woodbury_factor(const DenseMatrix& m_ss, const DenseMatrix& delta_ss) {
  const Index k = delta_ss.rows();
  if (delta_ss.cols() != k || m_ss.rows() != k || m_ss.cols() != k) {
    throw Error(ErrorKind::Structural, "Δ_SS and M_SS must be square and equal-sized");
  }
  if (k == 0) return DenseMatrix(0, 0);
  const DenseMatrix core = DenseMatrix::Identity(k, k) + m_ss * delta_ss;
  Eigen::PartialPivLU<DenseMatrix> lu(core);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14) || !std::isfinite(rcond)) {
    throw Error(ErrorKind::UpdateSingular, "Δ⁻¹ + M_SS is numerically singular");
  }
  // K = ((I + M_SS Δ)ᵀ \ Δᵀ)ᵀ
  const DenseMatrix kt = lu.transpose().solve(DenseMatrix(delta_ss.transpose()));
  DenseMatrix kmat = kt.transpose();
  if (!kmat.allFinite()) {
    throw Error(ErrorKind::UpdateSingular, "Woodbury core produced non-finite values");
  }
  return detail::symmetrized(kmat);
}

/// M − M_{*,S} (Δ_SS⁻¹ + M_SS)⁻¹ M_{*,S}ᵀ. `idx` is the canonical index map
/// of S (see BlockStructure::indices_of).
inline DenseMatrix woodbury_downdate(const DenseMatrix& m,
                                     const std::vector<Index>& idx,
                                     const DenseMatrix& delta_ss) {
  const Index k = static_cast<Index>(idx.size());
  if (delta_ss.rows() != k || delta_ss.cols() != k) {
    throw Error(ErrorKind::Structural, "Δ_SS does not match |S|");
  }
  if (k == 0) return m;
  const DenseMatrix cols = m(Eigen::all, idx);
  const DenseMatrix kmat = woodbury_factor(cols(idx, Eigen::all), delta_ss);
  DenseMatrix out = m - cols * kmat * cols.transpose();
  return detail::symmetrized(out);
}

/// D·X for block-diagonal D and a dense X with D.dim() rows.
inline DenseMatrix left_multiply(const BlockDiagMatrix& d, const DenseMatrix& x) {
  if (x.rows() != d.dim()) {
    throw Error(ErrorKind::Structural, "left_multiply: row mismatch");
  }
  const BlockStructure& s = d.structure();
  DenseMatrix out(x.rows(), x.cols());
  for (Index i = 0; i < s.num_blocks(); ++i) {
    const Index o = s.offset(i), k = s.size(i);
    if (k == 1) {
      out.row(o) = d.block(i)(0, 0) * x.row(o);
    } else {
      out.middleRows(o, k).noalias() = d.block(i) * x.middleRows(o, k);
    }
  }
  return out;
}

}  // namespace ripm

#endif  // RIPM_BLOCKLIN_HPP
