#ifndef RIPM_SKETCH_HPP
#define RIPM_SKETCH_HPP

#include <cmath>
#include <cstdint>
#include <string>

#include "ripm/blocklin.hpp"

namespace ripm {

namespace detail {

/// SplitMix64 finalizer; used as a counter-based generator: the k-th output
/// for a seed is mix(seed + (k+1)·γ), so any entry is addressable directly.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t counter_word(std::uint64_t seed, std::uint64_t counter) {
  return splitmix64(splitmix64(seed) ^ (counter * 0xd1b54a32d192ed03ULL));
}

}  // namespace detail

/// A bank of `count` sign sketches R_l ∈ ℝ^{b×n}, entries ±1/√b, generated
/// on demand from (seed, l, row, col). In identity mode every R_l is I_n.
class SketchBank {
 public:
  SketchBank() = default;

  SketchBank(Index b, Index n, Index count, std::uint64_t seed)
      : b_(b), n_(n), count_(count), seed_(seed), scale_(1.0 / std::sqrt(double(b))) {
    if (b < 1 || n < 1 || count < 1) {
      throw Error(ErrorKind::InvalidArgument, "sketch bank needs b, n, count >= 1");
    }
  }

  static SketchBank identity(Index n, Index count) {
    SketchBank bank(n, n, count, 0);
    bank.identity_ = true;
    bank.scale_ = 1.0;
    return bank;
  }

  Index rows() const { return b_; }
  Index cols() const { return n_; }
  Index count() const { return count_; }
  std::uint64_t seed() const { return seed_; }
  bool is_identity() const { return identity_; }

  /// Entry (r, c) of R_l, l ∈ [0, count).
  double entry(Index l, Index r, Index c) const {
    if (identity_) return r == c ? 1.0 : 0.0;
    const std::uint64_t k = (static_cast<std::uint64_t>(l) * std::uint64_t(b_) +
                             std::uint64_t(r)) * std::uint64_t(n_) + std::uint64_t(c);
    return bit(k) ? scale_ : -scale_;
  }

  DenseMatrix matrix(Index l) const {
    check_index(l);
    if (identity_) return DenseMatrix::Identity(n_, n_);
    DenseMatrix out(b_, n_);
    fill(l, out);
    return out;
  }

  /// [R_0; R_1; …; R_{count−1}]. In identity mode only one copy of I is
  /// returned since all sub-sketches coincide.
  DenseMatrix stacked() const {
    if (identity_) return DenseMatrix::Identity(n_, n_);
    DenseMatrix out(b_ * count_, n_);
    for (Index l = 0; l < count_; ++l) {
      DenseMatrix part(b_, n_);
      fill(l, part);
      out.middleRows(l * b_, b_) = part;
    }
    return out;
  }

  /// Row offset of R_l inside stacked().
  Index stacked_offset(Index l) const { return identity_ ? 0 : l * b_; }

  Vector apply(Index l, const Vector& v) const {
    check_index(l);
    if (v.size() != n_) throw Error(ErrorKind::Structural, "sketch apply: length mismatch");
    if (identity_) return v;
    Vector out = Vector::Zero(b_);
    for (Index r = 0; r < b_; ++r) {
      double acc = 0.0;
      for_each_sign(l, r, [&](Index c, bool plus) { acc += plus ? v(c) : -v(c); });
      out(r) = scale_ * acc;
    }
    return out;
  }

  Vector apply_transpose(Index l, const Vector& w) const {
    check_index(l);
    if (w.size() != b_) {
      throw Error(ErrorKind::Structural, "sketch apply_transpose: length mismatch");
    }
    if (identity_) return w;
    Vector out = Vector::Zero(n_);
    for (Index r = 0; r < b_; ++r) {
      const double wr = scale_ * w(r);
      for_each_sign(l, r, [&](Index c, bool plus) { out(c) += plus ? wr : -wr; });
    }
    return out;
  }

 private:
  bool bit(std::uint64_t k) const {
    return (detail::counter_word(seed_, k >> 6) >> (k & 63)) & 1ULL;
  }

  template <typename F>
  void for_each_sign(Index l, Index r, F&& f) const {
    const std::uint64_t base =
        (static_cast<std::uint64_t>(l) * std::uint64_t(b_) + std::uint64_t(r)) *
        std::uint64_t(n_);
    std::uint64_t k = base;
    const std::uint64_t end = base + std::uint64_t(n_);
    while (k < end) {
      const std::uint64_t word = detail::counter_word(seed_, k >> 6);
      const std::uint64_t stop = std::min(end, ((k >> 6) + 1) << 6);
      for (; k < stop; ++k) f(static_cast<Index>(k - base), ((word >> (k & 63)) & 1ULL) != 0);
    }
  }

  void fill(Index l, DenseMatrix& out) const {
    for (Index r = 0; r < b_; ++r) {
      for_each_sign(l, r, [&](Index c, bool plus) { out(r, c) = plus ? scale_ : -scale_; });
    }
  }

  void check_index(Index l) const {
    if (l < 0 || l >= count_) {
      throw Error(ErrorKind::InvalidArgument,
                  "sketch index " + std::to_string(l) + " outside bank");
    }
  }

  Index b_ = 1;
  Index n_ = 1;
  Index count_ = 1;
  std::uint64_t seed_ = 0;
  double scale_ = 1.0;
  bool identity_ = false;
};

/// Default bank size ⌈√n⌉ + 8.
inline Index default_bank_count(Index n) {
  return static_cast<Index>(std::ceil(std::sqrt(double(n)))) + 8;
}

}  // namespace ripm

#endif  // RIPM_SKETCH_HPP
