#pragma once

#include <cstddef>

#include "mbaccel/vectorspace.hpp"

namespace mbaccel {

enum class MirrorKind {
  euclidean,  // R(w) = 0.5 ||w||_2^2 on the ball of radius D
  entropy,    // R(w) = sum_j w_j ln(w_j d) on the probability simplex, l1 norm
};

struct BregmanDivergence {
  double value;
};

/// A 1-strongly-convex, non-negative potential R together with its domain W.
///
/// Euclidean: W is the l2 ball of radius D, K = 1, projection is radial.
/// Entropy: W is the simplex, measured in l1 so D = 1; the potential is the
/// negative entropy shifted by ln d so that it is zero at the uniform point,
/// which gives K^2 = 2 ln d. Bregman projection onto W is l1 normalization.
class MirrorMap {
 public:
  static MirrorMap euclidean(std::size_t dimension, double radius_D);
  static MirrorMap entropy(std::size_t dimension);

  MirrorKind kind() const noexcept { return kind_; }
  std::size_t dimension() const noexcept { return dimension_; }
  double radius() const noexcept { return radius_; }
  double constant_K() const noexcept { return K_; }
  /// Norm in which R is 1-strongly convex.
  NormKind paired_norm() const noexcept {
    return kind_ == MirrorKind::euclidean ? NormKind::two : NormKind::one;
  }

  double potential(const DenseVector& w) const;
  DenseVector grad_potential(const DenseVector& w) const;
  DenseVector grad_conjugate(const DenseVector& theta) const;
  BregmanDivergence bregman(const DenseVector& w, const DenseVector& w_prime) const;
  DenseVector project(const DenseVector& w_prime) const;
  /// argmin_w R(w): the origin, or the uniform distribution.
  DenseVector minimizer() const;
  /// True when w lies in W up to `tol`.
  bool contains(const DenseVector& w, double tol = 1e-9) const;

 private:
  MirrorMap(MirrorKind kind, std::size_t dimension, double radius, double K)
      : kind_(kind), dimension_(dimension), radius_(radius), K_(K) {}

  void check_dimension(const DenseVector& w) const;

  MirrorKind kind_;
  std::size_t dimension_;
  double radius_;
  double K_;
};

}  // namespace mbaccel
