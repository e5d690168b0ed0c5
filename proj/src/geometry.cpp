#include "mbaccel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mbaccel/errors.hpp"

namespace mbaccel {

MirrorMap MirrorMap::euclidean(std::size_t dimension, double radius_D) {
  if (dimension == 0) throw ValidationError("MirrorMap: dimension must be positive");
  if (!(radius_D > 0.0) || !std::isfinite(radius_D)) {
    throw ValidationError("MirrorMap: radius D must be positive and finite");
  }
  return MirrorMap(MirrorKind::euclidean, dimension, radius_D, 1.0);
}

MirrorMap MirrorMap::entropy(std::size_t dimension) {
  if (dimension < 2) throw ValidationError("MirrorMap: entropy map needs dimension >= 2");
  const double d = static_cast<double>(dimension);
  return MirrorMap(MirrorKind::entropy, dimension, 1.0, std::sqrt(2.0 * std::log(d)));
}

void MirrorMap::check_dimension(const DenseVector& w) const {
  if (w.size() != dimension_) {
    throw ValidationError("MirrorMap: expected dimension " + std::to_string(dimension_) + ", got " +
                          std::to_string(w.size()));
  }
}

double MirrorMap::potential(const DenseVector& w) const {
  check_dimension(w);
  if (kind_ == MirrorKind::euclidean) {
    const double n = norm(w);
    return 0.5 * n * n;
  }
  const double d = static_cast<double>(dimension_);
  double s = 0.0;
  for (double v : w.values()) {
    if (v < 0.0) throw DomainError("entropy potential: negative coordinate");
    if (v > 0.0) s += v * std::log(v * d);
  }
  return s;
}

DenseVector MirrorMap::grad_potential(const DenseVector& w) const {
  check_dimension(w);
  if (kind_ == MirrorKind::euclidean) return w;
  const double d = static_cast<double>(dimension_);
  DenseVector g = DenseVector::zeros(dimension_);
  for (std::size_t j = 0; j < dimension_; ++j) {
    if (!(w[j] > 0.0)) throw DomainError("entropy gradient: coordinate must be strictly positive");
    g[j] = std::log(w[j] * d) + 1.0;
  }
  return g;
}

DenseVector MirrorMap::grad_conjugate(const DenseVector& theta) const {
  check_dimension(theta);
  if (kind_ == MirrorKind::euclidean) return theta;
  const double top = *std::max_element(theta.values().begin(), theta.values().end());
  DenseVector out = DenseVector::zeros(dimension_);
  double sum = 0.0;
  for (std::size_t j = 0; j < dimension_; ++j) {
    out[j] = std::exp(theta[j] - top);
    sum += out[j];
  }
  scale_inplace(1.0 / sum, out);
  return out;
}

BregmanDivergence MirrorMap::bregman(const DenseVector& w, const DenseVector& w_prime) const {
  check_dimension(w);
  check_dimension(w_prime);
  if (kind_ == MirrorKind::euclidean) {
    double s = 0.0;
    for (std::size_t j = 0; j < dimension_; ++j) {
      const double diff = w[j] - w_prime[j];
      s += diff * diff;
    }
    return {0.5 * s};
  }
  // R(w) - R(w') - <grad R(w'), w - w'> expanded term by term; the ln d and
  // +1 shifts cancel, leaving the generalized KL divergence.
  double s = 0.0;
  for (std::size_t j = 0; j < dimension_; ++j) {
    if (w[j] < 0.0) throw DomainError("entropy Bregman divergence: negative coordinate");
    if (!(w_prime[j] > 0.0)) {
      throw DomainError("entropy Bregman divergence: second argument must be strictly positive");
    }
    const double term = w[j] > 0.0 ? w[j] * std::log(w[j] / w_prime[j]) : 0.0;
    s += term - w[j] + w_prime[j];
  }
  return {std::max(0.0, s)};
}

DenseVector MirrorMap::project(const DenseVector& w_prime) const {
  check_dimension(w_prime);
  if (kind_ == MirrorKind::euclidean) {
    const double n = norm(w_prime);
    if (n <= radius_) return w_prime;
    DenseVector out = w_prime;
    scale_inplace(radius_ / n, out);
    return out;
  }
  double sum = 0.0;
  for (double v : w_prime.values()) {
    if (v < 0.0) throw DomainError("KL projection: negative coordinate");
    sum += v;
  }
  if (!(sum > 0.0)) throw DomainError("KL projection: point has no mass");
  DenseVector out = w_prime;
  scale_inplace(1.0 / sum, out);
  return out;
}

DenseVector MirrorMap::minimizer() const {
  if (kind_ == MirrorKind::euclidean) return DenseVector::zeros(dimension_);
  return DenseVector(std::vector<double>(dimension_, 1.0 / static_cast<double>(dimension_)));
}

bool MirrorMap::contains(const DenseVector& w, double tol) const {
  if (w.size() != dimension_) return false;
  if (kind_ == MirrorKind::euclidean) return norm(w) <= radius_ + tol;
  double sum = 0.0;
  for (double v : w.values()) {
    if (v < -tol) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

}  // namespace mbaccel
