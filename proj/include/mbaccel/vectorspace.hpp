#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace mbaccel {

/// Dense vector of finite doubles. Dimension is the entry count and is
/// always positive.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::vector<double> values);
  DenseVector(std::initializer_list<double> values);

  static DenseVector zeros(std::size_t dimension);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> mutable_values() noexcept { return values_; }
  const std::vector<double>& to_vector() const noexcept { return values_; }

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> values_;
};

/// One nonzero of a sparse vector. `index` is 1-based (LIBSVM convention).
struct SparseEntry {
  std::uint32_t index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse vector with strictly increasing 1-based indices, each at most
/// `dimension`, and nonzero finite values.
class SparseVector {
 public:
  SparseVector() = default;
  SparseVector(std::vector<SparseEntry> entries, std::size_t dimension);

  std::span<const SparseEntry> entries() const noexcept { return entries_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t nnz() const noexcept { return entries_.size(); }

  /// Same entries viewed in a larger ambient space.
  SparseVector with_dimension(std::size_t dimension) const;
  SparseVector scaled(double factor) const;
  double squared_norm() const noexcept;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::vector<SparseEntry> entries_;
  std::size_t dimension_ = 0;
};

enum class NormKind { two, one, inf };

double dot(const DenseVector& a, const DenseVector& b);
double dot(const SparseVector& a, const DenseVector& b);

/// Returns y + alpha * x; y is left untouched.
DenseVector axpy(double alpha, const DenseVector& x, const DenseVector& y);
DenseVector axpy(double alpha, const SparseVector& x, const DenseVector& y);

double norm(const DenseVector& x, NormKind which = NormKind::two);

DenseVector densify(const SparseVector& x);

// In-place kernels used by the optimizer loops. Dimensions are checked.
void axpy_inplace(double alpha, const DenseVector& x, DenseVector& y);
void axpy_inplace(double alpha, const SparseVector& x, DenseVector& y);
void scale_inplace(double alpha, DenseVector& x);

/// Largest |a_j - b_j|.
double max_abs_diff(const DenseVector& a, const DenseVector& b);

}  // namespace mbaccel
