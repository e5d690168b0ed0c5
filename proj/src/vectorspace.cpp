#include "mbaccel/vectorspace.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <string>

#include "mbaccel/errors.hpp"

namespace mbaccel {

namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

void check_same(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw ValidationError(std::string(op) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_sink_mutex);
  std::swap(g_sink, sink);
  return sink;
}

void warn(std::string_view message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

DenseVector::DenseVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("DenseVector: dimension must be positive");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("DenseVector: non-finite entry");
  }
}

DenseVector::DenseVector(std::initializer_list<double> values)
    : DenseVector(std::vector<double>(values)) {}

DenseVector DenseVector::zeros(std::size_t dimension) {
  return DenseVector(std::vector<double>(dimension, 0.0));
}

SparseVector::SparseVector(std::vector<SparseEntry> entries, std::size_t dimension)
    : entries_(std::move(entries)), dimension_(dimension) {
  if (dimension_ == 0) throw ValidationError("SparseVector: dimension must be positive");
  std::uint32_t prev = 0;
  for (const auto& e : entries_) {
    if (e.index == 0) throw ValidationError("SparseVector: indices are 1-based");
    if (e.index <= prev) throw ValidationError("SparseVector: indices must be strictly increasing");
    if (e.index > dimension_) throw ValidationError("SparseVector: index exceeds dimension");
    if (e.value == 0.0 || !std::isfinite(e.value)) {
      throw ValidationError("SparseVector: values must be nonzero and finite");
    }
    prev = e.index;
  }
}

SparseVector SparseVector::with_dimension(std::size_t dimension) const {
  return SparseVector(entries_, dimension);
}

SparseVector SparseVector::scaled(double factor) const {
  std::vector<SparseEntry> out(entries_);
  for (auto& e : out) e.value *= factor;
  return SparseVector(std::move(out), dimension_);
}

double SparseVector::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

double dot(const DenseVector& a, const DenseVector& b) {
  check_same(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

double dot(const SparseVector& a, const DenseVector& b) {
  check_same(a.dimension(), b.size(), "dot");
  double s = 0.0;
  for (const auto& e : a.entries()) s += e.value * b[e.index - 1];
  return s;
}

DenseVector axpy(double alpha, const DenseVector& x, const DenseVector& y) {
  DenseVector out = y;
  axpy_inplace(alpha, x, out);
  return out;
}

DenseVector axpy(double alpha, const SparseVector& x, const DenseVector& y) {
  DenseVector out = y;
  axpy_inplace(alpha, x, out);
  return out;
}

double norm(const DenseVector& x, NormKind which) {
  switch (which) {
    case NormKind::two: {
      double s = 0.0;
      for (double v : x.values()) s += v * v;
      return std::sqrt(s);
    }
    case NormKind::one: {
      double s = 0.0;
      for (double v : x.values()) s += std::abs(v);
      return s;
    }
    case NormKind::inf: {
      double m = 0.0;
      for (double v : x.values()) m = std::max(m, std::abs(v));
      return m;
    }
  }
  return 0.0;
}

DenseVector densify(const SparseVector& x) {
  DenseVector out = DenseVector::zeros(x.dimension());
  for (const auto& e : x.entries()) out[e.index - 1] = e.value;
  return out;
}

void axpy_inplace(double alpha, const DenseVector& x, DenseVector& y) {
  check_same(x.size(), y.size(), "axpy");
  for (std::size_t j = 0; j < y.size(); ++j) y[j] += alpha * x[j];
}

void axpy_inplace(double alpha, const SparseVector& x, DenseVector& y) {
  check_same(x.dimension(), y.size(), "axpy");
  for (const auto& e : x.entries()) y[e.index - 1] += alpha * e.value;
}

void scale_inplace(double alpha, DenseVector& x) {
  for (double& v : x.mutable_values()) v *= alpha;
}

double max_abs_diff(const DenseVector& a, const DenseVector& b) {
  check_same(a.size(), b.size(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

}  // namespace mbaccel
