#include "mbaccel/losses.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <vector>

#include "mbaccel/errors.hpp"

namespace mbaccel {

LossModel::LossModel(LossKind kind, double smoothness_H) : kind_(kind), H_(smoothness_H) {
  if (!(smoothness_H > 0.0) || !std::isfinite(smoothness_H)) {
    throw ValidationError("LossModel: smoothness H must be positive and finite");
  }
}

LossModel LossModel::for_dataset(LossKind kind, const Dataset& data) {
  return LossModel(kind, estimate_H(kind, data));
}

ScalarLoss scalar_loss(LossKind kind, double prediction, int label) noexcept {
  const double y = label;
  if (kind == LossKind::squared) {
    const double r = prediction - y;
    return {0.5 * r * r, r};
  }
  const double margin = y * prediction;
  if (margin <= 0.0) return {0.5 - margin, -y};
  if (margin > 1.0) return {0.0, 0.0};
  const double slack = 1.0 - margin;
  return {0.5 * slack * slack, -y * slack};
}

double loss_value(const LossModel& model, const DenseVector& w, const Example& z) {
  return scalar_loss(model.kind(), dot(z.features, w), z.label).value;
}

DenseVector loss_gradient(const LossModel& model, const DenseVector& w, const Example& z) {
  const auto s = scalar_loss(model.kind(), dot(z.features, w), z.label);
  DenseVector g = DenseVector::zeros(w.size());
  if (s.coefficient != 0.0) axpy_inplace(s.coefficient, z.features, g);
  return g;
}

MiniBatch::MiniBatch(std::span<const Example> examples) : examples_(examples) {
  if (examples_.empty()) throw ValidationError("MiniBatch: batch must be nonempty");
}

namespace {

struct Partial {
  double value = 0.0;
  DenseVector gradient;
};

void accumulate(const LossModel& model, const DenseVector& w, std::span<const Example> examples,
                Partial& into) {
  for (const auto& z : examples) {
    const auto s = scalar_loss(model.kind(), dot(z.features, w), z.label);
    into.value += s.value;
    if (s.coefficient != 0.0) axpy_inplace(s.coefficient, z.features, into.gradient);
  }
}

void merge(Partial& into, const Partial& from) {
  into.value += from.value;
  axpy_inplace(1.0, from.gradient, into.gradient);
}

Partial reduce_deterministic(const LossModel& model, const DenseVector& w,
                             std::span<const Example> examples, WorkerPool* pool) {
  const std::size_t leaves = (examples.size() + kReductionLeafSize - 1) / kReductionLeafSize;
  std::vector<Partial> level(leaves);
  auto leaf = [&](std::size_t k) {
    const std::size_t begin = k * kReductionLeafSize;
    const std::size_t count = std::min(kReductionLeafSize, examples.size() - begin);
    level[k].gradient = DenseVector::zeros(w.size());
    accumulate(model, w, examples.subspan(begin, count), level[k]);
  };
  if (pool != nullptr && pool->size() > 1 && leaves > 1) {
    pool->parallel_for(leaves, leaf);
  } else {
    for (std::size_t k = 0; k < leaves; ++k) leaf(k);
  }
  // Pairwise tree: (0,1), (2,3), ...; an odd tail moves up unchanged.
  while (level.size() > 1) {
    std::vector<Partial> next((level.size() + 1) / 2);
    for (std::size_t k = 0; k + 1 < level.size(); k += 2) {
      next[k / 2] = std::move(level[k]);
      merge(next[k / 2], level[k + 1]);
    }
    if (level.size() % 2 == 1) next.back() = std::move(level.back());
    level = std::move(next);
  }
  return std::move(level.front());
}

Partial reduce_fast(const LossModel& model, const DenseVector& w, std::span<const Example> examples,
                    WorkerPool* pool) {
  Partial total{0.0, DenseVector::zeros(w.size())};
  if (pool == nullptr || pool->size() == 1 || examples.size() < 2 * kReductionLeafSize) {
    accumulate(model, w, examples, total);
    return total;
  }
  const std::size_t chunks = std::min(pool->size(), examples.size());
  const std::size_t per = (examples.size() + chunks - 1) / chunks;
  std::mutex m;
  pool->parallel_for(chunks, [&](std::size_t k) {
    const std::size_t begin = k * per;
    if (begin >= examples.size()) return;
    Partial local{0.0, DenseVector::zeros(w.size())};
    accumulate(model, w, examples.subspan(begin, std::min(per, examples.size() - begin)), local);
    std::lock_guard lock(m);
    merge(total, local);
  });
  return total;
}

Partial reduce(const LossModel& model, const DenseVector& w, std::span<const Example> examples,
               ReductionMode mode, WorkerPool* pool) {
  return mode == ReductionMode::deterministic ? reduce_deterministic(model, w, examples, pool)
                                              : reduce_fast(model, w, examples, pool);
}

}  // namespace

ValueGrad minibatch_value_grad(const LossModel& model, const DenseVector& w, const MiniBatch& batch,
                               ReductionMode mode, WorkerPool* pool) {
  if (batch.examples().front().features.dimension() != w.size()) {
    throw ValidationError("minibatch_value_grad: dimension mismatch");
  }
  Partial p = reduce(model, w, batch.examples(), mode, pool);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  scale_inplace(inv_b, p.gradient);
  return {p.value * inv_b, std::move(p.gradient)};
}

double mean_loss(const LossModel& model, const DenseVector& w, std::span<const Example> examples,
                 ReductionMode mode, WorkerPool* pool) {
  if (examples.empty()) return 0.0;
  if (mode == ReductionMode::deterministic && (pool == nullptr || pool->size() == 1)) {
    double s = 0.0;
    for (const auto& z : examples) s += scalar_loss(model.kind(), dot(z.features, w), z.label).value;
    return s / static_cast<double>(examples.size());
  }
  return reduce(model, w, examples, mode, pool).value / static_cast<double>(examples.size());
}

double misclassification_rate(const DenseVector& w, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t wrong = 0;
  for (const auto& z : examples) {
    const int predicted = dot(z.features, w) >= 0.0 ? 1 : -1;
    if (predicted != z.label) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(examples.size());
}

double self_bound_residual(const LossModel& model, const DenseVector& w, const Example& z) {
  const auto s = scalar_loss(model.kind(), dot(z.features, w), z.label);
  const double grad_norm = std::abs(s.coefficient) * std::sqrt(z.features.squared_norm());
  return std::sqrt(4.0 * model.smoothness() * s.value) - grad_norm;
}

double estimate_H(LossKind /*kind*/, const Dataset& data) {
  if (data.empty()) throw ValidationError("estimate_H: empty dataset");
  double h = 0.0;
  for (const auto& z : data.examples()) h = std::max(h, z.features.squared_norm());
  if (h == 0.0) throw ValidationError("estimate_H: every feature vector is zero");
  return h;
}

}  // namespace mbaccel
