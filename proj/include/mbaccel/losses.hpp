#pragma once

#include <cstddef>
#include <span>

#include "mbaccel/dataio.hpp"
#include "mbaccel/parallel.hpp"
#include "mbaccel/vectorspace.hpp"

namespace mbaccel {

enum class LossKind {
  smoothed_hinge,  // 0.5 - m for m <= 0, 0.5 (1 - m)^2 on (0, 1], 0 above 1; m = y w.x
  squared,         // 0.5 (w.x - y)^2
};

/// A non-negative convex loss over linear predictors that is H-smooth in w.
class LossModel {
 public:
  LossModel(LossKind kind, double smoothness_H);

  /// H taken from estimate_H on the given data.
  static LossModel for_dataset(LossKind kind, const Dataset& data);

  LossKind kind() const noexcept { return kind_; }
  double smoothness() const noexcept { return H_; }

 private:
  LossKind kind_;
  double H_;
};

/// Value and the scalar c such that the gradient is c * x.
struct ScalarLoss {
  double value;
  double coefficient;
};

ScalarLoss scalar_loss(LossKind kind, double prediction, int label) noexcept;

double loss_value(const LossModel& model, const DenseVector& w, const Example& z);
DenseVector loss_gradient(const LossModel& model, const DenseVector& w, const Example& z);

/// A nonempty run of consecutive examples.
class MiniBatch {
 public:
  explicit MiniBatch(std::span<const Example> examples);
  std::span<const Example> examples() const noexcept { return examples_; }
  std::size_t size() const noexcept { return examples_.size(); }

 private:
  std::span<const Example> examples_;
};

enum class ReductionMode {
  deterministic,  // fixed tree order; bit-identical for any worker count
  fast,           // per-worker partials merged in completion order
};

struct ValueGrad {
  double value;
  DenseVector gradient;
};

/// Examples per leaf of the deterministic reduction tree. Leaves are summed
/// left to right; leaf partials are then combined pairwise, level by level.
inline constexpr std::size_t kReductionLeafSize = 16;

/// Mean value and mean gradient over the batch.
ValueGrad minibatch_value_grad(const LossModel& model, const DenseVector& w, const MiniBatch& batch,
                               ReductionMode mode = ReductionMode::deterministic,
                               WorkerPool* pool = nullptr);

/// Mean loss over a set of examples (0 for an empty set).
double mean_loss(const LossModel& model, const DenseVector& w, std::span<const Example> examples,
                 ReductionMode mode = ReductionMode::deterministic, WorkerPool* pool = nullptr);

/// Fraction with sign(w.x) != y, where sign(0) counts as +1.
double misclassification_rate(const DenseVector& w, std::span<const Example> examples);

/// sqrt(4 H loss) - ||grad||_2. Non-negative whenever H is valid for z.
double self_bound_residual(const LossModel& model, const DenseVector& w, const Example& z);

/// max_t ||x_t||_2^2. Both loss kinds have a 1-smooth scalar part, so this is
/// the smoothness constant of the loss over linear predictors.
double estimate_H(LossKind kind, const Dataset& data);

}  // namespace mbaccel
