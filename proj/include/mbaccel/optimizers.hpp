#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mbaccel/dataio.hpp"
#include "mbaccel/geometry.hpp"
#include "mbaccel/losses.hpp"
#include "mbaccel/schedules.hpp"
#include "mbaccel/vectorspace.hpp"

namespace mbaccel {

struct RunConfig {
  std::size_t batch_size = 1;   // b
  std::size_t iterations = 1;   // n
  std::uint64_t seed = 0;       // recorded only; the optimizers never reshuffle
  bool projection_enabled = true;
  bool deterministic_reduction = true;
  std::size_t trace_every = 1;
  std::size_t workers = 1;      // threads for the per-iteration gradient map-reduce

  void validate() const;
};

struct TraceRow {
  std::size_t iteration;
  double train_batch_loss;              // mini-batch loss at the gradient point
  std::optional<double> holdout_loss;   // mean loss of the current output candidate
  double iterate_norm;                  // ||w_i|| in the map's paired norm
  double elapsed_seconds;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::size_t examples_consumed = 0;
  std::size_t gradient_evaluations = 0;
  std::optional<AdmissibilityReport> admissibility;  // accelerated runs only
};

struct RunResult {
  DenseVector w;
  RunTrace trace;
};

/// Iterates after step i (i.e. w_{i+1}, and for accelerated runs w^ag_{i+1}
/// and the gradient point w^md_i).
struct IterateView {
  const DenseVector& w;
  const DenseVector* w_ag;
  const DenseVector* w_md;
};

struct RunHooks {
  /// Called once per mini-batch gradient with the evaluation point and batch.
  std::function<void(std::size_t i, const DenseVector& point, std::span<const Example> batch)>
      on_gradient;
  std::function<void(std::size_t i, const IterateView& state)> on_iterate;
};

/// Supplies batch i (1-based). Must return a nonempty span.
using BatchSource = std::function<std::span<const Example>(std::size_t i)>;

/// Batch i = sample[b(i-1), bi). Throws ValidationError if the sample is
/// shorter than n*b.
BatchSource contiguous_batches(std::span<const Example> sample, const RunConfig& config);

/// Loss values above this (or non-finite) abort a run with DivergenceError.
inline constexpr double kDivergenceThreshold = 1e12;

/// Mini-batch SGD from w_1 = 0; returns the average of w_1..w_n.
RunResult run_sgd(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                  std::span<const Example> sample, const RunConfig& config,
                  std::span<const Example> holdout = {}, const RunHooks& hooks = {});

/// Accelerated gradient with gamma_i = gamma i^p, beta_i = (i+1)/2, from
/// w_1 = w^ag_1 = 0; one gradient per iteration, at w^md_i. Returns w^ag_n.
RunResult run_ag(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                 std::span<const Example> sample, const RunConfig& config,
                 std::span<const Example> holdout = {}, const RunHooks& hooks = {});

/// Stochastic mirror descent from argmin R; returns the averaged iterate.
RunResult run_smd(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                  std::span<const Example> sample, const RunConfig& config,
                  std::span<const Example> holdout = {}, const RunHooks& hooks = {});

/// Accelerated mirror descent from argmin R; returns w^ag_n.
RunResult run_amd(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                  std::span<const Example> sample, const RunConfig& config,
                  std::span<const Example> holdout = {}, const RunHooks& hooks = {});

// Same loops over an arbitrary batch source (e.g. full-batch passes).
RunResult run_averaged_stream(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                              const BatchSource& batches, const RunConfig& config,
                              std::span<const Example> holdout = {}, const RunHooks& hooks = {});
RunResult run_accelerated_stream(const LossModel& model, const MirrorMap& map,
                                 const Schedule& schedule, const BatchSource& batches,
                                 const RunConfig& config, std::span<const Example> holdout = {},
                                 const RunHooks& hooks = {});

/// Smoothness of the full-sample mean loss: the top eigenvalue
/// of (1/m) sum x x^T (power iteration, padded by 5%), capped at the model H.
double full_batch_smoothness(const LossModel& model, const Dataset& data);

/// Predictor used for censoring and as a reference comparator: deterministic
/// full-batch accelerated gradient (gamma = 1/(4 H_full), p = 1, no projection).
DenseVector fit_reference_predictor(const LossModel& model, const Dataset& data,
                                    std::size_t iterations, std::size_t workers = 1);

}  // namespace mbaccel
