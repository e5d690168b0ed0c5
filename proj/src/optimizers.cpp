#include "mbaccel/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <string>

#include "mbaccel/errors.hpp"
#include "mbaccel/parallel.hpp"

namespace mbaccel {

void RunConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch size b must be positive");
  if (iterations == 0) throw ValidationError("iteration count n must be positive");
  if (trace_every == 0) throw ValidationError("trace_every must be positive");
  if (workers == 0) throw ValidationError("workers must be positive");
}

BatchSource contiguous_batches(std::span<const Example> sample, const RunConfig& config) {
  config.validate();
  const std::size_t need = config.batch_size * config.iterations;
  if (sample.size() < need) {
    throw ValidationError("insufficient data: need n*b = " + std::to_string(need) +
                          " examples, have " + std::to_string(sample.size()));
  }
  const std::size_t b = config.batch_size;
  return [sample, b](std::size_t i) { return sample.subspan((i - 1) * b, b); };
}

namespace {

using Clock = std::chrono::steady_clock;

enum class Route { plain, mirror };

class Engine {
 public:
  Engine(const LossModel& model, const MirrorMap& map, const BatchSource& batches,
         const RunConfig& config, std::span<const Example> holdout, const RunHooks& hooks,
         Route route)
      : model_(model),
        map_(map),
        batches_(batches),
        config_(config),
        holdout_(holdout),
        hooks_(hooks),
        route_(route),
        pool_(config.workers > 1 ? std::make_unique<WorkerPool>(config.workers) : nullptr),
        start_(Clock::now()) {
    config_.validate();
  }

  /// Mini-batch loss and gradient at `point` for batch i, with the
  /// divergence guard applied to the loss.
  ValueGrad gradient(std::size_t i, const DenseVector& point) {
    auto batch = batches_(i);
    if (hooks_.on_gradient) hooks_.on_gradient(i, point, batch);
    auto vg = minibatch_value_grad(model_, point, MiniBatch(batch),
                                   config_.deterministic_reduction ? ReductionMode::deterministic
                                                                   : ReductionMode::fast,
                                   pool_.get());
    trace_.examples_consumed += batch.size();
    ++trace_.gradient_evaluations;
    if (!std::isfinite(vg.value) || vg.value > kDivergenceThreshold) {
      throw DivergenceError(i, vg.value);
    }
    return vg;
  }

  /// w' = point - step * g, or grad R*(grad R(point) - step * g).
  DenseVector descend(const DenseVector& point, double step, const DenseVector& g) const {
    if (route_ == Route::plain) {
      DenseVector out = point;
      axpy_inplace(-step, g, out);
      return out;
    }
    DenseVector theta = map_.grad_potential(point);
    axpy_inplace(-step, g, theta);
    return map_.grad_conjugate(theta);
  }

  DenseVector maybe_project(DenseVector w) const {
    return config_.projection_enabled ? map_.project(w) : w;
  }

  bool wants_row(std::size_t i) const {
    return i % config_.trace_every == 0 || i == config_.iterations;
  }

  void record(std::size_t i, double batch_loss, const DenseVector& iterate,
              const std::function<DenseVector()>& candidate) {
    TraceRow row{i, batch_loss, std::nullopt, norm(iterate, map_.paired_norm()), 0.0};
    if (!holdout_.empty()) {
      row.holdout_loss = mean_loss(model_, candidate(), holdout_, ReductionMode::fast, pool_.get());
    }
    row.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    trace_.rows.push_back(row);
  }

  RunTrace& trace() { return trace_; }
  const RunHooks& hooks() const { return hooks_; }
  const RunConfig& config() const { return config_; }

 private:
  const LossModel& model_;
  const MirrorMap& map_;
  const BatchSource& batches_;
  RunConfig config_;
  std::span<const Example> holdout_;
  const RunHooks& hooks_;
  Route route_;
  std::unique_ptr<WorkerPool> pool_;
  Clock::time_point start_;
  RunTrace trace_;
};

void check_dimension(const MirrorMap& map, std::span<const Example> sample) {
  if (!sample.empty() && sample.front().features.dimension() != map.dimension()) {
    throw ValidationError("data dimension " + std::to_string(sample.front().features.dimension()) +
                          " does not match mirror map dimension " +
                          std::to_string(map.dimension()));
  }
}

RunResult averaged(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                   const BatchSource& batches, const RunConfig& config,
                   std::span<const Example> holdout, const RunHooks& hooks, Route route) {
  schedule.validate();
  Engine engine(model, map, batches, config, holdout, hooks, route);
  const std::size_t n = config.iterations;
  const double eta = schedule.magnitude();

  DenseVector w = route == Route::plain ? DenseVector::zeros(map.dimension()) : map.minimizer();
  DenseVector running_sum = DenseVector::zeros(map.dimension());
  for (std::size_t i = 1; i <= n; ++i) {
    axpy_inplace(1.0, w, running_sum);
    auto vg = engine.gradient(i, w);
    if (engine.wants_row(i)) {
      engine.record(i, vg.value, w, [&] {
        DenseVector avg = running_sum;
        scale_inplace(1.0 / static_cast<double>(i), avg);
        return avg;
      });
    }
    // The final step produces w_{n+1}, which the average does not include.
    w = engine.maybe_project(engine.descend(w, eta, vg.gradient));
    if (engine.hooks().on_iterate) engine.hooks().on_iterate(i, IterateView{w, nullptr, nullptr});
  }
  scale_inplace(1.0 / static_cast<double>(n), running_sum);
  return {std::move(running_sum), std::move(engine.trace())};
}

DenseVector combine(double inv_beta, const DenseVector& a, const DenseVector& b) {
  DenseVector out = DenseVector::zeros(a.size());
  const double rest = 1.0 - inv_beta;
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = inv_beta * a[j] + rest * b[j];
  return out;
}

RunResult accelerated(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                      const BatchSource& batches, const RunConfig& config,
                      std::span<const Example> holdout, const RunHooks& hooks, Route route) {
  schedule.validate();
  if (!schedule.accelerated()) throw ValidationError("accelerated run needs a (gamma, p) schedule");
  Engine engine(model, map, batches, config, holdout, hooks, route);
  const std::size_t n = config.iterations;
  engine.trace().admissibility = validate_admissibility(schedule, model.smoothness(), n);

  DenseVector w = route == Route::plain ? DenseVector::zeros(map.dimension()) : map.minimizer();
  DenseVector w_ag = w;
  DenseVector output = w_ag;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n) output = w_ag;
    const auto [gamma_i, beta_i] = sequences(schedule, i);
    const double inv_beta = 1.0 / beta_i;
    DenseVector w_md = combine(inv_beta, w, w_ag);
    auto vg = engine.gradient(i, w_md);
    if (engine.wants_row(i)) engine.record(i, vg.value, w, [&] { return w_ag; });
    w = engine.maybe_project(engine.descend(w_md, gamma_i, vg.gradient));
    w_ag = combine(inv_beta, w, w_ag);
    if (engine.hooks().on_iterate) engine.hooks().on_iterate(i, IterateView{w, &w_ag, &w_md});
  }
  return {std::move(output), std::move(engine.trace())};
}

void require_kind(const Schedule& schedule, ScheduleKind kind, const char* who) {
  if (schedule.kind != kind) throw ValidationError(std::string(who) + ": wrong schedule kind");
}

void require_euclidean(const MirrorMap& map, const char* who) {
  if (map.kind() != MirrorKind::euclidean) {
    throw ValidationError(std::string(who) + ": needs the Euclidean map");
  }
}

}  // namespace

RunResult run_sgd(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                  std::span<const Example> sample, const RunConfig& config,
                  std::span<const Example> holdout, const RunHooks& hooks) {
  require_euclidean(map, "run_sgd");
  require_kind(schedule, ScheduleKind::sgd_eta, "run_sgd");
  check_dimension(map, sample);
  return averaged(model, map, schedule, contiguous_batches(sample, config), config, holdout, hooks,
                  Route::plain);
}

RunResult run_ag(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                 std::span<const Example> sample, const RunConfig& config,
                 std::span<const Example> holdout, const RunHooks& hooks) {
  require_euclidean(map, "run_ag");
  require_kind(schedule, ScheduleKind::ag_gamma_p, "run_ag");
  check_dimension(map, sample);
  return accelerated(model, map, schedule, contiguous_batches(sample, config), config, holdout,
                     hooks, Route::plain);
}

RunResult run_smd(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                  std::span<const Example> sample, const RunConfig& config,
                  std::span<const Example> holdout, const RunHooks& hooks) {
  require_kind(schedule, ScheduleKind::smd_eta, "run_smd");
  check_dimension(map, sample);
  return averaged(model, map, schedule, contiguous_batches(sample, config), config, holdout, hooks,
                  Route::mirror);
}

RunResult run_amd(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                  std::span<const Example> sample, const RunConfig& config,
                  std::span<const Example> holdout, const RunHooks& hooks) {
  require_kind(schedule, ScheduleKind::amd_gamma_p, "run_amd");
  check_dimension(map, sample);
  return accelerated(model, map, schedule, contiguous_batches(sample, config), config, holdout,
                     hooks, Route::mirror);
}

RunResult run_averaged_stream(const LossModel& model, const MirrorMap& map, const Schedule& schedule,
                              const BatchSource& batches, const RunConfig& config,
                              std::span<const Example> holdout, const RunHooks& hooks) {
  return averaged(model, map, schedule, batches, config, holdout, hooks,
                  schedule.kind == ScheduleKind::smd_eta ? Route::mirror : Route::plain);
}

RunResult run_accelerated_stream(const LossModel& model, const MirrorMap& map,
                                 const Schedule& schedule, const BatchSource& batches,
                                 const RunConfig& config, std::span<const Example> holdout,
                                 const RunHooks& hooks) {
  return accelerated(model, map, schedule, batches, config, holdout, hooks,
                     schedule.kind == ScheduleKind::amd_gamma_p ? Route::mirror : Route::plain);
}

double full_batch_smoothness(const LossModel& model, const Dataset& data) {
  if (data.empty()) throw ValidationError("full_batch_smoothness: empty dataset");
  const std::size_t d = data.dimension();
  DenseVector v(std::vector<double>(d, 1.0 / std::sqrt(static_cast<double>(d))));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    DenseVector next = DenseVector::zeros(d);
    for (const auto& z : data.examples()) axpy_inplace(dot(z.features, v), z.features, next);
    scale_inplace(1.0 / static_cast<double>(data.size()), next);
    const double len = norm(next);
    if (len == 0.0) return model.smoothness();
    const double change = std::abs(len - lambda);
    lambda = len;
    scale_inplace(1.0 / len, next);
    v = std::move(next);
    if (change <= 1e-10 * lambda) break;
  }
  // Power iteration approaches lambda_max from below; pad it.
  return std::min(model.smoothness(), 1.05 * lambda);
}

DenseVector fit_reference_predictor(const LossModel& model, const Dataset& data,
                                    std::size_t iterations, std::size_t workers) {
  if (data.empty()) throw ValidationError("fit_reference_predictor: empty dataset");
  // Full-batch passes; every "mini-batch" is the whole sample.
  auto all = data.examples();
  BatchSource full = [all](std::size_t) { return all; };
  RunConfig config;
  config.batch_size = all.size();
  config.iterations = iterations + 1;  // the accelerated loop returns w^ag_n
  config.projection_enabled = false;
  config.trace_every = config.iterations;
  config.workers = workers;
  const auto map = MirrorMap::euclidean(data.dimension(), 1.0);
  const auto schedule = Schedule::ag(1.0 / (4.0 * full_batch_smoothness(model, data)), 1.0);
  return run_accelerated_stream(model, map, schedule, full, config).w;
}

}  // namespace mbaccel
