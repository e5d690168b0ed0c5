#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbaccel/analysis.hpp"
#include "mbaccel/dataio.hpp"
#include "mbaccel/geometry.hpp"
#include "mbaccel/losses.hpp"
#include "mbaccel/schedules.hpp"

namespace mbaccel {

enum class AlgoKind { sgd, ag, smd, amd };
enum class StepMode { theoretical, grid };
enum class SweepKind { none, batch_sizes, p_values };

const char* to_string(AlgoKind a) noexcept;
AlgoKind parse_algo(const std::string& name);

struct DataSource {
  std::optional<std::string> path;
  std::optional<SynthesisSpec> synthesize;
  std::uint64_t synth_seed = 1;
  /// Censor the loaded data before the split (predictor from
  /// fit_reference_predictor with `reference_budget` iterations).
  bool censor = false;
};

struct ExperimentSpec {
  DataSource data;
  std::vector<AlgoKind> algorithms{AlgoKind::sgd};
  SweepKind sweep = SweepKind::none;
  std::vector<std::size_t> batch_sizes{1};
  std::vector<double> p_values;              // fixed p for AG/AMD, or the swept list
  std::optional<std::size_t> fixed_m;        // training examples used, m = n b
  std::vector<std::uint64_t> seeds{1};
  StepMode step_mode = StepMode::theoretical;
  std::vector<double> grid = default_grid_multipliers();
  bool projection = true;
  bool deterministic = false;
  std::size_t workers = 1;
  std::size_t trace_every = 0;               // 0: no trace output
  MirrorKind mirror = MirrorKind::euclidean; // geometry for SMD/AMD
  LossKind loss = LossKind::smoothed_hinge;
  SplitFractions fractions{};
  // Comparator overrides; otherwise planted (synthetic) or reference-fit.
  std::optional<double> L_star;
  std::optional<double> w_star_norm;
  std::optional<std::string> comparator_path;
  std::size_t reference_budget = 1000;
  std::string output_path;

  void validate() const;
};

std::string spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const std::string& json_text);

/// One (algorithm, b, p, seed) cell.
struct ResultRow {
  AlgoKind algorithm = AlgoKind::sgd;
  std::size_t b = 1;
  std::size_t n = 1;
  std::optional<double> p;      // accelerated methods only
  std::string p_role = "none";  // none | fixed | theory | log_ratio | swept
  std::uint64_t seed = 0;
  double step_size = 0.0;       // eta or gamma actually used
  double grid_multiplier = 1.0;
  double final_train_loss = 0.0;
  double test_loss = 0.0;
  double test_misclassification = 0.0;
  double wall_seconds = 0.0;    // written to the timing sidecar, not the results CSV
};

using ResultTable = std::vector<ResultRow>;

struct SummaryRow {
  AlgoKind algorithm;
  std::size_t b;
  std::size_t n;
  std::optional<double> p;
  std::string p_role;
  std::size_t runs;
  double mean_final_train_loss;
  double mean_test_loss;
  double mean_test_misclassification;
};

struct TraceRecord {
  AlgoKind algorithm;
  std::size_t b;
  std::string p_role;
  std::optional<double> p;
  std::uint64_t seed;
  std::size_t iteration;
  double train_batch_loss;
  std::optional<double> holdout_loss;
  double iterate_norm;
};

struct Comparator {
  double w_star_norm_sq = 0.0;
  double L_star = 0.0;
  std::string source;  // override | predictor-file | planted | reference-fit
};

struct ExperimentResult {
  ResultTable rows;
  std::vector<SummaryRow> summary;
  std::vector<TraceRecord> traces;
  std::vector<std::string> warnings;
  Comparator comparator;
  double H = 0.0;
  std::size_t m = 0;
};

/// Loads or synthesizes the dataset described by `source`.
struct LoadedData {
  Dataset dataset;
  std::optional<DenseVector> planted_w;
  std::optional<DenseVector> censor_predictor;
};
LoadedData load_data(const DataSource& source, LossKind loss, std::size_t reference_budget,
                     std::size_t workers = 1);

/// Experiment drivers over an already loaded dataset; the cmd_* wrappers
/// load data from the spec and write outputs when output_path is set.
ExperimentResult run_experiment(const ExperimentSpec& spec, const LoadedData& data);

ExperimentResult cmd_train(const ExperimentSpec& spec);
ExperimentResult cmd_sweep_b(const ExperimentSpec& spec);
ExperimentResult cmd_sweep_p(const ExperimentSpec& spec);

std::vector<SummaryRow> summarize(const ResultTable& rows);

void write_results_csv(const ResultTable& rows, std::ostream& out);
std::string results_csv_string(const ResultTable& rows);
ResultTable read_results_csv(std::istream& in);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
void write_timing_csv(const ResultTable& rows, std::ostream& out);
void write_trace_csv(const std::vector<TraceRecord>& rows, std::ostream& out);

/// Writes <out>, <stem>.summary.csv, <stem>.timing.csv, <stem>.config.json
/// and, when traces exist, <stem>.trace.csv.
void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result);

/// Sibling path with `tag` inserted before the extension.
std::string sibling_path(const std::string& path, const std::string& tag, const std::string& ext);

struct CensorSummary {
  std::size_t input_examples = 0;
  std::size_t kept_examples = 0;
  double removed_fraction = 0.0;
  double predictor_norm = 0.0;
  double post_censor_loss = 0.0;
  std::size_t budget = 0;
  std::string trainer;
};

struct CensorOutcome {
  Dataset censored;
  DenseVector predictor;
  CensorSummary summary;
};

CensorOutcome censor_with_reference(const Dataset& data, std::size_t budget, std::size_t workers = 1);

/// Reads LIBSVM from `input_path`, writes the censored file to
/// `output_path` and the predictor to <stem>.predictor.json.
CensorSummary cmd_censor(const std::string& input_path, const std::string& output_path,
                         std::size_t budget, std::size_t workers = 1);

std::string predictor_to_json(const DenseVector& w, const std::string& trainer, std::size_t budget);
DenseVector predictor_from_json(const std::string& json_text);

struct BoundsRequest {
  ProblemParams params;
  double epsilon = 0.01;
};

struct BoundsOutput {
  BoundReport bounds;
  RegimeReport sgd_regime;
  RegimeReport ag_regime;
  std::pair<double, double> max_serial_b;
  double m;
  double epsilon;
  std::string text;
  std::string json;
};

BoundsOutput cmd_bounds(const BoundsRequest& request);

struct VerifyCheck {
  std::string name;
  bool passed;
  std::string detail;
};

struct LemmaEstimate {
  std::string distribution;  // rademacher | gaussian
  std::size_t b;
  std::size_t dimension;
  std::size_t trials;
  double mean_sq_norm;       // empirical E||mean||^2
  double standard_error;
  double bound;              // (K^2/b^2) sum E||x_t||^2, exact for these laws
  bool within_3se;
  bool not_above_bound;
};

/// Monte Carlo estimate of E||(1/b) sum x_t||^2 for iid mean-zero vectors
/// with iid Rademacher or standard-normal coordinates.
LemmaEstimate estimate_variance_lemma(const std::string& distribution, std::size_t b,
                                      std::size_t dimension, std::size_t trials,
                                      std::uint64_t seed);

/// Minimum self-bounding residual over `draws` random (w, z) pairs with
/// H = max ||x||^2 over the drawn instances.
double self_bound_sweep(LossKind kind, std::size_t draws, std::uint64_t seed);

struct VerifyReport {
  std::vector<LemmaEstimate> lemma;
  double self_bound_min_residual_hinge = 0.0;
  double self_bound_min_residual_squared = 0.0;
  std::vector<VerifyCheck> checks;
  bool all_passed = true;
  std::string text;
  std::string json;
};

VerifyReport cmd_verify(std::size_t trials, std::uint64_t seed);

/// LIBSVM in, canonical LIBSVM out.
std::size_t cmd_convert(const std::string& input_path, const std::string& output_path);

}  // namespace mbaccel
