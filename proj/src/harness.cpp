#include "mbaccel/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mbaccel/errors.hpp"
#include "mbaccel/optimizers.hpp"

namespace mbaccel {

using nlohmann::json;

namespace {

constexpr const char* kResultsHeader =
    "algorithm,b,n,p,p_role,seed,step_size,grid_multiplier,final_train_loss,test_loss,"
    "test_misclassification";

bool is_accelerated(AlgoKind a) { return a == AlgoKind::ag || a == AlgoKind::amd; }

std::string fmt(double v) { return format_double(v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double_cell(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "bad number '" + s + "'");
  }
}

std::uint64_t parse_u64_cell(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used != s.size() || s.empty() || s[0] == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "bad integer '" + s + "'");
  }
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* to_string(StepMode m) { return m == StepMode::grid ? "grid" : "theoretical"; }
const char* to_string(SweepKind s) {
  switch (s) {
    case SweepKind::batch_sizes: return "batch_sizes";
    case SweepKind::p_values: return "p_values";
    default: return "none";
  }
}

}  // namespace

const char* to_string(AlgoKind a) noexcept {
  switch (a) {
    case AlgoKind::sgd: return "sgd";
    case AlgoKind::ag: return "ag";
    case AlgoKind::smd: return "smd";
    case AlgoKind::amd: return "amd";
  }
  return "?";
}

AlgoKind parse_algo(const std::string& name) {
  if (name == "sgd") return AlgoKind::sgd;
  if (name == "ag") return AlgoKind::ag;
  if (name == "smd") return AlgoKind::smd;
  if (name == "amd") return AlgoKind::amd;
  throw ValidationError("unknown algorithm '" + name + "' (expected sgd, ag, smd or amd)");
}

void ExperimentSpec::validate() const {
  if (data.path.has_value() == data.synthesize.has_value()) {
    throw ValidationError("exactly one of a data path or a synthesize spec is required");
  }
  if (data.synthesize) {
    const auto& s = *data.synthesize;
    if (s.m == 0 || s.dimension == 0) throw ValidationError("synthesize needs m, d > 0");
    if (!(s.margin > 0.0) || !std::isfinite(s.margin)) throw ValidationError("synthesize margin must be positive");
    if (!(s.label_noise >= 0.0 && s.label_noise <= 1.0)) throw ValidationError("synthesize noise must lie in [0, 1]");
  }
  if (algorithms.empty()) throw ValidationError("at least one algorithm is required");
  if (batch_sizes.empty()) throw ValidationError("at least one batch size is required");
  for (auto b : batch_sizes) {
    if (b == 0) throw ValidationError("batch sizes must be positive");
  }
  if (seeds.empty()) throw ValidationError("seeds must be nonempty");
  if (fixed_m) {
    if (*fixed_m == 0) throw ValidationError("m must be positive");
    for (auto b : batch_sizes) {
      if (*fixed_m % b != 0) {
        throw ValidationError("batch size " + std::to_string(b) + " does not divide m = " +
                              std::to_string(*fixed_m));
      }
    }
  }
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p values must lie in [0, 1]");
  }
  if (sweep == SweepKind::none && batch_sizes.size() != 1) {
    throw ValidationError("train takes a single batch size; use sweep-b for a list");
  }
  if (sweep != SweepKind::p_values && p_values.size() > 1) {
    throw ValidationError("a list of p values needs sweep-p");
  }
  if (sweep == SweepKind::p_values) {
    if (p_values.empty()) throw ValidationError("sweep-p needs at least one p value");
    for (auto a : algorithms) {
      if (!is_accelerated(a)) throw ValidationError("sweep-p applies to ag and amd only");
    }
  }
  if (step_mode == StepMode::grid) {
    if (grid.empty()) throw ValidationError("grid mode needs at least one multiplier");
    for (double g : grid) {
      if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("grid multipliers must be positive");
    }
  }
  if (workers == 0) throw ValidationError("workers must be positive");
  if (reference_budget == 0) throw ValidationError("reference budget must be positive");
  if (L_star && !(*L_star >= 0.0 && std::isfinite(*L_star))) throw ValidationError("L* must be nonnegative");
  if (w_star_norm && !(*w_star_norm >= 0.0 && std::isfinite(*w_star_norm))) {
    throw ValidationError("||w*|| must be nonnegative");
  }
  const double total = fractions.train + fractions.validation + fractions.test;
  if (fractions.train <= 0.0 || fractions.validation < 0.0 || fractions.test <= 0.0 || total > 1.0 + 1e-12) {
    throw ValidationError("split fractions must be positive and sum to at most 1");
  }
  if (step_mode == StepMode::grid && fractions.validation <= 0.0) {
    throw ValidationError("grid mode needs a validation split");
  }
}

std::string spec_to_json(const ExperimentSpec& s) {
  json j;
  json data;
  if (s.data.path) data["path"] = *s.data.path;
  if (s.data.synthesize) {
    const auto& y = *s.data.synthesize;
    data["synthesize"] = {{"m", y.m}, {"d", y.dimension}, {"margin", y.margin}, {"noise", y.label_noise}};
  }
  data["synth_seed"] = s.data.synth_seed;
  data["censor"] = s.data.censor;
  j["data"] = data;
  std::vector<std::string> algos;
  for (auto a : s.algorithms) algos.emplace_back(to_string(a));
  j["algorithms"] = algos;
  j["sweep"] = to_string(s.sweep);
  j["batch_sizes"] = s.batch_sizes;
  j["p_values"] = s.p_values;
  if (s.fixed_m) j["m"] = *s.fixed_m;
  j["seeds"] = s.seeds;
  j["step_mode"] = to_string(s.step_mode);
  j["grid"] = s.grid;
  j["projection"] = s.projection;
  j["deterministic"] = s.deterministic;
  j["workers"] = s.workers;
  j["trace_every"] = s.trace_every;
  j["map"] = s.mirror == MirrorKind::entropy ? "entropy" : "euclidean";
  j["loss"] = s.loss == LossKind::squared ? "squared" : "smoothed_hinge";
  j["fractions"] = {s.fractions.train, s.fractions.validation, s.fractions.test};
  if (s.L_star) j["l_star"] = *s.L_star;
  if (s.w_star_norm) j["w_star_norm"] = *s.w_star_norm;
  if (s.comparator_path) j["comparator"] = *s.comparator_path;
  j["reference_budget"] = s.reference_budget;
  j["out"] = s.output_path;
  return j.dump(2) + "\n";
}

ExperimentSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentSpec s;
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.contains("path")) s.data.path = d.at("path").get<std::string>();
      if (d.contains("synthesize")) {
        const auto& y = d.at("synthesize");
        SynthesisSpec spec;
        spec.m = y.value("m", spec.m);
        spec.dimension = y.value("d", spec.dimension);
        spec.margin = y.value("margin", spec.margin);
        spec.label_noise = y.value("noise", spec.label_noise);
        s.data.synthesize = spec;
      }
      s.data.synth_seed = d.value("synth_seed", s.data.synth_seed);
      s.data.censor = d.value("censor", s.data.censor);
    }
    if (j.contains("algorithms")) {
      s.algorithms.clear();
      for (const auto& a : j.at("algorithms")) s.algorithms.push_back(parse_algo(a.get<std::string>()));
    }
    if (j.contains("sweep")) {
      auto v = j.at("sweep").get<std::string>();
      if (v == "none") s.sweep = SweepKind::none;
      else if (v == "batch_sizes") s.sweep = SweepKind::batch_sizes;
      else if (v == "p_values") s.sweep = SweepKind::p_values;
      else throw ValidationError("unknown sweep '" + v + "'");
    }
    if (j.contains("batch_sizes")) s.batch_sizes = j.at("batch_sizes").get<std::vector<std::size_t>>();
    if (j.contains("p_values")) s.p_values = j.at("p_values").get<std::vector<double>>();
    if (j.contains("m")) s.fixed_m = j.at("m").get<std::size_t>();
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("step_mode")) {
      auto v = j.at("step_mode").get<std::string>();
      if (v == "theoretical") s.step_mode = StepMode::theoretical;
      else if (v == "grid") s.step_mode = StepMode::grid;
      else throw ValidationError("unknown step mode '" + v + "'");
    }
    if (j.contains("grid")) s.grid = j.at("grid").get<std::vector<double>>();
    s.projection = j.value("projection", s.projection);
    s.deterministic = j.value("deterministic", s.deterministic);
    s.workers = j.value("workers", s.workers);
    s.trace_every = j.value("trace_every", s.trace_every);
    if (j.contains("map")) {
      auto v = j.at("map").get<std::string>();
      if (v == "euclidean") s.mirror = MirrorKind::euclidean;
      else if (v == "entropy") s.mirror = MirrorKind::entropy;
      else throw ValidationError("unknown map '" + v + "'");
    }
    if (j.contains("loss")) {
      auto v = j.at("loss").get<std::string>();
      if (v == "smoothed_hinge") s.loss = LossKind::smoothed_hinge;
      else if (v == "squared") s.loss = LossKind::squared;
      else throw ValidationError("unknown loss '" + v + "'");
    }
    if (j.contains("fractions")) {
      auto f = j.at("fractions").get<std::vector<double>>();
      if (f.size() != 3) throw ValidationError("fractions needs three entries");
      s.fractions = {f[0], f[1], f[2]};
    }
    if (j.contains("l_star")) s.L_star = j.at("l_star").get<double>();
    if (j.contains("w_star_norm")) s.w_star_norm = j.at("w_star_norm").get<double>();
    if (j.contains("comparator")) s.comparator_path = j.at("comparator").get<std::string>();
    s.reference_budget = j.value("reference_budget", s.reference_budget);
    s.output_path = j.value("out", s.output_path);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config field: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Data and comparator

CensorOutcome censor_with_reference(const Dataset& data, std::size_t budget, std::size_t workers) {
  if (data.empty()) throw ValidationError("cannot censor an empty dataset");
  const LossModel model = LossModel::for_dataset(LossKind::smoothed_hinge, data);
  DenseVector w = fit_reference_predictor(model, data, budget, workers);
  Dataset kept = censor(data, w);
  CensorSummary s;
  s.input_examples = data.size();
  s.kept_examples = kept.size();
  s.removed_fraction = static_cast<double>(data.size() - kept.size()) / static_cast<double>(data.size());
  s.predictor_norm = norm(w);
  s.post_censor_loss = mean_loss(model, w, kept.examples());
  s.budget = budget;
  s.trainer = "full-batch ag, gamma=1/(4H), p=1, no projection";
  return {std::move(kept), std::move(w), s};
}

LoadedData load_data(const DataSource& source, LossKind loss, std::size_t reference_budget,
                     std::size_t workers) {
  (void)loss;
  LoadedData out;
  if (source.path) {
    out.dataset = read_libsvm_file(*source.path);
  } else if (source.synthesize) {
    auto syn = synthesize(*source.synthesize, source.synth_seed);
    out.dataset = std::move(syn.dataset);
    out.planted_w = std::move(syn.planted_w);
  } else {
    throw ValidationError("no data source given");
  }
  if (source.censor) {
    auto c = censor_with_reference(out.dataset, reference_budget, workers);
    if (c.summary.kept_examples < out.dataset.size()) {
      warn("censoring removed " + std::to_string(out.dataset.size() - c.summary.kept_examples) +
           " of " + std::to_string(out.dataset.size()) + " examples");
    }
    out.dataset = std::move(c.censored);
    out.censor_predictor = std::move(c.predictor);
  }
  return out;
}

std::string predictor_to_json(const DenseVector& w, const std::string& trainer, std::size_t budget) {
  json j;
  j["dimension"] = w.size();
  j["weights"] = w.to_vector();
  j["trainer"] = trainer;
  j["budget"] = budget;
  return j.dump(2) + "\n";
}

DenseVector predictor_from_json(const std::string& text) {
  try {
    auto j = json::parse(text);
    auto v = j.at("weights").get<std::vector<double>>();
    return DenseVector(std::move(v));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad predictor JSON: ") + e.what());
  }
}

namespace {

DenseVector fit_to_dimension(const DenseVector& w, std::size_t d) {
  std::vector<double> v(d, 0.0);
  for (std::size_t j = 0; j < std::min(d, w.size()); ++j) v[j] = w[j];
  return DenseVector(std::move(v));
}

Comparator resolve_comparator(const ExperimentSpec& spec, const LoadedData& data, const LossModel& model,
                              std::vector<std::string>& warnings) {
  Comparator c;
  std::optional<DenseVector> w;
  if (spec.comparator_path) {
    w = fit_to_dimension(predictor_from_json(read_text(*spec.comparator_path)), data.dataset.dimension());
    c.source = "predictor-file";
  } else if (data.censor_predictor) {
    w = data.censor_predictor;
    c.source = "censor-predictor";
  } else if (data.planted_w) {
    w = data.planted_w;
    c.source = "planted";
  } else if (!(spec.L_star && spec.w_star_norm)) {
    w = fit_reference_predictor(model, data.dataset, spec.reference_budget, spec.workers);
    c.source = "reference-fit";
  }
  if (w) {
    c.w_star_norm_sq = std::pow(norm(*w), 2);
    c.L_star = mean_loss(model, *w, data.dataset.examples());
  }
  if (spec.w_star_norm) {
    c.w_star_norm_sq = *spec.w_star_norm * *spec.w_star_norm;
    c.source = "override";
  }
  if (spec.L_star) {
    c.L_star = *spec.L_star;
    c.source = "override";
  }
  if (c.w_star_norm_sq == 0.0) {
    warnings.emplace_back("comparator has zero norm; using ||w*|| = 1 for step sizes");
    c.w_star_norm_sq = 1.0;
  }
  return c;
}

struct Cell {
  AlgoKind algorithm;
  std::size_t b;
  std::optional<double> p;  // resolved p for accelerated cells
  std::string p_role;
  std::uint64_t seed;
};

struct Context {
  const ExperimentSpec& spec;
  const Dataset& dataset;
  LossModel model;
  Comparator comparator;
  std::size_t m;
};

ProblemParams params_for(const Context& ctx, AlgoKind a, std::size_t b) {
  ProblemParams p;
  p.H = ctx.model.smoothness();
  p.b = b;
  p.n = ctx.m / b;
  p.L_star = ctx.comparator.L_star;
  p.w_star_norm_sq = ctx.comparator.w_star_norm_sq;
  p.D = std::sqrt(ctx.comparator.w_star_norm_sq);
  p.K = 1.0;
  const bool mirror = a == AlgoKind::smd || a == AlgoKind::amd;
  if (mirror && ctx.spec.mirror == MirrorKind::entropy) {
    const double d = static_cast<double>(ctx.dataset.dimension());
    p.K = std::sqrt(2.0 * std::log(d));
    p.D = 1.0;
    p.R_star = std::log(d);
  }
  return p;
}

MirrorMap map_for(const Context& ctx, AlgoKind a, const ProblemParams& params) {
  const bool mirror = a == AlgoKind::smd || a == AlgoKind::amd;
  if (mirror && ctx.spec.mirror == MirrorKind::entropy) return MirrorMap::entropy(ctx.dataset.dimension());
  return MirrorMap::euclidean(ctx.dataset.dimension(), params.D);
}

Schedule theoretical_schedule(AlgoKind a, const ProblemParams& params, std::optional<double> p) {
  switch (a) {
    case AlgoKind::sgd: return Schedule::sgd(sgd_eta(params));
    case AlgoKind::smd: return Schedule::smd(smd_eta(params));
    case AlgoKind::ag: {
      const double gamma = params.n >= 2 ? ag_gamma(params, *p) : 1.0 / (4.0 * params.H);
      return Schedule::ag(gamma, *p);
    }
    case AlgoKind::amd: {
      const double gamma = params.n >= 2 ? ag_gamma(params, *p) : 1.0 / (4.0 * params.H);
      return Schedule::amd(gamma, *p);
    }
  }
  throw ValidationError("unknown algorithm");
}

RunResult run_algo(AlgoKind a, const LossModel& model, const MirrorMap& map, const Schedule& s,
                   std::span<const Example> sample, const RunConfig& cfg,
                   std::span<const Example> holdout = {}) {
  switch (a) {
    case AlgoKind::sgd: return run_sgd(model, map, s, sample, cfg, holdout);
    case AlgoKind::ag: return run_ag(model, map, s, sample, cfg, holdout);
    case AlgoKind::smd: return run_smd(model, map, s, sample, cfg, holdout);
    case AlgoKind::amd: return run_amd(model, map, s, sample, cfg, holdout);
  }
  throw ValidationError("unknown algorithm");
}

ResultRow run_cell(const Context& ctx, const Cell& cell, std::vector<TraceRecord>& traces) {
  const auto start = std::chrono::steady_clock::now();
  const auto parts = split(ctx.dataset, ctx.spec.fractions, cell.seed);
  const Dataset train = parts.train.head(ctx.m);
  const ProblemParams params = params_for(ctx, cell.algorithm, cell.b);
  const MirrorMap map = map_for(ctx, cell.algorithm, params);

  RunConfig cfg;
  cfg.batch_size = cell.b;
  cfg.iterations = params.n;
  cfg.seed = cell.seed;
  cfg.projection_enabled = ctx.spec.projection;
  cfg.deterministic_reduction = ctx.spec.deterministic;
  cfg.workers = ctx.spec.workers;
  cfg.trace_every = ctx.spec.trace_every > 0 ? ctx.spec.trace_every : params.n + 1;

  Schedule schedule = theoretical_schedule(cell.algorithm, params, cell.p);
  double multiplier = 1.0;
  if (ctx.spec.step_mode == StepMode::grid) {
    RunConfig quiet = cfg;
    quiet.trace_every = params.n + 1;
    auto evaluate = [&](const Schedule& candidate) {
      try {
        auto r = run_algo(cell.algorithm, ctx.model, map, candidate, train.examples(), quiet);
        return mean_loss(ctx.model, r.w, parts.validation.examples());
      } catch (const DivergenceError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    auto sel = grid_select(schedule, ctx.spec.grid, evaluate);
    schedule = sel.schedule;
    multiplier = sel.multiplier;
  }

  auto result = run_algo(cell.algorithm, ctx.model, map, schedule, train.examples(), cfg,
                         ctx.spec.trace_every > 0 ? parts.test.examples() : std::span<const Example>{});
  ResultRow row;
  row.algorithm = cell.algorithm;
  row.b = cell.b;
  row.n = params.n;
  row.p = cell.p;
  row.p_role = cell.p_role;
  row.seed = cell.seed;
  row.step_size = schedule.magnitude();
  row.grid_multiplier = multiplier;
  row.final_train_loss = mean_loss(ctx.model, result.w, train.examples());
  row.test_loss = mean_loss(ctx.model, result.w, parts.test.examples());
  row.test_misclassification = misclassification_rate(result.w, parts.test.examples());
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (ctx.spec.trace_every > 0) {
    for (const auto& t : result.trace.rows) {
      traces.push_back({cell.algorithm, cell.b, cell.p_role, cell.p, cell.seed, t.iteration,
                        t.train_batch_loss, t.holdout_loss, t.iterate_norm});
    }
  }
  return row;
}

std::size_t lcm_all(const std::vector<std::size_t>& v) {
  std::size_t l = 1;
  for (auto b : v) l = std::lcm(l, b);
  return l;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const LoadedData& data) {
  spec.validate();
  ExperimentResult res;
  std::vector<std::string>& warnings = res.warnings;
  auto sink = set_warning_sink([&warnings](std::string_view msg) { warnings.emplace_back(msg); });
  struct Restore {
    WarningSink s;
    ~Restore() { set_warning_sink(std::move(s)); }
  } restore{sink};

  const Dataset& ds = data.dataset;
  if (ds.empty()) throw ValidationError("dataset is empty");
  LossModel model = LossModel::for_dataset(spec.loss, ds);
  res.H = model.smoothness();
  res.comparator = resolve_comparator(spec, data, model, warnings);

  const std::size_t train_size =
      static_cast<std::size_t>(std::floor(spec.fractions.train * static_cast<double>(ds.size()) + 1e-9));
  std::size_t m = 0;
  if (spec.fixed_m) {
    m = *spec.fixed_m;
    if (m > train_size) {
      throw ValidationError("m = " + std::to_string(m) + " exceeds the training split (" +
                            std::to_string(train_size) + " examples)");
    }
  } else {
    const std::size_t l = lcm_all(spec.batch_sizes);
    m = (train_size / l) * l;
    if (m == 0) {
      throw ValidationError("training split of " + std::to_string(train_size) +
                            " examples is smaller than the batch size");
    }
  }
  if (m < train_size) {
    warnings.push_back("using the first " + std::to_string(m) + " of " + std::to_string(train_size) +
                       " training examples; the rest are dropped");
  }
  res.m = m;
  Context ctx{spec, ds, model, res.comparator, m};

  std::vector<Cell> cells;
  for (AlgoKind a : spec.algorithms) {
    for (std::size_t b : spec.batch_sizes) {
      const std::size_t n = m / b;
      std::vector<std::pair<std::optional<double>, std::string>> ps;
      if (!is_accelerated(a)) {
        ps.push_back({std::nullopt, "none"});
      } else if (spec.sweep == SweepKind::p_values) {
        for (double p : spec.p_values) ps.push_back({p, "swept"});
        ps.push_back({ag_p_log_ratio(b, n), "log_ratio"});
        if (n >= 3) ps.push_back({ag_p(b, n), "theory"});
      } else if (!spec.p_values.empty()) {
        ps.push_back({spec.p_values.front(), "fixed"});
      } else if (spec.sweep == SweepKind::batch_sizes) {
        ps.push_back({ag_p_log_ratio(b, n), "log_ratio"});
      } else if (n >= 3) {
        ps.push_back({ag_p(b, n), "theory"});
      } else {
        ps.push_back({ag_p_log_ratio(b, n), "log_ratio"});
      }
      if (is_accelerated(a) && n < 783) {
        warnings.push_back(std::string(to_string(a)) + " b=" + std::to_string(b) + ": n = " +
                           std::to_string(n) + " < 783, the accelerated guarantee does not apply");
      }
      for (const auto& [p, role] : ps) {
        for (auto seed : spec.seeds) cells.push_back({a, b, p, role, seed});
      }
    }
  }

  for (const auto& cell : cells) res.rows.push_back(run_cell(ctx, cell, res.traces));
  res.summary = summarize(res.rows);
  return res;
}

namespace {

ExperimentResult run_and_write(const ExperimentSpec& spec) {
  spec.validate();
  auto data = load_data(spec.data, spec.loss, spec.reference_budget, spec.workers);
  auto res = run_experiment(spec, data);
  if (!spec.output_path.empty()) write_experiment_outputs(spec, res);
  return res;
}

}  // namespace

ExperimentResult cmd_train(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.sweep = SweepKind::none;
  return run_and_write(s);
}

ExperimentResult cmd_sweep_b(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.sweep = SweepKind::batch_sizes;
  return run_and_write(s);
}

ExperimentResult cmd_sweep_p(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.sweep = SweepKind::p_values;
  return run_and_write(s);
}

std::vector<SummaryRow> summarize(const ResultTable& rows) {
  std::vector<SummaryRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
      return s.algorithm == r.algorithm && s.b == r.b && s.p_role == r.p_role && s.p == r.p;
    });
    if (it == out.end()) {
      out.push_back({r.algorithm, r.b, r.n, r.p, r.p_role, 0, 0.0, 0.0, 0.0});
      it = std::prev(out.end());
    }
    ++it->runs;
    it->mean_final_train_loss += r.final_train_loss;
    it->mean_test_loss += r.test_loss;
    it->mean_test_misclassification += r.test_misclassification;
  }
  for (auto& s : out) {
    const double k = static_cast<double>(s.runs);
    s.mean_final_train_loss /= k;
    s.mean_test_loss /= k;
    s.mean_test_misclassification /= k;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void write_results_csv(const ResultTable& rows, std::ostream& out) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << ',' << r.b << ',' << r.n << ',' << fmt_opt(r.p) << ',' << r.p_role
        << ',' << r.seed << ',' << fmt(r.step_size) << ',' << fmt(r.grid_multiplier) << ','
        << fmt(r.final_train_loss) << ',' << fmt(r.test_loss) << ',' << fmt(r.test_misclassification)
        << '\n';
  }
}

std::string results_csv_string(const ResultTable& rows) {
  std::ostringstream ss;
  write_results_csv(rows, ss);
  return ss.str();
}

ResultTable read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("results CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw ParseError(1, "unexpected results header");
  ResultTable rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto c = split_csv_line(line);
    if (c.size() != 11) throw ParseError(lineno, "expected 11 columns, got " + std::to_string(c.size()));
    ResultRow r;
    try {
      r.algorithm = parse_algo(c[0]);
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
    r.b = parse_u64_cell(c[1], lineno);
    r.n = parse_u64_cell(c[2], lineno);
    if (!c[3].empty()) r.p = parse_double_cell(c[3], lineno);
    r.p_role = c[4];
    r.seed = parse_u64_cell(c[5], lineno);
    r.step_size = parse_double_cell(c[6], lineno);
    r.grid_multiplier = parse_double_cell(c[7], lineno);
    r.final_train_loss = parse_double_cell(c[8], lineno);
    r.test_loss = parse_double_cell(c[9], lineno);
    r.test_misclassification = parse_double_cell(c[10], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "algorithm,b,n,p,p_role,runs,mean_final_train_loss,mean_test_loss,mean_test_misclassification\n";
  for (const auto& s : rows) {
    out << to_string(s.algorithm) << ',' << s.b << ',' << s.n << ',' << fmt_opt(s.p) << ',' << s.p_role
        << ',' << s.runs << ',' << fmt(s.mean_final_train_loss) << ',' << fmt(s.mean_test_loss) << ','
        << fmt(s.mean_test_misclassification) << '\n';
  }
}

void write_timing_csv(const ResultTable& rows, std::ostream& out) {
  out << "algorithm,b,p,p_role,seed,wall_seconds\n";
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << ',' << r.b << ',' << fmt_opt(r.p) << ',' << r.p_role << ',' << r.seed
        << ',' << fmt(r.wall_seconds) << '\n';
  }
}

void write_trace_csv(const std::vector<TraceRecord>& rows, std::ostream& out) {
  out << "algorithm,b,p,p_role,seed,iteration,train_batch_loss,holdout_loss,iterate_norm\n";
  for (const auto& t : rows) {
    out << to_string(t.algorithm) << ',' << t.b << ',' << fmt_opt(t.p) << ',' << t.p_role << ',' << t.seed
        << ',' << t.iteration << ',' << fmt(t.train_batch_loss) << ',' << fmt_opt(t.holdout_loss) << ','
        << fmt(t.iterate_norm) << '\n';
  }
}

std::string sibling_path(const std::string& path, const std::string& tag, const std::string& ext) {
  std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / (p.stem().string() + "." + tag + ext);
  return out.string();
}

void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& res) {
  const std::string& path = spec.output_path;
  if (path.empty()) throw ValidationError("no output path");
  {
    auto out = open_out(path);
    write_results_csv(res.rows, out);
  }
  {
    auto out = open_out(sibling_path(path, "summary", ".csv"));
    write_summary_csv(res.summary, out);
  }
  {
    auto out = open_out(sibling_path(path, "timing", ".csv"));
    write_timing_csv(res.rows, out);
  }
  if (!res.traces.empty()) {
    auto out = open_out(sibling_path(path, "trace", ".csv"));
    write_trace_csv(res.traces, out);
  }
  {
    auto out = open_out(sibling_path(path, "config", ".json"));
    json j = json::parse(spec_to_json(spec));
    j["resolved"] = {{"H", res.H},
                     {"m", res.m},
                     {"w_star_norm_sq", res.comparator.w_star_norm_sq},
                     {"L_star", res.comparator.L_star},
                     {"comparator_source", res.comparator.source}};
    j["warnings"] = res.warnings;
    out << j.dump(2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// censor / convert

CensorSummary cmd_censor(const std::string& input_path, const std::string& output_path, std::size_t budget,
                         std::size_t workers) {
  if (budget == 0) throw ValidationError("budget must be positive");
  Dataset data = read_libsvm_file(input_path);
  auto outcome = censor_with_reference(data, budget, workers);
  write_libsvm_file(outcome.censored, output_path);
  auto out = open_out(sibling_path(output_path, "predictor", ".json"));
  out << predictor_to_json(outcome.predictor, outcome.summary.trainer, budget);
  return outcome.summary;
}

std::size_t cmd_convert(const std::string& input_path, const std::string& output_path) {
  Dataset data = read_libsvm_file(input_path);
  write_libsvm_file(data, output_path);
  return data.size();
}

// ---------------------------------------------------------------------------
// bounds

BoundsOutput cmd_bounds(const BoundsRequest& req) {
  req.params.validate();
  if (!(req.epsilon > 0.0) || !std::isfinite(req.epsilon)) throw ValidationError("epsilon must be positive");
  BoundsOutput o;
  o.bounds = evaluate_bounds(req.params);
  o.m = static_cast<double>(req.params.n) * static_cast<double>(req.params.b);
  o.epsilon = req.epsilon;
  const double b = static_cast<double>(req.params.b);
  o.sgd_regime = classify_regime(Algorithm::sgd, b, o.m, req.params.L_star, req.epsilon);
  o.ag_regime = classify_regime(Algorithm::ag, b, o.m, req.params.L_star, req.epsilon);
  o.max_serial_b = max_serial_batch(req.params.L_star, req.epsilon);

  std::ostringstream t;
  const auto& B = o.bounds;
  t << "bounds (H=" << fmt(req.params.H) << ", b=" << req.params.b << ", n=" << req.params.n
    << ", L*=" << fmt(req.params.L_star) << ", ||w*||^2=" << fmt(req.params.w_star_norm_sq)
    << ", D=" << fmt(req.params.D) << ", K=" << fmt(req.params.K) << ")\n";
  t << "  sgd  " << fmt(B.sgd_bound) << "\n";
  t << "  ag   " << fmt(B.ag_bound) << " (D form " << fmt(B.ag_bound_d_form) << ")\n";
  t << "  smd  " << fmt(B.smd_bound) << "\n";
  t << "  amd  " << fmt(B.amd_bound) << "\n";
  for (const auto& w : B.warnings) t << "warning: " << w << "\n";
  for (const auto* r : {&o.sgd_regime, &o.ag_regime}) {
    t << "regime " << to_string(r->algorithm) << ": n ~ " << r->regime_label << " when " << r->condition
      << " (n ~ " << fmt(r->predicted_n) << ")\n";
    for (const auto& note : r->notes) t << "  " << note << "\n";
  }
  t << "serial max b: sgd " << fmt(o.max_serial_b.first) << ", ag " << fmt(o.max_serial_b.second) << "\n";
  o.text = t.str();

  auto regime_json = [](const RegimeReport& r) {
    json j;
    j["algorithm"] = to_string(r.algorithm);
    j["regime"] = r.regime_label;
    j["condition"] = r.condition;
    j["predicted_n"] = r.predicted_n;
    j["max_serial_b"] = r.max_serial_b;
    j["notes"] = r.notes;
    return j;
  };
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["params"] = {{"H", req.params.H},       {"b", req.params.b},
                 {"n", req.params.n},       {"m", o.m},
                 {"L_star", req.params.L_star}, {"w_star_norm_sq", req.params.w_star_norm_sq},
                 {"R_star", req.params.r_star()}, {"D", req.params.D},
                 {"K", req.params.K},       {"epsilon", req.epsilon}};
  j["bounds"] = {{"sgd", num(B.sgd_bound)},
                 {"ag", num(B.ag_bound)},
                 {"ag_d_form", num(B.ag_bound_d_form)},
                 {"smd", num(B.smd_bound)},
                 {"amd", num(B.amd_bound)}};
  j["preconditions"] = {{"sgd", B.sgd_preconditions_met},
                        {"ag", B.ag_preconditions_met},
                        {"smd", B.smd_preconditions_met},
                        {"amd", B.amd_preconditions_met}};
  j["warnings"] = B.warnings;
  j["regimes"] = {regime_json(o.sgd_regime), regime_json(o.ag_regime)};
  j["max_serial_b"] = {{"sgd", num(o.max_serial_b.first)}, {"ag", num(o.max_serial_b.second)}};
  o.json = j.dump(2) + "\n";
  return o;
}

// ---------------------------------------------------------------------------
// verify

LemmaEstimate estimate_variance_lemma(const std::string& distribution, std::size_t b, std::size_t dimension,
                                      std::size_t trials, std::uint64_t seed) {
  if (b == 0 || dimension == 0 || trials < 2) throw ValidationError("lemma estimate needs b, d >= 1 and trials >= 2");
  const bool rademacher = distribution == "rademacher";
  if (!rademacher && distribution != "gaussian") throw ValidationError("unknown distribution '" + distribution + "'");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&]() {
    if (rademacher) return (rng() >> 63) ? 1.0 : -1.0;
    return normal(rng);
  };
  std::vector<double> sum(dimension);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t k = 0; k < b; ++k) {
      for (auto& s : sum) s += draw();
    }
    double sq = 0.0;
    for (double s : sum) sq += s * s;
    sq /= static_cast<double>(b) * static_cast<double>(b);
    const double delta = sq - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (sq - mean);
  }
  LemmaEstimate e;
  e.distribution = distribution;
  e.b = b;
  e.dimension = dimension;
  e.trials = trials;
  e.mean_sq_norm = mean;
  e.standard_error = std::sqrt(m2 / static_cast<double>(trials - 1) / static_cast<double>(trials));
  // Both laws have E x_j^2 = 1, so sum_t E||x_t||^2 = b d.
  e.bound = static_cast<double>(dimension) / static_cast<double>(b);
  const double slack = 3.0 * e.standard_error + 1e-12 * e.bound;
  e.within_3se = std::abs(e.mean_sq_norm - e.bound) <= slack;
  e.not_above_bound = e.mean_sq_norm <= e.bound + slack;
  return e;
}

double self_bound_sweep(LossKind kind, std::size_t draws, std::uint64_t seed) {
  constexpr std::size_t d = 12;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Example> zs;
  std::vector<DenseVector> ws;
  zs.reserve(draws);
  ws.reserve(draws);
  for (std::size_t t = 0; t < draws; ++t) {
    const double scale = std::exp(4.0 * unit(rng) - 2.0);
    std::vector<SparseEntry> entries;
    for (std::uint32_t j = 1; j <= d; ++j) {
      if (unit(rng) < 0.5) {
        double v = scale * normal(rng);
        if (v != 0.0) entries.push_back({j, v});
      }
    }
    if (entries.empty()) entries.push_back({1, scale});
    const int y = (rng() >> 63) ? 1 : -1;
    zs.emplace_back(SparseVector(std::move(entries), d), y);
    std::vector<double> w(d);
    const double wscale = std::exp(4.0 * unit(rng) - 3.0);
    for (auto& v : w) v = wscale * normal(rng);
    ws.emplace_back(std::move(w));
  }
  Dataset data(zs, d);
  const LossModel model(kind, estimate_H(kind, data));
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < draws; ++t) worst = std::min(worst, self_bound_residual(model, ws[t], zs[t]));
  return worst;
}

VerifyReport cmd_verify(std::size_t trials, std::uint64_t seed) {
  if (trials < 1000) throw ValidationError("verify needs at least 1000 trials");
  VerifyReport rep;
  auto add = [&rep](std::string name, bool ok, std::string detail) {
    rep.all_passed = rep.all_passed && ok;
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  std::uint64_t stream = seed;
  for (const char* dist : {"rademacher", "gaussian"}) {
    for (std::size_t b : {1u, 2u, 4u, 16u}) {
      auto e = estimate_variance_lemma(dist, b, 8, trials, stream++);
      std::ostringstream d;
      d << "E||mean||^2 ~ " << fmt(e.mean_sq_norm) << " +- " << fmt(e.standard_error) << ", bound "
        << fmt(e.bound) << ", gap " << fmt(e.mean_sq_norm - e.bound);
      add(std::string("lemma ") + dist + " b=" + std::to_string(b), e.within_3se && e.not_above_bound, d.str());
      rep.lemma.push_back(e);
    }
  }

  const std::size_t draws = std::max<std::size_t>(trials, 10000);
  rep.self_bound_min_residual_hinge = self_bound_sweep(LossKind::smoothed_hinge, draws, seed + 101);
  rep.self_bound_min_residual_squared = self_bound_sweep(LossKind::squared, draws, seed + 202);
  add("self-bound smoothed_hinge", rep.self_bound_min_residual_hinge >= -1e-12,
      "min residual " + fmt(rep.self_bound_min_residual_hinge));
  add("self-bound squared", rep.self_bound_min_residual_squared >= -1e-12,
      "min residual " + fmt(rep.self_bound_min_residual_squared));

  std::size_t schedules = 0;
  double worst_growth = 0.0, worst_smooth = 0.0;
  std::string first_failure;
  for (std::size_t n : {3u, 10u, 100u, 1000u, 10000u}) {
    for (std::size_t b : {1u, 8u, 64u, 1024u}) {
      for (double L : {0.0, 0.1, 1.0}) {
        ProblemParams p;
        p.H = 1.0;
        p.b = b;
        p.n = n;
        p.L_star = L;
        p.w_star_norm_sq = 1.0;
        p.D = 1.0;
        const double pe = ag_p(b, n);
        Schedule s = Schedule::ag(ag_gamma(p, pe), pe);
        auto r = validate_admissibility(s, p.H, n);
        ++schedules;
        worst_growth = std::max(worst_growth, r.worst_growth_ratio);
        worst_smooth = std::max(worst_smooth, r.worst_smoothness_ratio);
        if (!r.passed && first_failure.empty()) {
          first_failure = "n=" + std::to_string(n) + " b=" + std::to_string(b) + ": " + r.describe();
        }
      }
    }
  }
  add("admissibility sweep", first_failure.empty(),
      std::to_string(schedules) + " schedules, worst growth ratio " + fmt(worst_growth) +
          ", worst smoothness ratio " + fmt(worst_smooth) + (first_failure.empty() ? "" : "; " + first_failure));

  std::ostringstream t;
  for (const auto& c : rep.checks) t << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  t << (rep.all_passed ? "all checks passed" : "some checks failed") << "\n";
  rep.text = t.str();

  json j;
  j["trials"] = trials;
  j["seed"] = seed;
  j["passed"] = rep.all_passed;
  json checks = json::array();
  for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  json lemma = json::array();
  for (const auto& e : rep.lemma) {
    lemma.push_back({{"distribution", e.distribution},
                     {"b", e.b},
                     {"dimension", e.dimension},
                     {"mean_sq_norm", e.mean_sq_norm},
                     {"standard_error", e.standard_error},
                     {"bound", e.bound}});
  }
  j["lemma"] = lemma;
  j["self_bound_min_residual"] = {{"smoothed_hinge", rep.self_bound_min_residual_hinge},
                                  {"squared", rep.self_bound_min_residual_squared}};
  rep.json = j.dump(2) + "\n";
  return rep;
}

}  // namespace mbaccel
