// Command-line front end: train, sweep-b, sweep-p, censor, bounds, verify, convert.
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbaccel/errors.hpp"
#include "mbaccel/harness.hpp"

namespace {

using namespace mbaccel;

struct ExperimentFlags {
  std::string config;
  std::string data;
  std::string synthesize;
  std::uint64_t data_seed = 1;
  bool censor = false;
  std::string algo = "sgd";
  std::vector<std::size_t> b;
  std::size_t m = 0;
  std::vector<double> p;
  std::vector<std::uint64_t> seeds;
  std::string step_mode = "theoretical";
  std::vector<double> grid;
  bool no_projection = false;
  bool deterministic = false;
  std::string out;
  std::size_t trace_every = 0;
  std::size_t workers = 1;
  std::string map = "euclidean";
  std::string loss = "smoothed_hinge";
  double l_star = -1.0;
  double w_star_norm = -1.0;
  std::string comparator;
  std::size_t budget = 1000;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment spec; explicit flags override it");
  cmd->add_option("--data", f.data, "LIBSVM input file");
  cmd->add_option("--synthesize", f.synthesize, "synthetic data: m,d,margin,noise");
  cmd->add_option("--data-seed", f.data_seed, "seed for --synthesize");
  cmd->add_flag("--censor", f.censor, "drop margin violations of a reference predictor first");
  cmd->add_option("--algo", f.algo, "comma list of sgd, ag, smd, amd");
  cmd->add_option("--b", f.b, "batch size(s)")->delimiter(',');
  cmd->add_option("--m", f.m, "training examples used (m = n b)");
  cmd->add_option("--p", f.p, "exponent(s) for ag/amd")->delimiter(',');
  cmd->add_option("--seeds", f.seeds, "split/shuffle seeds")->delimiter(',');
  cmd->add_option("--step-mode", f.step_mode, "theoretical or grid")
      ->check(CLI::IsMember({"theoretical", "grid"}));
  cmd->add_option("--grid", f.grid, "step multipliers for grid mode")->delimiter(',');
  cmd->add_flag("--no-projection", f.no_projection, "skip the projection step");
  cmd->add_flag("--deterministic", f.deterministic, "fixed-order gradient reduction");
  cmd->add_option("--out", f.out, "results CSV path");
  cmd->add_option("--trace-every", f.trace_every, "trace period in iterations (0: off)");
  cmd->add_option("--workers", f.workers, "gradient threads")->check(CLI::PositiveNumber);
  cmd->add_option("--map", f.map, "mirror map for smd/amd")->check(CLI::IsMember({"euclidean", "entropy"}));
  cmd->add_option("--loss", f.loss, "smoothed_hinge or squared")
      ->check(CLI::IsMember({"smoothed_hinge", "squared"}));
  cmd->add_option("--l-star", f.l_star, "override L(w*)");
  cmd->add_option("--w-star-norm", f.w_star_norm, "override ||w*||");
  cmd->add_option("--comparator", f.comparator, "predictor JSON used as w*");
  cmd->add_option("--reference-budget", f.budget, "iterations for the reference predictor");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

ExperimentSpec build_spec(const CLI::App* cmd, const ExperimentFlags& f) {
  ExperimentSpec s;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ValidationError("cannot read " + f.config);
    std::stringstream buf;
    buf << in.rdbuf();
    s = spec_from_json(buf.str());
  }
  auto given = [cmd](const char* name) { return cmd->count(name) > 0; };
  if (given("--data")) {
    s.data.path = f.data;
    s.data.synthesize.reset();
  }
  if (given("--synthesize")) {
    auto parts = split_commas(f.synthesize);
    if (parts.size() != 4) throw ValidationError("--synthesize expects m,d,margin,noise");
    try {
      SynthesisSpec y;
      y.m = std::stoull(parts[0]);
      y.dimension = std::stoull(parts[1]);
      y.margin = std::stod(parts[2]);
      y.label_noise = std::stod(parts[3]);
      s.data.synthesize = y;
    } catch (const std::exception&) {
      throw ValidationError("--synthesize expects m,d,margin,noise");
    }
    s.data.path.reset();
  }
  if (given("--data-seed")) s.data.synth_seed = f.data_seed;
  if (f.censor) s.data.censor = true;
  if (given("--algo")) {
    s.algorithms.clear();
    for (const auto& a : split_commas(f.algo)) s.algorithms.push_back(parse_algo(a));
  }
  if (given("--b")) s.batch_sizes = f.b;
  if (given("--m")) s.fixed_m = f.m;
  if (given("--p")) s.p_values = f.p;
  if (given("--seeds")) s.seeds = f.seeds;
  if (given("--step-mode")) s.step_mode = f.step_mode == "grid" ? StepMode::grid : StepMode::theoretical;
  if (given("--grid")) s.grid = f.grid;
  if (f.no_projection) s.projection = false;
  if (f.deterministic) s.deterministic = true;
  if (given("--out")) s.output_path = f.out;
  if (given("--trace-every")) s.trace_every = f.trace_every;
  if (given("--workers")) s.workers = f.workers;
  if (given("--map")) s.mirror = f.map == "entropy" ? MirrorKind::entropy : MirrorKind::euclidean;
  if (given("--loss")) s.loss = f.loss == "squared" ? LossKind::squared : LossKind::smoothed_hinge;
  if (given("--l-star")) s.L_star = f.l_star;
  if (given("--w-star-norm")) s.w_star_norm = f.w_star_norm;
  if (given("--comparator")) s.comparator_path = f.comparator;
  if (given("--reference-budget")) s.reference_budget = f.budget;
  return s;
}

void print_result(const ExperimentResult& r, const ExperimentSpec& spec) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (spec.output_path.empty()) {
    write_results_csv(r.rows, std::cout);
  } else {
    write_summary_csv(r.summary, std::cout);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mini-batch SGD / accelerated gradient experiments"};
  app.require_subcommand(1);

  ExperimentFlags train_f, sweep_b_f, sweep_p_f;
  auto* train = app.add_subcommand("train", "single configuration, one row per seed");
  add_experiment_flags(train, train_f);
  auto* sweep_b = app.add_subcommand("sweep-b", "vary b at fixed m");
  add_experiment_flags(sweep_b, sweep_b_f);
  auto* sweep_p = app.add_subcommand("sweep-p", "vary the ag/amd exponent p");
  add_experiment_flags(sweep_p, sweep_p_f);

  std::string censor_in, censor_out;
  std::size_t censor_budget = 1000, censor_workers = 1;
  auto* censor_cmd = app.add_subcommand("censor", "remove margin violations of a reference predictor");
  censor_cmd->add_option("input", censor_in, "LIBSVM input")->required();
  censor_cmd->add_option("--out", censor_out, "censored LIBSVM output")->required();
  censor_cmd->add_option("--budget", censor_budget, "reference training iterations");
  censor_cmd->add_option("--workers", censor_workers, "gradient threads")->check(CLI::PositiveNumber);

  BoundsRequest breq;
  double w_star_norm = 1.0;
  double r_star = -1.0;
  bool bounds_json = false;
  std::size_t bounds_m = 0;
  auto* bounds = app.add_subcommand("bounds", "evaluate the guarantees and runtime regimes");
  bounds->add_option("--H", breq.params.H, "smoothness");
  bounds->add_option("--b", breq.params.b, "batch size");
  bounds->add_option("--n", breq.params.n, "iterations");
  bounds->add_option("--m", bounds_m, "sample size; sets n = m / b");
  bounds->add_option("--l-star", breq.params.L_star, "L(w*)");
  bounds->add_option("--w-star-norm", w_star_norm, "||w*||");
  bounds->add_option("--r-star", r_star, "R(w*) (default ||w*||^2 / 2)");
  bounds->add_option("--D", breq.params.D, "domain radius");
  bounds->add_option("--K", breq.params.K, "mirror-map constant");
  bounds->add_option("--epsilon", breq.epsilon, "target suboptimality");
  bounds->add_flag("--json", bounds_json, "JSON output");

  std::size_t trials = 100000;
  std::uint64_t verify_seed = 1;
  bool verify_json = false;
  auto* verify = app.add_subcommand("verify", "Monte Carlo and sweep checks of the analysis");
  verify->add_option("--trials", trials, "Monte Carlo trials (>= 1000)");
  verify->add_option("--seed", verify_seed, "seed");
  verify->add_flag("--json", verify_json, "JSON output");

  std::string conv_in, conv_out;
  auto* convert = app.add_subcommand("convert", "rewrite a LIBSVM file canonically");
  convert->add_option("input", conv_in, "LIBSVM input")->required();
  convert->add_option("--out", conv_out, "LIBSVM output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      auto spec = build_spec(train, train_f);
      print_result(cmd_train(spec), spec);
    } else if (sweep_b->parsed()) {
      auto spec = build_spec(sweep_b, sweep_b_f);
      print_result(cmd_sweep_b(spec), spec);
    } else if (sweep_p->parsed()) {
      auto spec = build_spec(sweep_p, sweep_p_f);
      print_result(cmd_sweep_p(spec), spec);
    } else if (censor_cmd->parsed()) {
      auto s = cmd_censor(censor_in, censor_out, censor_budget, censor_workers);
      std::cout << "input " << s.input_examples << ", kept " << s.kept_examples << ", removed fraction "
                << s.removed_fraction << ", predictor norm " << s.predictor_norm << ", post-censor loss "
                << s.post_censor_loss << "\n";
    } else if (bounds->parsed()) {
      if (bounds_m > 0) {
        if (breq.params.b == 0 || bounds_m % breq.params.b != 0) {
          throw ValidationError("--m must be a positive multiple of --b");
        }
        breq.params.n = bounds_m / breq.params.b;
      }
      breq.params.w_star_norm_sq = w_star_norm * w_star_norm;
      if (bounds->count("--r-star")) breq.params.R_star = r_star;
      auto o = cmd_bounds(breq);
      std::cout << (bounds_json ? o.json : o.text);
    } else if (verify->parsed()) {
      auto r = cmd_verify(trials, verify_seed);
      std::cout << (verify_json ? r.json : r.text);
    } else if (convert->parsed()) {
      auto count = cmd_convert(conv_in, conv_out);
      std::cout << "wrote " << count << " examples\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
