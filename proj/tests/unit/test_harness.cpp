#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mbaccel/errors.hpp"
#include "mbaccel/harness.hpp"

using namespace mbaccel;
namespace fs = std::filesystem;

namespace {

ExperimentSpec synthetic_spec(std::size_t m = 1024) {
  ExperimentSpec s;
  s.data.synthesize = SynthesisSpec{m, 20, 1.5, 0.0};
  s.deterministic = true;
  return s;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mbaccel_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("train: SGD with the theoretical step on separable data") {
  auto r = cmd_train(synthetic_spec());
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].algorithm == AlgoKind::sgd);
  CHECK(r.rows[0].b == 1);
  CHECK(r.rows[0].n == 512);
  CHECK(r.rows[0].final_train_loss < 0.1);
  CHECK(r.comparator.source == "planted");
  CHECK(r.comparator.L_star == 0.0);
}

TEST_CASE("train: identical bytes on rerun") {
  auto dir = scratch_dir("rerun");
  auto s = synthetic_spec();
  s.algorithms = {AlgoKind::sgd, AlgoKind::ag};
  s.batch_sizes = {4};
  s.seeds = {1, 2};
  s.output_path = (dir / "a.csv").string();
  cmd_train(s);
  s.output_path = (dir / "b.csv").string();
  cmd_train(s);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.summary.csv") == slurp(dir / "b.summary.csv"));
  CHECK(fs::exists(dir / "a.timing.csv"));
  CHECK(fs::exists(dir / "a.config.json"));
  CHECK_FALSE(fs::exists(dir / "a.trace.csv"));
  auto cfg = nlohmann::json::parse(slurp(dir / "a.config.json"));
  CHECK(cfg["resolved"]["m"] == 512);
}

TEST_CASE("spec validation") {
  auto s = synthetic_spec();
  s.fixed_m = 100;
  s.batch_sizes = {3};
  CHECK_THROWS_AS(cmd_train(s), ValidationError);
  s = synthetic_spec();
  s.seeds.clear();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = synthetic_spec();
  s.batch_sizes = {1, 2};
  CHECK_THROWS_AS(cmd_train(s), ValidationError);
  s = synthetic_spec();
  s.p_values = {1.5};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = synthetic_spec();
  s.fixed_m = 4096;
  CHECK_THROWS_AS(cmd_train(s), ValidationError);
  s = synthetic_spec();
  s.data.path = "x.svm";
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = synthetic_spec();
  s.algorithms = {AlgoKind::sgd};
  CHECK_THROWS_AS(cmd_sweep_p(s), ValidationError);
  CHECK_THROWS_AS(parse_algo("adam"), ValidationError);
}

TEST_CASE("sweep-b: single b matches train; summary is the seed mean") {
  auto s = synthetic_spec();
  s.seeds = {1, 2, 3};
  auto t = cmd_train(s);
  auto b = cmd_sweep_b(s);
  CHECK(results_csv_string(t.rows) == results_csv_string(b.rows));

  s.algorithms = {AlgoKind::sgd, AlgoKind::ag};
  s.batch_sizes = {1, 4, 16};
  s.fixed_m = 256;
  auto sweep = cmd_sweep_b(s);
  CHECK(sweep.rows.size() == 2 * 3 * 3);
  REQUIRE(sweep.summary.size() == 6);
  for (const auto& sum : sweep.summary) {
    double acc = 0.0;
    std::size_t k = 0;
    for (const auto& r : sweep.rows) {
      if (r.algorithm == sum.algorithm && r.b == sum.b) {
        acc += r.test_loss;
        ++k;
      }
    }
    CHECK(k == 3);
    CHECK(sum.runs == 3);
    CHECK(sum.mean_test_loss == doctest::Approx(acc / 3.0).epsilon(1e-15));
    if (sum.algorithm == AlgoKind::ag) {
      CHECK(sum.p_role == "log_ratio");
      CHECK(*sum.p == doctest::Approx(ag_p_log_ratio(sum.b, 256 / sum.b)));
    }
  }
}

TEST_CASE("sweep-b: worker count does not change the CSV") {
  auto s = synthetic_spec(2048);
  s.algorithms = {AlgoKind::sgd, AlgoKind::ag};
  s.batch_sizes = {1, 16, 64};
  s.fixed_m = 1024;
  s.seeds = {5, 6};
  s.step_mode = StepMode::grid;
  s.grid = {0.5, 1, 2};
  const auto one = results_csv_string(cmd_sweep_b(s).rows);
  s.workers = 8;
  CHECK(results_csv_string(cmd_sweep_b(s).rows) == one);
}

TEST_CASE("sweep-p: swept values plus flagged theoretical exponents") {
  auto s = synthetic_spec(2048);
  s.algorithms = {AlgoKind::ag};
  s.batch_sizes = {4, 16};
  s.fixed_m = 1024;
  s.p_values = {0, 0.25, 0.5, 0.75, 1};
  s.seeds = {1, 2};
  auto r = cmd_sweep_p(s);
  std::size_t swept = 0, log_ratio = 0, theory = 0;
  for (const auto& row : r.summary) {
    if (row.p_role == "swept") ++swept;
    if (row.p_role == "log_ratio") {
      ++log_ratio;
      CHECK(*row.p == doctest::Approx(ag_p_log_ratio(row.b, row.n)));
    }
    if (row.p_role == "theory") {
      ++theory;
      CHECK(*row.p == doctest::Approx(ag_p(row.b, row.n)));
    }
    CHECK(row.runs == 2);
  }
  CHECK(swept == 10);
  CHECK(log_ratio == 2);
  CHECK(theory == 2);
  for (const auto& row : r.rows) {
    if (row.p_role == "swept" && *row.p == 0.0) {
      const auto sched = Schedule::ag(row.step_size, 0.0);
      for (std::size_t i = 1; i <= row.n; ++i) CHECK(sequences(sched, i).gamma_i == row.step_size);
    }
  }
}

TEST_CASE("trace output") {
  auto dir = scratch_dir("trace");
  auto s = synthetic_spec();
  s.algorithms = {AlgoKind::ag};
  s.trace_every = 100;
  s.output_path = (dir / "t.csv").string();
  auto r = cmd_train(s);
  CHECK(r.traces.size() == 6);  // 100..500 and 512
  CHECK(r.traces.front().holdout_loss.has_value());
  CHECK(fs::exists(dir / "t.trace.csv"));
}

TEST_CASE("results CSV round trip and schema") {
  auto s = synthetic_spec();
  s.algorithms = {AlgoKind::sgd, AlgoKind::amd};
  s.seeds = {3, 4};
  auto r = cmd_train(s);
  const std::string text = results_csv_string(r.rows);
  std::istringstream in(text);
  auto back = read_results_csv(in);
  REQUIRE(back.size() == r.rows.size());
  CHECK(results_csv_string(back) == text);
  CHECK(text.substr(0, text.find('\n')) ==
        "algorithm,b,n,p,p_role,seed,step_size,grid_multiplier,final_train_loss,test_loss,test_misclassification");
  std::istringstream bad_header("algo,b\n");
  CHECK_THROWS_AS(read_results_csv(bad_header), ParseError);
  std::istringstream bad_row(text.substr(0, text.find('\n') + 1) + "sgd,1,2\n");
  try {
    read_results_csv(bad_row);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("spec JSON round trip") {
  auto s = synthetic_spec();
  s.algorithms = {AlgoKind::ag, AlgoKind::smd};
  s.batch_sizes = {8};
  s.fixed_m = 256;
  s.seeds = {1, 99};
  s.step_mode = StepMode::grid;
  s.grid = {0.5, 2};
  s.mirror = MirrorKind::entropy;
  s.L_star = 0.25;
  s.output_path = "out.csv";
  const auto text = spec_to_json(s);
  CHECK(spec_to_json(spec_from_json(text)) == text);
  CHECK_THROWS_AS(spec_from_json("{"), ValidationError);
  CHECK_THROWS_AS(spec_from_json(R"({"algorithms": ["x"]})"), ValidationError);
  CHECK_THROWS_AS(spec_from_json(R"({"seeds": "no"})"), ValidationError);
}

TEST_CASE("entropy geometry runs through the harness") {
  auto s = synthetic_spec();
  s.algorithms = {AlgoKind::smd, AlgoKind::amd};
  s.mirror = MirrorKind::entropy;
  s.batch_sizes = {8};
  auto r = cmd_train(s);
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(std::isfinite(row.final_train_loss));
    CHECK(row.final_train_loss < 1.0);
  }
}

TEST_CASE("censor") {
  auto dir = scratch_dir("censor");
  auto noisy = synthesize({2000, 10, 1.0, 0.1}, 3);
  write_libsvm_file(noisy.dataset, (dir / "in.svm").string());
  auto summary = cmd_censor((dir / "in.svm").string(), (dir / "out.svm").string(), 1000);
  CHECK(summary.removed_fraction > 0.0);
  CHECK(summary.removed_fraction < 1.0);
  CHECK(summary.post_censor_loss == 0.0);
  auto out = read_libsvm_file((dir / "out.svm").string());
  CHECK(out.size() == summary.kept_examples);
  CHECK(write_libsvm_string(out) == slurp(dir / "out.svm"));
  auto w = predictor_from_json(slurp(dir / "out.predictor.json"));
  // Already censored by this predictor: nothing more to remove.
  CHECK(censor(out, w).size() == out.size());

  auto clean = synthesize({2000, 10, 1.5, 0.0}, 3);
  auto c = censor_with_reference(clean.dataset, 1000);
  CHECK(c.summary.removed_fraction < 0.05);
  CHECK(c.summary.post_censor_loss == 0.0);

  CHECK_THROWS_AS(cmd_censor((dir / "missing.svm").string(), (dir / "x.svm").string(), 10), ValidationError);
}

TEST_CASE("convert round trip") {
  auto dir = scratch_dir("convert");
  {
    std::ofstream f(dir / "raw.svm");
    f << "# comment\n1 1:0.50 4:-2e0\r\n0 2:1\n";
  }
  CHECK(cmd_convert((dir / "raw.svm").string(), (dir / "c.svm").string()) == 2);
  CHECK(slurp(dir / "c.svm") == "+1 1:0.5 4:-2\n-1 2:1\n");
}

TEST_CASE("bounds report") {
  BoundsRequest req;
  req.params.H = 1;
  req.params.b = 4;
  req.params.n = 100;
  req.params.L_star = 0;
  req.epsilon = 0.01;
  auto o = cmd_bounds(req);
  CHECK(o.text.find("no non-constant parallel speedup") != std::string::npos);
  CHECK(o.text.find("783") != std::string::npos);
  auto j = nlohmann::json::parse(o.json);
  CHECK(nlohmann::json::parse(j.dump()) == j);
  CHECK(j["bounds"]["sgd"].get<double>() == doctest::Approx(o.bounds.sgd_bound));
  CHECK(j["preconditions"]["ag"] == false);
  CHECK(j["params"]["m"] == 400.0);
  req.epsilon = 0.0;
  CHECK_THROWS_AS(cmd_bounds(req), ValidationError);
}

TEST_CASE("variance lemma estimates") {
  auto two = estimate_variance_lemma("rademacher", 2, 1, 100000, 7);
  CHECK(two.bound == 0.5);
  CHECK(std::abs(two.mean_sq_norm - 0.5) <= 3 * two.standard_error);
  CHECK(two.within_3se);
  auto one = estimate_variance_lemma("rademacher", 1, 8, 1000, 7);
  CHECK(one.mean_sq_norm == one.bound);
  CHECK(one.standard_error == 0.0);
  CHECK_THROWS_AS(estimate_variance_lemma("cauchy", 1, 1, 1000, 1), ValidationError);
}

TEST_CASE("verify") {
  auto r = cmd_verify(2000, 11);
  CHECK(r.all_passed);
  CHECK(r.lemma.size() == 8);
  CHECK(r.self_bound_min_residual_hinge >= -1e-12);
  CHECK(r.checks.size() == 11);
  auto j = nlohmann::json::parse(r.json);
  CHECK(j["passed"] == true);
  CHECK_THROWS_AS(cmd_verify(999, 1), ValidationError);
}

TEST_CASE("sibling paths") {
  CHECK(sibling_path("out/res.csv", "summary", ".csv") == "out/res.summary.csv");
  CHECK(sibling_path("res", "timing", ".csv") == "res.timing.csv");
}
