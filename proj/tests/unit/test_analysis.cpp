#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mbaccel/analysis.hpp"
#include "mbaccel/errors.hpp"

using namespace mbaccel;

namespace {

// Frozen from tests/oracles/formula_oracle.py.
constexpr double kSgd_2_3_01_4_500 = 0.21136406460551018;
constexpr double kAg_2_3_01_4_500_D2 = 9.8947529155554101;
constexpr double kSmd_2_1_15_01_4_500 = 0.21136406460551018;
constexpr double kAmd_2_1_15_01_4_500_D2 = 9.8738603737984525;
// Largest AG/SGD bound ratio on the oracle grid with n >= 783 and D = ||w*||.
constexpr double kSuperiorityC = 200.0;

ProblemParams params(double H, double wsq, double L, std::size_t b, std::size_t n, double D) {
  ProblemParams p;
  p.H = H;
  p.w_star_norm_sq = wsq;
  p.L_star = L;
  p.b = b;
  p.n = n;
  p.D = D;
  return p;
}

bool has_note(const RegimeReport& r, const std::string& text) {
  return std::any_of(r.notes.begin(), r.notes.end(), [&](const std::string& n) { return n.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("bound values against the oracle") {
  CHECK(evaluate_bounds(params(1, 1, 0, 10, 100, 1)).sgd_bound == doctest::Approx(0.048).epsilon(1e-14));
  auto r = evaluate_bounds(params(2, 3, 0.1, 4, 500, 2));
  CHECK(r.sgd_bound == doctest::Approx(kSgd_2_3_01_4_500).epsilon(1e-13));
  CHECK(r.ag_bound == doctest::Approx(kAg_2_3_01_4_500_D2).epsilon(1e-13));
  auto m = params(2, 3, 0.1, 4, 500, 2);
  m.R_star = 1.5;
  auto g = evaluate_bounds(m);
  CHECK(g.smd_bound == doctest::Approx(kSmd_2_1_15_01_4_500).epsilon(1e-13));
  CHECK(g.amd_bound == doctest::Approx(kAmd_2_1_15_01_4_500_D2).epsilon(1e-13));
}

TEST_CASE("bound structure") {
  // L* = 0 leaves only the 1/n and 1/(bn) terms.
  auto r = evaluate_bounds(params(3, 2, 0, 7, 900, 1));
  CHECK(r.sgd_bound == doctest::Approx(4.0 * 3 * 2 / 900 + 8.0 * 3 * 2 / (7 * 900)).epsilon(1e-14));
  // With D = ||w*|| both AG forms agree.
  auto e = evaluate_bounds(params(1.5, 4, 0.2, 16, 2000, 2));
  CHECK(e.ag_bound == doctest::Approx(e.ag_bound_d_form).epsilon(1e-14));
  CHECK(std::isinf(evaluate_bounds(params(1, 1, 0, 1, 1, 1)).amd_bound));
}

TEST_CASE("precondition flags") {
  auto small = evaluate_bounds(params(1, 1, 0, 4, 100, 1));
  CHECK_FALSE(small.ag_preconditions_met);
  CHECK_FALSE(small.amd_preconditions_met);
  CHECK_FALSE(small.warnings.empty());
  CHECK(std::any_of(small.warnings.begin(), small.warnings.end(),
                    [](const std::string& w) { return w.find("783") != std::string::npos; }));
  auto big = evaluate_bounds(params(1, 1, 0, 4, 783, 1));
  CHECK(big.ag_preconditions_met);
  CHECK(big.amd_preconditions_met);
  CHECK(big.warnings.empty());
  // A large L* raises the mirror-form requirement above 783 K^2.
  auto l = evaluate_bounds(params(1, 1, 100, 4, 1000, 1));
  CHECK(l.ag_preconditions_met);
  CHECK_FALSE(l.amd_preconditions_met);
}

TEST_CASE("property: bounds are nonincreasing in n and in b") {
  for (double H : {0.5, 2.0}) {
    for (double L : {0.0, 0.05, 1.0}) {
      for (double wsq : {0.25, 4.0}) {
        BoundReport prev_n{};
        bool first = true;
        for (std::size_t n : {2u, 5u, 50u, 783u, 5000u, 100000u}) {
          auto cur = evaluate_bounds(params(H, wsq, L, 8, n, std::sqrt(wsq)));
          if (!first) {
            CHECK(cur.sgd_bound <= prev_n.sgd_bound);
            CHECK(cur.smd_bound <= prev_n.smd_bound);
            CHECK(cur.amd_bound <= prev_n.amd_bound);
            // sqrt(log n)/n is decreasing for n >= 2.
            CHECK(cur.ag_bound <= prev_n.ag_bound);
          }
          prev_n = cur;
          first = false;
        }
        double last_sgd = 1e300, last_ag = 1e300, last_amd = 1e300;
        for (std::size_t b : {1u, 2u, 16u, 256u, 4096u}) {
          auto cur = evaluate_bounds(params(H, wsq, L, b, 1000, std::sqrt(wsq)));
          CHECK(cur.sgd_bound <= last_sgd);
          CHECK(cur.ag_bound <= last_ag);
          CHECK(cur.amd_bound <= last_amd);
          last_sgd = cur.sgd_bound;
          last_ag = cur.ag_bound;
          last_amd = cur.amd_bound;
        }
      }
    }
  }
}

TEST_CASE("property: AG bound within C times the SGD bound on the grid") {
  double worst = 0.0;
  for (double H : {0.5, 1.0, 4.0}) {
    for (double D : {0.5, 1.0, 3.0}) {
      for (double L : {0.0, 0.01, 0.1, 1.0}) {
        for (std::size_t b : {1u, 4u, 16u, 64u, 256u, 1024u}) {
          for (std::size_t n : {783u, 1000u, 10000u, 100000u, 1000000u}) {
            auto r = evaluate_bounds(params(H, D * D, L, b, n, D));
            REQUIRE(r.ag_preconditions_met);
            worst = std::max(worst, r.ag_bound / r.sgd_bound);
            CHECK(r.ag_bound <= kSuperiorityC * r.sgd_bound);
          }
        }
      }
    }
  }
  CHECK(worst == doctest::Approx(199.70329334266766).epsilon(1e-10));
}

TEST_CASE("SGD regimes") {
  auto sep = classify_regime(Algorithm::sgd, 1, 1e6, 0.0, 0.01);
  CHECK(sep.regime_label == "1/eps");
  CHECK(has_note(sep, "no non-constant parallel speedup"));
  CHECK(has_note(sep, "up to constants"));
  for (double b : {1.0, 16.0, 1024.0}) CHECK(classify_regime(Algorithm::sgd, b, 1e6, 0.0, 0.01).regime_label == "1/eps");
  // L* = 0.01, m = 1e6: boundary sqrt(L m) = 100.
  auto lo = classify_regime(Algorithm::sgd, 50, 1e6, 0.01, 0.001);
  CHECK(lo.regime_label == "L*/(eps^2 b)");
  CHECK(lo.predicted_n == doctest::Approx(0.01 / (1e-6 * 50)));
  CHECK(classify_regime(Algorithm::sgd, 100, 1e6, 0.01, 0.001).regime_label == "1/eps");
}

TEST_CASE("AG regimes") {
  const double m = 1e6;  // m^{2/3} = 1e4
  auto sep = classify_regime(Algorithm::ag, 64, m, 0.0, 0.01);
  CHECK(sep.regime_label == "1/(eps sqrt(b))");
  CHECK(sep.predicted_n == doctest::Approx(1.0 / (0.01 * 8.0)));
  CHECK(has_note(sep, "Theta(sqrt(b))"));
  CHECK(has_note(sep, "m^{2/3}"));
  CHECK(classify_regime(Algorithm::ag, 9999, m, 0.0, 0.01).regime_label == "1/(eps sqrt(b))");
  CHECK(classify_regime(Algorithm::ag, std::cbrt(m) * std::cbrt(m), m, 0.0, 0.01).regime_label == "1/sqrt(eps)");
  CHECK(classify_regime(Algorithm::ag, 1e4, m, 0.0, 0.01).regime_label == "1/sqrt(eps)");
  // eps <= L*^2: boundary L^{1/4} m^{3/4}; L = 0.5, eps = 0.01 -> 0.8409 * 31623 = 26591.
  CHECK(classify_regime(Algorithm::ag, 100, m, 0.5, 0.01).regime_label == "L*/(eps^2 b)");
  CHECK(classify_regime(Algorithm::ag, 30000, m, 0.5, 0.01).regime_label == "1/sqrt(eps)");
  // eps >= L*^2 with L > 0: first boundary L m.
  CHECK(classify_regime(Algorithm::ag, 5, m, 1e-5, 0.01).regime_label == "L*/(eps^2 b)");
  CHECK(classify_regime(Algorithm::ag, 10, m, 1e-5, 0.01).regime_label == "1/(eps sqrt(b))");
  // eps = L*^2 goes to the three-row table.
  CHECK(classify_regime(Algorithm::ag, 200, m, 0.1, 0.01).condition.find("eps >= L*^2") != std::string::npos);
}

TEST_CASE("serial batch limits") {
  auto [s, a] = max_serial_batch(0.1, 0.01);
  CHECK(s == doctest::Approx(10.0));
  CHECK(a == doctest::Approx(100.0));
  auto [s0, a0] = max_serial_batch(0.0, 0.01);
  CHECK(s0 == 0.0);
  CHECK(a0 == 0.0);
  CHECK(has_note(classify_regime(Algorithm::sgd, 1, 100, 0.0, 0.1), "serial"));
  auto [s1, a1] = max_serial_batch(0.3, 1.0);
  CHECK(s1 == 0.3);
  CHECK(a1 == 0.3);
  CHECK_THROWS_AS(max_serial_batch(0.1, 0.0), ValidationError);
}
