#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mbaccel {

/// Problem constants the theoretical step sizes depend on.
struct ProblemParams {
  double H = 1.0;              // smoothness
  std::size_t b = 1;           // mini-batch size
  std::size_t n = 1;           // iterations, n = m / b
  double L_star = 0.0;         // L(w*)
  double w_star_norm_sq = 1.0; // ||w*||^2 (Euclidean)
  std::optional<double> R_star;  // R(w*) for general mirror maps
  double D = 1.0;              // domain radius
  double K = 1.0;              // sqrt(2 sup_{||w||<=1} R(w)); 1 for Euclidean

  /// R(w*), defaulting to the Euclidean potential 0.5 ||w*||^2.
  double r_star() const noexcept { return R_star ? *R_star : 0.5 * w_star_norm_sq; }
  /// Throws ValidationError on non-finite or out-of-range fields.
  void validate() const;
};

enum class ScheduleKind { sgd_eta, ag_gamma_p, smd_eta, amd_gamma_p };

/// Resolved step-size parameters. Constant eta for SGD/SMD; (gamma, p) for
/// AG/AMD, implying gamma_i = gamma i^p and beta_i = (i + 1) / 2.
struct Schedule {
  ScheduleKind kind = ScheduleKind::sgd_eta;
  double eta = 0.0;
  double gamma = 0.0;
  double p = 0.0;

  static Schedule sgd(double eta);
  static Schedule smd(double eta);
  static Schedule ag(double gamma, double p);
  static Schedule amd(double gamma, double p);

  bool accelerated() const noexcept {
    return kind == ScheduleKind::ag_gamma_p || kind == ScheduleKind::amd_gamma_p;
  }
  /// eta or gamma.
  double magnitude() const noexcept { return accelerated() ? gamma : eta; }
  Schedule scaled(double multiplier) const;
  void validate() const;
};

struct StepPair {
  double gamma_i;
  double beta_i;
};

/// (gamma_i, beta_i) for 1-based i. Non-accelerated kinds give (eta, 1).
StepPair sequences(const Schedule& schedule, std::size_t i);

/// min{1/(2H), ratio} with the ratio term of the Euclidean SGD guarantee.
/// L_star = 0 drops the ratio term (its limit b/H never binds).
double sgd_eta(const ProblemParams& params);

/// Mirror-descent form: adds the b/(32 H K^2) clamp and uses R(w*).
double smd_eta(const ProblemParams& params);

/// Exponent p of gamma_i = gamma i^p, natural logs, clamped to [0, 1].
/// Requires n >= 3. A non-positive denominator in the second max-term makes
/// that term +inf (so p = 1).
double ag_p(std::size_t b, std::size_t n);

/// Log-ratio exponent p = ln b / (2 ln(n - 1)), clamped to [0, 1];
/// n < 3 gives 1 for b > 1 and 0 for b = 1.
double ag_p_log_ratio(std::size_t b, std::size_t n);

enum class GammaForm {
  general,       // third term uses (6 R(w*) / (1.5 H D^2 + L(w*)))^{p/(2p+1)}
  euclidean,     // third term uses (||w*||^2 / (4H||w*||^2 + sqrt(4H||w*||^2 L)))^{p/(2p+1)}
};

/// Base step gamma of the accelerated schedule: the minimum of three closed
/// forms. L_star = 0 makes the second term +inf. Requires n >= 2.
double ag_gamma(const ProblemParams& params, double p, GammaForm form = GammaForm::general);

/// Warnings for unmet guarantee preconditions (the schedule stays usable).
std::vector<std::string> precondition_warnings(const ProblemParams& params, ScheduleKind kind);

enum class AdmissibilityCondition {
  beta_one,          // beta_1 = 1
  beta_range,        // beta_i >= 1
  gamma_positive,    // gamma_i > 0
  growth,            // 0 < gamma_{i+1} (beta_{i+1} - 1) <= beta_i gamma_i
  smoothness,        // 2 H gamma_i <= beta_i
};

const char* to_string(AdmissibilityCondition c) noexcept;

struct AdmissibilityViolation {
  AdmissibilityCondition condition;
  std::size_t i;
  double lhs;
  double rhs;
};

struct AdmissibilityReport {
  bool passed = true;
  std::size_t checked = 0;
  std::optional<AdmissibilityViolation> first_violation;
  double worst_growth_ratio = 0.0;      // max over i of lhs/rhs for `growth`
  double worst_smoothness_ratio = 0.0;  // max over i of 2 H gamma_i / beta_i

  std::string describe() const;
};

/// Relative slack allowed on each inequality to absorb rounding when both
/// sides are mathematically equal (p = 1 makes `growth` tight).
inline constexpr double kAdmissibilityRelTol = 1e-12;

/// Checks the accelerated step-size conditions for i = 1..n.
AdmissibilityReport validate_admissibility(const Schedule& schedule, double H, std::size_t n);

struct GridSelection {
  Schedule schedule;
  double multiplier;
  std::vector<double> scores;  // aligned with the sorted multipliers
  std::vector<double> multipliers;
};

/// Multipliers used by the harness grid mode.
std::vector<double> default_grid_multipliers();

/// Scales the base step by each multiplier, scores each candidate and
/// returns the argmin. Non-finite scores are skipped; ties go to the
/// smaller multiplier.
GridSelection grid_select(const Schedule& base, std::span<const double> multipliers,
                          const std::function<double(const Schedule&)>& evaluate);

}  // namespace mbaccel
