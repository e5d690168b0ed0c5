#include "mbaccel/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mbaccel/errors.hpp"

namespace mbaccel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void ProblemParams::validate() const {
  if (!finite_pos(H)) throw ValidationError("H must be positive and finite");
  if (b == 0) throw ValidationError("b must be positive");
  if (n == 0) throw ValidationError("n must be positive");
  if (!finite_nonneg(L_star)) throw ValidationError("L_star must be non-negative and finite");
  if (!finite_nonneg(w_star_norm_sq)) throw ValidationError("||w*||^2 must be non-negative and finite");
  if (R_star && !finite_nonneg(*R_star)) throw ValidationError("R(w*) must be non-negative and finite");
  if (!finite_pos(D)) throw ValidationError("D must be positive and finite");
  if (!finite_pos(K)) throw ValidationError("K must be positive and finite");
}

Schedule Schedule::sgd(double eta) {
  Schedule s{ScheduleKind::sgd_eta, eta, 0.0, 0.0};
  s.validate();
  return s;
}

Schedule Schedule::smd(double eta) {
  Schedule s{ScheduleKind::smd_eta, eta, 0.0, 0.0};
  s.validate();
  return s;
}

Schedule Schedule::ag(double gamma, double p) {
  Schedule s{ScheduleKind::ag_gamma_p, 0.0, gamma, p};
  s.validate();
  return s;
}

Schedule Schedule::amd(double gamma, double p) {
  Schedule s{ScheduleKind::amd_gamma_p, 0.0, gamma, p};
  s.validate();
  return s;
}

Schedule Schedule::scaled(double multiplier) const {
  if (!finite_pos(multiplier)) throw ValidationError("schedule multiplier must be positive");
  Schedule s = *this;
  if (accelerated()) {
    s.gamma *= multiplier;
  } else {
    s.eta *= multiplier;
  }
  return s;
}

void Schedule::validate() const {
  // Zero steps are allowed: they pin the iterates at the starting point.
  if (!finite_nonneg(eta)) throw ValidationError("eta must be non-negative and finite");
  if (!finite_nonneg(gamma)) throw ValidationError("gamma must be non-negative and finite");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0, 1]");
}

StepPair sequences(const Schedule& schedule, std::size_t i) {
  if (i == 0) throw ValidationError("sequences: i is 1-based");
  if (!schedule.accelerated()) return {schedule.eta, 1.0};
  const double di = static_cast<double>(i);
  return {schedule.gamma * std::pow(di, schedule.p), (di + 1.0) / 2.0};
}

double sgd_eta(const ProblemParams& params) {
  params.validate();
  const double H = params.H;
  const double b = static_cast<double>(params.b);
  const double n = static_cast<double>(params.n);
  const double wsq = params.w_star_norm_sq;
  const double L = params.L_star;
  double ratio = kInf;
  if (L > 0.0) {
    ratio = std::sqrt(b * wsq / (L * H * n)) / (1.0 + std::sqrt(H * wsq / (L * b * n)));
  }
  return std::min(1.0 / (2.0 * H), ratio);
}

double smd_eta(const ProblemParams& params) {
  params.validate();
  const double H = params.H;
  const double b = static_cast<double>(params.b);
  const double n = static_cast<double>(params.n);
  const double K2 = params.K * params.K;
  const double R = params.r_star();
  const double L = params.L_star;
  double ratio = kInf;
  if (L > 0.0) {
    ratio = std::sqrt(32.0 * b * R / (L * H * K2 * n)) /
            (16.0 * (1.0 + std::sqrt(32.0 * H * K2 * R / (L * b * n))));
  }
  return std::min({1.0 / (2.0 * H), b / (32.0 * H * K2), ratio});
}

double ag_p(std::size_t b, std::size_t n) {
  if (b == 0) throw ValidationError("ag_p: b must be positive");
  if (n < 3) throw ValidationError("ag_p: n must be at least 3");
  const double db = static_cast<double>(b);
  const double dn = static_cast<double>(n);
  const double first = std::log(db) / (2.0 * std::log(dn - 1.0));
  const double loglog = std::log(std::log(dn));
  const double denom = std::log(db * (dn - 1.0)) - loglog;
  const double second = denom > 0.0 ? loglog / (2.0 * denom) : kInf;
  return std::clamp(std::max(first, second), 0.0, 1.0);
}

double ag_p_log_ratio(std::size_t b, std::size_t n) {
  if (b == 0) throw ValidationError("ag_p_log_ratio: b must be positive");
  if (b == 1) return 0.0;
  if (n < 3) return 1.0;
  const double p = std::log(static_cast<double>(b)) / (2.0 * std::log(static_cast<double>(n) - 1.0));
  return std::clamp(p, 0.0, 1.0);
}

double ag_gamma(const ProblemParams& params, double p, GammaForm form) {
  params.validate();
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("ag_gamma: p must lie in [0, 1]");
  if (params.n < 2) throw ValidationError("ag_gamma: n must be at least 2");
  const double H = params.H;
  const double b = static_cast<double>(params.b);
  const double nm1 = static_cast<double>(params.n) - 1.0;
  const double L = params.L_star;
  const double K2 = params.K * params.K;
  const double exp_outer = (p + 1.0) / (2.0 * p + 1.0);
  const double exp_inner = p / (2.0 * p + 1.0);

  const double first = 1.0 / (4.0 * H);
  double second = kInf;
  double third = 0.0;
  if (form == GammaForm::general) {
    const double R = params.r_star();
    if (L > 0.0) second = std::sqrt(b * R / (174.0 * H * K2 * L * std::pow(nm1, 2.0 * p + 1.0)));
    const double L0 = 1.5 * H * params.D * params.D + L;
    third = std::pow(b / (1044.0 * H * K2 * std::pow(nm1, 2.0 * p)), exp_outer) *
            std::pow(6.0 * R / L0, exp_inner);
  } else {
    const double wsq = params.w_star_norm_sq;
    if (L > 0.0) second = std::sqrt(b * wsq / (348.0 * H * L * std::pow(nm1, 2.0 * p + 1.0)));
    const double ratio = wsq > 0.0 ? wsq / (4.0 * H * wsq + std::sqrt(4.0 * H * wsq * L)) : 0.0;
    third = std::pow(b / (1044.0 * H * std::pow(nm1, 2.0 * p)), exp_outer) *
            std::pow(ratio, exp_inner);
  }
  return std::min({first, second, third});
}

std::vector<std::string> precondition_warnings(const ProblemParams& params, ScheduleKind kind) {
  std::vector<std::string> out;
  if (kind == ScheduleKind::ag_gamma_p && params.n < 783) {
    out.push_back("accelerated-gradient guarantee requires n >= 783 (n = " +
                  std::to_string(params.n) + "); schedule is still well defined");
  }
  if (kind == ScheduleKind::amd_gamma_p) {
    const double K2 = params.K * params.K;
    const double need =
        std::max(783.0 * K2, 87.0 * K2 * params.L_star / (params.H * params.D * params.D));
    const double n = static_cast<double>(params.n);
    const double nb = n * static_cast<double>(params.b);
    if (n < need || nb < need) {
      std::ostringstream msg;
      msg << "accelerated mirror-descent guarantee: needs max{783 K^2, 87 K^2 L*/(H D^2)} = " << need
          << "; stated on n (n = " << params.n << (n >= need ? ", met" : ", unmet")
          << "), derived on sample size n*b (n*b = " << nb << (nb >= need ? ", met" : ", unmet")
          << ")";
      out.push_back(msg.str());
    }
  }
  return out;
}

const char* to_string(AdmissibilityCondition c) noexcept {
  switch (c) {
    case AdmissibilityCondition::beta_one: return "beta_1 = 1";
    case AdmissibilityCondition::beta_range: return "beta_i >= 1";
    case AdmissibilityCondition::gamma_positive: return "gamma_i > 0";
    case AdmissibilityCondition::growth: return "0 < gamma_{i+1}(beta_{i+1}-1) <= beta_i gamma_i";
    case AdmissibilityCondition::smoothness: return "2 H gamma_i <= beta_i";
  }
  return "?";
}

std::string AdmissibilityReport::describe() const {
  std::ostringstream s;
  if (passed) {
    s << "admissible for i = 1.." << checked << " (worst growth ratio " << worst_growth_ratio
      << ", worst smoothness ratio " << worst_smoothness_ratio << ")";
  } else {
    const auto& v = *first_violation;
    s << "violates " << to_string(v.condition) << " at i = " << v.i << " (lhs " << v.lhs
      << ", rhs " << v.rhs << ")";
  }
  return s.str();
}

AdmissibilityReport validate_admissibility(const Schedule& schedule, double H, std::size_t n) {
  AdmissibilityReport report;
  auto fail = [&](AdmissibilityCondition c, std::size_t i, double lhs, double rhs) {
    if (report.passed) {
      report.passed = false;
      report.first_violation = AdmissibilityViolation{c, i, lhs, rhs};
    }
  };
  auto within = [](double lhs, double rhs) { return lhs <= rhs * (1.0 + kAdmissibilityRelTol); };

  const StepPair first = sequences(schedule, 1);
  if (first.beta_i != 1.0) fail(AdmissibilityCondition::beta_one, 1, first.beta_i, 1.0);
  StepPair cur = first;
  for (std::size_t i = 1; i <= n && report.passed; ++i) {
    const StepPair next = sequences(schedule, i + 1);
    if (!(cur.beta_i >= 1.0)) fail(AdmissibilityCondition::beta_range, i, cur.beta_i, 1.0);
    if (!(cur.gamma_i > 0.0)) fail(AdmissibilityCondition::gamma_positive, i, cur.gamma_i, 0.0);

    const double growth_lhs = next.gamma_i * (next.beta_i - 1.0);
    const double growth_rhs = cur.beta_i * cur.gamma_i;
    if (!(growth_lhs > 0.0) || !within(growth_lhs, growth_rhs)) {
      fail(AdmissibilityCondition::growth, i, growth_lhs, growth_rhs);
    }
    if (growth_rhs > 0.0) {
      report.worst_growth_ratio = std::max(report.worst_growth_ratio, growth_lhs / growth_rhs);
    }

    const double smooth_lhs = 2.0 * H * cur.gamma_i;
    if (!within(smooth_lhs, cur.beta_i)) {
      fail(AdmissibilityCondition::smoothness, i, smooth_lhs, cur.beta_i);
    }
    report.worst_smoothness_ratio = std::max(report.worst_smoothness_ratio, smooth_lhs / cur.beta_i);
    report.checked = i;
    cur = next;
  }
  return report;
}

std::vector<double> default_grid_multipliers() {
  return {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0, 2.0, 4.0, 8.0, 16.0};
}

GridSelection grid_select(const Schedule& base, std::span<const double> multipliers,
                          const std::function<double(const Schedule&)>& evaluate) {
  if (multipliers.empty()) throw ValidationError("grid_select: empty multiplier list");
  std::vector<double> sorted(multipliers.begin(), multipliers.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  GridSelection out{base, 0.0, {}, sorted};
  out.scores.reserve(sorted.size());
  double best = kInf;
  bool found = false;
  for (double mult : sorted) {
    const Schedule candidate = base.scaled(mult);
    const double score = evaluate(candidate);
    out.scores.push_back(score);
    if (std::isfinite(score) && (!found || score < best)) {
      best = score;
      found = true;
      out.schedule = candidate;
      out.multiplier = mult;
    }
  }
  if (!found) throw DivergenceError("grid_select: every candidate produced a non-finite score");
  return out;
}

}  // namespace mbaccel
