#include "mbaccel/analysis.hpp"

#include <cmath>
#include <limits>

#include "mbaccel/errors.hpp"

namespace mbaccel {

BoundReport evaluate_bounds(const ProblemParams& params) {
  params.validate();
  const double H = params.H;
  const double b = static_cast<double>(params.b);
  const double n = static_cast<double>(params.n);
  const double L = params.L_star;
  const double wsq = params.w_star_norm_sq;
  const double D = params.D;
  const double K2 = params.K * params.K;
  const double R = params.r_star();
  const double sqrt_log_n = std::sqrt(std::log(n));
  const double nm1 = n - 1.0;

  BoundReport r;
  r.sgd_bound = std::sqrt(64.0 * H * wsq * L / (b * n)) + (4.0 * L + 4.0 * H * wsq) / n +
                8.0 * H * wsq / (b * n);

  const double w43_d23 = std::pow(wsq, 2.0 / 3.0) * std::pow(D, 2.0 / 3.0);
  r.ag_bound = 117.0 * std::sqrt(H * wsq * L / (b * n)) + 367.0 * H * w43_d23 / (std::sqrt(b) * n) +
               546.0 * H * D * D * sqrt_log_n / (b * n) + 5.0 * H * wsq / (n * n);
  r.ag_bound_d_form = 117.0 * std::sqrt(H * D * D * L / (b * n)) +
                      367.0 * H * D * D / (std::sqrt(b) * n) +
                      546.0 * H * D * D * sqrt_log_n / (b * n) + 5.0 * H * D * D / (n * n);

  r.smd_bound = std::sqrt(128.0 * H * K2 * R * L / (b * n)) + (4.0 * L + 8.0 * H * R) / n +
                16.0 * H * K2 * R / (b * n);

  if (nm1 > 0.0) {
    const double r23_d23 = std::pow(R, 2.0 / 3.0) * std::pow(D, 2.0 / 3.0);
    r.amd_bound = 164.0 * std::sqrt(H * K2 * R * L / (b * nm1)) +
                  580.0 * H * K2 * r23_d23 / (std::sqrt(b) * nm1) +
                  545.0 * H * K2 * D * D * sqrt_log_n / (b * nm1) + 8.0 * H * R / (nm1 * nm1);
  } else {
    r.amd_bound = std::numeric_limits<double>::infinity();
  }

  r.ag_preconditions_met = params.n >= 783;
  const double amd_need = std::max(783.0 * K2, 87.0 * K2 * L / (H * D * D));
  r.amd_preconditions_met = n >= amd_need;
  for (auto kind : {ScheduleKind::ag_gamma_p, ScheduleKind::amd_gamma_p}) {
    for (auto& w : precondition_warnings(params, kind)) r.warnings.push_back(std::move(w));
  }
  return r;
}

const char* to_string(Algorithm a) noexcept { return a == Algorithm::sgd ? "sgd" : "ag"; }

std::pair<double, double> max_serial_batch(double L_star, double epsilon) {
  if (!(epsilon > 0.0)) throw ValidationError("max_serial_batch: epsilon must be positive");
  if (!(L_star >= 0.0)) throw ValidationError("max_serial_batch: L_star must be non-negative");
  return {L_star / epsilon, L_star / std::pow(epsilon, 1.5)};
}

RegimeReport classify_regime(Algorithm algorithm, double b, double m, double L_star,
                             double epsilon) {
  if (!(b > 0.0) || !(m > 0.0)) throw ValidationError("classify_regime: b and m must be positive");
  if (!(epsilon > 0.0)) throw ValidationError("classify_regime: epsilon must be positive");
  if (!(L_star >= 0.0)) throw ValidationError("classify_regime: L_star must be non-negative");
  const double L = L_star;
  const double eps = epsilon;
  // b at or past `boundary` belongs to the larger-b row.
  auto at_least = [](double value, double boundary) {
    return value >= boundary * (1.0 - kBoundaryRelTol);
  };
  const auto [serial_sgd, serial_ag] = max_serial_batch(L, eps);

  RegimeReport r{algorithm, "", "", 0.0, 0.0, {}};
  if (algorithm == Algorithm::sgd) {
    r.max_serial_b = serial_sgd;
    const double boundary = std::sqrt(L * m);
    if (!at_least(b, boundary)) {
      r.condition = "b < sqrt(L* m)";
      r.regime_label = "L*/(eps^2 b)";
      r.predicted_n = L / (eps * eps * b);
      r.notes.push_back("linear parallel speedup in b");
    } else {
      r.condition = "b >= sqrt(L* m)";
      r.regime_label = "1/eps";
      r.predicted_n = 1.0 / eps;
      r.notes.push_back("no non-constant parallel speedup");
    }
  } else {
    r.max_serial_b = serial_ag;
    if (eps < L * L * (1.0 - kBoundaryRelTol)) {  // eps = L*^2 joins the three-row table
      const double boundary = std::pow(L, 0.25) * std::pow(m, 0.75);
      if (!at_least(b, boundary)) {
        r.condition = "eps <= L*^2, b < L*^{1/4} m^{3/4}";
        r.regime_label = "L*/(eps^2 b)";
        r.predicted_n = L / (eps * eps * b);
        r.notes.push_back("linear parallel speedup in b");
      } else {
        r.condition = "eps <= L*^2, b >= L*^{1/4} m^{3/4}";
        r.regime_label = "1/sqrt(eps)";
        r.predicted_n = 1.0 / std::sqrt(eps);
        r.notes.push_back("no further parallel speedup");
      }
    } else {
      const double lower = L * m;
      const double upper = std::cbrt(m) * std::cbrt(m);
      if (!at_least(b, lower)) {
        r.condition = "eps >= L*^2, b < L* m";
        r.regime_label = "L*/(eps^2 b)";
        r.predicted_n = L / (eps * eps * b);
        r.notes.push_back("linear parallel speedup in b");
      } else if (!at_least(b, upper)) {
        r.condition = "eps >= L*^2, L* m <= b < m^{2/3}";
        r.regime_label = "1/(eps sqrt(b))";
        r.predicted_n = 1.0 / (eps * std::sqrt(b));
        r.notes.push_back("Theta(sqrt(b)) parallel speedup up to b = m^{2/3}");
      } else {
        r.condition = "eps >= L*^2, b >= m^{2/3}";
        r.regime_label = "1/sqrt(eps)";
        r.predicted_n = 1.0 / std::sqrt(eps);
        r.notes.push_back("no further parallel speedup");
      }
    }
  }
  if (L == 0.0) r.notes.push_back("separable case: serial mini-batch analysis degenerates (L* = 0)");
  r.notes.push_back("up to constants");
  return r;
}

}  // namespace mbaccel
