#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mbaccel/schedules.hpp"

namespace mbaccel {

/// Right-hand sides of the four convergence guarantees, evaluated literally.
struct BoundReport {
  double sgd_bound = 0.0;        // Euclidean SGD, depends on ||w*|| only
  double ag_bound = 0.0;         // Euclidean AG, ||w*||^{4/3} D^{2/3} form
  double ag_bound_d_form = 0.0;  // same with ||w*|| replaced by D
  double smd_bound = 0.0;        // mirror descent, R(w*) and K
  double amd_bound = 0.0;        // accelerated mirror descent
  bool sgd_preconditions_met = true;
  bool ag_preconditions_met = true;
  bool smd_preconditions_met = true;
  bool amd_preconditions_met = true;
  std::vector<std::string> warnings;
};

BoundReport evaluate_bounds(const ProblemParams& params);

enum class Algorithm { sgd, ag };

const char* to_string(Algorithm a) noexcept;

/// Position in the asymptotic runtime tables (iterations to reach eps,
/// constants and log factors dropped).
struct RegimeReport {
  Algorithm algorithm;
  std::string regime_label;  // the n column, e.g. "1/eps" or "1/(eps sqrt(b))"
  std::string condition;     // the row condition that matched
  double predicted_n;        // up to constants
  double max_serial_b;       // largest b that keeps the serial bound within a constant
  std::vector<std::string> notes;
};

/// Boundary comparisons use this relative slack so that b sitting exactly
/// on a boundary (up to rounding) resolves to the larger-b row.
inline constexpr double kBoundaryRelTol = 1e-12;

RegimeReport classify_regime(Algorithm algorithm, double b, double m, double L_star, double epsilon);

/// (L*/eps, L*/eps^{3/2}): SGD and AG serial mini-batch limits.
std::pair<double, double> max_serial_batch(double L_star, double epsilon);

}  // namespace mbaccel
