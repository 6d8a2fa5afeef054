#pragma once

#include "groksim/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <vector>

namespace groksim {

struct SvmSolution {
  Vector w_svm;
  double b_svm = 0.0;
  std::vector<std::int64_t> support_indices;  // sorted
  std::vector<double> duals;                  // alpha_i, aligned with support_indices
  std::vector<std::int64_t> support_pos;      // S+ (subset of support_indices)
  std::vector<std::int64_t> support_neg;      // S-
  std::optional<Vector> w_tilde;
  double w_tilde_residual = 0.0;
  bool span_violation = false;  // least-squares residual above tolerance
  double A_plus = 0.0;
  double A_minus = 0.0;
  double delta = 0.0;   // sqrt(A_minus / A_plus)
  double b_inf = 0.0;   // -log delta
};

// Residuals are scale-normalized: stationarity by max(1, ||(w,b)||),
// complementarity by max(1, sum alpha) — duals grow like 1/gamma^2, so raw
// products would be meaningless at small margins.
struct KktReport {
  double max_primal_violation = 0.0;   // max(0, 1 - y_i(w.x_i + b))
  double min_dual = 0.0;               // min alpha_i (negative => violation)
  double stationarity_residual = 0.0;  // ||(w,b) - sum alpha_i y_i (x_i,1)|| / max(1,||(w,b)||)
  double max_complementarity = 0.0;    // max |alpha_i (y_i(w.x_i+b) - 1)| / max(1, sum alpha)
  bool pass(double tol = 1e-6) const {
    return max_primal_violation <= tol && min_dual >= -tol &&
           stationarity_residual <= tol && max_complementarity <= tol;
  }
};

/// Minimizes ||w||^2 + b^2 subject to y_i(w.x_i + b) >= 1 and returns the
/// unique primal solution together with a dual certificate. Support membership
/// uses the activity tolerance |y_i(w.x_i+b) - 1| <= 1e-5.
SvmSolution solve_hard_margin(const Dataset& ds);

/// Solves the support-vector system (y_i x_i) . w_tilde = -log(alpha_i / eta)
/// in the least-squares sense (minimum-norm when the support vectors do not
/// span), then fills A_plus = sum_{S+} exp(-w_tilde.x_i),
/// A_minus = sum_{S-} exp(+w_tilde.x_i), delta and b_inf.
Vector compute_w_tilde(SvmSolution& sol, const Dataset& ds, double eta);

struct SupportAsymmetry {
  double A_plus, A_minus, delta, b_inf;
};

SupportAsymmetry support_asymmetry(const SvmSolution& sol);

KktReport kkt_report(const SvmSolution& sol, const Dataset& ds);

/// Exhaustive reference solver: enumerates support subsets of size <= d+1 and
/// solves the KKT equality system for each. Only viable for tiny N.
SvmSolution brute_force_hard_margin(const Dataset& ds);

inline constexpr double kActivityTol = 1e-5;

void to_json(nlohmann::json& j, const SvmSolution& sol);
void from_json(const nlohmann::json& j, SvmSolution& sol);

}  // namespace groksim
