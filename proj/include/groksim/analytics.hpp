#pragma once

#include "groksim/maxmargin.hpp"
#include "groksim/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace groksim {

struct GrokReport {
  double eps = 0.05;
  std::optional<std::int64_t> T_tr;
  std::optional<std::int64_t> T_te;
  std::optional<double> zeta;       // T_te / T_tr
  std::optional<std::int64_t> T_gr; // T_te - T_tr
  bool verdict = false;             // zeta >= zeta_threshold
  double zeta_threshold = 100.0;
  double sup_P = 0.0;
  double sup_Q = 0.0;
};

struct PhaseReport {
  std::optional<std::int64_t> t0;          // end of population-dominated phase
  double b0 = 0.0;                         // b(t0)
  std::optional<std::int64_t> phase2_end;  // extremum of |b|/||w||
  std::optional<std::pair<std::int64_t, std::int64_t>> phase3_span;
  std::string method_notes;
};

struct AnalyticContext {
  double A_plus = 0.0;
  double A_minus = 0.0;
  double delta = 1.0;
  double b_inf = 0.0;
  double gamma = 0.0;
  double alpha_sens = 1.0;
  double B = 0.0;  // empirical residual bound B_hat
  double eta = 0.0;
  double N = 0.0;
  double R = 0.0;
};

struct AccuracySeries {
  std::vector<std::int64_t> t;
  std::vector<double> value;
};

/// Earliest logged t whose value reaches (1-eps) * sup of the series.
/// T_tr is floored at the first logged positive step before forming zeta.
GrokReport grok_times(const AccuracySeries& P, const AccuracySeries& Q, double eps,
                      double zeta_threshold = 100.0);

/// Integrated late-time bias trajectory with general b0:
///   b(t) = log( ((1+de^{b0}) e^{g} - (1-de^{b0})) /
///               ((1+de^{b0}) e^{g} + (1-de^{b0})) ) - log d,
/// g(t) = 2 sqrt(A+ A-) log(t/t0). Uses a tanh-style rewrite for g > 30.
double bias_closed_form(const AnalyticContext& ctx, double b0, double t0, double t);

/// RK4 in s = log t for db/dt = (A+ e^{-b} - A- e^{b}) / t.
double bias_ode_oracle(const AnalyticContext& ctx, double b0, double t0, double t,
                       std::int64_t substeps);

struct ConcentratedAccuracy {
  double value = 1.0;
  bool extrapolated = false;  // |b|/||w|| outside [gamma/2, alpha*gamma]
};

/// Q = 1 - (|b|/||w|| - gamma/2) / (2 (alpha*gamma - gamma/2)),
/// clamped to [0.5, 1] inside the band, [0, 1] outside (flagged).
ConcentratedAccuracy predicted_concentrated_accuracy(double b, double norm_w, double gamma,
                                                     double alpha_sens);

struct GrokTimeBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// exp(-gB/2 + |log d|/(1+2e(2a-1))) .. exp(+gB/2 + same), in t/t0 units.
GrokTimeBounds grok_time_bounds(const AnalyticContext& ctx, double eps);

/// t0 = earliest logged step where non-support points contribute less than
/// frac_tol of the total gradient magnitude sum |l'(m_i)| ||x_i||.
PhaseReport detect_t0(const TrainTrace& trace, const SvmSolution& sol, const Dataset& ds,
                      double frac_tol = 0.01);

/// Fills phase2_end (extremum of |b|/||w|| at t >= t0) and phase3_span.
PhaseReport phase_segmentation(const TrainTrace& trace, const PhaseReport& t0_report);

/// Per-step rotation bound for the no-bias model (diagnostic):
///   eta N R e^{BR} B gamma / (2 t log t ||w||)
///   + 3 eta N R e^{BR} B^2 gamma^2 / (8 t log^2 t ||w||).
double rotation_bound_step(double t, double norm_w, const AnalyticContext& ctx);

struct DelayedRobustnessReport {
  std::optional<std::int64_t> T_te_adv;  // T_te^adv(eps)
  std::optional<std::int64_t> phase3_start;
  bool coincident = false;  // within one decade (factor 10 in t)
  double decade_ratio = 0.0;
};

DelayedRobustnessReport delayed_robustness_check(const TrainTrace& trace,
                                                 const PhaseReport& phases,
                                                 const std::string& adv_column = "adv",
                                                 double eps = 0.05);

/// Median of b over the last fraction of the logged trace (plateau estimate).
double measured_bias_plateau(const TrainTrace& trace, double tail_fraction = 0.1);

AccuracySeries train_series(const TrainTrace& trace);
AccuracySeries eval_series(const TrainTrace& trace, const std::string& name);

}  // namespace groksim
