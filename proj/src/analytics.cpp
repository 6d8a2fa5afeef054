#include "groksim/analytics.hpp"

#include "groksim/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace groksim {
namespace {

std::optional<std::int64_t> earliest_crossing(const AccuracySeries& s, double level) {
  for (std::size_t i = 0; i < s.t.size(); ++i)
    if (s.value[i] >= level) return s.t[i];
  return std::nullopt;
}

std::optional<std::int64_t> first_positive_step(const AccuracySeries& s) {
  for (auto t : s.t)
    if (t >= 1) return t;
  return std::nullopt;
}

}  // namespace

GrokReport grok_times(const AccuracySeries& P, const AccuracySeries& Q, double eps,
                      double zeta_threshold) {
  if (P.t.empty() || Q.t.empty()) throw SpecError("grok_times: empty series");
  if (P.t.size() != P.value.size() || Q.t.size() != Q.value.size())
    throw SpecError("grok_times: ragged series");
  if (P.t != Q.t) throw SpecError("grok_times: series not aligned on the same steps");
  if (!(eps >= 0.0 && eps < 1.0)) throw SpecError("grok_times: eps must be in [0,1)");

  GrokReport rep;
  rep.eps = eps;
  rep.zeta_threshold = zeta_threshold;
  rep.sup_P = *std::max_element(P.value.begin(), P.value.end());
  rep.sup_Q = *std::max_element(Q.value.begin(), Q.value.end());
  if (rep.sup_P == 0.0 || rep.sup_Q == 0.0)
    throw SpecError("grok_times: degenerate series with sup = 0");

  rep.T_tr = earliest_crossing(P, (1.0 - eps) * rep.sup_P);
  rep.T_te = earliest_crossing(Q, (1.0 - eps) * rep.sup_Q);
  if (rep.T_tr && rep.T_te) {
    rep.T_gr = *rep.T_te - *rep.T_tr;
    // Crossing at t=0 would make zeta undefined; floor at the first logged
    // positive step.
    auto floor_tr = std::max(*rep.T_tr, first_positive_step(P).value_or(1));
    auto floor_te = std::max(*rep.T_te, first_positive_step(Q).value_or(1));
    rep.zeta = static_cast<double>(floor_te) / static_cast<double>(floor_tr);
    rep.verdict = *rep.zeta >= zeta_threshold;
  }
  return rep;
}

double bias_closed_form(const AnalyticContext& ctx, double b0, double t0, double t) {
  if (!(t >= t0 && t0 >= 1.0)) throw SpecError("bias_closed_form: need t >= t0 >= 1");
  const double delta = ctx.delta;
  if (!(delta > 0)) throw SpecError("bias_closed_form: delta must be > 0");
  const double de = delta * std::exp(b0);
  if (!(1.0 + de > 0)) throw SpecError("bias_closed_form: 1 + delta e^{b0} <= 0");
  const double g = 2.0 * std::sqrt(ctx.A_plus * ctx.A_minus) * std::log(t / t0);
  if (g > 30.0) {
    const double kappa = (1.0 - de) / (1.0 + de);
    return -std::log(delta) + std::log1p(-kappa * std::exp(-g)) -
           std::log1p(kappa * std::exp(-g));
  }
  const double eg = std::exp(g);
  const double num = (1.0 + de) * eg - (1.0 - de);
  const double den = (1.0 + de) * eg + (1.0 - de);
  if (!(num > 0) || !(den > 0))
    throw NumericError("bias_closed_form: log argument <= 0 (delta=" +
                       std::to_string(delta) + ", b0=" + std::to_string(b0) +
                       ", g=" + std::to_string(g) + ")");
  return std::log(num / den) - std::log(delta);
}

double bias_ode_oracle(const AnalyticContext& ctx, double b0, double t0, double t,
                       std::int64_t substeps) {
  if (!(t >= t0 && t0 >= 1.0)) throw SpecError("bias_ode_oracle: need t >= t0 >= 1");
  if (substeps < 1000) throw SpecError("bias_ode_oracle: substeps must be >= 1e3");
  // In s = log t the ODE is db/ds = A+ e^{-b} - A- e^{b}.
  const double s0 = std::log(t0), s1 = std::log(t);
  const double h = (s1 - s0) / static_cast<double>(substeps);
  auto f = [&](double b) { return ctx.A_plus * std::exp(-b) - ctx.A_minus * std::exp(b); };
  double b = b0;
  for (std::int64_t i = 0; i < substeps; ++i) {
    const double k1 = f(b);
    const double k2 = f(b + 0.5 * h * k1);
    const double k3 = f(b + 0.5 * h * k2);
    const double k4 = f(b + h * k3);
    const double db = h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (std::abs(db) > 1.0)
      throw NumericError("bias_ode_oracle: substep too coarse (|db| > 1)");
    b += db;
  }
  return b;
}

ConcentratedAccuracy predicted_concentrated_accuracy(double b, double norm_w, double gamma,
                                                     double alpha_sens) {
  if (!(norm_w > 0)) throw SpecError("predicted_concentrated_accuracy: norm_w must be > 0");
  const double half = gamma / 2.0;
  const double top = alpha_sens * gamma;
  if (!(top > half)) throw SpecError("predicted_concentrated_accuracy: degenerate band");
  const double offset = std::abs(b) / norm_w;
  ConcentratedAccuracy out;
  out.value = 1.0 - (offset - half) / (2.0 * (top - half));
  if (offset >= half && offset <= top) {
    out.value = std::clamp(out.value, 0.5, 1.0);
  } else {
    out.extrapolated = true;
    out.value = std::clamp(out.value, 0.0, 1.0);
  }
  return out;
}

GrokTimeBounds grok_time_bounds(const AnalyticContext& ctx, double eps) {
  const double shared =
      std::abs(std::log(ctx.delta)) / (1.0 + 2.0 * eps * (2.0 * ctx.alpha_sens - 1.0));
  GrokTimeBounds b;
  b.lower = std::exp(-ctx.gamma * ctx.B / 2.0 + shared);
  b.upper = std::exp(+ctx.gamma * ctx.B / 2.0 + shared);
  return b;
}

PhaseReport detect_t0(const TrainTrace& trace, const SvmSolution& sol, const Dataset& ds,
                      double frac_tol) {
  PhaseReport rep;
  rep.method_notes = "t0: earliest logged step with non-support gradient share < " +
                     std::to_string(frac_tol);
  std::vector<bool> is_support(ds.size(), false);
  for (auto i : sol.support_indices) is_support[static_cast<std::size_t>(i)] = true;
  for (const auto& e : trace.entries) {
    if (e.w_snapshot.size() != ds.dim()) continue;
    // Per-point gradient magnitude |l'(m_i)| ||x_i|| under the logistic loss.
    double total = 0.0, non_support = 0.0;
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
      const double m = ds.labels[i] * (ds.points.row(i).dot(e.w_snapshot) + e.b);
      const double lp = 1.0 / (1.0 + std::exp(std::min(m, 700.0)));
      const double contrib = lp * ds.points.row(i).norm();
      total += contrib;
      if (!is_support[static_cast<std::size_t>(i)]) non_support += contrib;
    }
    if (total > 0.0 && non_support < frac_tol * total) {
      rep.t0 = e.t;
      rep.b0 = e.b;
      return rep;
    }
  }
  rep.method_notes += "; condition never met";
  return rep;
}

PhaseReport phase_segmentation(const TrainTrace& trace, const PhaseReport& t0_report) {
  PhaseReport rep = t0_report;
  if (!rep.t0) throw SpecError("phase_segmentation: t0 absent");
  double best = -1.0;
  std::int64_t best_t = *rep.t0;
  const std::int64_t last_t = trace.entries.empty() ? *rep.t0 : trace.entries.back().t;
  for (const auto& e : trace.entries) {
    if (e.t < *rep.t0 || e.norm_w <= 0.0) continue;
    const double ratio = std::abs(e.b) / e.norm_w;
    if (ratio > best) {
      best = ratio;
      best_t = e.t;
    }
  }
  if (best < 0.0) {
    rep.method_notes += "; no extremum found (single-phase)";
    rep.phase2_end = *rep.t0;
  } else {
    rep.phase2_end = best_t;
  }
  rep.phase3_span = std::make_pair(*rep.phase2_end, last_t);
  return rep;
}

double rotation_bound_step(double t, double norm_w, const AnalyticContext& ctx) {
  if (!(t >= 2.0)) throw SpecError("rotation_bound_step: t must be >= 2");
  if (!(norm_w > 0)) throw SpecError("rotation_bound_step: norm_w must be > 0");
  const double common = ctx.eta * ctx.N * ctx.R * std::exp(ctx.B * ctx.R);
  const double lt = std::log(t);
  return common * ctx.B * ctx.gamma / (2.0 * t * lt * norm_w) +
         3.0 * common * ctx.B * ctx.B * ctx.gamma * ctx.gamma / (8.0 * t * lt * lt * norm_w);
}

DelayedRobustnessReport delayed_robustness_check(const TrainTrace& trace,
                                                 const PhaseReport& phases,
                                                 const std::string& adv_column,
                                                 double eps) {
  DelayedRobustnessReport rep;
  AccuracySeries adv = eval_series(trace, adv_column);
  const double sup = *std::max_element(adv.value.begin(), adv.value.end());
  if (sup == 0.0) throw SpecError("delayed_robustness_check: degenerate adversarial series");
  rep.T_te_adv = earliest_crossing(adv, (1.0 - eps) * sup);
  if (phases.phase3_span) rep.phase3_start = phases.phase3_span->first;
  if (rep.T_te_adv && rep.phase3_start) {
    const double a = std::max<double>(1.0, static_cast<double>(*rep.T_te_adv));
    const double b = std::max<double>(1.0, static_cast<double>(*rep.phase3_start));
    rep.decade_ratio = std::max(a / b, b / a);
    rep.coincident = rep.decade_ratio <= 10.0;
  }
  return rep;
}

double measured_bias_plateau(const TrainTrace& trace, double tail_fraction) {
  if (trace.entries.empty()) throw SpecError("measured_bias_plateau: empty trace");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw SpecError("measured_bias_plateau: tail_fraction must be in (0,1]");
  const auto n = trace.entries.size();
  auto start = n - std::max<std::size_t>(1, static_cast<std::size_t>(tail_fraction * n));
  std::vector<double> tail;
  for (auto i = start; i < n; ++i) tail.push_back(trace.entries[i].b);
  std::sort(tail.begin(), tail.end());
  const auto m = tail.size();
  return m % 2 == 1 ? tail[m / 2] : 0.5 * (tail[m / 2 - 1] + tail[m / 2]);
}

AccuracySeries train_series(const TrainTrace& trace) {
  AccuracySeries s;
  for (const auto& e : trace.entries) {
    s.t.push_back(e.t);
    s.value.push_back(e.train_acc);
  }
  return s;
}

AccuracySeries eval_series(const TrainTrace& trace, const std::string& name) {
  AccuracySeries s;
  for (const auto& e : trace.entries) {
    auto it = e.eval_acc.find(name);
    if (it == e.eval_acc.end())
      throw SpecError("eval_series: missing column Q_" + name);
    s.t.push_back(e.t);
    s.value.push_back(it->second);
  }
  return s;
}

}  // namespace groksim
