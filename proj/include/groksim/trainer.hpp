#pragma once

#include "groksim/types.hpp"

#include <functional>

namespace groksim {

struct LossGrad {
  double loss = 0.0;
  Vector grad_w;
  double grad_b = 0.0;
  std::int64_t clamp_trips = 0;  // exponential-loss margin clamps
};

/// Full-batch loss and gradient: loss = sum_i l(y_i(w.x_i + b)).
/// Exponential margins below -700 are clamped before exponentiation.
LossGrad loss_and_grad(const LinearModel& model, const Dataset& ds, LossKind kind);

/// Fraction of points whose prediction (score>0 => +1, else -1) matches the label.
double accuracy(const LinearModel& model, const Dataset& ds);

/// Optional per-logged-entry sink, used for incremental CSV flushing.
using TraceSink = std::function<void(const TraceEntry&, const TrainTrace&)>;

/// Full-batch gradient descent. Logs at t=0, every cfg.log_every steps, and at
/// t=T. Deterministic: identical inputs give a bit-identical trace. The
/// alignment reference defaults to spec.w_true. Aborts with NumericError if
/// eta * ||gradient|| exceeds the divergence guard.
TrainTrace train(const Dataset& ds, const TrainConfig& cfg, const LinearModel& init,
                 const TraceSink& sink = nullptr);

/// Fills rho_norm_t = ||w(t) - w_hat log t|| for logged entries with t >= 1 and
/// returns the empirical bound B_hat = max over the last half of the trace.
double fill_residuals(TrainTrace& trace, const Vector& w_hat);

inline constexpr double kDivergenceGuard = 1e6;

}  // namespace groksim
