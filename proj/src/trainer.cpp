#include "groksim/trainer.hpp"

#include "groksim/adversarial.hpp"

#include <algorithm>
#include <cmath>

namespace groksim {
namespace {

struct Workspace {
  Eigen::ArrayXd margins, u, lprime, weights;
};

// Shared loss/grad core so train() and the public API use identical
// arithmetic. Logistic terms use the |m|-folded stable forms.
void loss_grad_core(const Vector& w, double b, const Dataset& ds, LossKind kind,
                    Workspace& ws, double& loss, Vector& grad_w, double& grad_b,
                    std::int64_t& clamp_trips) {
  ws.margins = ds.labels.array() * ((ds.points * w).array() + b);
  if (kind == LossKind::Logistic) {
    ws.u = (-ws.margins.abs()).exp();
    loss = (ws.u.log1p() + (-ws.margins).max(0.0)).sum();
    // l'(m) = -1/(1+e^m): u/(1+u) for m >= 0, 1/(1+u) for m < 0
    ws.lprime = -(ws.margins >= 0.0).select(ws.u / (1.0 + ws.u), 1.0 / (1.0 + ws.u));
  } else {
    clamp_trips += (ws.margins < -700.0).count();
    ws.u = (-ws.margins.max(-700.0)).exp();
    loss = ws.u.sum();
    ws.lprime = -ws.u;
  }
  ws.weights = ws.lprime * ds.labels.array();
  grad_w.noalias() = ds.points.transpose() * ws.weights.matrix();
  grad_b = ws.weights.sum();
  if (!std::isfinite(loss) || !grad_w.allFinite() || !std::isfinite(grad_b)) {
    Eigen::Index bad = 0;
    for (Eigen::Index i = 0; i < ws.margins.size(); ++i)
      if (!std::isfinite(ws.margins[i]) || !std::isfinite(ws.lprime[i])) bad = i;
    throw NumericError("non-finite loss/gradient at point index " + std::to_string(bad));
  }
}

}  // namespace

LossGrad loss_and_grad(const LinearModel& model, const Dataset& ds, LossKind kind) {
  if (model.dim() != ds.dim()) throw SpecError("loss_and_grad: dimension mismatch");
  Workspace ws;
  LossGrad lg;
  lg.grad_w.resize(model.dim());
  loss_grad_core(model.w, model.b, ds, kind, ws, lg.loss, lg.grad_w, lg.grad_b,
                 lg.clamp_trips);
  return lg;
}

double accuracy(const LinearModel& model, const Dataset& ds) {
  if (ds.size() == 0) throw SpecError("accuracy: empty dataset");
  if (model.dim() != ds.dim()) throw SpecError("accuracy: dimension mismatch");
  std::int64_t hits = 0;
  const Vector scores = ds.points * model.w;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const int pred = (scores[i] + model.b > 0.0) ? 1 : -1;
    if (pred == (ds.labels[i] > 0 ? 1 : -1)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

TrainTrace train(const Dataset& ds, const TrainConfig& cfg, const LinearModel& init,
                 const TraceSink& sink) {
  cfg.validate();
  if (init.dim() != ds.dim()) throw SpecError("train: init dimension mismatch");
  for (const auto& [name, es] : cfg.eval_sets)
    if (es.dim() != ds.dim()) throw SpecError("train: eval set '" + name + "' dimension mismatch");

  LinearModel model = init;
  model.bias_learnable = cfg.bias_learnable;
  if (!cfg.bias_learnable) model.b = 0.0;

  const Vector& ref = ds.spec.w_true;  // alignment reference
  const bool store_w = ds.dim() <= 64;
  // Thinned snapshot schedule for large d: ~20 log-spaced logged steps.
  std::vector<std::int64_t> checkpoints;
  if (!store_w && cfg.total_steps > 0) {
    for (int k = 0; k <= 20; ++k) {
      const double t = std::pow(static_cast<double>(cfg.total_steps), k / 20.0);
      checkpoints.push_back(static_cast<std::int64_t>(t));
    }
  }

  TrainTrace trace;
  for (const auto& [name, es] : cfg.eval_sets) trace.eval_names.push_back(name);
  if (cfg.adversarial_eval) trace.eval_names.push_back("adv");

  Workspace ws;
  Vector grad_w(ds.dim());
  double loss = 0.0, grad_b = 0.0;

  auto log_entry = [&](std::int64_t t) {
    TraceEntry e;
    e.t = t;
    e.b = model.b;
    e.train_loss = loss;
    e.train_acc = accuracy(model, ds);
    for (const auto& [name, es] : cfg.eval_sets) e.eval_acc[name] = accuracy(model, es);
    if (cfg.adversarial_eval)
      e.eval_acc["adv"] =
          adversarial_accuracy(model, cfg.eval_sets.front().second, *cfg.adversarial_eval);
    e.norm_w = model.w.norm();
    const double rn = ref.size() == model.w.size() ? ref.norm() : 0.0;
    e.cos_align = (e.norm_w > 0 && rn > 0) ? model.w.dot(ref) / (e.norm_w * rn) : 0.0;
    if (store_w || t == 0 ||
        std::find(checkpoints.begin(), checkpoints.end(), t) != checkpoints.end())
      e.w_snapshot = model.w;
    trace.append(std::move(e));
    if (sink) sink(trace.entries.back(), trace);
  };

  for (std::int64_t t = 0; t <= cfg.total_steps; ++t) {
    loss_grad_core(model.w, model.b, ds, cfg.loss_kind, ws, loss, grad_w, grad_b,
                   trace.exp_clamp_trips);
    if (t == 0 || t == cfg.total_steps || t % cfg.log_every == 0) log_entry(t);
    if (t == cfg.total_steps) break;
    const double gb = cfg.bias_learnable ? grad_b : 0.0;
    const double gnorm = std::sqrt(grad_w.squaredNorm() + gb * gb);
    if (cfg.learning_rate * gnorm > kDivergenceGuard)
      throw NumericError("divergence guard tripped at step " + std::to_string(t) +
                         ": eta*||grad|| = " + std::to_string(cfg.learning_rate * gnorm));
    model.w.noalias() -= cfg.learning_rate * grad_w;
    if (cfg.bias_learnable) model.b -= cfg.learning_rate * grad_b;
  }
  return trace;
}

double fill_residuals(TrainTrace& trace, const Vector& w_hat) {
  std::vector<double> rhos;
  for (auto& e : trace.entries) {
    if (e.t < 1) continue;
    if (e.w_snapshot.size() == 0) continue;
    if (e.w_snapshot.size() != w_hat.size())
      throw SpecError("fill_residuals: snapshot/w_hat dimension mismatch");
    e.rho_norm = (e.w_snapshot - std::log(static_cast<double>(e.t)) * w_hat).norm();
    rhos.push_back(e.rho_norm);
  }
  if (rhos.empty()) throw SpecError("fill_residuals: no snapshots with t >= 1");
  double b_hat = 0.0;
  for (std::size_t i = rhos.size() / 2; i < rhos.size(); ++i)
    b_hat = std::max(b_hat, rhos[i]);
  return b_hat;
}

}  // namespace groksim
