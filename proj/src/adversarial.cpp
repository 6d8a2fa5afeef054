#include "groksim/adversarial.hpp"

#include "groksim/rng.hpp"
#include "groksim/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace groksim {
namespace {

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

Matrix pgd_attack(const LinearModel& model, const Dataset& ds, const PgdConfig& cfg,
                  std::uint64_t random_start_seed) {
  cfg.validate();
  if (model.dim() != ds.dim()) throw SpecError("pgd_attack: dimension mismatch");
  const auto n = ds.size();
  const auto d = ds.dim();
  Matrix adv = ds.points;
  Xoshiro256pp rng(random_start_seed);
  // Ascent direction of the per-example logistic loss l(y(w.x+b)) in x is
  // -y * sign(w) coordinatewise (l' < 0 everywhere), independent of x: the
  // sign pattern is constant, so each iterate moves the same way.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = ds.labels[i];
    Vector x = ds.points.row(i).transpose();
    if (cfg.random_start)
      for (Eigen::Index j = 0; j < d; ++j)
        x[j] += rng.uniform(-cfg.eps_adv, cfg.eps_adv);
    for (int it = 0; it < cfg.iters; ++it) {
      for (Eigen::Index j = 0; j < d; ++j) {
        x[j] += cfg.step * (-y) * sgn(model.w[j]);
        // l-inf ball projection, then box clip — both per coordinate
        x[j] = std::clamp(x[j], ds.points(i, j) - cfg.eps_adv, ds.points(i, j) + cfg.eps_adv);
        x[j] = std::clamp(x[j], cfg.clip_lo, cfg.clip_hi);
      }
    }
    adv.row(i) = x.transpose();
  }
  return adv;
}

Matrix linear_pgd_oracle(const LinearModel& model, const Dataset& ds, const PgdConfig& cfg) {
  cfg.validate();
  if (cfg.random_start) throw SpecError("linear_pgd_oracle: random_start must be off");
  if (model.dim() != ds.dim()) throw SpecError("linear_pgd_oracle: dimension mismatch");
  Matrix adv = ds.points;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double y = ds.labels[i];
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      if (model.w[j] == 0.0) continue;
      const double moved = ds.points(i, j) - y * cfg.eps_adv * sgn(model.w[j]);
      adv(i, j) = std::clamp(moved, cfg.clip_lo, cfg.clip_hi);
    }
  }
  return adv;
}

double adversarial_accuracy(const LinearModel& model, const Dataset& ds, const PgdConfig& cfg) {
  Dataset perturbed = ds;
  perturbed.points = pgd_attack(model, ds, cfg);
  perturbed.radius_bound = perturbed.size() > 0
                               ? perturbed.points.rowwise().norm().maxCoeff()
                               : 0.0;
  return accuracy(model, perturbed);
}

}  // namespace groksim
