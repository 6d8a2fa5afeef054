#pragma once

#include "groksim/types.hpp"

namespace groksim {

/// PGD l-inf attack on the per-example logistic loss:
///   x <- clip_box( project_ball( x + step * sign(grad_x) ) )
/// sign(0) = 0, so coordinates with w_j = 0 never move. Returns the perturbed
/// point matrix (same shape as ds.points).
Matrix pgd_attack(const LinearModel& model, const Dataset& ds, const PgdConfig& cfg,
                  std::uint64_t random_start_seed = 0);

/// Closed-form solution of the attack for a linear model:
///   x_j <- clip(x_j - y * eps_adv * sign(w_j)).
/// Matches pgd_attack bit for bit when random_start is off and
/// step * iters >= eps_adv.
Matrix linear_pgd_oracle(const LinearModel& model, const Dataset& ds, const PgdConfig& cfg);

/// accuracy() evaluated on the perturbed point set.
double adversarial_accuracy(const LinearModel& model, const Dataset& ds, const PgdConfig& cfg);

}  // namespace groksim
