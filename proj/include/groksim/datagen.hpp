#pragma once

#include "groksim/types.hpp"

#include <vector>

namespace groksim {

/// Uniform box samples conditioned on the class half-space band
/// |w_true . x| >= gamma/2. Class counts are exact.
Dataset gen_standard(const DatasetSpec& spec);

/// Uniform box samples restricted to gamma/2 <= |w_true . x| <= alpha*gamma.
Dataset gen_concentrated(const DatasetSpec& spec);

/// Places s_pos / s_neg points exactly on the surfaces w_true . x = +/- gamma/2
/// (lateral coordinates uniform in the box slice) and draws the remaining
/// population at margin >= gamma/2 * 1.5 so the planted points are the unique
/// margin-achieving set.
Dataset gen_planted(const DatasetSpec& spec);

/// Dispatch on spec.kind.
Dataset generate(const DatasetSpec& spec);

struct MarginReport {
  double min_margin = 0.0;                 // min_i y_i w_true . x_i
  std::vector<std::int64_t> violations;    // indices with margin < gamma/2
};

MarginReport verify_margin(const Dataset& ds);

/// Clearance factor applied to population points in gen_planted.
inline constexpr double kPlantedMarginGapFactor = 1.5;

}  // namespace groksim
