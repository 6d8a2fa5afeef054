#include "groksim/datagen.hpp"

#include "groksim/rng.hpp"

#include <cmath>

namespace groksim {
namespace {

constexpr std::int64_t kProposalCapPerPoint = 10'000'000;
constexpr std::int64_t kFeasibilityWindow = 100'000;

// Tracks global acceptance rate; aborts early when the band is (numerically)
// unreachable and hard-caps proposals per point.
struct RejectionBudget {
  std::int64_t proposals = 0;
  std::int64_t accepts = 0;

  void propose(std::int64_t spent_on_current) {
    ++proposals;
    if (proposals == kFeasibilityWindow &&
        static_cast<double>(accepts) / kFeasibilityWindow < 1e-6)
      throw SeparabilityError(
          "infeasible dataset spec: acceptance probability below 1e-6 over first 1e5 proposals");
    if (spent_on_current >= kProposalCapPerPoint)
      throw SeparabilityError("infeasible dataset spec: proposal cap reached for one point");
  }
  void accept() { ++accepts; }
};

Vector sample_box(Xoshiro256pp& rng, int d, double halfwidth) {
  Vector x(d);
  for (int k = 0; k < d; ++k) x[k] = rng.uniform(-halfwidth, halfwidth);
  return x;
}

// Draws one point with y * w_true.x in [lo, hi], uniform on the box band.
Vector sample_band(Xoshiro256pp& rng, const DatasetSpec& spec, double y, double lo,
                   double hi, RejectionBudget& budget) {
  std::int64_t spent = 0;
  for (;;) {
    budget.propose(spent++);
    Vector x = sample_box(rng, spec.dim(), spec.box_halfwidth);
    const double m = y * spec.w_true.dot(x);
    if (m >= lo && m <= hi) {
      budget.accept();
      return x;
    }
  }
}

// Draws one point exactly on the surface w_true.x = offset, lateral coordinates
// uniform in the box slice. Implemented as a thin slab of half-thickness gamma/2
// around the surface, projected onto it; the slab is thin enough that the
// boundary layer where this deviates from slice-uniform is negligible.
Vector sample_slice(Xoshiro256pp& rng, const DatasetSpec& spec, double offset,
                    RejectionBudget& budget) {
  const double h = spec.gamma / 2;
  std::int64_t spent = 0;
  for (;;) {
    budget.propose(spent++);
    Vector x = sample_box(rng, spec.dim(), spec.box_halfwidth);
    const double m = spec.w_true.dot(x);
    if (std::abs(m - offset) <= h) {
      budget.accept();
      x += (offset - m) * spec.w_true;
      return x;
    }
  }
}

Dataset assemble(const DatasetSpec& spec, const std::vector<Vector>& pts,
                 const std::vector<double>& ys) {
  Dataset ds;
  ds.spec = spec;
  const auto n = static_cast<Eigen::Index>(pts.size());
  ds.points.resize(n, spec.dim());
  ds.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.points.row(i) = pts[i];
    ds.labels[i] = ys[i];
  }
  ds.radius_bound = n > 0 ? ds.points.rowwise().norm().maxCoeff() : 0.0;
  return ds;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Dataset gen_standard(const DatasetSpec& spec) {
  spec.validate();
  if (spec.kind != DatasetKind::Standard) throw SpecError("gen_standard: wrong kind");
  Xoshiro256pp rng(spec.seed);
  RejectionBudget budget;
  std::vector<Vector> pts;
  std::vector<double> ys;
  for (std::int64_t i = 0; i < spec.n_pos; ++i) {
    pts.push_back(sample_band(rng, spec, +1.0, spec.gamma / 2, kInf, budget));
    ys.push_back(+1.0);
  }
  for (std::int64_t i = 0; i < spec.n_neg; ++i) {
    pts.push_back(sample_band(rng, spec, -1.0, spec.gamma / 2, kInf, budget));
    ys.push_back(-1.0);
  }
  return assemble(spec, pts, ys);
}

Dataset gen_concentrated(const DatasetSpec& spec) {
  spec.validate();
  if (spec.kind != DatasetKind::Concentrated) throw SpecError("gen_concentrated: wrong kind");
  Xoshiro256pp rng(spec.seed);
  RejectionBudget budget;
  const double hi = *spec.alpha_sens * spec.gamma;
  std::vector<Vector> pts;
  std::vector<double> ys;
  for (std::int64_t i = 0; i < spec.n_pos; ++i) {
    pts.push_back(sample_band(rng, spec, +1.0, spec.gamma / 2, hi, budget));
    ys.push_back(+1.0);
  }
  for (std::int64_t i = 0; i < spec.n_neg; ++i) {
    pts.push_back(sample_band(rng, spec, -1.0, spec.gamma / 2, hi, budget));
    ys.push_back(-1.0);
  }
  return assemble(spec, pts, ys);
}

Dataset gen_planted(const DatasetSpec& spec) {
  spec.validate();
  if (spec.kind != DatasetKind::Planted) throw SpecError("gen_planted: wrong kind");
  Xoshiro256pp rng(spec.seed);
  RejectionBudget budget;
  std::vector<Vector> pts;
  std::vector<double> ys;
  // Planted points first: rows [0, s_pos) are the +1 supports, then the -1
  // supports, so the planted index set is a known prefix.
  for (std::int64_t i = 0; i < *spec.s_pos; ++i) {
    pts.push_back(sample_slice(rng, spec, +spec.gamma / 2, budget));
    ys.push_back(+1.0);
  }
  for (std::int64_t i = 0; i < *spec.s_neg; ++i) {
    pts.push_back(sample_slice(rng, spec, -spec.gamma / 2, budget));
    ys.push_back(-1.0);
  }
  const double pop_lo = spec.gamma / 2 * kPlantedMarginGapFactor;
  for (std::int64_t i = 0; i < spec.n_pos - *spec.s_pos; ++i) {
    pts.push_back(sample_band(rng, spec, +1.0, pop_lo, kInf, budget));
    ys.push_back(+1.0);
  }
  for (std::int64_t i = 0; i < spec.n_neg - *spec.s_neg; ++i) {
    pts.push_back(sample_band(rng, spec, -1.0, pop_lo, kInf, budget));
    ys.push_back(-1.0);
  }
  return assemble(spec, pts, ys);
}

Dataset generate(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::Standard: return gen_standard(spec);
    case DatasetKind::Concentrated: return gen_concentrated(spec);
    case DatasetKind::Planted: return gen_planted(spec);
  }
  throw SpecError("generate: unknown kind");
}

MarginReport verify_margin(const Dataset& ds) {
  MarginReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const double m = ds.labels[i] * ds.spec.w_true.dot(ds.points.row(i));
    report.min_margin = std::min(report.min_margin, m);
    if (m < ds.spec.gamma / 2) report.violations.push_back(i);
  }
  if (ds.size() == 0) report.min_margin = 0.0;
  return report;
}

}  // namespace groksim
