#include "groksim/types.hpp"

#include <cmath>

namespace groksim {

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Standard: return "standard";
    case DatasetKind::Concentrated: return "concentrated";
    case DatasetKind::Planted: return "planted";
  }
  throw SpecError("unknown DatasetKind");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "standard") return DatasetKind::Standard;
  if (s == "concentrated") return DatasetKind::Concentrated;
  if (s == "planted") return DatasetKind::Planted;
  throw SpecError("unknown dataset kind: " + s);
}

std::string to_string(LossKind k) {
  return k == LossKind::Logistic ? "logistic" : "exponential";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "logistic") return LossKind::Logistic;
  if (s == "exponential") return LossKind::Exponential;
  throw SpecError("unknown loss kind: " + s);
}

void DatasetSpec::validate() const {
  if (w_true.size() == 0) throw SpecError("DatasetSpec.w_true is empty");
  if (std::abs(w_true.norm() - 1.0) > 1e-12)
    throw SpecError("DatasetSpec.w_true must have unit norm within 1e-12");
  if (!(gamma > 0)) throw SpecError("DatasetSpec.gamma must be > 0");
  if (n_pos < 0 || n_neg < 0) throw SpecError("DatasetSpec.class_counts must be >= 0");
  if (kind == DatasetKind::Standard && !(box_halfwidth > gamma / 2))
    throw SpecError("DatasetSpec.box_halfwidth must exceed gamma/2");
  if (kind == DatasetKind::Concentrated) {
    if (!alpha_sens) throw SpecError("concentrated spec requires alpha_sens");
    if (!(*alpha_sens * gamma > gamma / 2))
      throw SpecError("degenerate band: alpha_sens*gamma <= gamma/2");
  }
  if (kind == DatasetKind::Planted) {
    if (!s_pos || !s_neg) throw SpecError("planted spec requires planted_support_counts");
    if (*s_pos < 1 || *s_neg < 1)
      throw SpecError("planted_support_counts must be >= 1 per class");
    if (n_pos < *s_pos || n_neg < *s_neg)
      throw SpecError("class_counts must be >= planted_support_counts");
  }
}

void Dataset::check_invariants() const {
  const auto n = points.rows();
  if (labels.size() != n) throw SpecError("Dataset: label/point count mismatch");
  double r = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = labels[i];
    if (y != 1.0 && y != -1.0) throw SpecError("Dataset: label not in {-1,+1}");
    r = std::max(r, points.row(i).norm());
  }
  if (r != radius_bound) throw SpecError("Dataset: recorded radius bound is stale");
  if (!std::isfinite(radius_bound)) throw SpecError("Dataset: radius bound not finite");
  if (spec.w_true.size() == points.cols()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = labels[i] * spec.w_true.dot(points.row(i));
      if (m < spec.gamma / 2 - 1e-12)
        throw SpecError("Dataset: margin condition violated at index " + std::to_string(i));
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw SpecError("TrainConfig.learning_rate must be > 0");
  if (total_steps < 0) throw SpecError("TrainConfig.total_steps must be >= 0");
  if (log_every < 1) throw SpecError("TrainConfig.log_every must be >= 1");
  if (total_steps > 0 && log_every > total_steps)
    throw SpecError("TrainConfig.log_every must be <= total_steps");
  if (adversarial_eval) {
    adversarial_eval->validate();
    if (eval_sets.empty())
      throw SpecError("TrainConfig.adversarial_eval requires at least one eval set");
  }
}

void TrainTrace::append(TraceEntry e) {
  if (!entries.empty() && e.t <= entries.back().t)
    throw SpecError("TrainTrace: entries must be strictly increasing in t");
  entries.push_back(std::move(e));
}

void TrainTrace::check_invariants() const {
  std::int64_t prev = -1;
  for (const auto& e : entries) {
    if (e.t <= prev) throw SpecError("TrainTrace: non-increasing t");
    prev = e.t;
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(e.train_acc)) throw SpecError("TrainTrace: accuracy out of [0,1]");
    for (const auto& [name, q] : e.eval_acc)
      if (!in01(q)) throw SpecError("TrainTrace: Q_" + name + " out of [0,1]");
    if (e.norm_w < 0) throw SpecError("TrainTrace: negative norm");
    if (e.cos_align < -1.0 - 1e-12 || e.cos_align > 1.0 + 1e-12)
      throw SpecError("TrainTrace: cos_align out of [-1,1]");
  }
}

}  // namespace groksim
