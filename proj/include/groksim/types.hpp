#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace groksim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SeparabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { Standard, Concentrated, Planted };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Standard;
  double gamma = 1e-3;
  Vector w_true;  // unit-norm ground-truth separator
  std::optional<double> alpha_sens;
  double box_halfwidth = 5.0;
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  std::optional<std::int64_t> s_pos;  // planted support counts
  std::optional<std::int64_t> s_neg;
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(w_true.size()); }
  void validate() const;
};

struct Dataset {
  Matrix points;            // N x d, row per point
  Eigen::VectorXd labels;   // entries in {-1, +1}
  DatasetSpec spec;
  double radius_bound = 0.0;  // max_i ||x_i||, recorded at construction

  std::int64_t size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }

  /// Recompute the radius bound and check internal invariants; throws on violation.
  void check_invariants() const;
};

struct LinearModel {
  Vector w;
  double b = 0.0;
  bool bias_learnable = true;

  int dim() const { return static_cast<int>(w.size()); }
  /// +1 if w.x + b > 0, else -1. Score exactly 0 predicts -1 (pinned convention).
  int predict(const Eigen::Ref<const Vector>& x) const {
    return (w.dot(x) + b > 0.0) ? 1 : -1;
  }
};

enum class LossKind { Logistic, Exponential };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct PgdConfig {
  double eps_adv = 1.0;  // l-inf radius
  double step = 0.25;
  int iters = 20;
  bool random_start = false;
  double clip_lo = -5.0;
  double clip_hi = 5.0;

  void validate() const {
    if (eps_adv < 0) throw SpecError("PgdConfig.eps_adv must be >= 0");
    if (step <= 0) throw SpecError("PgdConfig.step must be > 0");
    if (iters < 1) throw SpecError("PgdConfig.iters must be >= 1");
    if (clip_lo > clip_hi) throw SpecError("PgdConfig: clip_lo > clip_hi");
  }
};

struct TrainConfig {
  double learning_rate = 1e-2;
  std::int64_t total_steps = 0;
  std::int64_t log_every = 100;
  LossKind loss_kind = LossKind::Logistic;
  bool bias_learnable = true;
  // Named evaluation sets; accuracy on each is logged as Q_<name>.
  std::vector<std::pair<std::string, Dataset>> eval_sets;
  std::optional<PgdConfig> adversarial_eval;  // attacks the first eval set

  void validate() const;
};

struct TraceEntry {
  std::int64_t t = 0;
  Vector w_snapshot;  // empty when snapshots are thinned (large d)
  double b = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // P(t)
  std::map<std::string, double> eval_acc;  // Q_<name>(t)
  double norm_w = 0.0;
  double cos_align = 0.0;
  double rho_norm = std::numeric_limits<double>::quiet_NaN();  // filled post hoc
};

struct TrainTrace {
  std::vector<TraceEntry> entries;
  std::vector<std::string> eval_names;  // column order for Q_<name>
  std::int64_t exp_clamp_trips = 0;     // exponential-loss clamp counter

  void append(TraceEntry e);
  void check_invariants() const;
};

}  // namespace groksim
