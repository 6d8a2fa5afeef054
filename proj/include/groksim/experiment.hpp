#pragma once

#include "groksim/analytics.hpp"
#include "groksim/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace groksim {

struct AnalyticsConfig {
  std::vector<double> eps_list{0.05};
  double zeta_threshold = 100.0;
  double frac_tol = 0.01;
  double bound_slack = 3.0;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<DatasetSpec> eval_datasets;  // logged as Q_<kind>, deduped with indices
  struct {
    double learning_rate = 1e-2;
    std::int64_t total_steps = 0;
    std::int64_t log_every = 100;
    LossKind loss_kind = LossKind::Logistic;
    bool bias_learnable = true;
    std::optional<PgdConfig> adversarial_eval;  // attacks the first eval set
  } train;
  AnalyticsConfig analytics;
  std::filesystem::path output_dir = ".";
  std::string run_id;

  void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunResult {
  std::filesystem::path run_dir;
  TrainTrace trace;
  SvmSolution svm;
  GrokReport grok;        // at the first eps in eps_list, vs the first eval set
  PhaseReport phases;
  AnalyticContext ctx;
  double b_measured = 0.0;
  double B_hat = 0.0;
  nlohmann::json summary;  // mirror of <run_dir>/summary.json
};

/// Full pipeline: generate data, train, solve the SVM, run analytics, and
/// write trace.csv, train_data.csv, svm.json, grok_report.json,
/// phase_report.json and summary.json under <output_dir>/<run_id>/.
RunResult run_experiment(const ExperimentConfig& cfg);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  bool mandatory = true;
  double measured_error = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_mandatory_pass() const;
};

/// Re-runs the analytic-vs-empirical checks against a stored run directory.
VerifyReport verify_run(const std::filesystem::path& run_dir);

/// Cartesian grid over dataset parameters (planted_support_counts,
/// class_counts, gamma, alpha_sens, seed). Each point is a set of overrides
/// applied to the base config's dataset spec.
struct SweepGrid {
  std::vector<nlohmann::json> points;
  std::vector<std::string> point_ids;
};

SweepGrid load_sweep_grid(const std::filesystem::path& path);

struct SweepRow {
  std::string run_id;
  bool ok = false;
  std::string error;
  RunResult result;  // valid when ok
};

/// Runs the grid (parallel, isolated output subdirectories) and writes
/// sweep_summary.csv under the base config's output_dir.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepGrid& grid,
                                int max_parallel = 0);

void write_summary_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace groksim
