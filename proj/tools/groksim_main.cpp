#include "groksim/experiment.hpp"
#include "groksim/types.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>

namespace {

using groksim::ExperimentConfig;
using nlohmann::json;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> steps;
  bool quiet = false;
};

void apply(const Overrides& o, ExperimentConfig& cfg) {
  if (o.seed) cfg.dataset.seed = *o.seed;
  if (o.steps) cfg.train.total_steps = *o.steps;
}

void progress(const Overrides& o, const std::string& msg) {
  if (!o.quiet) std::cerr << msg << "\n";
}

int dispatch(int argc, char** argv) {
  CLI::App app{"grokking-dynamics experiment runner"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_flag("--quiet", o.quiet, "suppress progress output on stderr");

  std::string config_path, grid_path, run_dir;

  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "override dataset seed");
    sub->add_option("--steps", o.steps, "override total training steps");
  };

  auto* run = app.add_subcommand("run", "execute one experiment config");
  run->add_option("config", config_path, "experiment config JSON")->required();
  add_overrides(run);

  auto* verify = app.add_subcommand("verify", "re-check a stored run directory");
  verify->add_option("dir", run_dir, "run directory")->required();

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  sweep->add_option("config", config_path, "base experiment config JSON")->required();
  sweep->add_option("--grid", grid_path, "grid JSON file")->required();
  add_overrides(sweep);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    auto cfg = groksim::load_experiment_config(config_path);
    apply(o, cfg);
    progress(o, "run " + cfg.run_id + ": generating data and training...");
    const auto res = groksim::run_experiment(cfg);
    progress(o, "run " + cfg.run_id + ": done, outputs in " + res.run_dir.string());
    std::cout << res.summary.dump(2) << "\n";
    return 0;
  }
  if (verify->parsed()) {
    const auto rep = groksim::verify_run(run_dir);
    json j = json::array();
    for (const auto& c : rep.checks)
      j.push_back({{"name", c.name},
                   {"pass", c.pass},
                   {"mandatory", c.mandatory},
                   {"measured_error", c.measured_error}});
    std::cout << json{{"checks", j}, {"all_mandatory_pass", rep.all_mandatory_pass()}}.dump(2)
              << "\n";
    return rep.all_mandatory_pass() ? 0 : 1;
  }
  if (sweep->parsed()) {
    auto cfg = groksim::load_experiment_config(config_path);
    apply(o, cfg);
    const auto grid = groksim::load_sweep_grid(grid_path);
    progress(o, "sweep: " + std::to_string(grid.points.size()) + " grid points");
    const auto rows = groksim::run_sweep(cfg, grid);
    json j = json::array();
    for (const auto& r : rows)
      j.push_back({{"run_id", r.run_id}, {"ok", r.ok}, {"error", r.error}});
    std::cout << json{{"rows", j},
                      {"summary_csv", (cfg.output_dir / "sweep_summary.csv").string()}}
                     .dump(2)
              << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const groksim::SeparabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const groksim::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const groksim::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
