#include <doctest.h>

#include "groksim/experiment.hpp"
#include "groksim/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace groksim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "groksim_test_experiment";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_config(const fs::path& out, const std::string& run_id) {
  ExperimentConfig cfg;
  cfg.run_id = run_id;
  cfg.output_dir = out;
  cfg.dataset.kind = DatasetKind::Standard;
  cfg.dataset.gamma = 1e-2;
  cfg.dataset.w_true = Vector(2);
  cfg.dataset.w_true << 0.7071067811865476, 0.7071067811865476;
  cfg.dataset.n_pos = 40;
  cfg.dataset.n_neg = 40;
  cfg.dataset.seed = 99;
  DatasetSpec ev = cfg.dataset;
  ev.seed = 101;
  cfg.eval_datasets.push_back(ev);
  cfg.train.total_steps = 2000;
  cfg.train.log_every = 100;
  PgdConfig pgd;
  pgd.eps_adv = 2e-3;
  pgd.step = 5e-4;
  pgd.iters = 10;
  cfg.train.adversarial_eval = pgd;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config loading reports the missing field by name") {
  const fs::path out = scratch_dir();
  const fs::path cfg_path = out / "bad.json";
  {
    std::ofstream f(cfg_path);
    f << R"({"run_id":"x","dataset":{"kind":"standard","w_true":[1.0,0.0],
             "n_pos":4,"n_neg":4,"seed":1},
             "train":{"learning_rate":0.01,"total_steps":10}})";
  }
  try {
    load_experiment_config(cfg_path);
    FAIL("expected SpecError");
  } catch (const SpecError& e) {
    CHECK(std::string(e.what()).find("gamma") != std::string::npos);
  }
}

TEST_CASE("run ids must be filesystem safe") {
  ExperimentConfig cfg = tiny_config(scratch_dir(), "ok");
  cfg.validate();
  cfg.run_id = "../escape";
  CHECK_THROWS_AS(cfg.validate(), SpecError);
  cfg.run_id = "";
  CHECK_THROWS_AS(cfg.validate(), SpecError);
}

TEST_CASE("end-to-end run writes all artifacts and is byte-deterministic") {
  const fs::path out = scratch_dir();
  const ExperimentConfig cfg = tiny_config(out, "tiny");
  const RunResult res = run_experiment(cfg);
  for (const char* name : {"trace.csv", "train_data.csv", "svm.json", "grok_report.json",
                           "phase_report.json", "summary.json"}) {
    CHECK(fs::exists(res.run_dir / name));
  }
  CHECK(res.trace.entries.size() == 21);
  CHECK(res.summary.at("run_id") == "tiny");
  // Q_adv is logged since adversarial evaluation is configured.
  CHECK(res.trace.entries.back().eval_acc.count("adv") == 1);

  const std::string first = slurp(res.run_dir / "trace.csv");
  ExperimentConfig again = cfg;
  again.run_id = "tiny_rerun";
  const RunResult res2 = run_experiment(again);
  CHECK(first == slurp(res2.run_dir / "trace.csv"));
}

TEST_CASE("verify passes on a fresh run and catches a tampered trace") {
  const fs::path out = scratch_dir();
  const RunResult res = run_experiment(tiny_config(out, "fresh"));
  const VerifyReport rep = verify_run(res.run_dir);
  CHECK(rep.all_mandatory_pass());
  bool saw_kkt = false, saw_integrity = false, saw_pgd = false;
  for (const auto& c : rep.checks) {
    if (c.name == "kkt") saw_kkt = c.pass;
    if (c.name == "trace_integrity") saw_integrity = c.pass;
    if (c.name == "pgd_oracle") saw_pgd = c.pass;
  }
  CHECK(saw_kkt);
  CHECK(saw_integrity);
  CHECK(saw_pgd);

  // Duplicate the last data row: logged steps stop being strictly increasing.
  const fs::path trace_path = res.run_dir / "trace.csv";
  std::string text = slurp(trace_path);
  const auto last_line = text.rfind('\n', text.size() - 2);
  text += text.substr(last_line + 1);
  std::ofstream(trace_path, std::ios::binary) << text;
  const VerifyReport bad = verify_run(res.run_dir);
  CHECK(!bad.all_mandatory_pass());
  for (const auto& c : bad.checks)
    if (c.name == "trace_integrity") CHECK(!c.pass);
}

TEST_CASE("missing run directory is a config error") {
  CHECK_THROWS_AS(verify_run(scratch_dir() / "nope"), SpecError);
}

TEST_CASE("sweep grids load from explicit points and cartesian products") {
  const fs::path out = scratch_dir();
  {
    std::ofstream f(out / "points.json");
    f << R"({"points":[{"seed":1},{"seed":2},{"seed":3}]})";
  }
  const SweepGrid pts = load_sweep_grid(out / "points.json");
  CHECK(pts.points.size() == 3);
  CHECK(pts.point_ids.size() == 3);
  {
    std::ofstream f(out / "grid.json");
    f << R"({"grid":{"seed":[1,2],"n_pos":[10,20]}})";
  }
  const SweepGrid prod = load_sweep_grid(out / "grid.json");
  CHECK(prod.points.size() == 4);
  {
    std::ofstream f(out / "bad.json");
    f << R"({"neither":[]})";
  }
  CHECK_THROWS_AS(load_sweep_grid(out / "bad.json"), SpecError);
}

TEST_CASE("sweep runs each point and an empty grid yields a header-only table") {
  const fs::path out = scratch_dir();
  ExperimentConfig base = tiny_config(out, "sw");
  base.train.total_steps = 500;
  SweepGrid grid;
  grid.points = {json{{"seed", 5}}, json{{"seed", 6}}};
  grid.point_ids = {"a", "b"};
  const auto rows = run_sweep(base, grid, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ok);
  CHECK(rows[1].ok);
  CHECK(fs::exists(out / "sw_a" / "summary.json"));
  CHECK(fs::exists(out / "sw_b" / "summary.json"));
  const std::string csv = slurp(out / "sweep_summary.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  SweepGrid empty;
  const auto none = run_sweep(base, empty, 1);
  CHECK(none.empty());
  const std::string header_only = slurp(out / "sweep_summary.csv");
  CHECK(std::count(header_only.begin(), header_only.end(), '\n') == 1);
}

TEST_CASE("sweep failures are recorded without aborting the grid") {
  const fs::path out = scratch_dir();
  ExperimentConfig base = tiny_config(out, "mix");
  base.train.total_steps = 200;
  SweepGrid grid;
  grid.points = {json{{"seed", 7}}, json{{"gamma", -1.0}}};
  grid.point_ids = {"good", "bad"};
  const auto rows = run_sweep(base, grid, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ok);
  CHECK(!rows[1].ok);
  CHECK(!rows[1].error.empty());
}

TEST_CASE("duplicate eval kinds get distinct trace columns") {
  const fs::path out = scratch_dir();
  ExperimentConfig cfg = tiny_config(out, "dup");
  cfg.train.adversarial_eval.reset();
  cfg.train.total_steps = 200;
  DatasetSpec second = cfg.eval_datasets.front();
  second.seed = 202;
  cfg.eval_datasets.push_back(second);
  const RunResult res = run_experiment(cfg);
  const auto& names = res.trace.eval_names;
  CHECK(std::count(names.begin(), names.end(), "standard") == 1);
  CHECK(std::count(names.begin(), names.end(), "standard_2") == 1);
}

#ifdef GROKSIM_BIN
TEST_CASE("cli exit codes distinguish config, numeric, and separability errors") {
  const fs::path out = scratch_dir();
  const std::string bin = GROKSIM_BIN;
  auto run_cli = [&](const std::string& args) {
    const int rc = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  // Missing field -> 2.
  {
    std::ofstream f(out / "missing.json");
    f << R"({"run_id":"m","dataset":{"kind":"standard","w_true":[1.0,0.0],
             "n_pos":4,"n_neg":4,"seed":1},
             "train":{"learning_rate":0.01,"total_steps":10}})";
  }
  CHECK(run_cli("run " + (out / "missing.json").string()) == 2);
  // Unreachable margin band -> separability, 4.
  {
    json cfg = {
        {"run_id", "sep"},
        {"dataset",
         {{"kind", "standard"}, {"gamma", 9.9999999}, {"box_halfwidth", 5.0},
          {"w_true", {1.0, 0.0}}, {"n_pos", 4}, {"n_neg", 4}, {"seed", 1}}},
        {"eval_datasets",
         {{{"kind", "standard"}, {"gamma", 1e-2}, {"w_true", {1.0, 0.0}},
           {"n_pos", 4}, {"n_neg", 4}, {"seed", 2}}}},
        {"train", {{"learning_rate", 0.01}, {"total_steps", 10}}},
        {"output_dir", (out / "runs").string()}};
    std::ofstream f(out / "sep.json");
    f << cfg.dump();
  }
  CHECK(run_cli("run " + (out / "sep.json").string()) == 4);
  // Exploding learning rate on the exponential loss -> numeric, 3.
  {
    json cfg = {
        {"run_id", "num"},
        {"dataset",
         {{"kind", "standard"}, {"gamma", 1e-2}, {"w_true", {1.0, 0.0}},
          {"n_pos", 20}, {"n_neg", 20}, {"seed", 1}}},
        {"eval_datasets",
         {{{"kind", "standard"}, {"gamma", 1e-2}, {"w_true", {1.0, 0.0}},
           {"n_pos", 4}, {"n_neg", 4}, {"seed", 2}}}},
        {"train",
         {{"learning_rate", 1e18}, {"total_steps", 100}, {"log_every", 10},
          {"loss_kind", "exponential"}}},
        {"output_dir", (out / "runs").string()}};
    std::ofstream f(out / "num.json");
    f << cfg.dump();
  }
  CHECK(run_cli("run " + (out / "num.json").string()) == 3);
}
#endif
