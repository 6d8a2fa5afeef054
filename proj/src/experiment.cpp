#include "groksim/experiment.hpp"

#include "groksim/adversarial.hpp"
#include "groksim/datagen.hpp"
#include "groksim/io.hpp"
#include "groksim/maxmargin.hpp"
#include "groksim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

namespace groksim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json grok_to_json(const GrokReport& g) {
  json j{{"eps", g.eps},
         {"verdict", g.verdict},
         {"zeta_threshold", g.zeta_threshold},
         {"sup_P", g.sup_P},
         {"sup_Q", g.sup_Q}};
  if (g.T_tr) j["T_tr"] = *g.T_tr;
  if (g.T_te) j["T_te"] = *g.T_te;
  if (g.zeta) j["zeta"] = *g.zeta;
  if (g.T_gr) j["T_gr"] = *g.T_gr;
  return j;
}

json phase_to_json(const PhaseReport& p) {
  json j{{"b0", p.b0}, {"method_notes", p.method_notes}};
  if (p.t0) j["t0"] = *p.t0;
  if (p.phase2_end) j["phase2_end"] = *p.phase2_end;
  if (p.phase3_span) j["phase3_span"] = {p.phase3_span->first, p.phase3_span->second};
  return j;
}

PhaseReport phase_from_json(const json& j) {
  PhaseReport p;
  p.b0 = j.at("b0").get<double>();
  p.method_notes = j.value("method_notes", "");
  if (j.contains("t0")) p.t0 = j["t0"].get<std::int64_t>();
  if (j.contains("phase2_end")) p.phase2_end = j["phase2_end"].get<std::int64_t>();
  if (j.contains("phase3_span"))
    p.phase3_span = std::make_pair(j["phase3_span"][0].get<std::int64_t>(),
                                   j["phase3_span"][1].get<std::int64_t>());
  return p;
}

std::string eval_name_for(const DatasetSpec& spec, std::vector<std::string>& used) {
  std::string base = to_string(spec.kind);
  std::string name = base;
  int k = 2;
  while (std::find(used.begin(), used.end(), name) != used.end())
    name = base + "_" + std::to_string(k++);
  used.push_back(name);
  return name;
}

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw SpecError("cannot open: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw SpecError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw SpecError("cannot open for writing: " + path.string());
  os << j.dump(2) << "\n";
}

}  // namespace

void ExperimentConfig::validate() const {
  if (run_id.empty()) throw SpecError("run_id must be nonempty");
  for (char c : run_id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'))
      throw SpecError("run_id contains a character unsafe for filenames: '" +
                      std::string(1, c) + "'");
  dataset.validate();
  for (const auto& es : eval_datasets) es.validate();
  if (eval_datasets.empty()) throw SpecError("eval_datasets must name at least one set");
  if (analytics.eps_list.empty()) throw SpecError("analytics.eps_list must be nonempty");
  for (double e : analytics.eps_list)
    if (!(e >= 0.0 && e < 1.0)) throw SpecError("analytics.eps_list values must be in [0,1)");
  if (!(analytics.zeta_threshold > 0)) throw SpecError("analytics.zeta_threshold must be > 0");
  if (!(analytics.bound_slack >= 1)) throw SpecError("analytics.bound_slack must be >= 1");
  if (!(train.learning_rate > 0)) throw SpecError("train.learning_rate must be > 0");
  if (train.total_steps < 0) throw SpecError("train.total_steps must be >= 0");
  if (train.log_every < 1) throw SpecError("train.log_every must be >= 1");
  if (train.adversarial_eval) train.adversarial_eval->validate();
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  const json j = read_json_file(path);
  ExperimentConfig cfg;
  try {
    cfg.dataset = j.at("dataset").get<DatasetSpec>();
    if (j.contains("eval_datasets"))
      for (const auto& e : j["eval_datasets"])
        cfg.eval_datasets.push_back(e.get<DatasetSpec>());
    const auto& t = j.at("train");
    cfg.train.learning_rate = t.at("learning_rate").get<double>();
    cfg.train.total_steps = t.at("total_steps").get<std::int64_t>();
    cfg.train.log_every = t.value("log_every", std::int64_t{100});
    cfg.train.loss_kind = loss_kind_from_string(t.value("loss_kind", std::string("logistic")));
    cfg.train.bias_learnable = t.value("bias_learnable", true);
    if (t.contains("adversarial_eval"))
      cfg.train.adversarial_eval = t["adversarial_eval"].get<PgdConfig>();
    if (j.contains("analytics")) {
      const auto& a = j["analytics"];
      if (a.contains("eps_list")) cfg.analytics.eps_list = a["eps_list"].get<std::vector<double>>();
      cfg.analytics.zeta_threshold = a.value("zeta_threshold", 100.0);
      cfg.analytics.frac_tol = a.value("frac_tol", 0.01);
      cfg.analytics.bound_slack = a.value("bound_slack", 3.0);
    }
    if (j.contains("output_dir")) {
      cfg.output_dir = j["output_dir"].get<std::string>();
    } else if (const char* root = std::getenv("GROKSIM_OUTPUT_ROOT")) {
      cfg.output_dir = root;
    }
    cfg.run_id = j.at("run_id").get<std::string>();
  } catch (const json::exception& e) {
    throw SpecError(std::string("config validation failure: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.run_dir = cfg.output_dir / cfg.run_id;
  fs::create_directories(res.run_dir);

  const Dataset ds = generate(cfg.dataset);
  ds.check_invariants();
  write_dataset_csv(ds, res.run_dir / "train_data.csv");

  TrainConfig tc;
  tc.learning_rate = cfg.train.learning_rate;
  tc.total_steps = cfg.train.total_steps;
  tc.log_every = cfg.train.log_every;
  tc.loss_kind = cfg.train.loss_kind;
  tc.bias_learnable = cfg.train.bias_learnable;
  tc.adversarial_eval = cfg.train.adversarial_eval;
  std::vector<std::string> used_names;
  for (const auto& es : cfg.eval_datasets)
    tc.eval_sets.emplace_back(eval_name_for(es, used_names), generate(es));

  // Stream the trace so an interrupted run leaves a parseable prefix; the
  // final file is rewritten once residuals are filled in.
  const fs::path trace_path = res.run_dir / "trace.csv";
  std::ofstream trace_stream(trace_path);
  if (!trace_stream) throw SpecError("cannot open for writing: " + trace_path.string());
  std::int64_t rows_since_flush = 0;
  const TraceSink sink = [&](const TraceEntry& e, const TrainTrace& tr) {
    if (e.t == 0) {
      trace_stream << "t,b,norm_w,cos_align,rho_norm,train_loss,P";
      for (const auto& name : tr.eval_names) trace_stream << ",Q_" << name;
      trace_stream << "\n";
    }
    trace_stream << e.t << ',' << format_double(e.b) << ',' << format_double(e.norm_w)
                 << ',' << format_double(e.cos_align) << ',' << format_double(e.rho_norm)
                 << ',' << format_double(e.train_loss) << ',' << format_double(e.train_acc);
    for (const auto& name : tr.eval_names)
      trace_stream << ',' << format_double(e.eval_acc.at(name));
    trace_stream << "\n";
    if (++rows_since_flush >= 1000) {
      trace_stream.flush();
      rows_since_flush = 0;
    }
  };

  LinearModel init;
  init.w = Vector::Zero(ds.dim());
  init.b = 0.0;
  res.trace = train(ds, tc, init, sink);
  trace_stream.close();

  res.svm = solve_hard_margin(ds);
  compute_w_tilde(res.svm, ds, tc.learning_rate);
  write_json_file(json(res.svm), res.run_dir / "svm.json");

  res.B_hat = fill_residuals(res.trace, res.svm.w_svm);
  write_trace_csv(res.trace, trace_path);  // now with rho_norm filled

  double alpha = 1.0;
  if (cfg.eval_datasets.front().alpha_sens) alpha = *cfg.eval_datasets.front().alpha_sens;
  else if (cfg.dataset.alpha_sens) alpha = *cfg.dataset.alpha_sens;
  res.ctx = AnalyticContext{res.svm.A_plus,  res.svm.A_minus, res.svm.delta,
                            res.svm.b_inf,   cfg.dataset.gamma, alpha,
                            res.B_hat,       tc.learning_rate,
                            static_cast<double>(ds.size()), ds.radius_bound};

  const AccuracySeries P = train_series(res.trace);
  const AccuracySeries Q = eval_series(res.trace, used_names.front());
  res.grok = grok_times(P, Q, cfg.analytics.eps_list.front(), cfg.analytics.zeta_threshold);
  json grok_all = grok_to_json(res.grok);
  for (std::size_t i = 1; i < cfg.analytics.eps_list.size(); ++i)
    grok_all["other_eps"].push_back(grok_to_json(
        grok_times(P, Q, cfg.analytics.eps_list[i], cfg.analytics.zeta_threshold)));
  write_json_file(grok_all, res.run_dir / "grok_report.json");

  res.phases = detect_t0(res.trace, res.svm, ds, cfg.analytics.frac_tol);
  if (res.phases.t0) res.phases = phase_segmentation(res.trace, res.phases);
  write_json_file(phase_to_json(res.phases), res.run_dir / "phase_report.json");

  res.b_measured = measured_bias_plateau(res.trace);

  json summary{
      {"run_id", cfg.run_id},
      {"kind", to_string(cfg.dataset.kind)},
      {"d", cfg.dataset.dim()},
      {"N", ds.size()},
      {"gamma", cfg.dataset.gamma},
      {"alpha_sens", alpha},
      {"eta", tc.learning_rate},
      {"total_steps", tc.total_steps},
      {"delta", res.svm.delta},
      {"b_inf_predicted", res.svm.b_inf},
      {"b_measured", res.b_measured},
      {"B_hat", res.B_hat},
      {"R", ds.radius_bound},
      {"eval_names", used_names},
      {"eps", res.grok.eps},
      {"verdict", res.grok.verdict},
      {"bound_slack", cfg.analytics.bound_slack},
      {"exp_clamp_trips", res.trace.exp_clamp_trips},
  };
  if (res.grok.T_tr) summary["T_tr"] = *res.grok.T_tr;
  if (res.grok.T_te) summary["T_te"] = *res.grok.T_te;
  if (res.grok.zeta) summary["zeta"] = *res.grok.zeta;
  if (tc.adversarial_eval) summary["adversarial_eval"] = json(*tc.adversarial_eval);
  if (res.phases.t0 && res.grok.T_te) {
    const GrokTimeBounds b = grok_time_bounds(res.ctx, res.grok.eps);
    summary["grok_time_bounds"] = {{"lower", b.lower}, {"upper", b.upper}};
    summary["T_te_over_t0"] =
        static_cast<double>(*res.grok.T_te) / static_cast<double>(std::max<std::int64_t>(1, *res.phases.t0));
  }
  if (tc.adversarial_eval && res.phases.phase3_span) {
    const auto rep = delayed_robustness_check(res.trace, res.phases);
    json dr{{"coincident", rep.coincident}, {"decade_ratio", rep.decade_ratio}};
    if (rep.T_te_adv) dr["T_te_adv"] = *rep.T_te_adv;
    if (rep.phase3_start) dr["phase3_start"] = *rep.phase3_start;
    summary["delayed_robustness"] = dr;
  }
  write_json_file(summary, res.run_dir / "summary.json");
  res.summary = std::move(summary);
  return res;
}

bool VerifyReport::all_mandatory_pass() const {
  for (const auto& c : checks)
    if (c.mandatory && !c.pass) return false;
  return true;
}

VerifyReport verify_run(const fs::path& run_dir) {
  VerifyReport rep;
  auto add = [&](std::string name, bool pass, double err, std::string detail,
                 bool mandatory = true) {
    rep.checks.push_back({std::move(name), pass, mandatory, err, std::move(detail)});
  };

  const json summary = read_json_file(run_dir / "summary.json");
  const Dataset ds = read_dataset_csv(run_dir / "train_data.csv");
  SvmSolution svm = read_json_file(run_dir / "svm.json").get<SvmSolution>();
  const PhaseReport phases = phase_from_json(read_json_file(run_dir / "phase_report.json"));

  // Trace integrity: the file must parse, steps must be strictly increasing,
  // values finite, and training loss monotone.
  TrainTrace trace;
  bool integrity = true;
  std::string why;
  try {
    trace = read_trace_csv(run_dir / "trace.csv");
    trace.check_invariants();
    if (trace.entries.size() < 2) throw SpecError("fewer than two logged entries");
    for (const auto& e : trace.entries)
      if (!std::isfinite(e.b) || !std::isfinite(e.train_loss) || e.train_loss < 0.0)
        throw SpecError("non-finite or negative logged value at t=" + std::to_string(e.t));
    double prev_loss = std::numeric_limits<double>::infinity();
    for (const auto& e : trace.entries) {
      if (e.train_loss > prev_loss + 1e-9 * std::max(1.0, prev_loss))
        throw SpecError("training loss increases at t=" + std::to_string(e.t));
      prev_loss = e.train_loss;
    }
  } catch (const std::exception& e) {
    integrity = false;
    why = e.what();
  }
  add("trace_integrity", integrity, 0.0, why);

  const KktReport kkt = kkt_report(svm, ds);
  add("kkt", kkt.pass(1e-6),
      std::max({kkt.max_primal_violation, -kkt.min_dual, kkt.stationarity_residual,
                kkt.max_complementarity}),
      "primal/dual/stationarity/complementarity at 1e-6");

  // Bias plateau vs predicted b_inf = -log delta. The limit is a late-time
  // statement: gate on it only when the run actually reached that regime
  // (planted data with the training set fully classified at the end).
  if (integrity) {
    const double b_measured = measured_bias_plateau(trace);
    const double plateau_err = std::abs(b_measured - svm.b_inf);
    const double plateau_tol = std::max(0.02, 0.1 * std::abs(std::log(svm.delta)));
    const bool late_time_reached =
        !trace.entries.empty() && trace.entries.back().train_acc >= 0.999;
    add("bias_plateau", plateau_err <= plateau_tol, plateau_err,
        "|b_measured - (-log delta)| vs max(0.02, 0.1|log delta|)",
        ds.spec.kind == DatasetKind::Planted && late_time_reached);
  }

  // Closed form vs RK4 oracle across four decades from t0.
  AnalyticContext ctx;
  ctx.A_plus = svm.A_plus;
  ctx.A_minus = svm.A_minus;
  ctx.delta = svm.delta;
  ctx.b_inf = svm.b_inf;
  ctx.gamma = ds.spec.gamma;
  ctx.alpha_sens = summary.value("alpha_sens", 1.0);
  ctx.B = summary.value("B_hat", 0.0);
  ctx.eta = summary.value("eta", 1e-2);
  ctx.N = static_cast<double>(ds.size());
  ctx.R = ds.radius_bound;
  {
    const double t0 = static_cast<double>(phases.t0.value_or(1));
    const double b0 = phases.b0;
    double worst = 0.0;
    bool ok = true;
    try {
      for (int k = 1; k <= 4; ++k) {
        const double t = t0 * std::pow(10.0, k);
        const double cf = bias_closed_form(ctx, b0, t0, t);
        const double ode = bias_ode_oracle(ctx, b0, t0, t, 200'000);
        worst = std::max(worst, std::abs(cf - ode) / std::max(1e-12, std::abs(ode)));
      }
      ok = worst < 1e-6;
    } catch (const std::exception& e) {
      ok = false;
    }
    add("closed_form_vs_ode", ok, worst, "relative error over 4 decades at 1e-6");
  }

  // Grok-time bound sandwich in t/t0 units with the declared slack.
  if (summary.contains("T_te") && phases.t0) {
    const double slack = summary.value("bound_slack", 3.0);
    const GrokTimeBounds b = grok_time_bounds(ctx, summary.value("eps", 0.05));
    const double ratio = summary["T_te"].get<double>() /
                         static_cast<double>(std::max<std::int64_t>(1, *phases.t0));
    const bool ok = ratio >= b.lower / slack && ratio <= b.upper * slack;
    add("grok_time_bounds", ok, ratio,
        "T_te/t0 in [" + format_double(b.lower / slack) + ", " +
            format_double(b.upper * slack) + "]",
        ds.spec.kind == DatasetKind::Planted && summary.contains("adversarial_eval"));
  }

  // PGD equals its closed-form oracle on the stored training points.
  {
    PgdConfig pc;
    if (summary.contains("adversarial_eval"))
      pc = summary["adversarial_eval"].get<PgdConfig>();
    pc.random_start = false;
    LinearModel model{svm.w_svm, svm.b_svm, true};
    const Matrix got = pgd_attack(model, ds, pc);
    const Matrix want = linear_pgd_oracle(model, ds, pc);
    const double err = (got - want).cwiseAbs().maxCoeff();
    add("pgd_oracle", err <= 1e-12, err, "max coordinate deviation at 1e-12");
  }

  write_json_file(
      [&] {
        json j = json::array();
        for (const auto& c : rep.checks)
          j.push_back({{"name", c.name},
                       {"pass", c.pass},
                       {"mandatory", c.mandatory},
                       {"measured_error", c.measured_error},
                       {"detail", c.detail}});
        return json{{"checks", j}, {"all_mandatory_pass", rep.all_mandatory_pass()}};
      }(),
      run_dir / "verify_report.json");
  return rep;
}

SweepGrid load_sweep_grid(const fs::path& path) {
  const json j = read_json_file(path);
  SweepGrid grid;
  auto id_for = [](const json& point, std::size_t k) {
    std::string id = "p" + std::to_string(k);
    for (auto it = point.begin(); it != point.end(); ++it) {
      std::string v = it.value().dump();
      std::erase_if(v, [](char c) { return c == '"' || c == '[' || c == ']' || c == ' '; });
      std::replace(v.begin(), v.end(), ',', '-');
      id += "_" + it.key() + v;
    }
    return id;
  };
  if (j.contains("points")) {
    for (const auto& p : j["points"]) grid.points.push_back(p);
  } else if (j.contains("grid")) {
    // Cartesian product over {field: [values...]}.
    std::vector<json> acc{json::object()};
    for (auto it = j["grid"].begin(); it != j["grid"].end(); ++it) {
      std::vector<json> next;
      for (const auto& base : acc)
        for (const auto& v : it.value()) {
          json p = base;
          p[it.key()] = v;
          next.push_back(p);
        }
      acc = std::move(next);
    }
    grid.points = std::move(acc);
  } else {
    throw SpecError("sweep grid: expected top-level 'points' or 'grid'");
  }
  for (std::size_t k = 0; k < grid.points.size(); ++k)
    grid.point_ids.push_back(id_for(grid.points[k], k));
  return grid;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const SweepGrid& grid,
                                int max_parallel) {
  base.validate();
  if (max_parallel <= 0)
    max_parallel = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto one = [&](std::size_t k) {
    SweepRow row;
    row.run_id = base.run_id + "_" + grid.point_ids[k];
    try {
      ExperimentConfig cfg = base;
      json dsj = json(cfg.dataset);
      for (auto it = grid.points[k].begin(); it != grid.points[k].end(); ++it)
        dsj[it.key()] = it.value();
      cfg.dataset = dsj.get<DatasetSpec>();
      cfg.run_id = row.run_id;
      row.result = run_experiment(cfg);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    return row;
  };

  std::vector<SweepRow> rows(grid.points.size());
  std::size_t next = 0;
  while (next < grid.points.size()) {
    std::vector<std::pair<std::size_t, std::future<SweepRow>>> batch;
    for (int p = 0; p < max_parallel && next < grid.points.size(); ++p, ++next)
      batch.emplace_back(next, std::async(std::launch::async, one, next));
    for (auto& [k, fut] : batch) rows[k] = fut.get();
  }
  write_summary_csv(rows, base.output_dir / "sweep_summary.csv");
  return rows;
}

void write_summary_csv(const std::vector<SweepRow>& rows, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw SpecError("cannot open for writing: " + path.string());
  os << "run_id,ok,kind,d,N,gamma,alpha_sens,delta,T_tr,T_te,zeta,verdict,"
        "b_inf_predicted,b_measured,error\n";
  auto cell = [&](const json& s, const char* key) {
    os << ',';
    if (!s.contains(key)) return;
    const auto& v = s[key];
    if (v.is_number_float()) os << format_double(v.get<double>());
    else if (v.is_boolean()) os << (v.get<bool>() ? 1 : 0);
    else if (v.is_string()) os << v.get<std::string>();
    else os << v.dump();
  };
  const json empty = json::object();
  for (const auto& r : rows) {
    os << r.run_id << ',' << (r.ok ? 1 : 0);
    const json& s = r.ok ? r.result.summary : empty;
    for (const char* key : {"kind", "d", "N", "gamma", "alpha_sens", "delta", "T_tr",
                            "T_te", "zeta", "verdict", "b_inf_predicted", "b_measured"})
      cell(s, key);
    os << ',' << r.error << "\n";
  }
}

}  // namespace groksim
