#include "groksim/io.hpp"

#include <nlohmann/json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace groksim {

void to_json(nlohmann::json& j, const DatasetSpec& spec) {
  j = nlohmann::json{
      {"kind", to_string(spec.kind)},
      {"gamma", spec.gamma},
      {"w_true", std::vector<double>(spec.w_true.begin(), spec.w_true.end())},
      {"box_halfwidth", spec.box_halfwidth},
      {"n_pos", spec.n_pos},
      {"n_neg", spec.n_neg},
      {"seed", spec.seed},
  };
  if (spec.alpha_sens) j["alpha_sens"] = *spec.alpha_sens;
  if (spec.s_pos) j["s_pos"] = *spec.s_pos;
  if (spec.s_neg) j["s_neg"] = *spec.s_neg;
}

void from_json(const nlohmann::json& j, DatasetSpec& spec) {
  spec = DatasetSpec{};
  spec.kind = dataset_kind_from_string(j.at("kind").get<std::string>());
  spec.gamma = j.at("gamma").get<double>();
  auto w = j.at("w_true").get<std::vector<double>>();
  spec.w_true = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  if (j.contains("box_halfwidth")) spec.box_halfwidth = j["box_halfwidth"].get<double>();
  spec.n_pos = j.at("n_pos").get<std::int64_t>();
  spec.n_neg = j.at("n_neg").get<std::int64_t>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("alpha_sens")) spec.alpha_sens = j["alpha_sens"].get<double>();
  if (j.contains("s_pos")) spec.s_pos = j["s_pos"].get<std::int64_t>();
  if (j.contains("s_neg")) spec.s_neg = j["s_neg"].get<std::int64_t>();
}

void to_json(nlohmann::json& j, const PgdConfig& cfg) {
  j = nlohmann::json{
      {"eps_adv", cfg.eps_adv},   {"step", cfg.step},
      {"iters", cfg.iters},       {"random_start", cfg.random_start},
      {"clip_lo", cfg.clip_lo},   {"clip_hi", cfg.clip_hi},
  };
}

void from_json(const nlohmann::json& j, PgdConfig& cfg) {
  cfg = PgdConfig{};
  cfg.eps_adv = j.at("eps_adv").get<double>();
  cfg.step = j.at("step").get<double>();
  cfg.iters = j.at("iters").get<int>();
  if (j.contains("random_start")) cfg.random_start = j["random_start"].get<bool>();
  if (j.contains("clip_lo")) cfg.clip_lo = j["clip_lo"].get<double>();
  if (j.contains("clip_hi")) cfg.clip_hi = j["clip_hi"].get<double>();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const TrainTrace& trace, std::ostream& os) {
  os << "t,b,norm_w,cos_align,rho_norm,train_loss,P";
  for (const auto& name : trace.eval_names) os << ",Q_" << name;
  os << "\n";
  for (const auto& e : trace.entries) {
    os << e.t << ',' << format_double(e.b) << ',' << format_double(e.norm_w) << ','
       << format_double(e.cos_align) << ',' << format_double(e.rho_norm) << ','
       << format_double(e.train_loss) << ',' << format_double(e.train_acc);
    for (const auto& name : trace.eval_names) os << ',' << format_double(e.eval_acc.at(name));
    os << "\n";
  }
}

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw SpecError("cannot open for writing: " + path.string());
  write_trace_csv(trace, os);
  if (!os) throw SpecError("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TrainTrace read_trace_csv(std::istream& is) {
  TrainTrace trace;
  std::string line;
  if (!std::getline(is, line)) throw SpecError("trace CSV: missing header");
  auto header = split_csv_line(line);
  const std::vector<std::string> fixed = {"t",         "b", "norm_w", "cos_align",
                                          "rho_norm",  "train_loss", "P"};
  if (header.size() < fixed.size())
    throw SpecError("trace CSV: malformed header");
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (header[i] != fixed[i]) throw SpecError("trace CSV: unexpected column " + header[i]);
  for (std::size_t i = fixed.size(); i < header.size(); ++i) {
    if (header[i].rfind("Q_", 0) != 0)
      throw SpecError("trace CSV: eval columns must be named Q_<name>, got " + header[i]);
    trace.eval_names.push_back(header[i].substr(2));
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw SpecError("trace CSV: ragged row");
    TraceEntry e;
    std::size_t c = 0;
    e.t = std::stoll(cells[c++]);
    e.b = std::stod(cells[c++]);
    e.norm_w = std::stod(cells[c++]);
    e.cos_align = std::stod(cells[c++]);
    e.rho_norm = std::stod(cells[c++]);
    e.train_loss = std::stod(cells[c++]);
    e.train_acc = std::stod(cells[c++]);
    for (const auto& name : trace.eval_names) e.eval_acc[name] = std::stod(cells[c++]);
    trace.append(std::move(e));
  }
  return trace;
}

TrainTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SpecError("cannot open: " + path.string());
  return read_trace_csv(is);
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw SpecError("cannot open for writing: " + path.string());
  os << "y";
  for (int k = 0; k < ds.dim(); ++k) os << ",x_" << k;
  os << "\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    os << (ds.labels[i] > 0 ? 1 : -1);
    for (Eigen::Index k = 0; k < ds.points.cols(); ++k)
      os << ',' << format_double(ds.points(i, k));
    os << "\n";
  }
  if (!os) throw SpecError("write failed: " + path.string());

  nlohmann::json j = ds.spec;
  std::filesystem::path side = path;
  side += ".spec.json";
  std::ofstream js(side);
  if (!js) throw SpecError("cannot open for writing: " + side.string());
  js << j.dump(2) << "\n";
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SpecError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw SpecError("dataset CSV: missing header");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "y")
    throw SpecError("dataset CSV: first column must be y");
  const int d = static_cast<int>(header.size()) - 1;
  for (int k = 0; k < d; ++k)
    if (header[k + 1] != "x_" + std::to_string(k))
      throw SpecError("dataset CSV: unexpected column " + header[k + 1]);

  std::vector<double> ys;
  std::vector<double> xs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw SpecError("dataset CSV: ragged row");
    ys.push_back(std::stod(cells[0]));
    for (int k = 0; k < d; ++k) xs.push_back(std::stod(cells[k + 1]));
  }

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(ys.size());
  ds.labels = Eigen::Map<const Vector>(ys.data(), n);
  ds.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(xs.data(), n, d);

  std::filesystem::path side = path;
  side += ".spec.json";
  std::ifstream js(side);
  if (!js) throw SpecError("cannot open: " + side.string());
  nlohmann::json j;
  js >> j;
  ds.spec = j.get<DatasetSpec>();
  ds.radius_bound = n > 0 ? ds.points.rowwise().norm().maxCoeff() : 0.0;
  return ds;
}

}  // namespace groksim
