#pragma once

#include "groksim/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace groksim {

// JSON field names match the domain type definitions one to one.
void to_json(nlohmann::json& j, const DatasetSpec& spec);
void from_json(const nlohmann::json& j, DatasetSpec& spec);
void to_json(nlohmann::json& j, const PgdConfig& cfg);
void from_json(const nlohmann::json& j, PgdConfig& cfg);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

/// Trace CSV: header `t,b,norm_w,cos_align,rho_norm,train_loss,P,Q_<name>...`,
/// one row per logged step.
void write_trace_csv(const TrainTrace& trace, std::ostream& os);
void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);
TrainTrace read_trace_csv(std::istream& is);
TrainTrace read_trace_csv(const std::filesystem::path& path);

/// Dataset CSV: `y,x_0,...,x_{d-1}` plus a JSON sidecar (<path>.spec.json)
/// holding the DatasetSpec.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace groksim
