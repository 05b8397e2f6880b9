#pragma once

#include <string>

#include "json.hpp"
#include "platoon/agents.hpp"
#include "platoon/harness.hpp"
#include "platoon/scenario.hpp"

namespace platoon {

using nlohmann::json;

// JSON field names mirror the struct members. Missing fields keep their
// defaults; unknown fields are rejected so typos do not pass silently.
void to_json(json& j, const ScenarioConfig& c);
void from_json(const json& j, ScenarioConfig& c);
void to_json(json& j, const QNetShape& s);
void from_json(const json& j, QNetShape& s);
void to_json(json& j, const DrlHyperParams& h);
void from_json(const json& j, DrlHyperParams& h);
void to_json(json& j, const SweepSpec& s);
void from_json(const json& j, SweepSpec& s);
void to_json(json& j, const ExperimentResult& r);
void from_json(const json& j, ExperimentResult& r);

json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const json& j);

/// Sidecar describing a saved Q network: shape, hyper-parameters, tensor
/// offsets inside the flat float64 file.
json network_sidecar(const QNetwork& q, const DrlHyperParams& hyper);

}  // namespace platoon
