#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "efhmm/model.hpp"

namespace efhmm {

inline constexpr const char* kModelSchema = "efhmm-model/1";

namespace json_detail {

using nlohmann::json;

inline const json& field(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) fail(ErrorCode::parse, "'" + path + "' is not an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorCode::parse, "missing field '" + path + "." + key + "'");
  return *it;
}

inline double number(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_number()) fail(ErrorCode::parse, "field '" + path + "." + key + "' must be a number");
  return v.get<double>();
}

inline std::size_t index(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(ErrorCode::parse, "field '" + path + "." + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline std::string text(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_string()) fail(ErrorCode::parse, "field '" + path + "." + key + "' must be a string");
  return v.get<std::string>();
}

inline const json& array(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_array()) fail(ErrorCode::parse, "field '" + path + "." + key + "' must be an array");
  return v;
}

}  // namespace json_detail

inline nlohmann::json to_json(const GaussianSig& g) {
  return {{"mu", g.mu}, {"sigma", g.sigma}, {"count", g.count}};
}

inline GaussianSig gaussian_from_json(const nlohmann::json& j, const std::string& path) {
  using namespace json_detail;
  return GaussianSig{number(j, path, "mu"), number(j, path, "sigma"), index(j, path, "count")};
}

inline nlohmann::json to_json(const DetectorConfig& c) {
  return {{"steady_delta_w", c.steady_delta_w},
          {"event_threshold_w", c.event_threshold_w},
          {"window_seconds", c.window_seconds},
          {"max_transient_seconds", c.max_transient_seconds}};
}

/// Missing keys keep their current value, so partial config files overlay defaults.
inline void merge_detector_config(const nlohmann::json& j, DetectorConfig& c, const std::string& path = "detector") {
  using namespace json_detail;
  if (!j.is_object()) fail(ErrorCode::parse, "'" + path + "' is not an object");
  if (j.contains("steady_delta_w")) c.steady_delta_w = number(j, path, "steady_delta_w");
  if (j.contains("event_threshold_w")) c.event_threshold_w = number(j, path, "event_threshold_w");
  if (j.contains("window_seconds")) c.window_seconds = number(j, path, "window_seconds");
  if (j.contains("max_transient_seconds")) c.max_transient_seconds = number(j, path, "max_transient_seconds");
}

inline nlohmann::json to_json(const ClusterConfig& c) {
  return {{"h_min_w", c.h_min_w},
          {"beta", c.beta},
          {"merge_factor", c.merge_factor},
          {"tol_w", c.tol_w},
          {"max_iter", c.max_iter}};
}

inline void merge_cluster_config(const nlohmann::json& j, ClusterConfig& c, const std::string& path = "cluster") {
  using namespace json_detail;
  if (!j.is_object()) fail(ErrorCode::parse, "'" + path + "' is not an object");
  if (j.contains("h_min_w")) c.h_min_w = number(j, path, "h_min_w");
  if (j.contains("beta")) c.beta = number(j, path, "beta");
  if (j.contains("merge_factor")) c.merge_factor = number(j, path, "merge_factor");
  if (j.contains("tol_w")) c.tol_w = number(j, path, "tol_w");
  if (j.contains("max_iter")) c.max_iter = index(j, path, "max_iter");
}

inline nlohmann::json to_json(const ApplianceModel& a) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : a.states) states.push_back(to_json(s));
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : a.edges) {
    nlohmann::json je = {{"from", e.from_state}, {"to", e.to_state}, {"prob", e.prob}, {"dsp", to_json(e.dsp)}};
    if (e.dts) je["dts"] = to_json(*e.dts);
    edges.push_back(std::move(je));
  }
  return {{"id", a.id}, {"name", a.name}, {"states", std::move(states)}, {"edges", std::move(edges)}};
}

inline ApplianceModel appliance_from_json(const nlohmann::json& j, const std::string& path) {
  using namespace json_detail;
  ApplianceModel a;
  a.id = text(j, path, "id");
  a.name = j.contains("name") ? text(j, path, "name") : a.id;
  const auto& states = array(j, path, "states");
  for (std::size_t i = 0; i < states.size(); ++i) {
    a.states.push_back(gaussian_from_json(states[i], path + ".states[" + std::to_string(i) + "]"));
  }
  const auto& edges = array(j, path, "edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string ep = path + ".edges[" + std::to_string(i) + "]";
    TransitionEdge e;
    e.from_state = index(edges[i], ep, "from");
    e.to_state = index(edges[i], ep, "to");
    e.prob = number(edges[i], ep, "prob");
    e.dsp = gaussian_from_json(field(edges[i], ep, "dsp"), ep + ".dsp");
    if (edges[i].contains("dts") && !edges[i]["dts"].is_null()) {
      e.dts = gaussian_from_json(edges[i]["dts"], ep + ".dts");
    }
    a.edges.push_back(std::move(e));
  }
  return a;
}

inline nlohmann::json to_json(const HouseholdModel& h) {
  nlohmann::json apps = nlohmann::json::array();
  for (const auto& a : h.appliances) apps.push_back(to_json(a));
  return {{"schema", kModelSchema},
          {"house_id", h.house_id},
          {"confidence_multiplier", h.confidence_multiplier},
          {"detector", to_json(h.detector)},
          {"cluster", to_json(h.cluster)},
          {"appliances", std::move(apps)}};
}

/// Parses and validates a household model document.
inline HouseholdModel household_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  const std::string root = "model";
  const std::string schema = text(j, root, "schema");
  if (schema != kModelSchema) fail(ErrorCode::parse, "unsupported schema '" + schema + "'");
  HouseholdModel h;
  h.house_id = j.contains("house_id") ? text(j, root, "house_id") : h.house_id;
  h.confidence_multiplier = number(j, root, "confidence_multiplier");
  merge_detector_config(field(j, root, "detector"), h.detector, root + ".detector");
  merge_cluster_config(field(j, root, "cluster"), h.cluster, root + ".cluster");
  const auto& apps = array(j, root, "appliances");
  for (std::size_t i = 0; i < apps.size(); ++i) {
    h.appliances.push_back(appliance_from_json(apps[i], root + ".appliances[" + std::to_string(i) + "]"));
  }
  h.validate();
  return h;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) fail(ErrorCode::io, "write to '" + path.string() + "' failed");
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  try {
    return nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

inline void save_model(const HouseholdModel& model, const std::filesystem::path& path) {
  model.validate();
  write_text_file(path, to_json(model).dump(2) + "\n");
}

inline HouseholdModel load_model(const std::filesystem::path& path) { return household_from_json(read_json_file(path)); }

/// Stable 64-bit FNV-1a over the canonical JSON of the detector config.
/// Edge and cloud compare it during the handshake.
inline std::string detector_config_hash(const DetectorConfig& c) {
  const std::string canonical = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace efhmm
