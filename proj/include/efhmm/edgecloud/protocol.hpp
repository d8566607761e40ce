#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "efhmm/error.hpp"
#include "efhmm/model_io.hpp"

namespace efhmm::wire {

struct Hello {
  std::string house_id;
  double sample_rate_hz = 0.0;
  std::string detector_config_hash;

  bool operator==(const Hello&) const = default;
};

struct Event {
  std::uint64_t seq = 0;
  double t_start_s = 0.0;
  double t_spike_s = 0.0;
  double t_end_s = 0.0;
  double dts_w = 0.0;
  double dsp_w = 0.0;

  bool operator==(const Event&) const = default;
};

struct Steady {
  std::uint64_t seq = 0;
  double window_end_s = 0.0;
  double ssp_w = 0.0;

  bool operator==(const Steady&) const = default;
};

/// Reply to one EVENT. A skipped event has no appliance and no states.
struct Assign {
  std::uint64_t seq = 0;
  std::optional<std::string> appliance_id;
  std::optional<std::size_t> from_state;
  std::optional<std::size_t> to_state;
  bool confirmed = false;

  bool operator==(const Assign&) const = default;
};

namespace code {
inline constexpr const char* order = "order";
inline constexpr const char* unknown_house = "unknown_house";
inline constexpr const char* config = "config";
inline constexpr const char* parse = "parse";
}  // namespace code

struct Error {
  std::string code;
  std::string detail;

  bool operator==(const Error&) const = default;
};

using Message = std::variant<Hello, Event, Steady, Assign, Error>;

namespace detail {

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const Message& m) {
  struct Visitor {
    nlohmann::json operator()(const Hello& h) const {
      return {{"type", "HELLO"},
              {"house_id", h.house_id},
              {"sample_rate_hz", h.sample_rate_hz},
              {"detector_config_hash", h.detector_config_hash}};
    }
    nlohmann::json operator()(const Event& e) const {
      return {{"type", "EVENT"},       {"seq", e.seq},     {"t_start_s", e.t_start_s}, {"t_spike_s", e.t_spike_s},
              {"t_end_s", e.t_end_s}, {"dts_w", e.dts_w}, {"dsp_w", e.dsp_w}};
    }
    nlohmann::json operator()(const Steady& s) const {
      return {{"type", "STEADY"}, {"seq", s.seq}, {"window_end_s", s.window_end_s}, {"ssp_w", s.ssp_w}};
    }
    nlohmann::json operator()(const Assign& a) const {
      return {{"type", "ASSIGN"},
              {"seq", a.seq},
              {"appliance_id", detail::optional_json(a.appliance_id)},
              {"from_state", detail::optional_json(a.from_state)},
              {"to_state", detail::optional_json(a.to_state)},
              {"confirmed", a.confirmed}};
    }
    nlohmann::json operator()(const Error& e) const {
      return {{"type", "ERROR"}, {"code", e.code}, {"detail", e.detail}};
    }
  };
  return std::visit(Visitor{}, m);
}

/// One newline-terminated JSON line.
inline std::string encode(const Message& m) { return to_json(m).dump() + "\n"; }

inline Message from_json(const nlohmann::json& j) {
  using namespace json_detail;
  const std::string root = "message";
  const std::string type = text(j, root, "type");
  const auto seq = [&] { return static_cast<std::uint64_t>(index(j, root, "seq")); };
  if (type == "HELLO") {
    return Hello{text(j, root, "house_id"), number(j, root, "sample_rate_hz"), text(j, root, "detector_config_hash")};
  }
  if (type == "EVENT") {
    return Event{seq(),
                 number(j, root, "t_start_s"),
                 number(j, root, "t_spike_s"),
                 number(j, root, "t_end_s"),
                 number(j, root, "dts_w"),
                 number(j, root, "dsp_w")};
  }
  if (type == "STEADY") return Steady{seq(), number(j, root, "window_end_s"), number(j, root, "ssp_w")};
  if (type == "ASSIGN") {
    Assign a;
    a.seq = seq();
    if (!field(j, root, "appliance_id").is_null()) a.appliance_id = text(j, root, "appliance_id");
    if (!field(j, root, "from_state").is_null()) a.from_state = index(j, root, "from_state");
    if (!field(j, root, "to_state").is_null()) a.to_state = index(j, root, "to_state");
    const auto& c = field(j, root, "confirmed");
    if (!c.is_boolean()) fail(ErrorCode::parse, "field 'message.confirmed' must be a boolean");
    a.confirmed = c.get<bool>();
    return a;
  }
  if (type == "ERROR") return Error{text(j, root, "code"), text(j, root, "detail")};
  fail(ErrorCode::parse, "unknown message type '" + type + "'");
}

/// Parses one line (trailing newline optional).
inline Message decode(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::parse, std::string("malformed message: ") + e.what());
  }
  return from_json(j);
}

}  // namespace efhmm::wire
