#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "efhmm/error.hpp"
#include "efhmm/model.hpp"
#include "efhmm/model_io.hpp"

namespace efhmm {

enum class ArchetypeKind { heating_resistor, motor, electronic_circuit };

/// How a state's Gaussian enters the generated samples.
///  visit:  each stay in a state draws one level from N(mu, sigma); samples add N(0, noise_w).
///  sample: every sample is drawn from N(mu, sigma) independently.
enum class NoiseMode { visit, sample };

/// Parameters for random session scripts: each session starts and ends in
/// state 0 and walks the allowed transitions with uniform dwell times.
struct SessionSpec {
  std::size_t count = 0;
  double dwell_min_s = 30.0;
  double dwell_max_s = 120.0;

  bool operator==(const SessionSpec&) const = default;
};

struct ApplianceArchetype {
  std::string id;
  std::string name;
  ArchetypeKind kind = ArchetypeKind::heating_resistor;
  std::vector<double> state_means;
  std::vector<double> state_sigmas;
  double spike_ratio = 1.0;    // motor peak step over steady step
  double decay_seconds = 0.5;  // motor overshoot time constant
  double fluctuation = 0.0;    // electronic-circuit uniform noise amplitude
  NoiseMode noise_mode = NoiseMode::visit;
  double noise_w = 0.5;
  std::vector<std::pair<std::size_t, std::size_t>> transitions;  // allowed; empty allows any
  std::string exclusive_group;  // appliances sharing a group never run at the same time
  SessionSpec sessions;
  std::string source;  // where the numbers came from

  std::size_t num_states() const noexcept { return state_means.size(); }

  bool allows(std::size_t from, std::size_t to) const {
    if (from == to || to >= num_states()) return false;
    if (transitions.empty()) return true;
    return std::find(transitions.begin(), transitions.end(), std::pair(from, to)) != transitions.end();
  }

  void validate() const {
    const std::string where = "archetype '" + id + "': ";
    require(!id.empty(), ErrorCode::validation, "archetype id must not be empty");
    require(!state_means.empty(), ErrorCode::validation, where + "no states");
    require(state_means.size() == state_sigmas.size(), ErrorCode::validation,
            where + "state_means and state_sigmas differ in length");
    for (std::size_t i = 0; i < state_means.size(); ++i) {
      require(std::isfinite(state_means[i]) && state_means[i] >= 0.0, ErrorCode::validation,
              where + "state means must be finite and >= 0");
      require(std::isfinite(state_sigmas[i]) && state_sigmas[i] >= 0.0, ErrorCode::validation,
              where + "state sigmas must be finite and >= 0");
    }
    switch (kind) {
      case ArchetypeKind::heating_resistor:
        require(spike_ratio == 1.0, ErrorCode::validation, where + "heating_resistor requires spike_ratio = 1");
        break;
      case ArchetypeKind::motor:
        require(spike_ratio > 1.0, ErrorCode::validation, where + "motor requires spike_ratio > 1");
        require(decay_seconds > 0.0, ErrorCode::validation, where + "motor requires decay_seconds > 0");
        break;
      case ArchetypeKind::electronic_circuit:
        require(spike_ratio >= 1.0, ErrorCode::validation, where + "spike_ratio must be >= 1");
        break;
    }
    require(std::isfinite(fluctuation) && fluctuation >= 0.0, ErrorCode::validation, where + "fluctuation must be >= 0");
    require(std::isfinite(noise_w) && noise_w >= 0.0, ErrorCode::validation, where + "noise_w must be >= 0");
    for (const auto& [a, b] : transitions) {
      require(a < num_states() && b < num_states() && a != b, ErrorCode::validation,
              where + "invalid transition " + std::to_string(a) + "->" + std::to_string(b));
    }
    require(sessions.dwell_min_s > 0.0 && sessions.dwell_max_s >= sessions.dwell_min_s, ErrorCode::validation,
            where + "session dwell range must satisfy 0 < min <= max");
  }

  bool operator==(const ApplianceArchetype&) const = default;
};

struct ScriptStep {
  double time_s = 0.0;
  std::size_t target_state = 0;

  bool operator==(const ScriptStep&) const = default;
};

struct ApplianceScript {
  std::string id;
  std::vector<ScriptStep> steps;

  bool operator==(const ApplianceScript&) const = default;
};

struct Script {
  double duration_s = 0.0;
  std::vector<ApplianceScript> appliances;

  const ApplianceScript* find(const std::string& id) const {
    for (const auto& a : appliances) {
      if (a.id == id) return &a;
    }
    return nullptr;
  }

  bool operator==(const Script&) const = default;
};

/// Times strictly increasing, inside [0, duration), every step allowed by the archetype.
inline void validate_steps(const ApplianceArchetype& arch, const std::vector<ScriptStep>& steps, double duration_s) {
  std::size_t state = 0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const auto& s = steps[k];
    const std::string where = "script for '" + arch.id + "' step " + std::to_string(k) + ": ";
    require(std::isfinite(s.time_s) && s.time_s >= 0.0 && s.time_s < duration_s, ErrorCode::validation,
            where + "time outside [0, duration)");
    if (k > 0) require(s.time_s > steps[k - 1].time_s, ErrorCode::validation, where + "times must increase");
    if (!arch.allows(state, s.target_state)) {
      fail(ErrorCode::validation, where + "state " + std::to_string(s.target_state) + " is not reachable from " +
                                      std::to_string(state));
    }
    state = s.target_state;
  }
}

/// One appliance's power trace for a script. Deterministic given seed.
inline PowerSeries generate_trace(const ApplianceArchetype& arch, const std::vector<ScriptStep>& steps,
                                  double sample_rate_hz, double duration_s, std::uint64_t seed) {
  arch.validate();
  require(sample_rate_hz >= 1.0 && sample_rate_hz <= 1000.0, ErrorCode::invalid_argument,
          "sample_rate_hz must lie in [1, 1000]");
  require(std::isfinite(duration_s) && duration_s > 0.0, ErrorCode::invalid_argument, "duration_s must be > 0");
  validate_steps(arch, steps, duration_s);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const auto n = static_cast<std::size_t>(std::lround(duration_s * sample_rate_hz));

  const bool per_visit = arch.noise_mode == NoiseMode::visit;
  std::size_t state = 0;
  const auto draw_level = [&](std::size_t s) {
    return per_visit ? arch.state_means[s] + arch.state_sigmas[s] * unit(rng) : arch.state_means[s];
  };
  double level = draw_level(0);
  double overshoot = 0.0;
  std::size_t overshoot_start = 0;
  const double decay_samples = arch.decay_seconds * sample_rate_hz;

  PowerSeries out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.resize(n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (next < steps.size() && static_cast<std::size_t>(std::lround(steps[next].time_s * sample_rate_hz)) <= i) {
      const double before = level;
      state = steps[next].target_state;
      level = draw_level(state);
      overshoot = 0.0;
      if (arch.kind == ArchetypeKind::motor && level > before) {
        overshoot = (arch.spike_ratio - 1.0) * (level - before);
        overshoot_start = i;
      }
      ++next;
    }
    double x = level;
    if (per_visit) x += arch.noise_w * unit(rng);
    else x += arch.state_sigmas[state] * unit(rng);
    if (overshoot > 0.0) {
      const double extra = overshoot * std::exp(-static_cast<double>(i - overshoot_start) / decay_samples);
      if (extra < 1e-9) overshoot = 0.0;
      else x += extra;
    }
    if (arch.kind == ArchetypeKind::electronic_circuit) x += arch.fluctuation * uniform(rng);
    out.samples[i] = std::max(0.0, x);
  }
  return out;
}

/// Pointwise sum of equally sampled traces.
inline PowerSeries mix_household(const std::vector<PowerSeries>& traces) {
  require(!traces.empty(), ErrorCode::invalid_argument, "mix_household needs at least one trace");
  PowerSeries out = traces.front();
  for (std::size_t k = 1; k < traces.size(); ++k) {
    const auto& t = traces[k];
    require(t.sample_rate_hz == out.sample_rate_hz, ErrorCode::invalid_argument,
            "trace " + std::to_string(k) + " has a different sample rate");
    require(t.size() == out.size(), ErrorCode::invalid_argument,
            "trace " + std::to_string(k) + " has " + std::to_string(t.size()) + " samples, expected " +
                std::to_string(out.size()));
    for (std::size_t i = 0; i < t.size(); ++i) out.samples[i] += t.samples[i];
  }
  return out;
}

/// Seed for appliance `index` of a run seeded with `seed`.
inline std::uint64_t appliance_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

struct SimulatedHousehold {
  Script script;
  std::vector<PowerSeries> appliance_traces;  // aligned with the archetype list
  PowerSeries aggregate;
};

inline SimulatedHousehold simulate_household(const std::vector<ApplianceArchetype>& archetypes, const Script& script,
                                             double sample_rate_hz, std::uint64_t seed) {
  require(!archetypes.empty(), ErrorCode::invalid_argument, "no archetypes");
  SimulatedHousehold sim;
  sim.script = script;
  for (std::size_t k = 0; k < archetypes.size(); ++k) {
    const ApplianceScript* s = script.find(archetypes[k].id);
    static const std::vector<ScriptStep> none;
    sim.appliance_traces.push_back(generate_trace(archetypes[k], s ? s->steps : none, sample_rate_hz,
                                                  script.duration_s, appliance_seed(seed, k)));
  }
  sim.aggregate = mix_household(sim.appliance_traces);
  return sim;
}

/// Random sessions for every archetype with sessions.count > 0.
///
/// Any two events across all appliances are at least min_gap_s apart and at
/// least min_gap_s from either end of the trace. Sessions of one appliance,
/// or of appliances sharing an exclusive_group, never overlap.
inline Script random_script(const std::vector<ApplianceArchetype>& archetypes, double duration_s, double min_gap_s,
                            std::uint64_t seed) {
  require(duration_s > 2.0 * min_gap_s, ErrorCode::invalid_argument, "duration too short for min_gap_s");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Session {
    std::size_t archetype;
    double begin;
    double end;
  };
  std::vector<Session> placed;
  std::vector<double> event_times;
  Script script;
  script.duration_s = duration_s;
  script.appliances.resize(archetypes.size());

  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < archetypes.size(); ++k) {
    archetypes[k].validate();
    script.appliances[k].id = archetypes[k].id;
    for (std::size_t s = 0; s < archetypes[k].sessions.count; ++s) order.push_back(k);
  }
  std::shuffle(order.begin(), order.end(), rng);

  const auto walk = [&](const ApplianceArchetype& a) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::vector<ScriptStep> steps;
      std::size_t state = 0;
      double t = 0.0;
      while (steps.size() < 64) {
        std::vector<std::size_t> next;
        for (std::size_t j = 0; j < a.num_states(); ++j) {
          if (a.allows(state, j)) next.push_back(j);
        }
        if (next.empty()) break;
        state = next[static_cast<std::size_t>(unit(rng) * static_cast<double>(next.size())) % next.size()];
        steps.push_back({t, state});
        if (state == 0) return steps;
        t += a.sessions.dwell_min_s + (a.sessions.dwell_max_s - a.sessions.dwell_min_s) * unit(rng);
      }
    }
    fail(ErrorCode::validation, "archetype '" + a.id + "': random walk does not return to state 0");
  };

  for (std::size_t k : order) {
    const ApplianceArchetype& a = archetypes[k];
    const std::vector<ScriptStep> shape = walk(a);
    const double length = shape.back().time_s;
    const double lo = min_gap_s;
    const double hi = duration_s - min_gap_s - length;
    require(hi > lo, ErrorCode::invalid_argument, "session of '" + a.id + "' does not fit in the trace");
    bool ok = false;
    for (int attempt = 0; attempt < 20000 && !ok; ++attempt) {
      const double begin = lo + (hi - lo) * unit(rng);
      const double end = begin + length;
      ok = true;
      for (const auto& s : placed) {
        const bool exclusive =
            s.archetype == k || (!a.exclusive_group.empty() && archetypes[s.archetype].exclusive_group == a.exclusive_group);
        if (exclusive && begin < s.end + min_gap_s && s.begin < end + min_gap_s) {
          ok = false;
          break;
        }
      }
      for (std::size_t i = 0; ok && i < shape.size(); ++i) {
        const double t = begin + shape[i].time_s;
        for (double other : event_times) {
          if (std::abs(other - t) < min_gap_s) {
            ok = false;
            break;
          }
        }
      }
      if (ok) {
        placed.push_back({k, begin, end});
        for (const auto& s : shape) {
          event_times.push_back(begin + s.time_s);
          script.appliances[k].steps.push_back({begin + s.time_s, s.target_state});
        }
      }
    }
    if (!ok) fail(ErrorCode::invalid_argument, "could not place a session of '" + a.id + "'; script too dense");
  }
  for (auto& app : script.appliances) {
    std::sort(app.steps.begin(), app.steps.end(),
              [](const ScriptStep& x, const ScriptStep& y) { return x.time_s < y.time_s; });
  }
  return script;
}

inline std::size_t count_events(const Script& script) {
  std::size_t n = 0;
  for (const auto& a : script.appliances) n += a.steps.size();
  return n;
}

// ---- JSON ----------------------------------------------------------------

inline constexpr const char* kArchetypeSchema = "efhmm-archetypes/1";

inline std::string to_string(ArchetypeKind k) {
  switch (k) {
    case ArchetypeKind::heating_resistor: return "heating_resistor";
    case ArchetypeKind::motor: return "motor";
    case ArchetypeKind::electronic_circuit: return "electronic_circuit";
  }
  return "heating_resistor";
}

inline ArchetypeKind archetype_kind_from_string(const std::string& s, const std::string& path) {
  if (s == "heating_resistor") return ArchetypeKind::heating_resistor;
  if (s == "motor") return ArchetypeKind::motor;
  if (s == "electronic_circuit") return ArchetypeKind::electronic_circuit;
  fail(ErrorCode::parse, "field '" + path + ".kind' has unknown value '" + s + "'");
}

inline nlohmann::json to_json(const ApplianceArchetype& a) {
  nlohmann::json transitions = nlohmann::json::array();
  for (const auto& [from, to] : a.transitions) transitions.push_back({from, to});
  nlohmann::json j = {{"id", a.id},
                      {"name", a.name},
                      {"kind", to_string(a.kind)},
                      {"state_means", a.state_means},
                      {"state_sigmas", a.state_sigmas},
                      {"spike_ratio", a.spike_ratio},
                      {"decay_seconds", a.decay_seconds},
                      {"fluctuation", a.fluctuation},
                      {"noise_mode", a.noise_mode == NoiseMode::visit ? "visit" : "sample"},
                      {"noise_w", a.noise_w},
                      {"transitions", std::move(transitions)},
                      {"exclusive_group", a.exclusive_group},
                      {"sessions",
                       {{"count", a.sessions.count},
                        {"dwell_min_s", a.sessions.dwell_min_s},
                        {"dwell_max_s", a.sessions.dwell_max_s}}}};
  if (!a.source.empty()) j["source"] = a.source;
  return j;
}

inline ApplianceArchetype archetype_from_json(const nlohmann::json& j, const std::string& path) {
  using namespace json_detail;
  ApplianceArchetype a;
  a.id = text(j, path, "id");
  a.name = j.contains("name") ? text(j, path, "name") : a.id;
  a.kind = archetype_kind_from_string(text(j, path, "kind"), path);
  const auto numbers = [&](const char* key) {
    std::vector<double> out;
    const auto& arr = array(j, path, key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) fail(ErrorCode::parse, "field '" + path + "." + key + "[" + std::to_string(i) + "]' must be a number");
      out.push_back(arr[i].get<double>());
    }
    return out;
  };
  a.state_means = numbers("state_means");
  a.state_sigmas = numbers("state_sigmas");
  if (j.contains("spike_ratio")) a.spike_ratio = number(j, path, "spike_ratio");
  if (j.contains("decay_seconds")) a.decay_seconds = number(j, path, "decay_seconds");
  if (j.contains("fluctuation")) a.fluctuation = number(j, path, "fluctuation");
  if (j.contains("noise_w")) a.noise_w = number(j, path, "noise_w");
  if (j.contains("noise_mode")) {
    const std::string mode = text(j, path, "noise_mode");
    if (mode == "visit") a.noise_mode = NoiseMode::visit;
    else if (mode == "sample") a.noise_mode = NoiseMode::sample;
    else fail(ErrorCode::parse, "field '" + path + ".noise_mode' has unknown value '" + mode + "'");
  }
  if (j.contains("transitions")) {
    const auto& arr = array(j, path, "transitions");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string tp = path + ".transitions[" + std::to_string(i) + "]";
      if (!arr[i].is_array() || arr[i].size() != 2 || !arr[i][0].is_number_unsigned() ||
          !arr[i][1].is_number_unsigned()) {
        fail(ErrorCode::parse, "field '" + tp + "' must be a pair of state indices");
      }
      a.transitions.emplace_back(arr[i][0].get<std::size_t>(), arr[i][1].get<std::size_t>());
    }
  }
  if (j.contains("exclusive_group")) a.exclusive_group = text(j, path, "exclusive_group");
  if (j.contains("sessions")) {
    const auto& s = field(j, path, "sessions");
    const std::string sp = path + ".sessions";
    if (s.contains("count")) a.sessions.count = index(s, sp, "count");
    if (s.contains("dwell_min_s")) a.sessions.dwell_min_s = number(s, sp, "dwell_min_s");
    if (s.contains("dwell_max_s")) a.sessions.dwell_max_s = number(s, sp, "dwell_max_s");
  }
  if (j.contains("source")) a.source = text(j, path, "source");
  a.validate();
  return a;
}

inline nlohmann::json archetypes_to_json(const std::vector<ApplianceArchetype>& archetypes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : archetypes) arr.push_back(to_json(a));
  return {{"schema", kArchetypeSchema}, {"archetypes", std::move(arr)}};
}

inline std::vector<ApplianceArchetype> archetypes_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  const std::string root = "archetypes";
  const std::string schema = text(j, root, "schema");
  if (schema != kArchetypeSchema) fail(ErrorCode::parse, "unsupported schema '" + schema + "'");
  const auto& arr = array(j, root, "archetypes");
  require(!arr.empty(), ErrorCode::validation, "archetype list is empty");
  std::vector<ApplianceArchetype> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(archetype_from_json(arr[i], root + ".archetypes[" + std::to_string(i) + "]"));
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
      require(out[k].id != out.back().id, ErrorCode::validation, "duplicate archetype id '" + out.back().id + "'");
    }
  }
  return out;
}

inline std::vector<ApplianceArchetype> load_archetypes(const std::filesystem::path& path) {
  return archetypes_from_json(read_json_file(path));
}

inline nlohmann::json to_json(const Script& s) {
  nlohmann::json apps = nlohmann::json::array();
  for (const auto& a : s.appliances) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& st : a.steps) steps.push_back({{"t", st.time_s}, {"state", st.target_state}});
    apps.push_back({{"id", a.id}, {"steps", std::move(steps)}});
  }
  return {{"duration_s", s.duration_s}, {"appliances", std::move(apps)}};
}

inline Script script_from_json(const nlohmann::json& j) {
  using namespace json_detail;
  const std::string root = "script";
  Script s;
  s.duration_s = number(j, root, "duration_s");
  require(s.duration_s > 0.0, ErrorCode::validation, "script duration_s must be > 0");
  const auto& apps = array(j, root, "appliances");
  for (std::size_t i = 0; i < apps.size(); ++i) {
    const std::string ap = root + ".appliances[" + std::to_string(i) + "]";
    ApplianceScript a;
    a.id = text(apps[i], ap, "id");
    const auto& steps = array(apps[i], ap, "steps");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const std::string sp = ap + ".steps[" + std::to_string(k) + "]";
      a.steps.push_back({number(steps[k], sp, "t"), index(steps[k], sp, "state")});
    }
    s.appliances.push_back(std::move(a));
  }
  return s;
}

/// State held by each appliance's script at every sample.
inline std::vector<std::size_t> state_track(const std::vector<ScriptStep>& steps, std::size_t num_samples,
                                            double sample_rate_hz) {
  std::vector<std::size_t> track(num_samples, 0);
  std::size_t state = 0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < num_samples; ++i) {
    while (next < steps.size() && static_cast<std::size_t>(std::lround(steps[next].time_s * sample_rate_hz)) <= i) {
      state = steps[next++].target_state;
    }
    track[i] = state;
  }
  return track;
}

}  // namespace efhmm
