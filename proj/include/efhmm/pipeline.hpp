#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "efhmm/csv.hpp"
#include "efhmm/inference.hpp"
#include "efhmm/model_io.hpp"
#include "efhmm/signatures.hpp"

namespace efhmm {

struct SeriesDisaggregation {
  Observations observations;
  DisaggregationResult result;
};

/// Detect, extract, disaggregate and reconstruct per-appliance power for one
/// aggregate series, using the detector settings stored in the model.
inline SeriesDisaggregation disaggregate_series(const HouseholdModel& household, const PowerSeries& aggregate,
                                                const InferenceOptions& options = {},
                                                std::optional<StateVector> initial = std::nullopt) {
  SeriesDisaggregation out;
  out.observations = observe(aggregate, household.detector);
  out.result = disaggregate(household, out.observations.events, out.observations.steady_ssps, std::move(initial),
                            options);
  estimate_power(household, out.observations.events, out.result, aggregate.size(), aggregate.sample_rate_hz,
                 aggregate.start_time);
  return out;
}

inline nlohmann::json to_json(const EventRecord& e) {
  return {{"start_idx", e.boundary.start_idx},
          {"spike_idx", e.boundary.spike_idx},
          {"end_idx", e.boundary.end_idx},
          {"timestamp", e.timestamp},
          {"dts", e.dts},
          {"dsp", e.dsp},
          {"pre_mean", e.pre_mean},
          {"post_mean", e.post_mean},
          {"short_window", e.short_window},
          {"truncated", e.truncated},
          {"compound", e.compound}};
}

inline nlohmann::json assignment_to_json(const HouseholdModel& household, const EventAssignment& a) {
  nlohmann::json j = {{"event", a.event_index},   {"confirmed", a.confirmed}, {"skipped", a.skipped()},
                      {"rank_used", a.rank_used}, {"residual", a.residual},   {"bound", a.bound}};
  if (a.chosen) {
    j["appliance_id"] = household.appliances[a.chosen->appliance].id;
    j["from_state"] = a.chosen->from_state;
    j["to_state"] = a.chosen->to_state;
    j["score"] = a.chosen->score;
  } else {
    j["appliance_id"] = nullptr;
    j["from_state"] = nullptr;
    j["to_state"] = nullptr;
    j["score"] = nullptr;
  }
  return j;
}

inline nlohmann::json result_to_json(const HouseholdModel& household, const SeriesDisaggregation& run) {
  nlohmann::json assignments = nlohmann::json::array();
  for (std::size_t m = 0; m < run.result.assignments.size(); ++m) {
    nlohmann::json a = assignment_to_json(household, run.result.assignments[m]);
    a["record"] = to_json(run.observations.events[m]);
    assignments.push_back(std::move(a));
  }
  nlohmann::json trajectories = nlohmann::json::object();
  for (std::size_t n = 0; n < household.size(); ++n) {
    trajectories[household.appliances[n].id] = run.result.trajectories[n];
  }
  return {{"house_id", household.house_id},
          {"events", run.observations.events.size()},
          {"unconfirmed", run.result.unconfirmed},
          {"skipped", run.result.skipped},
          {"candidates_evaluated", run.result.candidates_evaluated},
          {"assignments", std::move(assignments)},
          {"trajectories", std::move(trajectories)}};
}

/// timestamp_s plus one column per appliance id.
inline CsvTable estimated_power_table(const HouseholdModel& household, const DisaggregationResult& result) {
  CsvTable t;
  t.header.push_back("timestamp_s");
  t.columns.emplace_back();
  if (!result.estimated_power.empty()) {
    const PowerSeries& first = result.estimated_power.front();
    t.columns[0].reserve(first.size());
    for (std::size_t i = 0; i < first.size(); ++i) t.columns[0].push_back(first.time_at(i));
  }
  for (std::size_t n = 0; n < household.size(); ++n) {
    t.header.push_back(household.appliances[n].id);
    t.columns.push_back(result.estimated_power.at(n).samples);
  }
  return t;
}

}  // namespace efhmm
