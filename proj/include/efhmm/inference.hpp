#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "efhmm/model.hpp"
#include "efhmm/signatures.hpp"

namespace efhmm {

/// ln N(x; g.mu, g.sigma) with sigma clamped to kSigmaFloor.
inline double log_normal_pdf(double x, const GaussianSig& g) {
  const double sigma = std::max(g.sigma, kSigmaFloor);
  const double z = (x - g.mu) / sigma;
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma) - 0.5 * z * z;
}

/// Switches for ablation runs. The default is the full two-stage method.
struct InferenceOptions {
  bool use_dts = true;           // transient spike term in the stage-1 score
  bool use_dsp = true;           // steady-step term in the stage-1 score
  bool use_confirmation = true;  // stage-2 bound check

  bool operator==(const InferenceOptions&) const = default;
};

struct Candidate {
  std::size_t appliance = 0;
  std::size_t edge = 0;  // index into the appliance's edges
  std::size_t from_state = 0;
  std::size_t to_state = 0;
  double score = 0.0;

  bool operator==(const Candidate&) const = default;
};

/// Scores every direction-matching outgoing edge of every appliance's
/// current state and returns them best first. Ties go to the lower
/// appliance index, then the lower target state.
inline std::vector<Candidate> rank_candidates(const HouseholdModel& household, std::span<const std::size_t> state,
                                              const EventRecord& event, const InferenceOptions& options = {},
                                              std::size_t* evaluated = nullptr) {
  validate_state(household, state);
  require(event.dsp != 0.0, ErrorCode::invalid_argument, "event dsp must be non-zero");
  const Direction dir = event.direction();
  std::vector<Candidate> out;
  for (std::size_t n = 0; n < household.size(); ++n) {
    const ApplianceModel& app = household.appliances[n];
    for (std::size_t e = 0; e < app.edges.size(); ++e) {
      const TransitionEdge& edge = app.edges[e];
      if (edge.from_state != state[n] || edge.direction() != dir) continue;
      double score = std::log(edge.prob);
      if (options.use_dsp) score += log_normal_pdf(event.dsp, edge.dsp);
      if (options.use_dts && edge.dts) score += log_normal_pdf(event.dts, *edge.dts);
      out.push_back(Candidate{n, e, edge.from_state, edge.to_state, score});
      if (evaluated) ++*evaluated;
    }
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.appliance != b.appliance) return a.appliance < b.appliance;
    return a.to_state < b.to_state;
  });
  return out;
}

struct ConfirmResult {
  bool ok = false;
  double residual = 0.0;  // aggregate_ssp - sum of state means
  double bound = 0.0;     // multiplier * sum of state sigmas
};

/// Stage-2 check of a tentative joint state against the measured steady power.
inline ConfirmResult confirm(const HouseholdModel& household, std::span<const std::size_t> tentative,
                             double aggregate_ssp) {
  validate_state(household, tentative);
  double mu = 0.0;
  double sigma = 0.0;
  for (std::size_t n = 0; n < household.size(); ++n) {
    const GaussianSig& s = household.appliances[n].states[tentative[n]];
    mu += s.mu;
    sigma += s.sigma;
  }
  ConfirmResult r;
  r.residual = aggregate_ssp - mu;
  r.bound = household.confidence_multiplier * sigma;
  r.ok = std::abs(r.residual) <= r.bound;
  return r;
}

struct EventAssignment {
  std::size_t event_index = 0;
  std::optional<Candidate> chosen;  // empty when the event was skipped
  double residual = 0.0;
  double bound = 0.0;
  bool confirmed = false;
  std::size_t rank_used = 0;  // 1-based; 0 when skipped

  bool skipped() const noexcept { return !chosen.has_value(); }
  bool operator==(const EventAssignment&) const = default;
};

/// Runs both stages for one event and advances `state`.
///
/// Candidates are tried best first; the first whose tentative state passes
/// the bound is committed. If none passes, the candidate with the smallest
/// |residual| is committed unconfirmed. With confirmation disabled the top
/// candidate is committed unconfirmed. No candidates leaves the state as is.
inline EventAssignment commit_event(const HouseholdModel& household, StateVector& state, const EventRecord& event,
                                    double next_ssp, std::size_t event_index, const InferenceOptions& options = {},
                                    std::size_t* evaluated = nullptr) {
  EventAssignment a;
  a.event_index = event_index;
  const std::vector<Candidate> ranked = rank_candidates(household, state, event, options, evaluated);
  if (ranked.empty()) return a;

  StateVector tentative = state;
  std::size_t fallback = 0;
  ConfirmResult fallback_check;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const Candidate& c = ranked[r];
    tentative[c.appliance] = c.to_state;
    const ConfirmResult check = confirm(household, tentative, next_ssp);
    tentative[c.appliance] = state[c.appliance];
    if (!options.use_confirmation) {
      fallback_check = check;
      break;
    }
    if (check.ok) {
      a.chosen = c;
      a.residual = check.residual;
      a.bound = check.bound;
      a.confirmed = true;
      a.rank_used = r + 1;
      state[c.appliance] = c.to_state;
      return a;
    }
    if (r == 0 || std::abs(check.residual) < std::abs(fallback_check.residual)) {
      fallback = r;
      fallback_check = check;
    }
  }
  const Candidate& c = ranked[fallback];
  a.chosen = c;
  a.residual = fallback_check.residual;
  a.bound = fallback_check.bound;
  a.confirmed = false;
  a.rank_used = fallback + 1;
  state[c.appliance] = c.to_state;
  return a;
}

struct DisaggregationResult {
  std::vector<EventAssignment> assignments;
  std::vector<std::vector<std::size_t>> trajectories;  // [appliance][steady period]
  std::vector<PowerSeries> estimated_power;            // filled by estimate_power
  std::size_t unconfirmed = 0;                         // committed without passing the bound
  std::size_t skipped = 0;                             // no direction-matching candidate
  std::size_t candidates_evaluated = 0;
};

/// Event-by-event two-stage disaggregation. steady_ssps[m + 1] is the
/// aggregate steady power observed after event m.
inline DisaggregationResult disaggregate(const HouseholdModel& household, std::span<const EventRecord> events,
                                         std::span<const double> steady_ssps,
                                         std::optional<StateVector> initial = std::nullopt,
                                         const InferenceOptions& options = {}) {
  household.validate();
  require(steady_ssps.size() == events.size() + 1, ErrorCode::invalid_argument,
          "expected " + std::to_string(events.size() + 1) + " steady SSPs for " + std::to_string(events.size()) +
              " events, got " + std::to_string(steady_ssps.size()));
  StateVector state = initial ? *initial : all_off(household);
  validate_state(household, state);

  DisaggregationResult result;
  result.trajectories.assign(household.size(), {});
  for (std::size_t n = 0; n < household.size(); ++n) {
    result.trajectories[n].reserve(events.size() + 1);
    result.trajectories[n].push_back(state[n]);
  }
  result.assignments.reserve(events.size());
  for (std::size_t m = 0; m < events.size(); ++m) {
    EventAssignment a =
        commit_event(household, state, events[m], steady_ssps[m + 1], m, options, &result.candidates_evaluated);
    if (a.skipped()) ++result.skipped;
    else if (!a.confirmed) ++result.unconfirmed;
    result.assignments.push_back(std::move(a));
    for (std::size_t n = 0; n < household.size(); ++n) result.trajectories[n].push_back(state[n]);
  }
  return result;
}

/// Per-appliance power reconstruction: each appliance's state mean, switching
/// to the new state at the sample where the event's transient begins.
inline void estimate_power(const HouseholdModel& household, std::span<const EventRecord> events,
                           DisaggregationResult& result, std::size_t num_samples, double sample_rate_hz,
                           double start_time) {
  require(result.trajectories.size() == household.size(), ErrorCode::invalid_argument, "trajectory count mismatch");
  result.estimated_power.assign(household.size(), PowerSeries{{}, sample_rate_hz, start_time});
  for (std::size_t n = 0; n < household.size(); ++n) {
    const auto& states = household.appliances[n].states;
    const auto& traj = result.trajectories[n];
    require(traj.size() == events.size() + 1, ErrorCode::invalid_argument, "trajectory length mismatch");
    auto& out = result.estimated_power[n].samples;
    out.resize(num_samples);
    std::size_t cursor = 0;
    for (std::size_t p = 0; p <= events.size(); ++p) {
      const std::size_t next = p < events.size() ? std::min(events[p].boundary.start_idx, num_samples) : num_samples;
      const std::size_t until = std::max(cursor, next);
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(cursor), out.begin() + static_cast<std::ptrdiff_t>(until),
                states[traj[p]].mu);
      cursor = until;
    }
  }
}

}  // namespace efhmm
