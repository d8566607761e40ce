#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "efhmm/config.hpp"
#include "efhmm/error.hpp"

namespace efhmm {

/// Every fitted Gaussian is clamped to at least this standard deviation (watts).
inline constexpr double kSigmaFloor = 0.1;

/// Default quantile factor of the stage-2 bound (two-sided 99% interval).
inline constexpr double kConfidenceMultiplier = 2.576;

/// Uniformly sampled active power.
struct PowerSeries {
  std::vector<double> samples;
  double sample_rate_hz = 1.0;
  double start_time = 0.0;  // epoch seconds of samples[0]

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double period() const noexcept { return 1.0 / sample_rate_hz; }
  double time_at(std::size_t index) const noexcept {
    return start_time + static_cast<double>(index) / sample_rate_hz;
  }
  double duration_seconds() const noexcept { return static_cast<double>(samples.size()) / sample_rate_hz; }

  void validate() const {
    require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0, ErrorCode::validation,
            "sample_rate_hz must be > 0");
    require(!samples.empty(), ErrorCode::validation, "power series is empty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!std::isfinite(samples[i])) fail(ErrorCode::non_finite, "non-finite sample at index " + std::to_string(i));
    }
  }

  bool operator==(const PowerSeries&) const = default;
};

struct GaussianSig {
  double mu = 0.0;
  double sigma = kSigmaFloor;
  std::size_t count = 1;

  bool operator==(const GaussianSig&) const = default;
};

enum class Direction { increasing, decreasing };

/// One directed, non-self transition of an appliance's sparse chain.
/// A power-decreasing edge carries no DTS Gaussian.
struct TransitionEdge {
  std::size_t from_state = 0;
  std::size_t to_state = 0;
  double prob = 1.0;
  std::optional<GaussianSig> dts;
  GaussianSig dsp;

  Direction direction() const noexcept { return dsp.mu > 0.0 ? Direction::increasing : Direction::decreasing; }

  bool operator==(const TransitionEdge&) const = default;
};

struct ApplianceModel {
  std::string id;
  std::string name;
  std::vector<GaussianSig> states;  // ascending by mu; state 0 is OFF
  std::vector<TransitionEdge> edges;

  std::size_t num_states() const noexcept { return states.size(); }

  std::vector<std::size_t> outgoing(std::size_t state) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edges[e].from_state == state) out.push_back(e);
    }
    return out;
  }

  std::size_t max_out_degree() const {
    std::vector<std::size_t> degree(states.size(), 0);
    for (const auto& e : edges) ++degree.at(e.from_state);
    std::size_t best = 0;
    for (auto d : degree) best = std::max(best, d);
    return best;
  }

  void validate() const {
    const std::string where = "appliance '" + id + "': ";
    require(!id.empty(), ErrorCode::validation, "appliance id must not be empty");
    require(!states.empty(), ErrorCode::validation, where + "no states");
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& s = states[i];
      require(std::isfinite(s.mu) && std::isfinite(s.sigma), ErrorCode::validation,
              where + "state " + std::to_string(i) + " has non-finite parameters");
      require(s.sigma >= kSigmaFloor, ErrorCode::validation,
              where + "state " + std::to_string(i) + " sigma below floor");
      require(s.count >= 1, ErrorCode::validation, where + "state " + std::to_string(i) + " count must be >= 1");
      if (i > 0) {
        require(states[i - 1].mu <= s.mu, ErrorCode::validation, where + "states not sorted ascending by mu");
      }
    }
    require(!edges.empty(), ErrorCode::validation, where + "no transition edges");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<double> row_sum(states.size(), 0.0);
    std::vector<bool> has_out(states.size(), false);
    for (const auto& e : edges) {
      const std::string edge_name =
          where + "edge " + std::to_string(e.from_state) + "->" + std::to_string(e.to_state) + ": ";
      require(e.from_state < states.size() && e.to_state < states.size(), ErrorCode::validation,
              edge_name + "state index out of range");
      require(e.from_state != e.to_state, ErrorCode::validation, edge_name + "self-transition");
      require(seen.insert({e.from_state, e.to_state}).second, ErrorCode::validation, edge_name + "duplicate edge");
      require(std::isfinite(e.prob) && e.prob > 0.0 && e.prob <= 1.0, ErrorCode::validation,
              edge_name + "prob must lie in (0, 1]");
      require(std::isfinite(e.dsp.mu) && e.dsp.mu != 0.0, ErrorCode::validation, edge_name + "dsp.mu must be non-zero");
      require(e.dsp.sigma >= kSigmaFloor && e.dsp.count >= 1, ErrorCode::validation,
              edge_name + "dsp sigma below floor or zero count");
      if (e.direction() == Direction::increasing) {
        require(e.dts.has_value(), ErrorCode::validation, edge_name + "increasing edge requires dts");
        require(std::isfinite(e.dts->mu) && e.dts->sigma >= kSigmaFloor && e.dts->count >= 1,
                ErrorCode::validation, edge_name + "invalid dts");
      } else {
        require(!e.dts.has_value(), ErrorCode::validation, edge_name + "decreasing edge must not carry dts");
      }
      row_sum[e.from_state] += e.prob;
      has_out[e.from_state] = true;
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (has_out[i]) {
        require(std::abs(row_sum[i] - 1.0) <= 1e-9, ErrorCode::validation,
                where + "outgoing probabilities of state " + std::to_string(i) + " do not sum to 1");
      }
    }
  }

  bool operator==(const ApplianceModel&) const = default;
};

/// Fraction of the K x K transition matrix that is populated.
inline double sparsity_level(const ApplianceModel& model) {
  const auto k = static_cast<double>(model.num_states());
  return static_cast<double>(model.edges.size()) / (k * k);
}

/// The event-driven factorial model: one sparse HMM per appliance plus the
/// settings both edge and cloud must agree on.
struct HouseholdModel {
  std::string house_id = "house";
  std::vector<ApplianceModel> appliances;
  double confidence_multiplier = kConfidenceMultiplier;
  DetectorConfig detector;
  ClusterConfig cluster;

  double window_seconds() const noexcept { return detector.window_seconds; }
  std::size_t size() const noexcept { return appliances.size(); }

  std::size_t max_states() const noexcept {
    std::size_t k = 0;
    for (const auto& a : appliances) k = std::max(k, a.num_states());
    return k;
  }

  void validate() const {
    require(!appliances.empty(), ErrorCode::validation, "household has no appliances");
    require(std::isfinite(confidence_multiplier) && confidence_multiplier > 0.0, ErrorCode::validation,
            "confidence_multiplier must be > 0");
    detector.validate();
    cluster.validate();
    std::set<std::string> ids;
    for (const auto& a : appliances) {
      a.validate();
      require(ids.insert(a.id).second, ErrorCode::validation, "duplicate appliance id '" + a.id + "'");
    }
  }

  bool operator==(const HouseholdModel&) const = default;
};

/// Current state index of every appliance, aligned with HouseholdModel::appliances.
using StateVector = std::vector<std::size_t>;

inline StateVector all_off(const HouseholdModel& household) { return StateVector(household.size(), 0); }

inline void validate_state(const HouseholdModel& household, std::span<const std::size_t> state) {
  require(state.size() == household.size(), ErrorCode::invalid_argument, "state vector length mismatch");
  for (std::size_t n = 0; n < state.size(); ++n) {
    require(state[n] < household.appliances[n].num_states(), ErrorCode::invalid_argument,
            "state index out of range for appliance '" + household.appliances[n].id + "'");
  }
}

}  // namespace efhmm
