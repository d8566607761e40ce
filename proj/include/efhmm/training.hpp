#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "efhmm/clustering.hpp"
#include "efhmm/events.hpp"
#include "efhmm/model.hpp"
#include "efhmm/signatures.hpp"

namespace efhmm {

/// Population mean and standard deviation (divide by n), two passes,
/// sigma clamped to kSigmaFloor.
inline GaussianSig fit_gaussian(std::span<const double> xs) {
  require(!xs.empty(), ErrorCode::invalid_argument, "fit_gaussian needs at least one sample");
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mu = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return GaussianSig{mu, std::max(kSigmaFloor, std::sqrt(ss / n)), xs.size()};
}

struct EdgeDiagnostic {
  std::size_t from_state = 0;
  std::size_t to_state = 0;
  std::size_t count = 0;
  double raw_prob = 0.0;     // count / (segments - 1); not row-stochastic
  bool low_support = false;  // fitted from a single event
};

struct TrainingReport {
  std::size_t num_events = 0;
  std::size_t num_segments = 0;
  std::vector<double> centroids;               // before SSP refit, ascending
  std::vector<std::size_t> flagged_segments;   // farther than 3 bandwidths from every centroid
  std::size_t self_transitions = 0;            // events between segments of the same state, ignored
  std::vector<EdgeDiagnostic> edges;           // aligned with model.edges
};

struct TrainingResult {
  ApplianceModel model;
  TrainingReport report;
};

/// Learns one appliance's sparse HMM from its own power trace.
///
/// Steady segments are clustered into states; each event between two
/// differently-labelled segments is one observed transition. Only observed
/// transitions become edges. Rows are normalized per source state.
inline TrainingResult train_appliance(const PowerSeries& series, const DetectorConfig& detector,
                                      const ClusterConfig& cluster, const std::string& id,
                                      const std::string& name) {
  require(!id.empty(), ErrorCode::invalid_argument, "appliance id must not be empty");
  cluster.validate();
  const Observations obs = observe(series, detector);
  const std::string never = "appliance '" + id + "' never changes state";
  if (obs.events.empty()) fail(ErrorCode::validation, never + " (no events detected)");

  std::vector<double> means;
  means.reserve(obs.segments.size());
  for (const auto& s : obs.segments) means.push_back(std::max(0.0, s.mean));
  const std::vector<Cluster> clusters = mean_shift_states(means, cluster);
  if (clusters.size() < 2) fail(ErrorCode::validation, never + " (one state found)");

  TrainingReport report;
  report.num_events = obs.events.size();
  report.num_segments = obs.segments.size();
  for (const auto& c : clusters) report.centroids.push_back(c.centroid);

  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> label(obs.segments.size(), kUnassigned);
  for (std::size_t s = 0; s < means.size(); ++s) {
    const std::size_t c = nearest_centroid(clusters, means[s]);
    if (std::abs(means[s] - clusters[c].centroid) > 3.0 * cluster.bandwidth(clusters[c].centroid)) {
      report.flagged_segments.push_back(s);
    } else {
      label[s] = c;
    }
  }

  struct EdgeSamples {
    std::size_t count = 0;
    std::vector<double> dts;
    std::vector<double> dsp;
  };
  std::map<std::pair<std::size_t, std::size_t>, EdgeSamples> observed;
  for (std::size_t m = 0; m < obs.events.size(); ++m) {
    const std::size_t from = label[m];
    const std::size_t to = label[m + 1];
    if (from == kUnassigned || to == kUnassigned) continue;
    if (from == to) {
      ++report.self_transitions;
      continue;
    }
    auto& e = observed[{from, to}];
    ++e.count;
    e.dsp.push_back(obs.events[m].dsp);
    if (obs.events[m].dsp > 0.0) e.dts.push_back(obs.events[m].dts);
  }
  if (observed.empty()) fail(ErrorCode::validation, never + " (no transitions between states)");

  std::vector<std::vector<double>> ssp_samples(clusters.size());
  for (std::size_t s = 0; s < obs.segments.size(); ++s) {
    if (label[s] == kUnassigned) continue;
    const auto& seg = obs.segments[s];
    auto& dst = ssp_samples[label[s]];
    dst.insert(dst.end(), series.samples.begin() + static_cast<std::ptrdiff_t>(seg.start_idx),
               series.samples.begin() + static_cast<std::ptrdiff_t>(seg.end_idx));
  }

  // States keyed by cluster index, then reordered ascending by fitted mean.
  std::vector<GaussianSig> fitted(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    fitted[c] = ssp_samples[c].empty() ? GaussianSig{clusters[c].centroid, kSigmaFloor, clusters[c].members.size()}
                                       : fit_gaussian(ssp_samples[c]);
  }
  std::vector<std::size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&fitted](std::size_t a, std::size_t b) { return fitted[a].mu < fitted[b].mu; });
  std::vector<std::size_t> rank(clusters.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

  TrainingResult result;
  ApplianceModel& model = result.model;
  model.id = id;
  model.name = name.empty() ? id : name;
  for (std::size_t c : order) model.states.push_back(fitted[c]);

  std::vector<std::size_t> row_total(clusters.size(), 0);
  for (const auto& [key, e] : observed) row_total[key.first] += e.count;

  const double denom = static_cast<double>(obs.segments.size() - 1);
  std::vector<std::pair<TransitionEdge, EdgeDiagnostic>> edges;
  for (const auto& [key, e] : observed) {
    TransitionEdge edge;
    edge.from_state = rank[key.first];
    edge.to_state = rank[key.second];
    edge.prob = static_cast<double>(e.count) / static_cast<double>(row_total[key.first]);
    edge.dsp = fit_gaussian(e.dsp);
    if (edge.dsp.mu == 0.0) fail(ErrorCode::validation, "appliance '" + id + "': transition with zero mean DSP");
    if (edge.direction() == Direction::increasing) edge.dts = fit_gaussian(e.dts.empty() ? e.dsp : e.dts);
    EdgeDiagnostic diag{edge.from_state, edge.to_state, e.count, static_cast<double>(e.count) / denom, e.count == 1};
    edges.emplace_back(std::move(edge), diag);
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return std::pair(a.first.from_state, a.first.to_state) < std::pair(b.first.from_state, b.first.to_state);
  });
  for (auto& [edge, diag] : edges) {
    model.edges.push_back(std::move(edge));
    report.edges.push_back(diag);
  }
  model.validate();
  result.report = std::move(report);
  return result;
}

/// Collects trained appliances into a validated household.
inline HouseholdModel assemble_household(std::vector<ApplianceModel> models, const HouseholdModel& defaults = {}) {
  HouseholdModel h = defaults;
  h.appliances = std::move(models);
  h.validate();
  return h;
}

}  // namespace efhmm
