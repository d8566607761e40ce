#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "efhmm/config.hpp"
#include "efhmm/error.hpp"

namespace efhmm {

struct Cluster {
  double centroid = 0.0;
  std::vector<std::size_t> members;  // indices into the input
};

namespace detail {

struct Mode {
  double position;
  double weight;  // number of seeds merged into this mode
};

/// Merges neighbours closer than factor * min(bandwidth) into their weighted mean.
inline void merge_close_modes(std::vector<Mode>& modes, const ClusterConfig& config, double factor) {
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    return a.position < b.position || (a.position == b.position && a.weight < b.weight);
  });
  std::vector<Mode> merged;
  merged.reserve(modes.size());
  for (const Mode& m : modes) {
    if (!merged.empty()) {
      Mode& last = merged.back();
      const double radius = factor * std::min(config.bandwidth(last.position), config.bandwidth(m.position));
      if (m.position - last.position < radius) {
        const double w = last.weight + m.weight;
        last.position = (last.position * last.weight + m.position * m.weight) / w;
        last.weight = w;
        continue;
      }
    }
    merged.push_back(m);
  }
  modes.swap(merged);
}

}  // namespace detail

/// One-dimensional mean-shift over steady-period means.
///
/// Flat kernel whose radius grows with power (bandwidth(p) = max(h_min, beta*p)),
/// seeded at every distinct input value. Modes closer than
/// merge_factor * bandwidth are merged after every iteration; after
/// convergence any pair closer than one bandwidth is merged as well. Each
/// input is assigned to its nearest centroid (ties go to the lower one).
/// Output is sorted by centroid and independent of input order.
inline std::vector<Cluster> mean_shift_states(std::span<const double> values, const ClusterConfig& config) {
  config.validate();
  require(!values.empty(), ErrorCode::invalid_argument, "mean_shift_states needs at least one value");
  for (double v : values) {
    require(std::isfinite(v), ErrorCode::non_finite, "mean_shift_states input must be finite");
    require(v >= 0.0, ErrorCode::invalid_argument, "mean_shift_states input must be non-negative");
  }

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(sorted.size() + 1, 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];

  std::vector<detail::Mode> modes;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    modes.push_back({sorted[i], static_cast<double>(j - i)});
    i = j;
  }

  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    double max_move = 0.0;
    for (auto& m : modes) {
      const double h = config.bandwidth(m.position);
      const auto lo = std::lower_bound(sorted.begin(), sorted.end(), m.position - h) - sorted.begin();
      const auto hi = std::upper_bound(sorted.begin(), sorted.end(), m.position + h) - sorted.begin();
      if (hi <= lo) continue;
      const double next = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
      max_move = std::max(max_move, std::abs(next - m.position));
      m.position = next;
    }
    detail::merge_close_modes(modes, config, config.merge_factor);
    if (max_move < config.tol_w) break;
  }
  for (std::size_t before = 0; before != modes.size();) {
    before = modes.size();
    detail::merge_close_modes(modes, config, 1.0);
  }

  std::vector<Cluster> clusters(modes.size());
  for (std::size_t c = 0; c < modes.size(); ++c) clusters[c].centroid = modes[c].position;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::abs(values[i] - clusters[0].centroid);
    for (std::size_t c = 1; c < clusters.size(); ++c) {
      const double d = std::abs(values[i] - clusters[c].centroid);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    clusters[best].members.push_back(i);
  }
  std::erase_if(clusters, [](const Cluster& c) { return c.members.empty(); });
  return clusters;
}

/// Index of the centroid nearest to `value`; ties resolve to the lower centroid.
inline std::size_t nearest_centroid(std::span<const Cluster> clusters, double value) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < clusters.size(); ++c) {
    if (std::abs(value - clusters[c].centroid) < std::abs(value - clusters[best].centroid)) best = c;
  }
  return best;
}

}  // namespace efhmm
