#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "efhmm/error.hpp"

namespace efhmm {

/// Thresholds of the streaming event detector. Shared by edge and cloud
/// through the model file, so both sides segment a stream identically.
struct DetectorConfig {
  double steady_delta_w = 10.0;         // max-min of a steady window
  double event_threshold_w = 15.0;      // deviation from the pre-event mean that opens a transient
  double window_seconds = 2.0;          // steady window length n_w
  double max_transient_seconds = 30.0;  // force-close cap

  std::size_t window_samples(double sample_rate_hz) const {
    return static_cast<std::size_t>(std::max<long>(1, std::lround(window_seconds * sample_rate_hz)));
  }

  std::size_t max_transient_samples(double sample_rate_hz) const {
    return static_cast<std::size_t>(std::max<long>(1, std::lround(max_transient_seconds * sample_rate_hz)));
  }

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(positive(steady_delta_w), ErrorCode::validation, "detector.steady_delta_w must be > 0");
    require(positive(event_threshold_w), ErrorCode::validation, "detector.event_threshold_w must be > 0");
    require(positive(window_seconds), ErrorCode::validation, "detector.window_seconds must be > 0");
    require(positive(max_transient_seconds), ErrorCode::validation,
            "detector.max_transient_seconds must be > 0");
  }

  bool operator==(const DetectorConfig&) const = default;
};

/// Parameters of the power-dependent mean-shift.
struct ClusterConfig {
  double h_min_w = 5.0;        // bandwidth floor
  double beta = 0.05;          // bandwidth slope: bandwidth(p) = max(h_min, beta * p)
  double merge_factor = 0.5;   // centroids closer than merge_factor * min bandwidth are merged each iteration
  double tol_w = 0.01;         // convergence threshold on centroid movement
  std::size_t max_iter = 500;

  double bandwidth(double power_w) const { return std::max(h_min_w, beta * std::abs(power_w)); }

  void validate() const {
    require(std::isfinite(h_min_w) && h_min_w > 0.0, ErrorCode::validation, "cluster.h_min_w must be > 0");
    require(std::isfinite(beta) && beta >= 0.0, ErrorCode::validation, "cluster.beta must be >= 0");
    require(std::isfinite(merge_factor) && merge_factor > 0.0, ErrorCode::validation,
            "cluster.merge_factor must be > 0");
    require(std::isfinite(tol_w) && tol_w > 0.0, ErrorCode::validation, "cluster.tol_w must be > 0");
    require(max_iter >= 1, ErrorCode::validation, "cluster.max_iter must be >= 1");
  }

  bool operator==(const ClusterConfig&) const = default;
};

}  // namespace efhmm
