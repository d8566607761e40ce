#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "efhmm/error.hpp"
#include "efhmm/model.hpp"

namespace efhmm {

inline constexpr double kDefaultOnThreshold = 5.0;

struct Confusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  bool operator==(const Confusion&) const = default;
};

struct Scores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no predicted ON samples
  bool recall_undefined = false;     // no true ON samples
};

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b) {
  require(a == b, ErrorCode::invalid_argument,
          "series length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace detail

/// Per-sample ON/OFF agreement; a sample is ON when power exceeds on_threshold.
inline Confusion onoff_confusion(std::span<const double> truth, std::span<const double> estimate,
                                 double on_threshold = kDefaultOnThreshold) {
  detail::require_same_length(truth.size(), estimate.size());
  require(on_threshold > 0.0, ErrorCode::invalid_argument, "on_threshold must be > 0");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] > on_threshold;
    const bool e = estimate[i] > on_threshold;
    if (t && e) ++c.tp;
    else if (!t && !e) ++c.tn;
    else if (e) ++c.fp;
    else ++c.fn;
  }
  return c;
}

inline Confusion onoff_confusion(const PowerSeries& truth, const PowerSeries& estimate,
                                 double on_threshold = kDefaultOnThreshold) {
  return onoff_confusion(truth.samples, estimate.samples, on_threshold);
}

/// Zero denominators yield 0 with the matching flag set.
inline Scores scores(const Confusion& c) {
  require(c.total() > 0, ErrorCode::invalid_argument, "confusion counts are all zero");
  Scores s;
  const auto d = [](std::size_t v) { return static_cast<double>(v); };
  s.accuracy = d(c.tp + c.tn) / d(c.total());
  s.precision_undefined = c.tp + c.fp == 0;
  s.recall_undefined = c.tp + c.fn == 0;
  s.precision = s.precision_undefined ? 0.0 : d(c.tp) / d(c.tp + c.fp);
  s.recall = s.recall_undefined ? 0.0 : d(c.tp) / d(c.tp + c.fn);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline double rmse(std::span<const double> truth, std::span<const double> estimate) {
  detail::require_same_length(truth.size(), estimate.size());
  require(!truth.empty(), ErrorCode::invalid_argument, "rmse needs at least one sample");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - estimate[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

inline double rmse(const PowerSeries& truth, const PowerSeries& estimate) {
  return rmse(truth.samples, estimate.samples);
}

struct ApplianceMetrics {
  std::string id;
  Confusion confusion;
  Scores scores;
  double rmse = 0.0;
};

inline ApplianceMetrics evaluate_appliance(const std::string& id, const PowerSeries& truth,
                                           const PowerSeries& estimate, double on_threshold = kDefaultOnThreshold) {
  ApplianceMetrics m;
  m.id = id;
  m.confusion = onoff_confusion(truth, estimate, on_threshold);
  m.scores = scores(m.confusion);
  m.rmse = rmse(truth, estimate);
  return m;
}

/// Unweighted mean over appliances of each score and of RMSE.
inline ApplianceMetrics macro_average(std::span<const ApplianceMetrics> per_appliance) {
  require(!per_appliance.empty(), ErrorCode::invalid_argument, "macro_average needs at least one appliance");
  ApplianceMetrics avg;
  avg.id = "macro_average";
  for (const auto& m : per_appliance) {
    avg.confusion.tp += m.confusion.tp;
    avg.confusion.tn += m.confusion.tn;
    avg.confusion.fp += m.confusion.fp;
    avg.confusion.fn += m.confusion.fn;
    avg.scores.accuracy += m.scores.accuracy;
    avg.scores.precision += m.scores.precision;
    avg.scores.recall += m.scores.recall;
    avg.scores.f1 += m.scores.f1;
    avg.rmse += m.rmse;
  }
  const auto n = static_cast<double>(per_appliance.size());
  avg.scores.accuracy /= n;
  avg.scores.precision /= n;
  avg.scores.recall /= n;
  avg.scores.f1 /= n;
  avg.rmse /= n;
  return avg;
}

}  // namespace efhmm
