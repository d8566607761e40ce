#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "efhmm/events.hpp"
#include "efhmm/model.hpp"

namespace efhmm {

/// Transient signatures of one event. dts is zero for power-decreasing events.
struct EventRecord {
  EventBoundary boundary;
  double dts = 0.0;        // spike value minus pre-event window mean
  double dsp = 0.0;        // post-event window mean minus pre-event window mean
  double pre_mean = 0.0;
  double post_mean = 0.0;
  double timestamp = 0.0;  // epoch seconds of start_idx
  bool short_window = false;
  bool truncated = false;
  bool compound = false;

  Direction direction() const noexcept { return dsp > 0.0 ? Direction::increasing : Direction::decreasing; }
  bool operator==(const EventRecord&) const = default;
};

inline EventRecord make_event_record(const DetectedEvent& ev, double sample_rate_hz, double start_time,
                                     std::size_t window_samples) {
  EventRecord r;
  r.boundary = ev.boundary;
  r.pre_mean = ev.pre_mean;
  r.post_mean = ev.post_mean;
  r.dsp = ev.post_mean - ev.pre_mean;
  r.dts = r.dsp > 0.0 ? ev.spike_value - ev.pre_mean : 0.0;
  r.timestamp = start_time + static_cast<double>(ev.boundary.start_idx) / sample_rate_hz;
  r.short_window = ev.pre_samples < window_samples || ev.post_samples < window_samples;
  r.truncated = ev.truncated;
  r.compound = ev.compound;
  return r;
}

/// Computes an event's signatures directly from the series.
///
/// The pre window is the window_samples immediately before start_idx, clipped
/// at pre_begin (start of the preceding steady segment); the post window starts
/// at end_idx and is clipped at post_end. A clipped window sets short_window.
inline EventRecord extract_event_record(const PowerSeries& series, const EventBoundary& b,
                                        const DetectorConfig& config, std::size_t pre_begin = 0,
                                        std::size_t post_end = std::numeric_limits<std::size_t>::max()) {
  const std::size_t n = series.size();
  const auto where = [&b] {
    return "boundary (" + std::to_string(b.start_idx) + ", " + std::to_string(b.spike_idx) + ", " +
           std::to_string(b.end_idx) + ")";
  };
  require(b.start_idx <= b.spike_idx && b.spike_idx < b.end_idx && b.end_idx < n, ErrorCode::invalid_argument,
          where() + " out of range for series of length " + std::to_string(n));
  require(pre_begin < b.start_idx, ErrorCode::invalid_argument, where() + " has no pre-event samples");
  post_end = std::min(post_end, n);
  require(post_end > b.end_idx, ErrorCode::invalid_argument, where() + " has no post-event samples");

  const std::size_t w = config.window_samples(series.sample_rate_hz);
  const std::size_t pre_lo = b.start_idx >= pre_begin + w ? b.start_idx - w : pre_begin;
  const std::size_t post_hi = std::min(post_end, b.end_idx + w);
  const std::span<const double> all(series.samples);

  EventRecord r;
  r.boundary = b;
  r.pre_mean = mean_of(all.subspan(pre_lo, b.start_idx - pre_lo));
  r.post_mean = mean_of(all.subspan(b.end_idx, post_hi - b.end_idx));
  r.dsp = r.post_mean - r.pre_mean;
  r.dts = r.dsp > 0.0 ? series.samples[b.spike_idx] - r.pre_mean : 0.0;
  r.timestamp = series.time_at(b.start_idx);
  r.short_window = (b.start_idx - pre_lo) < w || (post_hi - b.end_idx) < w;
  const double sign = r.dsp > 0.0 ? 1.0 : -1.0;
  for (std::size_t i = b.start_idx; i < b.end_idx; ++i) {
    if ((series.samples[i] - r.pre_mean) * sign < -config.event_threshold_w) r.compound = true;
  }
  return r;
}

/// Steady-state power of a segment: its arithmetic mean.
inline double extract_ssp(const PowerSeries& series, const SteadySegment& segment) {
  require(segment.start_idx < segment.end_idx && segment.end_idx <= series.size(), ErrorCode::invalid_argument,
          "segment out of range");
  return mean_of(std::span<const double>(series.samples).subspan(segment.start_idx, segment.length()));
}

/// Event records plus the aggregate SSP seen after each event.
///
/// steady_ssps[0] is the SSP of the first steady segment; steady_ssps[m + 1]
/// is the mean of the first steady window after event m, which is the value
/// stage-2 confirmation compares against (the edge reports exactly this
/// window in its first STEADY message after an event).
struct Observations {
  std::vector<EventRecord> events;
  std::vector<double> steady_ssps;
  std::vector<SteadySegment> segments;
};

inline Observations observe(const PowerSeries& series, const DetectorConfig& config) {
  const Detection det = detect_events(series, config);
  const std::size_t w = config.window_samples(series.sample_rate_hz);
  Observations obs;
  obs.segments = det.segments;
  obs.steady_ssps.push_back(extract_ssp(series, det.segments.front()));
  for (const auto& ev : det.events) {
    obs.events.push_back(make_event_record(ev, series.sample_rate_hz, series.start_time, w));
    obs.steady_ssps.push_back(ev.post_mean);
  }
  return obs;
}

}  // namespace efhmm
