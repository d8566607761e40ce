#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "efhmm/config.hpp"
#include "efhmm/error.hpp"
#include "efhmm/model.hpp"

namespace efhmm {

/// Transient period [start_idx, end_idx) with its extremum. end_idx is the
/// first sample of the following steady period.
struct EventBoundary {
  std::size_t start_idx = 0;
  std::size_t spike_idx = 0;
  std::size_t end_idx = 0;

  bool operator==(const EventBoundary&) const = default;
};

struct SteadySegment {
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;  // exclusive
  double mean = 0.0;
  double std = 0.0;

  std::size_t length() const noexcept { return end_idx - start_idx; }
  bool operator==(const SteadySegment&) const = default;
};

/// What the streaming detector knows when it closes a transient.
struct DetectedEvent {
  EventBoundary boundary;
  double pre_mean = 0.0;     // mean of up to one window before start_idx
  double post_mean = 0.0;    // mean of the window starting at end_idx
  double spike_value = 0.0;  // sample at spike_idx
  std::size_t pre_samples = 0;
  std::size_t post_samples = 0;
  bool truncated = false;  // forced closed at max_transient_seconds
  bool compound = false;   // transient swings against the net step by more than the trigger threshold

  double dsp() const noexcept { return post_mean - pre_mean; }
};

/// A fixed-length window inside a steady period (one per n_w seconds).
struct SteadyWindow {
  std::size_t begin_idx = 0;
  std::size_t end_idx = 0;  // exclusive
  double mean = 0.0;
};

using DetectorEmission = std::variant<SteadySegment, DetectedEvent, SteadyWindow>;

/// Arithmetic mean in index order. Every window mean in the library goes
/// through here so that streaming and offline paths agree bit for bit.
inline double mean_of(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

namespace detail {

class RunningMoments {
 public:
  void add(double x) {
    if (n_ == 0) anchor_ = x;
    const double d = x - anchor_;
    sum_ += d;
    sumsq_ += d * d;
    ++n_;
  }
  void reset() { *this = RunningMoments{}; }
  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return n_ == 0 ? 0.0 : anchor_ + sum_ / static_cast<double>(n_); }
  double stddev() const noexcept {
    if (n_ == 0) return 0.0;
    const double m = sum_ / static_cast<double>(n_);
    return std::sqrt(std::max(0.0, sumsq_ / static_cast<double>(n_) - m * m));
  }

 private:
  double anchor_ = 0.0;
  double sum_ = 0.0;
  double sumsq_ = 0.0;
  std::size_t n_ = 0;
};

/// Last `capacity` samples, readable in arrival order.
class SampleRing {
 public:
  explicit SampleRing(std::size_t capacity) : buf_(capacity) {}

  void push(double x) {
    buf_[head_] = x;
    head_ = (head_ + 1) % buf_.size();
    if (size_ < buf_.size()) ++size_;
  }

  std::size_t size() const noexcept { return size_; }

  /// Copies the most recent k samples, oldest first.
  void last(std::size_t k, std::vector<double>& out) const {
    out.resize(k);
    const std::size_t cap = buf_.size();
    std::size_t pos = (head_ + cap - k) % cap;
    for (std::size_t i = 0; i < k; ++i) {
      out[i] = buf_[pos];
      pos = (pos + 1) % cap;
    }
  }

 private:
  std::vector<double> buf_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

/// Sliding max-min over the trailing `width` samples (monotone deques).
class SlidingRange {
 public:
  explicit SlidingRange(std::size_t width) : width_(width) {}

  void push(std::size_t idx, double x) {
    while (!max_.empty() && max_.back().second <= x) max_.pop_back();
    max_.emplace_back(idx, x);
    while (!min_.empty() && min_.back().second >= x) min_.pop_back();
    min_.emplace_back(idx, x);
    const std::size_t lo = idx + 1 >= width_ ? idx + 1 - width_ : 0;
    while (max_.front().first < lo) max_.pop_front();
    while (min_.front().first < lo) min_.pop_front();
  }

  double range() const noexcept { return max_.front().second - min_.front().second; }

 private:
  std::size_t width_;
  std::deque<std::pair<std::size_t, double>> max_;
  std::deque<std::pair<std::size_t, double>> min_;
};

}  // namespace detail

/// One-pass event detector.
///
/// Steady state: a sample farther than event_threshold_w from the running
/// mean of the current steady period opens a transient. The transient closes
/// at the first window of window_samples (starting at least one sample after
/// the trigger) whose max-min is within steady_delta_w, or is force-closed
/// after max_transient_seconds. If the closing window mean differs from the
/// pre-event window mean by less than event_threshold_w the excursion is a
/// glitch and is folded back into the steady period.
///
/// Memory is bounded by one window plus max_transient_seconds of samples.
class EventDetector {
 public:
  EventDetector(const DetectorConfig& config, double sample_rate_hz)
      : config_(config),
        window_(config.window_samples(sample_rate_hz)),
        cap_(config.max_transient_samples(sample_rate_hz)),
        ring_(window_),
        range_(window_) {
    config.validate();
    require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0, ErrorCode::invalid_argument,
            "sample_rate_hz must be > 0");
  }

  std::size_t window_samples() const noexcept { return window_; }
  std::size_t samples_seen() const noexcept { return t_; }

  void push(double x) {
    require(!finished_, ErrorCode::invalid_argument, "push after finish");
    if (!std::isfinite(x)) fail(ErrorCode::non_finite, "non-finite sample at index " + std::to_string(t_));
    const std::size_t idx = t_;

    if (mode_ == Mode::steady && ref_.count() > 0 &&
        std::abs(x - ref_.mean()) > config_.event_threshold_w) {
      open_transient(idx);
    }

    ring_.push(x);
    range_.push(idx, x);
    ++t_;

    if (mode_ == Mode::steady) {
      segment_.add(x);
      ref_.add(x);
      if (++window_fill_ == window_) {
        emit_window(window_);
        window_fill_ = 0;
      }
      return;
    }

    transient_.push_back(x);
    // Candidate end positions are start+1 .. start+cap; each needs a full window after it.
    if (idx + 1 >= start_ + 1 + window_) {
      const std::size_t end = idx + 1 - window_;
      if (range_.range() <= config_.steady_delta_w) {
        close_transient(end, false);
      } else if (end == start_ + cap_) {
        close_transient(end, true);
      }
    }
  }

  void push(std::span<const double> xs) {
    for (double x : xs) push(x);
  }

  /// Flushes the trailing steady period. An unfinished transient at the end
  /// of the stream is folded into the last steady period.
  void finish() {
    if (finished_) return;
    finished_ = true;
    if (t_ == 0) return;
    if (mode_ == Mode::steady) {
      if (window_fill_ > 0) emit_window(window_fill_);
    } else {
      for (double x : transient_) segment_.add(x);
      transient_.clear();
      mode_ = Mode::steady;
    }
    out_.emplace_back(SteadySegment{segment_start_, t_, segment_.mean(), segment_.stddev()});
  }

  /// Moves out everything emitted since the previous call, in stream order.
  std::vector<DetectorEmission> take() {
    std::vector<DetectorEmission> out;
    out.swap(out_);
    return out;
  }

 private:
  enum class Mode { steady, transient };

  void open_transient(std::size_t idx) {
    mode_ = Mode::transient;
    start_ = idx;
    pre_samples_ = std::min(window_, idx - segment_start_);
    ring_.last(pre_samples_, scratch_);
    pre_mean_ = mean_of(scratch_);
    transient_.clear();
    window_fill_ = 0;
  }

  void close_transient(std::size_t end, bool truncated) {
    ring_.last(window_, scratch_);
    const double post_mean = mean_of(scratch_);
    const double dsp = post_mean - pre_mean_;
    const std::size_t transient_len = end - start_;

    if (std::abs(dsp) < config_.event_threshold_w) {
      for (double x : transient_) segment_.add(x);
      for (double x : scratch_) ref_.add(x);
    } else {
      DetectedEvent ev;
      ev.pre_mean = pre_mean_;
      ev.post_mean = post_mean;
      ev.pre_samples = pre_samples_;
      ev.post_samples = window_;
      ev.truncated = truncated;
      std::size_t spike = 0;
      if (dsp > 0.0) {
        double best = -1.0;
        for (std::size_t i = 0; i < transient_len; ++i) {
          const double dev = std::abs(transient_[i] - pre_mean_);
          if (dev > best) {
            best = dev;
            spike = i;
          }
        }
      }
      const double sign = dsp > 0.0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < transient_len; ++i) {
        if ((transient_[i] - pre_mean_) * sign < -config_.event_threshold_w) ev.compound = true;
      }
      ev.boundary = EventBoundary{start_, start_ + spike, end};
      ev.spike_value = transient_[spike];

      out_.emplace_back(SteadySegment{segment_start_, start_, segment_.mean(), segment_.stddev()});
      out_.emplace_back(ev);
      segment_start_ = end;
      segment_.reset();
      ref_.reset();
      for (double x : scratch_) {
        segment_.add(x);
        ref_.add(x);
      }
    }
    out_.emplace_back(SteadyWindow{t_ - window_, t_, post_mean});
    transient_.clear();
    window_fill_ = 0;
    mode_ = Mode::steady;
  }

  void emit_window(std::size_t n) {
    ring_.last(n, scratch_);
    out_.emplace_back(SteadyWindow{t_ - n, t_, mean_of(scratch_)});
  }

  DetectorConfig config_;
  std::size_t window_;
  std::size_t cap_;
  detail::SampleRing ring_;
  detail::SlidingRange range_;

  Mode mode_ = Mode::steady;
  std::size_t t_ = 0;
  bool finished_ = false;

  std::size_t segment_start_ = 0;
  detail::RunningMoments segment_;  // every sample attributed to the open steady period
  detail::RunningMoments ref_;      // steady samples only; trigger reference
  std::size_t window_fill_ = 0;

  std::size_t start_ = 0;
  std::size_t pre_samples_ = 0;
  double pre_mean_ = 0.0;
  std::vector<double> transient_;  // samples since start_, bounded by cap + window

  std::vector<double> scratch_;
  std::vector<DetectorEmission> out_;
};

/// Offline view of one detector pass.
struct Detection {
  std::vector<DetectedEvent> events;
  std::vector<SteadySegment> segments;  // always events.size() + 1 entries
  std::vector<SteadyWindow> windows;

  std::vector<EventBoundary> boundaries() const {
    std::vector<EventBoundary> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.boundary);
    return out;
  }
};

inline Detection detect_events(const PowerSeries& series, const DetectorConfig& config) {
  series.validate();
  config.validate();
  const std::size_t window = config.window_samples(series.sample_rate_hz);
  if (series.size() < 2 * window) {
    fail(ErrorCode::too_short, "series has " + std::to_string(series.size()) + " samples, detector needs at least " +
                                   std::to_string(2 * window));
  }
  EventDetector detector(config, series.sample_rate_hz);
  Detection result;
  auto collect = [&result](std::vector<DetectorEmission>&& items) {
    for (auto& item : items) {
      if (auto* s = std::get_if<SteadySegment>(&item)) result.segments.push_back(*s);
      else if (auto* e = std::get_if<DetectedEvent>(&item)) result.events.push_back(*e);
      else result.windows.push_back(std::get<SteadyWindow>(item));
    }
  };
  for (double x : series.samples) {
    detector.push(x);
    collect(detector.take());
  }
  detector.finish();
  collect(detector.take());
  return result;
}

}  // namespace efhmm
