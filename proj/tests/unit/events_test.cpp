#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "efhmm/events.hpp"
#include "efhmm/signatures.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace efhmm;

namespace {

std::vector<oracle::Boundary> oracle_boundaries(const PowerSeries& s, const DetectorConfig& c) {
  return oracle::brute_force_segment(s.samples, c.window_samples(s.sample_rate_hz),
                                     c.max_transient_samples(s.sample_rate_hz), c.steady_delta_w,
                                     c.event_threshold_w);
}

std::vector<oracle::Boundary> as_oracle(const Detection& d) {
  std::vector<oracle::Boundary> out;
  for (const auto& e : d.events) {
    out.push_back({e.boundary.start_idx, e.boundary.spike_idx, e.boundary.end_idx, e.truncated});
  }
  return out;
}

/// Steps at least 45 W apart with bounded noise; increasing steps may carry
/// a decaying overshoot.
PowerSeries random_piecewise(std::mt19937_64& rng, double rate, std::size_t pieces, double noise = 2.0) {
  std::uniform_real_distribution<double> level(0.0, 2000.0);
  std::uniform_int_distribution<std::size_t> length(static_cast<std::size_t>(6 * rate),
                                                    static_cast<std::size_t>(20 * rate));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-noise, noise);
  PowerSeries s;
  s.sample_rate_hz = rate;
  double current = level(rng);
  for (std::size_t p = 0; p < pieces; ++p) {
    double next = level(rng);
    while (std::abs(next - current) < 45.0) next = level(rng);
    const double overshoot = next > current && unit(rng) < 0.5 ? (next - current) * unit(rng) * 1.5 : 0.0;
    const double tau = 0.2 * rate + unit(rng) * rate;
    const std::size_t len = length(rng);
    for (std::size_t i = 0; i < len; ++i) {
      const double extra = p > 0 ? overshoot * std::exp(-static_cast<double>(i) / tau) : 0.0;
      s.samples.push_back(std::max(0.0, next + extra + jitter(rng)));
    }
    current = next;
  }
  return s;
}

}  // namespace

TEST(Events, CleanStepYieldsOneEventWithSpikeAtTarget) {
  const PowerSeries s = fixtures::steps({0.0, 1000.0}, {50, 50}, 10.0);
  const Detection d = detect_events(s, {});
  ASSERT_EQ(d.events.size(), 1u);
  EXPECT_EQ(d.events[0].boundary, (EventBoundary{50, 50, 51}));
  EXPECT_EQ(d.events[0].spike_value, 1000.0);
  EXPECT_EQ(d.events[0].pre_mean, 0.0);
  EXPECT_EQ(d.events[0].post_mean, 1000.0);
  ASSERT_EQ(d.segments.size(), 2u);
  EXPECT_EQ(d.segments[0], (SteadySegment{0, 50, 0.0, 0.0}));
  EXPECT_EQ(d.segments[1], (SteadySegment{51, 100, 1000.0, 0.0}));
}

TEST(Events, ConstantSeriesHasOneSegmentAndNoEvents) {
  const PowerSeries s = fixtures::steps({42.03}, {500}, 50.0);
  const Detection d = detect_events(s, {});
  EXPECT_TRUE(d.events.empty());
  ASSERT_EQ(d.segments.size(), 1u);
  EXPECT_EQ(d.segments[0].start_idx, 0u);
  EXPECT_EQ(d.segments[0].end_idx, 500u);
}

TEST(Events, MotorTurnOnMatchesBruteForceSegmentation) {
  PowerSeries s;
  s.sample_rate_hz = 50.0;
  s.samples.assign(200, 0.0);
  for (int k = 0; k < 400; ++k) s.samples.push_back(1000.0 + 1400.0 * std::exp(-k / 10.0));
  const DetectorConfig c;
  const Detection d = detect_events(s, c);
  ASSERT_EQ(d.events.size(), 1u);
  const auto& ev = d.events[0];
  EXPECT_EQ(ev.boundary.start_idx, 200u);
  EXPECT_EQ(ev.boundary.spike_idx, 200u);
  EXPECT_NEAR(ev.spike_value, 2400.0, 1e-9);
  // The window starting at end_idx is within steady_delta: 1400 e^{-k/10} <= 10 needs k >= 50.
  EXPECT_GE(ev.boundary.end_idx, 250u);
  EXPECT_FALSE(ev.truncated);
  EXPECT_EQ(as_oracle(d), oracle_boundaries(s, c));
}

TEST(Events, DecreasingStepHasSpikeAtStart) {
  const PowerSeries s = fixtures::steps({1000.0, 0.0}, {60, 60}, 10.0);
  const Detection d = detect_events(s, {});
  ASSERT_EQ(d.events.size(), 1u);
  EXPECT_EQ(d.events[0].boundary.spike_idx, d.events[0].boundary.start_idx);
}

TEST(Events, LongTransientIsForceClosedAndFlagged) {
  // 0 W, then 5 s of oscillation wider than steady_delta, then 500 W; cap of 2 s.
  PowerSeries s = fixtures::steps({0.0}, {40}, 10.0);
  for (int i = 0; i < 50; ++i) s.samples.push_back(i % 2 ? 520.0 : 480.0);
  s.samples.insert(s.samples.end(), 60, 500.0);
  DetectorConfig c;
  c.max_transient_seconds = 2.0;
  const Detection d = detect_events(s, c);
  // The oscillation left after the forced close settles back to the same mean, so it folds as a glitch.
  ASSERT_EQ(d.events.size(), 1u);
  EXPECT_TRUE(d.events[0].truncated);
  EXPECT_EQ(d.events[0].boundary.start_idx, 40u);
  EXPECT_EQ(d.events[0].boundary.end_idx, 40u + 20u);
}

TEST(Events, GlitchIsFoldedIntoSteadyPeriod) {
  PowerSeries s = fixtures::steps({100.0}, {60}, 10.0);
  s.samples[30] = 400.0;
  const Detection d = detect_events(s, {});
  EXPECT_TRUE(d.events.empty());
  ASSERT_EQ(d.segments.size(), 1u);
  EXPECT_EQ(d.segments[0].length(), 60u);
}

TEST(Events, CompoundTransientIsFlagged) {
  PowerSeries s = fixtures::steps({1000.0, 500.0, 1500.0, 1200.0}, {60, 3, 3, 60}, 10.0);
  const Detection d = detect_events(s, {});
  ASSERT_EQ(d.events.size(), 1u);
  EXPECT_TRUE(d.events[0].compound);
  EXPECT_GT(d.events[0].dsp(), 0.0);
}

TEST(Events, TooShortSeriesIsRejected) {
  const PowerSeries s = fixtures::steps({1.0}, {39}, 10.0);
  try {
    detect_events(s, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::too_short);
  }
}

TEST(Events, NonFiniteSampleIsRejected) {
  PowerSeries s = fixtures::steps({1.0}, {100}, 10.0);
  s.samples[7] = std::nan("");
  try {
    detect_events(s, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_finite);
    EXPECT_NE(std::string(e.what()).find("index 7"), std::string::npos);
  }
}

TEST(Events, StreamingDetectorRejectsNonFiniteAtIngestion) {
  EventDetector det({}, 10.0);
  det.push(1.0);
  EXPECT_THROW(det.push(std::numeric_limits<double>::infinity()), Error);
}

TEST(Events, WindowsCoverSteadyPeriodsAtOnePerWindow) {
  const PowerSeries s = fixtures::steps({5.0}, {1000}, 50.0);
  const Detection d = detect_events(s, {});
  ASSERT_EQ(d.windows.size(), 10u);
  for (std::size_t k = 0; k < d.windows.size(); ++k) {
    EXPECT_EQ(d.windows[k].begin_idx, k * 100);
    EXPECT_EQ(d.windows[k].end_idx, (k + 1) * 100);
    EXPECT_EQ(d.windows[k].mean, 5.0);
  }
}

TEST(EventsProperty, MatchesBruteForceSegmenter) {
  std::mt19937_64 rng(31337);
  const DetectorConfig c;
  for (int trial = 0; trial < 60; ++trial) {
    const PowerSeries s = random_piecewise(rng, 10.0, 8);
    ASSERT_EQ(as_oracle(detect_events(s, c)), oracle_boundaries(s, c)) << "trial " << trial;
  }
}

TEST(EventsProperty, SegmentsAndTransientsTileTheSeries) {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const PowerSeries s = random_piecewise(rng, 50.0, 12, trial % 2 ? 2.0 : 6.0);
    const Detection d = detect_events(s, {});
    ASSERT_EQ(d.segments.size(), d.events.size() + 1);
    std::size_t covered = 0;
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < d.segments.size(); ++k) {
      EXPECT_EQ(d.segments[k].start_idx, cursor);
      EXPECT_GE(d.segments[k].length(), 1u);
      covered += d.segments[k].length();
      cursor = d.segments[k].end_idx;
      if (k < d.events.size()) {
        const auto& b = d.events[k].boundary;
        EXPECT_EQ(b.start_idx, cursor);
        EXPECT_LE(b.start_idx, b.spike_idx);
        EXPECT_LT(b.spike_idx, b.end_idx);
        covered += b.end_idx - b.start_idx;
        cursor = b.end_idx;
      }
    }
    EXPECT_EQ(cursor, s.size());
    EXPECT_EQ(covered, s.size());
  }
}

TEST(EventsProperty, FlatDataYieldsNoEvents) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> base(0.0, 3000.0);
  const DetectorConfig c;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_real_distribution<double> jitter(0.0, c.steady_delta_w);
    const double b = base(rng);
    PowerSeries s;
    s.sample_rate_hz = 50.0;
    for (int i = 0; i < 2000; ++i) s.samples.push_back(b + jitter(rng));
    EXPECT_TRUE(detect_events(s, c).events.empty());
  }
}

TEST(EventsProperty, RaisingThresholdNeverAddsEvents) {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 60; ++trial) {
    const PowerSeries s = random_piecewise(rng, 20.0, 10, 4.0);
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double threshold : {15.0, 20.0, 30.0, 60.0, 120.0, 250.0, 500.0, 1000.0, 2500.0}) {
      DetectorConfig c;
      c.event_threshold_w = threshold;
      const std::size_t n = detect_events(s, c).events.size();
      EXPECT_LE(n, previous) << "trial " << trial << " threshold " << threshold;
      previous = n;
    }
  }
}

TEST(EventsProperty, AddingAConstantLeavesBoundariesUnchanged) {
  std::mt19937_64 rng(1618);
  std::uniform_real_distribution<double> shift(-500.0, 5000.0);
  for (int trial = 0; trial < 60; ++trial) {
    PowerSeries s = random_piecewise(rng, 20.0, 10, 3.0);
    const auto base = detect_events(s, {}).boundaries();
    const double c = std::round(shift(rng));
    for (double& x : s.samples) x += c;
    EXPECT_EQ(detect_events(s, {}).boundaries(), base) << "trial " << trial << " shift " << c;
  }
}

TEST(EventsProperty, ChunkedStreamingEqualsOneShot) {
  std::mt19937_64 rng(5);
  const PowerSeries s = random_piecewise(rng, 50.0, 10);
  EventDetector a({}, 50.0);
  EventDetector b({}, 50.0);
  std::vector<DetectorEmission> out_a;
  std::vector<DetectorEmission> out_b;
  for (double x : s.samples) {
    a.push(x);
    for (auto& e : a.take()) out_a.push_back(e);
  }
  a.finish();
  for (auto& e : a.take()) out_a.push_back(e);
  const std::span<const double> all(s.samples);
  for (std::size_t i = 0; i < all.size(); i += 777) b.push(all.subspan(i, std::min<std::size_t>(777, all.size() - i)));
  b.finish();
  out_b = b.take();
  ASSERT_EQ(out_a.size(), out_b.size());
  for (std::size_t k = 0; k < out_a.size(); ++k) EXPECT_EQ(out_a[k].index(), out_b[k].index());
}
