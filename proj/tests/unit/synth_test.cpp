#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "efhmm/signatures.hpp"
#include "efhmm/synth.hpp"
#include "fixtures.hpp"

using namespace efhmm;

namespace {

ApplianceArchetype find(const std::vector<ApplianceArchetype>& archs, const std::string& id) {
  for (const auto& a : archs) {
    if (a.id == id) return a;
  }
  throw std::runtime_error("no archetype " + id);
}

std::vector<ApplianceArchetype> lifted_like(double hours = 10.0) { return fixtures::lifted_like(hours); }

void expect_error(const std::function<void()>& f, ErrorCode code) {
  try {
    f();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Synth, KettleTurnOnHasFlatStep) {
  const ApplianceArchetype kettle = find(lifted_like(), "kettle");
  double dsp_sum = 0.0;
  const int seeds = 50;
  for (int seed = 1; seed <= seeds; ++seed) {
    const PowerSeries s = generate_trace(kettle, {{10.0, 1}, {40.0, 0}}, 50.0, 60.0, seed);
    const Observations obs = observe(s, {});
    ASSERT_EQ(obs.events.size(), 2u);
    const auto& on = obs.events[0];
    EXPECT_NEAR(on.boundary.start_idx, 500u, 1u);
    EXPECT_LE(std::abs(on.dts - on.dsp), 2.0 * DetectorConfig{}.steady_delta_w);
    dsp_sum += on.dsp;
  }
  // Per-visit levels: DSP ~ N(1027.1 - 0.4, 5.1).
  EXPECT_NEAR(dsp_sum / seeds, 1026.7, 3.0 * 5.1 / std::sqrt(seeds));
}

TEST(Synth, VacuumSpikeMatchesItsSignature) {
  const ApplianceArchetype vacuum = find(lifted_like(), "vacuum");
  for (int seed = 1; seed <= 20; ++seed) {
    const PowerSeries s = generate_trace(vacuum, {{10.0, 1}, {40.0, 0}}, 50.0, 60.0, seed);
    const Observations obs = observe(s, {});
    ASSERT_EQ(obs.events.size(), 2u) << "seed " << seed;
    EXPECT_NEAR(obs.events[0].dts, 2387.3, 3.0 * 58.3) << "seed " << seed;
    EXPECT_GT(obs.events[0].dts, 1.5 * obs.events[0].dsp);
  }
}

TEST(Synth, EmptyScriptIsStateZeroNoise) {
  const ApplianceArchetype kettle = find(lifted_like(), "kettle");
  const PowerSeries s = generate_trace(kettle, {}, 10.0, 100.0, 3);
  ASSERT_EQ(s.size(), 1000u);
  EXPECT_TRUE(observe(s, {}).events.empty());
  const double mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / 1000.0;
  EXPECT_LT(mean, 3.0);
}

TEST(Synth, GeneratorArgumentsAreChecked) {
  const ApplianceArchetype kettle = find(lifted_like(), "kettle");
  expect_error([&] { generate_trace(kettle, {}, 0.5, 10.0, 1); }, ErrorCode::invalid_argument);
  expect_error([&] { generate_trace(kettle, {}, 1001.0, 10.0, 1); }, ErrorCode::invalid_argument);
  expect_error([&] { generate_trace(kettle, {}, 10.0, 0.0, 1); }, ErrorCode::invalid_argument);
  expect_error([&] { generate_trace(kettle, {{5.0, 1}, {4.0, 0}}, 10.0, 10.0, 1); }, ErrorCode::validation);
}

TEST(Synth, UnreachableTargetStateIsRejected) {
  ApplianceArchetype a;
  a.id = "chain";
  a.state_means = {0.0, 100.0, 300.0};
  a.state_sigmas = {0.1, 1.0, 1.0};
  a.transitions = {{0, 1}, {1, 0}, {1, 2}, {2, 0}};
  EXPECT_NO_THROW(generate_trace(a, {{1.0, 1}, {2.0, 2}, {3.0, 0}}, 10.0, 5.0, 1));
  expect_error([&] { generate_trace(a, {{1.0, 2}}, 10.0, 5.0, 1); }, ErrorCode::validation);
}

TEST(Synth, MixExamples) {
  const PowerSeries a = fixtures::steps({100.0}, {10});
  const PowerSeries b = fixtures::steps({50.0}, {10});
  EXPECT_EQ(mix_household({a}), a);
  EXPECT_EQ(mix_household({a, b}).samples, std::vector<double>(10, 150.0));
  EXPECT_THROW(mix_household({a, fixtures::steps({1.0}, {9})}), Error);
  EXPECT_THROW(mix_household({a, fixtures::steps({1.0}, {10}, 2.0)}), Error);
  EXPECT_THROW(mix_household({}), Error);
}

TEST(Synth, ArchetypesRoundTripThroughJson) {
  const auto archs = lifted_like();
  ASSERT_EQ(archs.size(), 4u);
  EXPECT_EQ(find(archs, "refrigerator").state_means, (std::vector<double>{0.52, 42.03, 121.62, 156.60}));
  EXPECT_EQ(find(archs, "refrigerator").state_sigmas, (std::vector<double>{0.21, 0.1, 5.40, 6.00}));
  EXPECT_EQ(archetypes_from_json(archetypes_to_json(archs)), archs);
}

TEST(Synth, ArchetypeInvariantsAreEnforced) {
  ApplianceArchetype a = find(lifted_like(), "kettle");
  a.spike_ratio = 2.0;
  EXPECT_THROW(a.validate(), Error);
  a = find(lifted_like(), "vacuum");
  a.spike_ratio = 1.0;
  EXPECT_THROW(a.validate(), Error);
  a.spike_ratio = 2.0;
  a.state_sigmas.pop_back();
  EXPECT_THROW(a.validate(), Error);

  auto j = archetypes_to_json(lifted_like());
  j["archetypes"][0]["kind"] = "toaster";
  expect_error([&] { archetypes_from_json(j); }, ErrorCode::parse);
}

TEST(Synth, ScriptRoundTripsThroughJson) {
  const Script s = random_script(lifted_like(2.0), 7200.0, 8.0, 5);
  EXPECT_EQ(script_from_json(to_json(s)), s);
}

TEST(Synth, StateTrackFollowsSteps) {
  const auto track = state_track({{1.0, 1}, {2.5, 2}}, 6, 2.0);
  EXPECT_EQ(track, (std::vector<std::size_t>{0, 0, 1, 1, 1, 2}));
}

TEST(SynthProperty, MixConservesPower) {
  const auto archs = lifted_like(1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Script script = random_script(archs, 3600.0, 8.0, seed);
    const SimulatedHousehold sim = simulate_household(archs, script, 10.0, seed);
    for (std::size_t i = 0; i < sim.aggregate.size(); ++i) {
      double sum = 0.0;
      for (const auto& t : sim.appliance_traces) sum += t.samples[i];
      ASSERT_EQ(sim.aggregate.samples[i], sum) << "sample " << i;
    }
  }
}

TEST(SynthProperty, SameSeedIsBitIdentical) {
  const auto archs = lifted_like(1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Script a = random_script(archs, 3600.0, 8.0, seed);
    const Script b = random_script(archs, 3600.0, 8.0, seed);
    EXPECT_EQ(a, b);
    EXPECT_EQ(simulate_household(archs, a, 10.0, seed).aggregate, simulate_household(archs, b, 10.0, seed).aggregate);
    EXPECT_NE(simulate_household(archs, a, 10.0, seed).aggregate,
              simulate_household(archs, a, 10.0, seed + 1).aggregate);
  }
}

TEST(SynthProperty, RandomScriptsRespectSpacingAndExclusion) {
  const auto archs = lifted_like();
  const double gap = 8.0;
  const double duration = 10.0 * 3600.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Script s = random_script(archs, duration, gap, seed);
    std::vector<double> times;
    for (std::size_t k = 0; k < archs.size(); ++k) {
      const auto& steps = s.appliances[k].steps;
      ASSERT_EQ(steps.size() > 0, archs[k].sessions.count > 0);
      std::size_t state = 0;
      for (const auto& step : steps) {
        EXPECT_TRUE(archs[k].allows(state, step.target_state));
        state = step.target_state;
        times.push_back(step.time_s);
      }
      EXPECT_EQ(state, 0u) << archs[k].id;
    }
    std::sort(times.begin(), times.end());
    EXPECT_GE(times.front(), gap);
    EXPECT_LE(times.back(), duration - gap);
    for (std::size_t i = 1; i < times.size(); ++i) EXPECT_GE(times[i] - times[i - 1], gap);

    // High-power appliances never run together.
    std::vector<std::pair<double, double>> sessions;
    for (std::size_t k = 0; k < archs.size(); ++k) {
      if (archs[k].exclusive_group != "high_power") continue;
      const auto& steps = s.appliances[k].steps;
      double begin = 0.0;
      for (const auto& step : steps) {
        if (step.target_state != 0 && begin == 0.0) begin = step.time_s;
        if (step.target_state == 0) {
          sessions.push_back({begin, step.time_s});
          begin = 0.0;
        }
      }
    }
    std::sort(sessions.begin(), sessions.end());
    for (std::size_t i = 1; i < sessions.size(); ++i) EXPECT_GE(sessions[i].first, sessions[i - 1].second);
  }
}

TEST(SynthProperty, ScriptedEventsAreAllDetected) {
  const auto archs = lifted_like(3.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Script script = random_script(archs, 3 * 3600.0, 8.0, seed);
    const SimulatedHousehold sim = simulate_household(archs, script, 50.0, seed);
    EXPECT_EQ(observe(sim.aggregate, {}).events.size(), count_events(script)) << "seed " << seed;
  }
}
