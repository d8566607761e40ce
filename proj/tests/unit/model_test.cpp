#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "efhmm/model.hpp"
#include "efhmm/model_io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace efhmm;

namespace {

ApplianceModel with_edges(std::size_t k, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
  ApplianceModel a;
  a.id = "a";
  for (std::size_t s = 0; s < k; ++s) a.states.push_back({10.0 * static_cast<double>(s), 1.0, 1});
  std::vector<std::size_t> out(k, 0);
  for (auto [i, j] : pairs) ++out[i];
  for (auto [i, j] : pairs) {
    TransitionEdge e;
    e.from_state = i;
    e.to_state = j;
    e.prob = 1.0 / static_cast<double>(out[i]);
    e.dsp = {a.states[j].mu - a.states[i].mu, 1.0, 1};
    if (j > i) e.dts = GaussianSig{e.dsp.mu, 1.0, 1};
    a.edges.push_back(e);
  }
  return a;
}

void expect_error(const std::function<void()>& f, ErrorCode code) {
  try {
    f();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Model, SparsityOfRefrigeratorChain) { EXPECT_DOUBLE_EQ(sparsity_level(fixtures::refrigerator()), 6.0 / 16.0); }

TEST(Model, SparsityOfFullTwoStateChain) {
  EXPECT_DOUBLE_EQ(sparsity_level(with_edges(2, {{0, 1}, {1, 0}})), 0.5);
}

TEST(Model, SparsityCountsEdgesOverSquaredStates) {
  // States 1..3 of the example are indices 0..2 here.
  const auto a = with_edges(3, {{0, 1}, {1, 0}, {1, 2}, {2, 0}});
  a.validate();
  EXPECT_DOUBLE_EQ(sparsity_level(a), 4.0 / 9.0);
}

TEST(Model, RefrigeratorEmissionVectorRoundTripsExactly) {
  fixtures::TempDir dir("model");
  const HouseholdModel h = fixtures::household({fixtures::refrigerator()});
  save_model(h, dir / "m.json");
  const HouseholdModel back = load_model(dir / "m.json");
  EXPECT_EQ(back, h);
  ASSERT_EQ(back.appliances[0].states.size(), 4u);
  EXPECT_EQ(back.appliances[0].states[0].mu, 0.52);
  EXPECT_EQ(back.appliances[0].states[0].sigma, 0.21);
  EXPECT_EQ(back.appliances[0].states[1].mu, 42.03);
  EXPECT_EQ(back.appliances[0].states[1].sigma, 0.1);
  EXPECT_EQ(back.appliances[0].states[2].mu, 121.62);
  EXPECT_EQ(back.appliances[0].states[2].sigma, 5.40);
  EXPECT_EQ(back.appliances[0].states[3].mu, 156.60);
  EXPECT_EQ(back.appliances[0].states[3].sigma, 6.00);
}

TEST(Model, EmptyApplianceListIsInvalid) {
  HouseholdModel h;
  expect_error([&] { h.validate(); }, ErrorCode::validation);
}

TEST(Model, ProbabilityAboveOneIsInvalid) {
  auto a = fixtures::refrigerator();
  a.edges[2].prob = 1.2;
  expect_error([&] { a.validate(); }, ErrorCode::validation);
}

TEST(Model, SelfTransitionIsInvalid) {
  auto a = with_edges(2, {{0, 1}, {1, 0}});
  a.edges[0].to_state = 0;
  expect_error([&] { a.validate(); }, ErrorCode::validation);
}

TEST(Model, DecreasingEdgeMustNotCarryDts) {
  auto a = with_edges(2, {{0, 1}, {1, 0}});
  a.edges[1].dts = GaussianSig{5.0, 1.0, 1};
  expect_error([&] { a.validate(); }, ErrorCode::validation);
}

TEST(Model, IncreasingEdgeRequiresDts) {
  auto a = with_edges(2, {{0, 1}, {1, 0}});
  a.edges[0].dts.reset();
  expect_error([&] { a.validate(); }, ErrorCode::validation);
}

TEST(Model, RowsMustBeStochastic) {
  auto a = with_edges(3, {{0, 1}, {0, 2}, {1, 0}, {2, 0}});
  a.edges[0].prob = 0.6;
  expect_error([&] { a.validate(); }, ErrorCode::validation);
}

TEST(Model, UnsortedStatesAreInvalid) {
  auto a = with_edges(2, {{0, 1}, {1, 0}});
  std::swap(a.states[0], a.states[1]);
  expect_error([&] { a.validate(); }, ErrorCode::validation);
}

TEST(Model, DuplicateApplianceIdsAreInvalid) {
  HouseholdModel h;
  h.appliances = {fixtures::kettle(), fixtures::kettle()};
  expect_error([&] { h.validate(); }, ErrorCode::validation);
}

TEST(ModelIo, MalformedFieldIsNamed) {
  auto j = to_json(fixtures::household({fixtures::kettle()}));
  j["appliances"][0]["edges"][1]["prob"] = "high";
  try {
    household_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse);
    EXPECT_NE(std::string(e.what()).find("model.appliances[0].edges[1].prob"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, WrongSchemaIsRejected) {
  auto j = to_json(fixtures::household({fixtures::kettle()}));
  j["schema"] = "efhmm-model/0";
  expect_error([&] { household_from_json(j); }, ErrorCode::parse);
}

TEST(ModelIo, InvariantViolationOnLoadIsValidationError) {
  auto j = to_json(fixtures::household({fixtures::kettle()}));
  j["appliances"][0]["edges"][0]["prob"] = 1.2;
  expect_error([&] { household_from_json(j); }, ErrorCode::validation);
}

TEST(ModelIo, MissingFileIsIoError) {
  expect_error([] { load_model("/nonexistent/efhmm/model.json"); }, ErrorCode::io);
}

TEST(ModelIo, ConfigHashDependsOnEveryDetectorField) {
  const DetectorConfig base;
  EXPECT_EQ(detector_config_hash(base), detector_config_hash(DetectorConfig{}));
  EXPECT_EQ(detector_config_hash(base).size(), 16u);
  DetectorConfig c = base;
  c.steady_delta_w = 11.0;
  EXPECT_NE(detector_config_hash(c), detector_config_hash(base));
  c = base;
  c.window_seconds = 1.0;
  EXPECT_NE(detector_config_hash(c), detector_config_hash(base));
}

TEST(ModelProperty, SerializationRoundTripIsIdentity) {
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> awkward(-1e-3, 1e-3);
  fixtures::TempDir dir("roundtrip");
  for (int trial = 0; trial < 100; ++trial) {
    HouseholdModel h = oracle::random_separated_household(rng, 3, 4, 0.0);
    h.house_id = "house-" + std::to_string(trial);
    h.confidence_multiplier = 2.0 + std::abs(awkward(rng)) * 1000.0;
    h.detector.steady_delta_w += awkward(rng);
    for (auto& a : h.appliances) {
      for (auto& s : a.states) s.mu += awkward(rng);
    }
    h.validate();
    save_model(h, dir / "m.json");
    const HouseholdModel back = load_model(dir / "m.json");
    ASSERT_EQ(back, h) << "trial " << trial;
  }
}

TEST(ModelProperty, LoadedModelsAreRowStochasticAndSorted) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const HouseholdModel h = household_from_json(to_json(oracle::random_separated_household(rng, 3, 4, 0.0)));
    for (const auto& a : h.appliances) {
      std::vector<double> row(a.num_states(), 0.0);
      std::vector<bool> has(a.num_states(), false);
      for (const auto& e : a.edges) {
        row[e.from_state] += e.prob;
        has[e.from_state] = true;
      }
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (has[i]) {
          EXPECT_NEAR(row[i], 1.0, 1e-9);
        }
      }
      for (std::size_t i = 1; i < a.states.size(); ++i) EXPECT_LE(a.states[i - 1].mu, a.states[i].mu);
    }
  }
}
