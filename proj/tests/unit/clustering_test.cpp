#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "efhmm/clustering.hpp"

using namespace efhmm;

namespace {

std::vector<double> planted(const std::vector<double>& centers, std::size_t per_cluster, double sigma,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out;
  for (double c : centers) {
    for (std::size_t i = 0; i < per_cluster; ++i) out.push_back(std::max(0.0, c + sigma * z(rng)));
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<double> centroids(const std::vector<Cluster>& clusters) {
  std::vector<double> out;
  for (const auto& c : clusters) out.push_back(c.centroid);
  return out;
}

void expect_recovers(const std::vector<double>& truth, std::uint64_t seed) {
  const auto clusters = mean_shift_states(planted(truth, 25, 2.0, seed), {});
  ASSERT_EQ(clusters.size(), truth.size()) << "seed " << seed;
  for (std::size_t k = 0; k < truth.size(); ++k) EXPECT_NEAR(clusters[k].centroid, truth[k], 5.0) << "seed " << seed;
}

}  // namespace

TEST(Clustering, RefrigeratorLevelsGiveFourStates) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) expect_recovers({0.52, 42.0, 121.0, 156.0}, seed);
}

TEST(Clustering, HairDryerLevelsGiveFourStates) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) expect_recovers({0.23, 178.0, 680.0, 1230.0}, seed);
}

TEST(Clustering, RepeatedValueIsOneCluster) {
  const std::vector<double> v{100.0, 100.0, 100.0};
  const auto clusters = mean_shift_states(v, {});
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].centroid, 100.0);
  EXPECT_EQ(clusters[0].members, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Clustering, InvalidInputIsRejected) {
  EXPECT_THROW(mean_shift_states({}, {}), Error);
  const std::vector<double> negative{1.0, -2.0};
  EXPECT_THROW(mean_shift_states(negative, {}), Error);
  const std::vector<double> nan{1.0, std::nan("")};
  EXPECT_THROW(mean_shift_states(nan, {}), Error);
}

TEST(Clustering, EveryPointHasExactlyOneCluster) {
  const auto v = planted({10.0, 300.0, 900.0}, 30, 4.0, 3);
  const auto clusters = mean_shift_states(v, {});
  std::vector<int> seen(v.size(), 0);
  for (const auto& c : clusters) {
    for (auto i : c.members) ++seen[i];
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }));
  EXPECT_TRUE(std::is_sorted(clusters.begin(), clusters.end(),
                             [](const Cluster& a, const Cluster& b) { return a.centroid < b.centroid; }));
}

TEST(Clustering, NearestCentroidTiesGoLow) {
  const std::vector<Cluster> cs{{10.0, {}}, {20.0, {}}};
  EXPECT_EQ(nearest_centroid(cs, 15.0), 0u);
  EXPECT_EQ(nearest_centroid(cs, 15.0001), 1u);
}

TEST(ClusteringProperty, PermutationInvariant) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = planted({0.5, 60.0 + trial, 400.0, 1500.0}, 20, 3.0, 100 + trial);
    const auto a = mean_shift_states(v, {});
    std::shuffle(v.begin(), v.end(), rng);
    const auto b = mean_shift_states(v, {});
    ASSERT_EQ(centroids(a), centroids(b));
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].members.size(), b[k].members.size());
  }
}

TEST(ClusteringProperty, NoTwoCentroidsCloserThanBandwidth) {
  const ClusterConfig cfg;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 3000.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(200);
    for (double& x : v) x = u(rng);
    const auto c = centroids(mean_shift_states(v, cfg));
    for (std::size_t k = 1; k < c.size(); ++k) {
      EXPECT_GE(c[k] - c[k - 1], std::min(cfg.bandwidth(c[k]), cfg.bandwidth(c[k - 1])));
    }
  }
}

TEST(ClusteringProperty, Deterministic) {
  const auto v = planted({3.0, 80.0, 700.0}, 40, 5.0, 77);
  const auto a = mean_shift_states(v, {});
  const auto b = mean_shift_states(v, {});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].centroid, b[k].centroid);
    EXPECT_EQ(a[k].members, b[k].members);
  }
}

TEST(ClusteringProperty, WellSeparatedClustersAreNeverMerged) {
  const ClusterConfig cfg;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> where(0.0, 2000.0);
  std::uniform_real_distribution<double> extra(3.01, 6.0);
  std::uniform_real_distribution<double> spread(0.0, 0.25);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = where(rng);
    // Solve b - a > factor * bandwidth(b); bandwidth(b) >= bandwidth(a).
    const double factor = extra(rng);
    double b = a + factor * cfg.bandwidth(a);
    while (b - a <= factor * cfg.bandwidth(b)) b += 1.0;
    std::vector<double> v;
    std::uniform_real_distribution<double> ja(-spread(rng) * cfg.bandwidth(a), spread(rng) * cfg.bandwidth(a));
    std::uniform_real_distribution<double> jb(-spread(rng) * cfg.bandwidth(b), spread(rng) * cfg.bandwidth(b));
    for (int i = 0; i < 15; ++i) v.push_back(std::max(0.0, a + ja(rng)));
    for (int i = 0; i < 15; ++i) v.push_back(b + jb(rng));
    const auto clusters = mean_shift_states(v, cfg);
    ASSERT_GE(clusters.size(), 2u) << "a=" << a << " b=" << b;
    for (const auto& c : clusters) {
      const bool has_a = std::any_of(c.members.begin(), c.members.end(), [](std::size_t i) { return i < 15; });
      const bool has_b = std::any_of(c.members.begin(), c.members.end(), [](std::size_t i) { return i >= 15; });
      EXPECT_FALSE(has_a && has_b) << "a=" << a << " b=" << b;
    }
  }
}
