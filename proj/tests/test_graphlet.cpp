#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

#include "guardnet/graphlet.hpp"
#include "guardnet/guard.hpp"
#include "guardnet/model.hpp"
#include "guardnet/synth.hpp"
#include "oracles.hpp"

using namespace guardnet;

namespace {

void expect_matches_oracle(const SparseGraph& g) {
  const GdvTable t = count_orbits(g);
  const auto want = oracle::brute_force_orbits(g);
  ASSERT_EQ(t.n, g.n_nodes());
  for (std::size_t u = 0; u < g.n_nodes(); ++u)
    for (std::size_t o = 0; o < kOrbits; ++o) EXPECT_EQ(t.at(u, o), want[u][o]) << u << " " << o;
}

std::size_t role_count(const SparseGraph& g, HouseRole r) {
  std::size_t n = 0;
  for (std::size_t u = 0; u < g.n_nodes(); ++u) n += g.label(u) == static_cast<std::size_t>(r);
  return n;
}

}  // namespace

TEST(Orbits, TriangleExample) {
  const SparseGraph k3 = SparseGraph::from_edges(3, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}});
  const GdvTable t = count_orbits(k3);
  for (std::size_t u = 0; u < 3; ++u) {
    for (std::size_t o = 0; o < kOrbits; ++o) {
      const std::uint64_t want = o == 0 ? 2 : o == 3 ? 1 : 0;
      EXPECT_EQ(t.at(u, o), want) << o;
    }
  }
}

TEST(Orbits, PathExample) {
  const SparseGraph p4 = SparseGraph::from_edges(4, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}});
  const GdvTable t = count_orbits(p4);
  EXPECT_EQ(t.at(0, 0), 1u);
  EXPECT_EQ(t.at(1, 0), 2u);
  // End: P3 end once, P4 end once. Inner: P3 end and middle, P4 inner.
  EXPECT_EQ(t.at(0, 1), 1u);
  EXPECT_EQ(t.at(0, 4), 1u);
  EXPECT_EQ(t.at(1, 1), 1u);
  EXPECT_EQ(t.at(1, 2), 1u);
  EXPECT_EQ(t.at(1, 5), 1u);
  EXPECT_FALSE(std::equal(t.row(0).begin(), t.row(0).end(), t.row(1).begin()));
  EXPECT_TRUE(std::equal(t.row(0).begin(), t.row(0).end(), t.row(3).begin()));
}

TEST(Orbits, MatchOracleOnSmallCorpus) {
  for (const auto& [name, g] : oracle::corpus()) {
    if (g.n_nodes() > 12) continue;
    SCOPED_TRACE(name);
    expect_matches_oracle(g);
  }
}

TEST(Orbits, MatchOracleOnRandomGraphs) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    SCOPED_TRACE(s);
    expect_matches_oracle(oracle::random_graph(12, 0.15 + 0.05 * s, 1, 500 + s));
  }
}

TEST(Orbits, DegreeAndTriangleIdentities) {
  for (const auto& [name, g] : oracle::corpus()) {
    SCOPED_TRACE(name);
    const GdvTable t = count_orbits(g);
    std::uint64_t orbit3 = 0;
    for (std::size_t u = 0; u < g.n_nodes(); ++u) {
      EXPECT_EQ(t.at(u, 0), g.degree(u));
      orbit3 += t.at(u, 3);
    }
    const std::uint64_t tri = oracle::triangles(g);
    EXPECT_EQ(orbit3, 3 * tri);
    EXPECT_EQ(count_triangles(g), tri);
  }
}

TEST(Orbits, CsvRoundTrip) {
  const GdvTable t = count_orbits(oracle::random_graph(10, 0.4, 1, 3));
  const auto path = std::filesystem::temp_directory_path() / "guardnet_gdv.csv";
  write_gdv_csv(t, path);
  const GdvTable back = read_gdv_csv(path);
  EXPECT_EQ(back.n, t.n);
  EXPECT_EQ(back.counts, t.counts);
}

TEST(CycleHouse, OneHouseOnTenCycle) {
  const SparseGraph g = gen_cycle_house({10, 10, 0});
  EXPECT_EQ(g.n_nodes(), 15u);
  EXPECT_EQ(g.n_edges(), 10u + 7u);
  EXPECT_EQ(g.num_classes(), 6u);
  EXPECT_EQ(g.feature_dim(), 0u);
  EXPECT_EQ(role_count(g, HouseRole::anchor), 1u);
  EXPECT_EQ(role_count(g, HouseRole::anchor_neighbor), 2u);
  EXPECT_EQ(role_count(g, HouseRole::cycle), 7u);
  EXPECT_EQ(role_count(g, HouseRole::base), 2u);
  EXPECT_EQ(role_count(g, HouseRole::top), 2u);
  EXPECT_EQ(role_count(g, HouseRole::roof), 1u);
  for (std::size_t u = 0; u < g.n_nodes(); ++u) {
    const auto role = static_cast<HouseRole>(g.label(u));
    const std::size_t want = role == HouseRole::base                                ? 2
                             : role == HouseRole::anchor || role == HouseRole::roof ? 3
                             : role == HouseRole::top                               ? 3
                                                                                    : 2;
    EXPECT_EQ(g.degree(u), want) << u;
  }
  expect_matches_oracle(g);
}

TEST(CycleHouse, DefaultScale) {
  const CycleHouseSpec spec;
  const SparseGraph g = gen_cycle_house(spec);
  EXPECT_EQ(g.n_nodes(), 999u);
  EXPECT_EQ(g.n_edges(), 1221u);
  EXPECT_EQ(g.num_classes(), 6u);
  for (std::size_t r = 0; r < 6; ++r) EXPECT_GT(role_count(g, static_cast<HouseRole>(r)), 0u);
}

TEST(CycleHouse, SameRoleSameStructure) {
  const SparseGraph g = gen_cycle_house({});
  const GdvTable t = count_orbits(g);
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t u = 0; u < g.n_nodes(); ++u) members[g.label(u)].push_back(u);
  for (const auto& [role, nodes] : members) {
    double worst = 1.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j)
        worst = std::min(worst, graphlet_similarity(nodes[i], nodes[j], t));
    EXPECT_GT(worst, 0.99) << "role " << role;
  }
}

TEST(CycleHouse, SeedPermutesIdsOnly) {
  const SparseGraph a = gen_cycle_house({40, 5, 1}), b = gen_cycle_house({40, 5, 1}),
                    c = gen_cycle_house({40, 5, 2});
  EXPECT_EQ(a.edge_list(), b.edge_list());
  EXPECT_NE(a.edge_list(), c.edge_list());
  auto census = [](const SparseGraph& g) {
    std::vector<std::pair<std::size_t, std::size_t>> v;
    for (std::size_t u = 0; u < g.n_nodes(); ++u) v.emplace_back(g.label(u), g.degree(u));
    std::sort(v.begin(), v.end());
    return v;
  };
  EXPECT_EQ(census(a), census(c));
}

TEST(CycleHouse, InfeasibleSizes) {
  EXPECT_THROW(gen_cycle_house({12, 3, 0}), ValidationError);
  EXPECT_THROW(gen_cycle_house({14, 4, 0}), ValidationError);
  EXPECT_THROW(gen_cycle_house({8, 10, 0}), ValidationError);
}

TEST(Sbm, NoInterEdgesKeepsClustersApart) {
  SbmSpec spec;
  spec.n_nodes = 120;
  spec.p_out = 0.0;
  spec.p_in = 0.1;
  const SparseGraph g = gen_sbm(spec);
  for (const auto& [u, v] : g.edge_list()) EXPECT_EQ(g.label(u), g.label(v));
  EXPECT_EQ(g.feature_dim(), spec.feature_dim);
}

TEST(Sbm, ZeroSignalCarriesNoLabelInformation) {
  // Between-class spread of the class means, compared with the same
  // statistic under random relabelings.
  SbmSpec spec;
  spec.n_nodes = 400;
  spec.signal = 0.0;
  spec.seed = 6;
  const SparseGraph g = gen_sbm(spec);
  const std::size_t n = g.n_nodes(), d = g.feature_dim(), k = spec.clusters;
  auto spread = [&](const std::vector<std::size_t>& labels) {
    std::vector<double> mean(k * d, 0.0), count(k, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      count[labels[u]] += 1;
      for (std::size_t j = 0; j < d; ++j) mean[labels[u] * d + j] += g.features().at(u, j);
    }
    double s = 0;
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < d; ++j) s += std::pow(mean[c * d + j] / count[c], 2);
    return s;
  };
  std::vector<std::size_t> labels(n);
  for (std::size_t u = 0; u < n; ++u) labels[u] = g.label(u);
  const double observed = spread(labels);
  std::mt19937_64 rng(1);
  int larger = 0;
  for (int t = 0; t < 200; ++t) {
    std::shuffle(labels.begin(), labels.end(), rng);
    larger += spread(labels) >= observed;
  }
  EXPECT_GT(larger, 2);  // p > 0.01
}

TEST(Sbm, DefaultSpecIsLearnable) {
  const SparseGraph g = split(gen_sbm({}), {0.1, 0.1, 0.8, 0});
  ModelConfig c;
  c.in_dim = g.feature_dim();
  c.num_classes = g.num_classes();
  c.seed = 0;
  Model m(c);
  train(m, g, {});
  EXPECT_GE(evaluate(m, g, g.masks().test), 0.85);
}
