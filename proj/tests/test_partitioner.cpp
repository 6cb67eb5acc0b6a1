#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "generators.hpp"
#include "oracles.hpp"
#include "snnc/error.hpp"
#include "snnc/partitioner.hpp"

using namespace snnc;

namespace {

CrossbarConstraints four_by_four() { return {4, 4, 16, 1000}; }

// `fanins[i]` distinct fresh source neurons feed target i.
SnnGraph targets_with_fresh_sources(const std::vector<int>& fanins) {
  std::vector<Neuron> neurons;
  std::vector<Synapse> synapses;
  NeuronId next = static_cast<NeuronId>(fanins.size());
  for (std::size_t t = 0; t < fanins.size(); ++t) neurons.push_back({static_cast<NeuronId>(t), 1, std::nullopt});
  for (std::size_t t = 0; t < fanins.size(); ++t) {
    for (int k = 0; k < fanins[t]; ++k) {
      neurons.push_back({next, 1, std::nullopt});
      synapses.push_back({next++, static_cast<NeuronId>(t), 1.0, 1});
    }
  }
  return SnnGraph(neurons, synapses);
}

Utilization util_of_targets(const std::vector<int>& fanins) {
  const SnnGraph g = targets_with_fresh_sources(fanins);
  std::vector<NeuronId> group;
  for (std::size_t t = 0; t < fanins.size(); ++t) group.push_back(static_cast<NeuronId>(t));
  std::vector<std::vector<NeuronId>> groups{group};
  std::vector<NeuronId> rest;
  for (const auto& n : g.neurons()) {
    if (n.id >= static_cast<NeuronId>(fanins.size())) rest.push_back(n.id);
  }
  groups.push_back(rest);
  const ClusteredSnn cs = make_clustered(g, four_by_four(), groups);
  return io_crosspoint_utilization(cs.clusters[0], cs.constraints);
}

}  // namespace

TEST(Utilization, OneFourInputNeuron) {
  const auto u = util_of_targets({4});
  EXPECT_EQ(u.io_percent, 62.5);
  EXPECT_EQ(u.crosspoint_percent, 25.0);
}

TEST(Utilization, OneThreeInputNeuron) {
  const auto u = util_of_targets({3});
  EXPECT_EQ(u.io_percent, 50.0);
  EXPECT_EQ(u.crosspoint_percent, 18.75);
}

TEST(Utilization, TwoTwoInputNeurons) {
  const auto u = util_of_targets({2, 2});
  EXPECT_EQ(u.io_percent, 75.0);
  EXPECT_EQ(u.crosspoint_percent, 25.0);
}

TEST(Partition, ThreeTwoInputNeuronsOnFourByFour) {
  const SnnGraph g = targets_with_fresh_sources({2, 2, 2});
  const auto k = four_by_four();
  const ClusteredSnn cs = partition(g, k);
  // Two of the fanin-2 neurons share a crossbar, the third is alone.
  std::set<ClusterId> used{cs.cluster_of(0), cs.cluster_of(1), cs.cluster_of(2)};
  EXPECT_EQ(used.size(), 2u);
  EXPECT_EQ(cs.cluster_of(0), cs.cluster_of(1));

  // The result is one of the feasible packings, and as small as any.
  std::vector<NeuronId> ids;
  for (const auto& n : g.neurons()) ids.push_back(n.id);
  std::size_t best = ids.size();
  std::set<std::set<std::vector<NeuronId>>> feasible;
  for (const auto& p : oracle::set_partitions(ids)) {
    const bool ok = std::all_of(p.begin(), p.end(), [&](const auto& grp) { return oracle::fits(oracle::usage(g, grp), k); });
    if (!ok) continue;
    best = std::min(best, p.size());
    feasible.insert(std::set<std::vector<NeuronId>>(p.begin(), p.end()));
  }
  std::set<std::vector<NeuronId>> got;
  for (const auto& c : cs.clusters) got.insert(c.neurons);
  EXPECT_TRUE(feasible.count(got));
  EXPECT_EQ(cs.clusters.size(), best);
}

TEST(Partition, SingleNeuronWithoutFanin) {
  const SnnGraph g({{0, 3, std::nullopt}}, {});
  const ClusteredSnn cs = partition(g, CrossbarConstraints{});
  ASSERT_EQ(cs.clusters.size(), 1u);
  const auto u = io_crosspoint_utilization(cs.clusters[0], cs.constraints);
  EXPECT_EQ(cs.clusters[0].output_ports_used, 1);
  EXPECT_EQ(cs.clusters[0].input_ports_used, 0);
  EXPECT_DOUBLE_EQ(u.io_percent, 100.0 / 256.0);
  EXPECT_EQ(u.crosspoint_percent, 0.0);
}

TEST(Partition, FaninAboveMaxInputsIsInfeasible) {
  const SnnGraph g = targets_with_fresh_sources({5});
  try {
    partition(g, four_by_four());
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("neuron 0"), std::string::npos) << e.what();
  }
}

TEST(Partition, RandomGraphsAreValidAndDeterministic) {
  gen::Rng rng(21);
  const CrossbarConstraints k{16, 8, 64, 200};
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = gen::random_snn(rng, static_cast<int>(gen::uniform(rng, 1, 80)), 12);
    const ClusteredSnn cs = partition(g, k);
    std::size_t total = 0;
    std::set<NeuronId> seen;
    for (const auto& c : cs.clusters) {
      total += c.neurons.size();
      seen.insert(c.neurons.begin(), c.neurons.end());
      const auto u = oracle::usage(g, c.neurons);
      EXPECT_TRUE(oracle::fits(u, k));
      EXPECT_EQ(u.inputs, c.input_ports_used);
      EXPECT_EQ(u.outputs, c.output_ports_used);
      EXPECT_EQ(u.crosspoints, c.crosspoints_used);
      EXPECT_EQ(u.buffer, c.buffer_used);
    }
    EXPECT_EQ(total, g.num_neurons());
    EXPECT_EQ(seen.size(), g.num_neurons());
    EXPECT_TRUE(check_clustered(cs).ok());
    EXPECT_EQ(to_json(partition(g, k)), to_json(cs));
  }
}

TEST(Partition, LowestFaninNeuronOpensFirstCluster) {
  const SnnGraph g = targets_with_fresh_sources({3, 1});
  const ClusteredSnn cs = partition(g, four_by_four());
  // Source neurons have fanin 0; the smallest of them starts cluster 0.
  EXPECT_EQ(cs.clusters[0].neurons.front(), 2);
}

TEST(CheckClustered, ValidTwoClusterResult) {
  const SnnGraph g({{0, 2, std::nullopt}, {1, 2, std::nullopt}}, {{0, 1, 1.0, 2}});
  const auto cs = make_clustered(g, CrossbarConstraints{}, {{0}, {1}});
  const auto d = check_clustered(cs);
  EXPECT_TRUE(d.errors.empty());
  EXPECT_TRUE(d.cycles.empty());
  EXPECT_EQ(d.components, 1u);
}

TEST(CheckClustered, SplitChainReportsCycle) {
  // A -> B -> C with A and C together: the two clusters depend on each other.
  const SnnGraph g({{0, 3, std::nullopt}, {1, 3, std::nullopt}, {2, 3, std::nullopt}},
                   {{0, 1, 1.0, 3}, {1, 2, 1.0, 3}});
  const auto cs = make_clustered(g, CrossbarConstraints{}, {{0, 2}, {1}});
  const auto d = check_clustered(cs);
  EXPECT_TRUE(d.ok());
  ASSERT_EQ(d.cycles.size(), 1u);
  EXPECT_EQ(d.cycles[0], (std::vector<ClusterId>{0, 1, 0}));
}

TEST(CheckClustered, CrosspointViolation) {
  const SnnGraph g = targets_with_fresh_sources({4});
  const auto cs = make_clustered(g, CrossbarConstraints{4, 4, 4, 100}, {{0, 1, 2, 3, 4}});
  auto bad = cs;
  bad.constraints.max_crosspoints = 3;
  const auto d = check_clustered(bad);
  EXPECT_FALSE(d.ok());
  EXPECT_TRUE(std::any_of(d.errors.begin(), d.errors.end(),
                          [](const std::string& e) { return e.find("crosspoints_used") != std::string::npos; }));
}

TEST(CheckClustered, MissingNeuronAndDisconnectedWarning) {
  const SnnGraph g({{0, 1, std::nullopt}, {1, 1, std::nullopt}, {2, 1, std::nullopt}}, {});
  auto cs = make_clustered(g, CrossbarConstraints{}, {{0}, {1}, {2}});
  EXPECT_FALSE(check_clustered(cs).warnings.empty());
  cs.clusters[2].neurons.clear();
  cs.neuron_to_cluster.erase(2);
  EXPECT_FALSE(check_clustered(cs).ok());
}

TEST(InterClusterSpikes, OneClusterGivesEmptyMap) {
  const SnnGraph g({{0, 3, std::nullopt}, {1, 3, std::nullopt}}, {{0, 1, 1.0, 3}, {1, 0, 1.0, 2}});
  const auto cs = make_clustered(g, CrossbarConstraints{}, {{0, 1}});
  EXPECT_TRUE(inter_cluster_spikes(g, cs).empty());
}

TEST(InterClusterSpikes, SingleSynapse) {
  const SnnGraph g({{0, 9, std::nullopt}, {1, 0, std::nullopt}}, {{0, 1, 1.0, 7}});
  const auto cs = make_clustered(g, CrossbarConstraints{}, {{0}, {1}});
  const auto m = inter_cluster_spikes(g, cs);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at({0, 1}), 7);
}

TEST(InterClusterSpikes, MatchesNestedLoop) {
  gen::Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = gen::random_snn(rng, static_cast<int>(gen::uniform(rng, 2, 50)), 6);
    const auto cs = partition(g, CrossbarConstraints{8, 6, 30, 100});
    const auto m = inter_cluster_spikes(g, cs);
    EXPECT_EQ(m, oracle::inter_cluster_spikes(g, cs));
    for (const auto& [pair, spikes] : m) EXPECT_NE(pair.first, pair.second);
  }
}

TEST(ClusterExport, JsonAndDot) {
  const SnnGraph g({{0, 2, std::nullopt}, {1, 2, std::nullopt}}, {{0, 1, 1.0, 2}});
  const auto cs = make_clustered(g, CrossbarConstraints{}, {{0}, {1}});
  const auto j = to_json(cs);
  EXPECT_EQ(j.at("clusters").size(), 2u);
  const std::string dot = clusters_to_dot(cs);
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_EQ(dot, clusters_to_dot(cs));
}
