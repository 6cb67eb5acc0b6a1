#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"
#include "snnc/error.hpp"
#include "snnc/maxplus.hpp"

using namespace snnc;

namespace {

Actor with_tau(double tau) {
  Actor a;
  a.exec_time = tau;
  return a;
}

// Dependencies of the 7-actor LeNet recurrence, one channel per term;
// terms on the previous iteration carry one token.
struct Dep {
  int src, dst;
  std::int64_t rate, tokens;
};
const std::vector<Dep> kLeNet = {{3, 1, 1, 1}, {5, 1, 1, 1}, {2, 1, 1, 0}, {4, 1, 3, 0}, {6, 1, 1, 0},
                                 {6, 2, 1, 0}, {5, 3, 1, 0}, {3, 5, 1, 1}, {1, 5, 1, 0}, {2, 5, 1, 0},
                                 {1, 6, 1, 1}, {0, 6, 1, 0}, {4, 6, 2, 0}};

SdfGraph lenet(double tau = 1.0) {
  SdfGraph g("lenet");
  for (int i = 0; i < 7; ++i) g.add_actor(with_tau(tau));
  for (const auto& d : kLeNet) g.add_channel({0, d.src, d.dst, d.rate, d.rate, d.tokens * d.rate, ChannelKind::Data, 0.0});
  return g;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(MaxCycleMean, SelfLoop) {
  SdfGraph g;
  g.add_actor(with_tau(5.0));
  g.add_channel({0, 0, 0, 1, 1, 1, ChannelKind::Data, 0.0});
  EXPECT_DOUBLE_EQ(max_cycle_mean(build_ratio_digraph(g)).mcm, 5.0);
  EXPECT_DOUBLE_EQ(throughput(g), 0.2);
}

TEST(MaxCycleMean, ImplicitSelfLoopBoundsAcyclicGraph) {
  SdfGraph g;
  g.add_actor(with_tau(5.0));
  EXPECT_DOUBLE_EQ(throughput(g), 0.2);
  EXPECT_EQ(max_cycle_mean(build_ratio_digraph(g, false)).mcm, 0.0);
  EXPECT_EQ(throughput(SdfGraph{}), 0.0);
}

TEST(MaxCycleMean, TwoCycleWithOneToken) {
  SdfGraph g;
  g.add_actor(with_tau(1.0));
  g.add_actor(with_tau(2.0));
  g.add_channel({0, 0, 1, 1, 1, 0, ChannelKind::Data, 0.0});
  g.add_channel({0, 1, 0, 1, 1, 1, ChannelKind::Data, 0.0});
  const auto r = max_cycle_mean(build_ratio_digraph(g));
  EXPECT_DOUBLE_EQ(r.mcm, 3.0);
  EXPECT_EQ(r.witness.marking_sum, 1);
  EXPECT_DOUBLE_EQ(r.witness.weight, 3.0);
  EXPECT_EQ(r.witness.arcs.size(), 2u);
}

TEST(MaxCycleMean, TokenFreeCycleIsDeadlock) {
  SdfGraph g;
  g.add_actor({});
  g.add_actor({});
  g.add_channel({0, 0, 1, 1, 1, 0, ChannelKind::Data, 0.0});
  g.add_channel({0, 1, 0, 1, 1, 0, ChannelKind::Data, 0.0});
  EXPECT_THROW(max_cycle_mean(build_ratio_digraph(g)), DeadlockError);
}

TEST(MaxCycleMean, MultirateIsRejected) {
  SdfGraph g;
  g.add_actor({});
  g.add_actor({});
  g.add_channel({0, 0, 1, 2, 1, 0, ChannelKind::Data, 0.0});
  EXPECT_THROW(build_ratio_digraph(g), ValidationError);
}

TEST(MaxCycleMean, MatchesExhaustiveEnumeration) {
  gen::Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const SdfGraph g = gen::random_timed_sdfg(rng);
    const auto expect = oracle::max_cycle_ratio_exact(static_cast<int>(g.num_actors()), oracle::timed_arcs(g));
    ASSERT_FALSE(expect.deadlock);
    const double got = max_cycle_mean(build_ratio_digraph(g)).mcm;
    EXPECT_LE(rel(got, expect.value), 1e-9) << "trial " << trial;
  }
}

TEST(MaxCycleMean, WitnessAttainsTheMean) {
  gen::Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const SdfGraph g = gen::random_timed_sdfg(rng);
    const auto d = build_ratio_digraph(g);
    const auto r = max_cycle_mean(d);
    ASSERT_FALSE(r.witness.arcs.empty());
    double w = 0.0;
    std::int64_t m = 0;
    for (std::size_t i = 0; i < r.witness.arcs.size(); ++i) {
      const auto& a = d.arcs[r.witness.arcs[i]];
      const auto& next = d.arcs[r.witness.arcs[(i + 1) % r.witness.arcs.size()]];
      EXPECT_EQ(a.dst, next.src);
      w += a.weight;
      m += a.marking;
    }
    ASSERT_GT(m, 0);
    EXPECT_LE(rel(w / static_cast<double>(m), r.mcm), 1e-12);
  }
}

TEST(Throughput, LeNetRecurrenceMatchesOracle) {
  const SdfGraph g = lenet();
  const auto expect = oracle::graph_mcm(g);
  ASSERT_FALSE(expect.deadlock);
  EXPECT_LE(rel(1.0 / throughput(g), expect.value), 1e-12);
  // 1 -> 5 -> 3 -> 1 holds one token and three unit firings.
  EXPECT_DOUBLE_EQ(expect.value, 3.0);
}

TEST(Throughput, DoublingExecutionTimeHalvesThroughput) {
  EXPECT_DOUBLE_EQ(throughput(lenet(2.0)), throughput(lenet(1.0)) / 2.0);
}

TEST(Throughput, HomogeneityAndMonotonicity) {
  gen::Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    SdfGraph g = gen::random_timed_sdfg(rng);
    const double base = max_cycle_mean(build_ratio_digraph(g)).mcm;

    SdfGraph scaled = g;
    for (const auto& a : g.actors()) scaled.actor(a.id).exec_time *= 3.0;
    for (const auto& c : g.channels()) scaled.channel(c.id).hop_latency *= 3.0;
    EXPECT_LE(rel(max_cycle_mean(build_ratio_digraph(scaled)).mcm, 3.0 * base), 1e-12);

    if (g.num_channels() == 0) continue;
    const ChannelId c = static_cast<ChannelId>(gen::uniform(rng, 0, static_cast<std::int64_t>(g.num_channels()) - 1));
    SdfGraph slower = g;
    slower.channel(c).hop_latency += 0.75;
    EXPECT_GE(max_cycle_mean(build_ratio_digraph(slower)).mcm, base - 1e-12);
    SdfGraph more_tokens = g;
    more_tokens.channel(c).initial_tokens += more_tokens.channel(c).cons_rate;
    EXPECT_LE(max_cycle_mean(build_ratio_digraph(more_tokens)).mcm, base + 1e-12);
  }
}

TEST(BuildRatioDigraph, MarkingsFollowInitialTokens) {
  SdfGraph g = lenet();
  g.channel(11).initial_tokens = 1;  // actor_0 -> actor_6
  const auto d = build_ratio_digraph(g, false);
  ASSERT_EQ(d.arcs.size(), g.num_channels());
  for (const auto& a : d.arcs) {
    const auto& c = g.channel(*a.channel);
    EXPECT_EQ(a.marking, c.initial_tokens > 0 ? 1 : 0) << c.src << "->" << c.dst;
  }
  EXPECT_EQ(d.arcs[11].marking, 1);
}

TEST(BuildRatioDigraph, HopLatencyAddsToArcWeight) {
  SdfGraph g;
  g.add_actor(with_tau(1.0));
  g.add_actor(with_tau(2.0));
  g.add_channel({0, 0, 1, 1, 1, 0, ChannelKind::Data, 0.5});
  const auto d = build_ratio_digraph(g);
  ASSERT_EQ(d.arcs.size(), 3u);
  EXPECT_DOUBLE_EQ(d.arcs[0].weight, 2.5);
  EXPECT_EQ(d.arcs[0].marking, 0);
  // Implicit self-loops follow the channel arcs.
  EXPECT_FALSE(d.arcs[1].channel.has_value());
  EXPECT_EQ(d.arcs[1].marking, 1);
}

TEST(Analyze, ReportFields) {
  const auto r = analyze(lenet());
  EXPECT_DOUBLE_EQ(r.mcm, 3.0);
  EXPECT_DOUBLE_EQ(r.throughput, 1.0 / 3.0);
  EXPECT_FALSE(r.critical_cycle.empty());
  ASSERT_EQ(r.per_actor_start_times.size(), 7u);
  // actor_0 and actor_4 have no same-iteration predecessors.
  EXPECT_EQ(r.per_actor_start_times[0], 0.0);
  EXPECT_EQ(r.per_actor_start_times[4], 0.0);
  EXPECT_GT(r.per_actor_start_times[1], 0.0);
  const auto j = to_json(r);
  for (const char* k : {"mcm", "throughput", "critical_cycle", "per_actor_start_times"}) EXPECT_TRUE(j.contains(k)) << k;
}
