#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "snnc/sdfg.hpp"

namespace snnc {

struct RatioArc {
  int src = 0;
  int dst = 0;
  double weight = 0.0;
  std::int64_t marking = 0;
  std::optional<ChannelId> channel;  // nullopt for implicit self-loops
};

struct RatioDigraph {
  int num_vertices = 0;
  std::vector<RatioArc> arcs;
};

struct CycleWitness {
  std::vector<int> arcs;      // arc ids, a closed walk
  std::vector<int> vertices;  // source vertex of each arc
  double weight = 0.0;
  std::int64_t marking_sum = 0;
  double mean = 0.0;
};

struct McmResult {
  double mcm = 0.0;
  CycleWitness witness;
};

/// One arc per channel, weight = firing time of the consumer + hop latency,
/// marking = channel_delay. Every actor also gets an implicit self-loop
/// (weight = firing time, marking 1): a crossbar cannot start its next
/// firing before the current one ends.
/// Requires prod_rate == cons_rate on every channel.
RatioDigraph build_ratio_digraph(const SdfGraph& g, bool implicit_self_loops = true);

/// Maximum over cycles of weight / marking. Parametric search: for the
/// current lambda a longest-path Bellman-Ford looks for a cycle with
/// positive w - lambda*m; if one exists lambda jumps to its exact ratio.
/// Throws DeadlockError on a cycle without marking; returns 0 for acyclic
/// graphs.
McmResult max_cycle_mean(const RatioDigraph& d);

/// 1 / mcm of build_ratio_digraph(g); 0 for an empty graph.
double throughput(const SdfGraph& g);

/// Start time of each actor's first firing when every marked arc is
/// satisfied at time 0.
std::vector<double> first_iteration_start_times(const SdfGraph& g);

struct AnalysisReport {
  double mcm = 0.0;
  double throughput = 0.0;
  std::vector<ActorId> critical_cycle;
  std::vector<double> per_actor_start_times;
};

AnalysisReport analyze(const SdfGraph& g);
nlohmann::json to_json(const AnalysisReport& r);

}  // namespace snnc
