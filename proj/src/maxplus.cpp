#include "snnc/maxplus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graph_util.hpp"
#include "snnc/error.hpp"

namespace snnc {

RatioDigraph build_ratio_digraph(const SdfGraph& g, bool implicit_self_loops) {
  RatioDigraph d;
  d.num_vertices = static_cast<int>(g.num_actors());
  for (const Channel& c : g.channels()) {
    if (c.prod_rate != c.cons_rate) {
      throw ValidationError("channel " + std::to_string(c.id) +
                            ": throughput analysis needs equal production and consumption rates");
    }
    d.arcs.push_back({c.src, c.dst, g.actor(c.dst).firing_time() + c.hop_latency, channel_delay(c), c.id});
  }
  if (implicit_self_loops) {
    for (const Actor& a : g.actors()) {
      d.arcs.push_back({a.id, a.id, a.firing_time(), 1, std::nullopt});
    }
  }
  return d;
}

namespace {

CycleWitness make_witness(const RatioDigraph& d, std::vector<int> arcs) {
  CycleWitness w;
  for (int a : arcs) {
    w.vertices.push_back(d.arcs[a].src);
    w.weight += d.arcs[a].weight;
    w.marking_sum += d.arcs[a].marking;
  }
  w.arcs = std::move(arcs);
  w.mean = w.marking_sum > 0 ? w.weight / static_cast<double>(w.marking_sum)
                             : std::numeric_limits<double>::infinity();
  return w;
}

// Longest paths under cost w - lambda*m from a virtual source; returns the
// arcs of a positive cycle in the predecessor graph, if any.
std::optional<std::vector<int>> positive_cycle(const RatioDigraph& d, double lambda) {
  const int n = d.num_vertices;
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  std::vector<int> pred(static_cast<std::size_t>(n), -1);
  int last = -1;
  for (int round = 0; round <= n; ++round) {
    last = -1;
    for (int a = 0; a < static_cast<int>(d.arcs.size()); ++a) {
      const RatioArc& arc = d.arcs[a];
      const double cand = dist[arc.src] + arc.weight - lambda * static_cast<double>(arc.marking);
      if (cand > dist[arc.dst] + 1e-12 * std::max(1.0, std::abs(dist[arc.dst]))) {
        dist[arc.dst] = cand;
        pred[arc.dst] = a;
        last = arc.dst;
      }
    }
    if (last < 0) return std::nullopt;
  }
  // Still relaxing after n rounds: walk back n steps to land on the cycle.
  int v = last;
  for (int i = 0; i < n; ++i) v = d.arcs[pred[v]].src;
  std::vector<int> cycle;
  int u = v;
  do {
    cycle.push_back(pred[u]);
    u = d.arcs[pred[u]].src;
  } while (u != v);
  std::reverse(cycle.begin(), cycle.end());
  return cycle;
}

}  // namespace

McmResult max_cycle_mean(const RatioDigraph& d) {
  std::vector<detail::Arc> all, unmarked;
  std::vector<int> unmarked_ids;
  for (int a = 0; a < static_cast<int>(d.arcs.size()); ++a) {
    const RatioArc& arc = d.arcs[a];
    if (arc.src < 0 || arc.src >= d.num_vertices || arc.dst < 0 || arc.dst >= d.num_vertices) {
      throw ValidationError("arc " + std::to_string(a) + ": endpoint out of range");
    }
    all.push_back({arc.src, arc.dst});
    if (arc.marking == 0) {
      unmarked.push_back({arc.src, arc.dst});
      unmarked_ids.push_back(a);
    }
  }
  if (auto c = detail::find_cycle(d.num_vertices, unmarked)) {
    std::string msg = "cycle without initial tokens through vertices";
    for (int a : *c) msg += " " + std::to_string(d.arcs[unmarked_ids[a]].src);
    throw DeadlockError(msg);
  }
  auto first = detail::find_cycle(d.num_vertices, all);
  if (!first) return {};

  McmResult best{0.0, make_witness(d, *first)};
  best.mcm = best.witness.mean;
  for (int iter = 0; iter < 10000; ++iter) {
    auto c = positive_cycle(d, best.mcm);
    if (!c) break;
    CycleWitness w = make_witness(d, std::move(*c));
    if (!(w.mean > best.mcm)) break;
    best.mcm = w.mean;
    best.witness = std::move(w);
  }
  return best;
}

double throughput(const SdfGraph& g) {
  if (g.num_actors() == 0) return 0.0;
  const double mcm = max_cycle_mean(build_ratio_digraph(g)).mcm;
  return mcm > 0.0 ? 1.0 / mcm : 0.0;
}

std::vector<double> first_iteration_start_times(const SdfGraph& g) {
  const std::size_t n = g.num_actors();
  std::vector<std::vector<const Channel*>> in(n);
  std::vector<int> indegree(n, 0);
  for (const Channel& c : g.channels()) {
    if (channel_delay(c) > 0) continue;
    in[c.dst].push_back(&c);
    ++indegree[c.dst];
  }
  std::vector<std::vector<ActorId>> out(n);
  for (const Channel& c : g.channels()) {
    if (channel_delay(c) == 0) out[c.src].push_back(c.dst);
  }
  std::vector<double> start(n, 0.0);
  std::vector<ActorId> ready;
  for (std::size_t a = 0; a < n; ++a) {
    if (indegree[a] == 0) ready.push_back(static_cast<ActorId>(a));
  }
  std::size_t done = 0;
  while (!ready.empty()) {
    const ActorId v = ready.back();
    ready.pop_back();
    ++done;
    double s = 0.0;
    for (const Channel* c : in[v]) {
      s = std::max(s, start[c->src] + g.actor(c->src).firing_time() + c->hop_latency);
    }
    start[v] = s;
    for (ActorId w : out[v]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (done != n) throw DeadlockError("cycle without initial tokens");
  return start;
}

AnalysisReport analyze(const SdfGraph& g) {
  AnalysisReport r;
  if (g.num_actors() == 0) return r;
  const McmResult m = max_cycle_mean(build_ratio_digraph(g));
  r.mcm = m.mcm;
  r.throughput = m.mcm > 0.0 ? 1.0 / m.mcm : 0.0;
  r.critical_cycle = m.witness.vertices;
  r.per_actor_start_times = first_iteration_start_times(g);
  return r;
}

nlohmann::json to_json(const AnalysisReport& r) {
  return {{"mcm", r.mcm},
          {"throughput", r.throughput},
          {"critical_cycle", r.critical_cycle},
          {"per_actor_start_times", r.per_actor_start_times}};
}

}  // namespace snnc
