#pragma once

// Independent reference implementations used by the tests. They favour
// obviously-correct brute force over speed and share no code with the
// library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include <boost/rational.hpp>

#include "snnc/partitioner.hpp"
#include "snnc/sdfg.hpp"
#include "snnc/snn_model.hpp"

namespace oracle {

using Q = boost::rational<std::int64_t>;

/// Exact value of a double with a short binary expansion (quarters, etc.).
inline Q exact(double x) {
  constexpr std::int64_t den = std::int64_t{1} << 24;
  return Q(std::llround(x * static_cast<double>(den)), den);
}

struct Arc {
  int src;
  int dst;
  double weight;
  std::int64_t marking;
};

/// Arcs of the timed graph: consumer firing time + hop latency per channel,
/// marking = whole firings worth of tokens, plus a self-loop (marking 1) on
/// every actor.
inline std::vector<Arc> timed_arcs(const snnc::SdfGraph& g) {
  std::vector<Arc> arcs;
  for (const auto& c : g.channels()) {
    const auto& d = g.actor(c.dst);
    arcs.push_back({c.src, c.dst, d.exec_time + d.comm_time + c.hop_latency, c.initial_tokens / c.cons_rate});
  }
  for (const auto& a : g.actors()) arcs.push_back({a.id, a.id, a.exec_time + a.comm_time, 1});
  return arcs;
}

/// Every simple cycle, as arc index lists; each cycle is reported once,
/// rooted at its smallest vertex.
inline std::vector<std::vector<int>> simple_cycles(int n, const std::vector<Arc>& arcs) {
  std::vector<std::vector<int>> out_arcs(static_cast<std::size_t>(n));
  for (int i = 0; i < static_cast<int>(arcs.size()); ++i) out_arcs[arcs[i].src].push_back(i);
  std::vector<std::vector<int>> cycles;
  std::vector<int> path;
  std::vector<char> on_path(static_cast<std::size_t>(n), 0);
  auto dfs = [&](auto&& self, int root, int v) -> void {
    for (int a : out_arcs[v]) {
      const int w = arcs[a].dst;
      if (w < root) continue;
      if (w == root) {
        path.push_back(a);
        cycles.push_back(path);
        path.pop_back();
      } else if (!on_path[w]) {
        on_path[w] = 1;
        path.push_back(a);
        self(self, root, w);
        path.pop_back();
        on_path[w] = 0;
      }
    }
  };
  for (int r = 0; r < n; ++r) {
    on_path[r] = 1;
    dfs(dfs, r, r);
    on_path[r] = 0;
  }
  return cycles;
}

struct Mcm {
  bool deadlock = false;   // a cycle carries no marking
  bool acyclic = false;
  Q exact_value{0};
  double value = 0.0;
};

/// Maximum cycle ratio by enumeration, in exact arithmetic.
inline Mcm max_cycle_ratio_exact(int n, const std::vector<Arc>& arcs) {
  Mcm r;
  const auto cycles = simple_cycles(n, arcs);
  r.acyclic = cycles.empty();
  bool first = true;
  for (const auto& c : cycles) {
    Q w(0);
    std::int64_t m = 0;
    for (int a : c) {
      w += exact(arcs[a].weight);
      m += arcs[a].marking;
    }
    if (m == 0) {
      r.deadlock = true;
      continue;
    }
    const Q ratio = w / Q(m);
    if (first || ratio > r.exact_value) r.exact_value = ratio;
    first = false;
  }
  r.value = boost::rational_cast<double>(r.exact_value);
  return r;
}

/// Same in floating point, for weights without a short binary expansion.
inline Mcm max_cycle_ratio(int n, const std::vector<Arc>& arcs) {
  Mcm r;
  const auto cycles = simple_cycles(n, arcs);
  r.acyclic = cycles.empty();
  for (const auto& c : cycles) {
    double w = 0.0;
    std::int64_t m = 0;
    for (int a : c) {
      w += arcs[a].weight;
      m += arcs[a].marking;
    }
    if (m == 0) {
      r.deadlock = true;
      continue;
    }
    r.value = std::max(r.value, w / static_cast<double>(m));
  }
  return r;
}

inline Mcm graph_mcm(const snnc::SdfGraph& g) {
  return max_cycle_ratio(static_cast<int>(g.num_actors()), timed_arcs(g));
}

/// Balance equations solved by Gauss-Jordan elimination over the
/// rationals, one normalising equation per weakly connected component.
/// Returns nullopt when inconsistent.
inline std::optional<std::vector<std::int64_t>> balance_solution(const snnc::SdfGraph& g) {
  const int n = static_cast<int>(g.num_actors());
  std::vector<int> comp(static_cast<std::size_t>(n));
  std::iota(comp.begin(), comp.end(), 0);
  auto find = [&](int x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  std::vector<std::vector<Q>> rows;
  for (const auto& c : g.channels()) {
    if (c.kind != snnc::ChannelKind::Data) continue;
    std::vector<Q> row(static_cast<std::size_t>(n) + 1, Q(0));
    row[c.src] += Q(c.prod_rate);
    row[c.dst] -= Q(c.cons_rate);
    rows.push_back(row);
    comp[find(c.src)] = find(c.dst);
  }
  std::set<int> roots;
  for (int v = 0; v < n; ++v) {
    if (roots.insert(find(v)).second) {
      std::vector<Q> row(static_cast<std::size_t>(n) + 1, Q(0));
      row[v] = Q(1);
      row[n] = Q(1);
      rows.push_back(row);
    }
  }
  int r = 0;
  std::vector<int> pivot_col;
  for (int col = 0; col < n && r < static_cast<int>(rows.size()); ++col) {
    int p = r;
    while (p < static_cast<int>(rows.size()) && rows[p][col] == Q(0)) ++p;
    if (p == static_cast<int>(rows.size())) continue;
    std::swap(rows[p], rows[r]);
    const Q inv = Q(1) / rows[r][col];
    for (auto& x : rows[r]) x *= inv;
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
      if (i == r || rows[i][col] == Q(0)) continue;
      const Q f = rows[i][col];
      for (int k = 0; k <= n; ++k) rows[i][k] -= f * rows[r][k];
    }
    pivot_col.push_back(col);
    ++r;
  }
  for (int i = r; i < static_cast<int>(rows.size()); ++i) {
    if (rows[i][n] != Q(0)) return std::nullopt;
  }
  if (r < n) return std::nullopt;  // cannot happen with one anchor per component
  std::vector<Q> q(static_cast<std::size_t>(n));
  for (int i = 0; i < r; ++i) q[pivot_col[i]] = rows[i][n];
  std::vector<std::int64_t> out(static_cast<std::size_t>(n));
  for (int root : roots) {
    std::int64_t l = 1, g2 = 0;
    for (int v = 0; v < n; ++v) {
      if (find(v) == root) l = std::lcm(l, q[v].denominator());
    }
    for (int v = 0; v < n; ++v) {
      if (find(v) != root) continue;
      out[v] = q[v].numerator() * (l / q[v].denominator());
      g2 = std::gcd(g2, out[v]);
    }
    for (int v = 0; v < n; ++v) {
      if (find(v) == root) out[v] /= g2;
    }
  }
  return out;
}

/// Linear scan of the synapse list.
inline std::size_t fanin(const snnc::SnnGraph& g, snnc::NeuronId n) {
  std::size_t k = 0;
  for (const auto& s : g.synapses()) k += s.dst == n ? 1 : 0;
  return k;
}

/// Per-synapse accumulation with a nested loop over cluster pairs.
inline std::map<std::pair<int, int>, std::int64_t> inter_cluster_spikes(const snnc::SnnGraph& g,
                                                                        const snnc::ClusteredSnn& cs) {
  std::map<std::pair<int, int>, std::int64_t> out;
  for (const auto& ci : cs.clusters) {
    for (const auto& cj : cs.clusters) {
      if (ci.id == cj.id) continue;
      for (const auto& s : g.synapses()) {
        const bool from = std::binary_search(ci.neurons.begin(), ci.neurons.end(), s.src);
        const bool to = std::binary_search(cj.neurons.begin(), cj.neurons.end(), s.dst);
        if (from && to) out[{ci.id, cj.id}] += s.spike_count;
      }
    }
  }
  return out;
}

struct Usage {
  std::int64_t inputs = 0, outputs = 0, crosspoints = 0, buffer = 0;
};

/// Crossbar resources used by a set of neurons, recomputed from the graph.
inline Usage usage(const snnc::SnnGraph& g, const std::vector<snnc::NeuronId>& members) {
  Usage u;
  std::set<snnc::NeuronId> in(members.begin(), members.end()), sources;
  std::int64_t spikes = 0;
  for (const auto& n : g.neurons()) {
    if (in.count(n.id)) spikes += n.spike_count;
  }
  for (const auto& s : g.synapses()) {
    if (!in.count(s.dst)) continue;
    ++u.crosspoints;
    sources.insert(s.src);
  }
  u.inputs = static_cast<std::int64_t>(sources.size());
  u.outputs = static_cast<std::int64_t>(members.size());
  u.buffer = static_cast<std::int64_t>(std::ceil(static_cast<double>(spikes) / g.stimulus_duration()));
  return u;
}

inline bool fits(const Usage& u, const snnc::CrossbarConstraints& k) {
  return u.inputs <= k.max_inputs && u.outputs <= k.max_outputs && u.crosspoints <= k.max_crosspoints &&
         u.buffer <= k.max_buffer_tokens;
}

/// All set partitions of `items` (restricted growth strings).
inline std::vector<std::vector<std::vector<snnc::NeuronId>>> set_partitions(const std::vector<snnc::NeuronId>& items) {
  std::vector<std::vector<std::vector<snnc::NeuronId>>> out;
  std::vector<int> label(items.size(), 0);
  auto rec = [&](auto&& self, std::size_t i, int used) -> void {
    if (i == items.size()) {
      std::vector<std::vector<snnc::NeuronId>> p(static_cast<std::size_t>(used));
      for (std::size_t k = 0; k < items.size(); ++k) p[label[k]].push_back(items[k]);
      out.push_back(p);
      return;
    }
    for (int l = 0; l <= used; ++l) {
      label[i] = l;
      self(self, i + 1, std::max(used, l + 1));
    }
  };
  rec(rec, 0, 0);
  return out;
}

}  // namespace oracle
