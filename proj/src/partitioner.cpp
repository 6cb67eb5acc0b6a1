#include "snnc/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "graph_util.hpp"
#include "snnc/error.hpp"

namespace snnc {

void CrossbarConstraints::validate() const {
  if (max_inputs <= 0 || max_outputs <= 0 || max_crosspoints <= 0 || max_buffer_tokens <= 0) {
    throw ValidationError("crossbar constraints must be positive");
  }
  if (max_crosspoints < max_inputs) {
    throw ValidationError("crossbar needs at least one crosspoint per input row");
  }
}

ClusterId ClusteredSnn::cluster_of(NeuronId n) const {
  auto it = neuron_to_cluster.find(n);
  if (it == neuron_to_cluster.end()) {
    throw ValidationError("neuron " + std::to_string(n) + " is not assigned to a cluster");
  }
  return it->second;
}

Utilization io_crosspoint_utilization(const Cluster& c, const CrossbarConstraints& k) {
  const double io = static_cast<double>(c.input_ports_used + c.output_ports_used) /
                    static_cast<double>(k.max_inputs + k.max_outputs);
  const double xp = static_cast<double>(c.crosspoints_used) / static_cast<double>(k.max_crosspoints);
  return {100.0 * io, 100.0 * xp};
}

namespace {

std::int64_t buffer_tokens(std::int64_t spikes, double duration) {
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(spikes) / duration));
}

// Distinct presynaptic sources (dense indices, ascending) per neuron.
std::vector<std::vector<std::size_t>> distinct_sources(const SnnGraph& g) {
  std::vector<std::vector<std::size_t>> out(g.num_neurons());
  for (std::size_t n = 0; n < g.num_neurons(); ++n) {
    for (std::size_t s : g.fanin_synapses(n)) out[n].push_back(g.src_index(s));
    std::sort(out[n].begin(), out[n].end());
    out[n].erase(std::unique(out[n].begin(), out[n].end()), out[n].end());
  }
  return out;
}

// Fill the derived fields of a cluster from its member list.
void finalize(const SnnGraph& g, double duration, Cluster& c) {
  std::sort(c.neurons.begin(), c.neurons.end());
  std::set<std::size_t> members;
  for (NeuronId id : c.neurons) members.insert(*g.index_of(id));
  std::set<NeuronId> sources;
  c.synapses.clear();
  c.internal_synapses.clear();
  c.spike_sum = 0;
  for (std::size_t m : members) {
    c.spike_sum += g.neurons()[m].spike_count;
    for (std::size_t s : g.fanin_synapses(m)) {
      c.synapses.push_back(s);
      sources.insert(g.synapses()[s].src);
      if (members.count(g.src_index(s))) c.internal_synapses.push_back(s);
    }
  }
  std::sort(c.synapses.begin(), c.synapses.end());
  std::sort(c.internal_synapses.begin(), c.internal_synapses.end());
  c.input_sources.assign(sources.begin(), sources.end());
  c.input_ports_used = static_cast<std::int64_t>(c.input_sources.size());
  c.output_ports_used = static_cast<std::int64_t>(c.neurons.size());
  c.crosspoints_used = static_cast<std::int64_t>(c.synapses.size());
  c.buffer_used = buffer_tokens(c.spike_sum, duration);
}

void index_clusters(const SnnGraph& g, ClusteredSnn& cs) {
  cs.neuron_to_cluster.clear();
  for (const Cluster& c : cs.clusters) {
    for (NeuronId n : c.neurons) cs.neuron_to_cluster.emplace(n, c.id);
  }
  cs.source_neurons.clear();
  for (const Neuron& n : g.neurons()) cs.source_neurons.push_back(n.id);
  cs.inter_cluster_spikes = inter_cluster_spikes(g, cs);
}

}  // namespace

ClusteredSnn partition(const SnnGraph& g, const CrossbarConstraints& k) {
  k.validate();
  const std::size_t n = g.num_neurons();
  const double duration = g.stimulus_duration();
  const auto sources = distinct_sources(g);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto fa = g.fanin_synapses(a).size(), fb = g.fanin_synapses(b).size();
    if (fa != fb) return fa < fb;
    return g.neurons()[a].id < g.neurons()[b].id;
  });

  struct Bin {
    std::vector<std::size_t> members;
    std::vector<char> has_source;  // bitmap over dense neuron indices
    std::int64_t inputs = 0, outputs = 0, crosspoints = 0, spikes = 0;
  };
  std::vector<Bin> bins;
  std::vector<std::size_t> ranked;  // bin indices, most utilized first

  for (std::size_t v : order) {
    const Neuron& neuron = g.neurons()[v];
    const auto fanin_count = static_cast<std::int64_t>(g.fanin_synapses(v).size());
    const auto& srcs = sources[v];
    const std::string who = "neuron " + std::to_string(neuron.id);
    if (fanin_count > k.max_inputs) {
      throw InfeasibleError(who + ": fanin " + std::to_string(fanin_count) +
                            " exceeds max_inputs " + std::to_string(k.max_inputs));
    }
    if (fanin_count > k.max_crosspoints) {
      throw InfeasibleError(who + ": needs " + std::to_string(fanin_count) + " crosspoints");
    }
    if (buffer_tokens(neuron.spike_count, duration) > k.max_buffer_tokens) {
      throw InfeasibleError(who + ": spike buffer demand exceeds max_buffer_tokens " +
                            std::to_string(k.max_buffer_tokens));
    }

    auto fits = [&](const Bin& b) {
      std::int64_t fresh = 0;
      for (std::size_t s : srcs) fresh += b.has_source[s] ? 0 : 1;
      return b.inputs + fresh <= k.max_inputs && b.outputs + 1 <= k.max_outputs &&
             b.crosspoints + fanin_count <= k.max_crosspoints &&
             buffer_tokens(b.spikes + neuron.spike_count, duration) <= k.max_buffer_tokens;
    };

    std::size_t target = bins.size();
    for (std::size_t b : ranked) {
      if (fits(bins[b])) {
        target = b;
        break;
      }
    }
    if (target == bins.size()) {
      bins.push_back({{}, std::vector<char>(n, 0)});
      ranked.push_back(target);
    }
    Bin& bin = bins[target];
    bin.members.push_back(v);
    for (std::size_t s : srcs) {
      if (!bin.has_source[s]) {
        bin.has_source[s] = 1;
        ++bin.inputs;
      }
    }
    ++bin.outputs;
    bin.crosspoints += fanin_count;
    bin.spikes += neuron.spike_count;

    // Descending (io, crosspoint) utilization; the denominators are shared
    // by all bins so raw counts order identically.
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      const auto io_a = bins[a].inputs + bins[a].outputs, io_b = bins[b].inputs + bins[b].outputs;
      if (io_a != io_b) return io_a > io_b;
      if (bins[a].crosspoints != bins[b].crosspoints) return bins[a].crosspoints > bins[b].crosspoints;
      return a < b;
    });
  }

  ClusteredSnn cs;
  cs.constraints = k;
  cs.stimulus_duration = duration;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    Cluster c;
    c.id = static_cast<ClusterId>(b);
    for (std::size_t m : bins[b].members) c.neurons.push_back(g.neurons()[m].id);
    finalize(g, duration, c);
    if (c.input_ports_used != bins[b].inputs || c.crosspoints_used != bins[b].crosspoints) {
      throw InternalError("partition bookkeeping diverged for cluster " + std::to_string(b));
    }
    cs.clusters.push_back(std::move(c));
  }
  index_clusters(g, cs);

  const auto diag = check_clustered(cs);
  if (!diag.ok()) throw InternalError("partition produced an invalid clustering: " + diag.errors.front());
  return cs;
}

ClusteredSnn make_clustered(const SnnGraph& g, const CrossbarConstraints& k,
                            const std::vector<std::vector<NeuronId>>& groups) {
  ClusteredSnn cs;
  cs.constraints = k;
  cs.stimulus_duration = g.stimulus_duration();
  for (std::size_t i = 0; i < groups.size(); ++i) {
    Cluster c;
    c.id = static_cast<ClusterId>(i);
    for (NeuronId id : groups[i]) {
      if (!g.contains(id)) throw ValidationError("unknown neuron id " + std::to_string(id));
      c.neurons.push_back(id);
    }
    finalize(g, g.stimulus_duration(), c);
    cs.clusters.push_back(std::move(c));
  }
  index_clusters(g, cs);
  return cs;
}

std::map<ClusterPair, std::int64_t> inter_cluster_spikes(const SnnGraph& g, const ClusteredSnn& cs) {
  std::map<ClusterPair, std::int64_t> out;
  for (const Synapse& s : g.synapses()) {
    const auto a = cs.neuron_to_cluster.find(s.src);
    const auto b = cs.neuron_to_cluster.find(s.dst);
    if (a == cs.neuron_to_cluster.end() || b == cs.neuron_to_cluster.end()) continue;
    if (a->second == b->second) continue;
    out[{a->second, b->second}] += s.spike_count;
  }
  return out;
}

ClusterDiagnostics check_clustered(const ClusteredSnn& cs) {
  ClusterDiagnostics d;
  const auto& k = cs.constraints;

  std::map<NeuronId, int> seen;
  for (const Cluster& c : cs.clusters) {
    for (NeuronId n : c.neurons) ++seen[n];
  }
  for (NeuronId n : cs.source_neurons) {
    const auto it = seen.find(n);
    if (it == seen.end()) {
      d.errors.push_back("neuron " + std::to_string(n) + " is not assigned to any cluster");
    } else if (it->second > 1) {
      d.errors.push_back("neuron " + std::to_string(n) + " appears in " +
                         std::to_string(it->second) + " clusters");
    }
  }
  if (seen.size() != cs.source_neurons.size()) {
    for (const auto& [n, count] : seen) {
      if (!std::binary_search(cs.source_neurons.begin(), cs.source_neurons.end(), n)) {
        d.errors.push_back("cluster member " + std::to_string(n) + " is not a neuron of the SNN");
      }
    }
  }

  auto check = [&](const Cluster& c, const char* what, std::int64_t used, std::int64_t limit) {
    if (used > limit) {
      d.errors.push_back("cluster " + std::to_string(c.id) + ": " + what + " " +
                         std::to_string(used) + " exceeds limit " + std::to_string(limit));
    }
  };
  for (std::size_t i = 0; i < cs.clusters.size(); ++i) {
    const Cluster& c = cs.clusters[i];
    if (c.id != static_cast<ClusterId>(i)) {
      d.errors.push_back("cluster at position " + std::to_string(i) + " has id " + std::to_string(c.id));
    }
    if (c.neurons.empty()) d.warnings.push_back("cluster " + std::to_string(c.id) + " is empty");
    check(c, "input_ports_used", c.input_ports_used, k.max_inputs);
    check(c, "output_ports_used", c.output_ports_used, k.max_outputs);
    check(c, "crosspoints_used", c.crosspoints_used, k.max_crosspoints);
    check(c, "buffer_used", c.buffer_used, k.max_buffer_tokens);
    if (c.output_ports_used != static_cast<std::int64_t>(c.neurons.size()) ||
        c.input_ports_used != static_cast<std::int64_t>(c.input_sources.size()) ||
        c.crosspoints_used != static_cast<std::int64_t>(c.synapses.size())) {
      d.errors.push_back("cluster " + std::to_string(c.id) + ": usage counters disagree with members");
    }
  }

  const int nc = static_cast<int>(cs.clusters.size());
  std::vector<detail::Arc> arcs;
  for (const auto& [pair, spikes] : cs.inter_cluster_spikes) {
    if (pair.first == pair.second) {
      d.errors.push_back("inter-cluster map has a self pair for cluster " + std::to_string(pair.first));
      continue;
    }
    if (pair.first < 0 || pair.second < 0 || pair.first >= nc || pair.second >= nc) {
      d.errors.push_back("inter-cluster map references an unknown cluster");
      continue;
    }
    arcs.push_back({pair.first, pair.second});
  }

  // Weak connectivity.
  std::vector<int> parent(static_cast<std::size_t>(nc));
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& a : arcs) parent[root(a.src)] = root(a.dst);
  std::set<int> roots;
  for (int c = 0; c < nc; ++c) roots.insert(root(c));
  d.components = roots.size();
  if (d.components > 1) {
    d.warnings.push_back("cluster graph is disconnected (" + std::to_string(d.components) +
                         " components)");
  }

  // One witness cycle per non-trivial SCC: shortest return path from its
  // smallest member.
  const auto comp = detail::scc_ids(nc, arcs);
  const auto out = detail::out_arcs(nc, arcs);
  std::set<int> done;
  for (int s = 0; s < nc; ++s) {
    if (done.count(comp[s])) continue;
    done.insert(comp[s]);
    std::vector<int> prev(static_cast<std::size_t>(nc), -2);
    std::vector<int> frontier{s};
    prev[s] = -1;
    int closing = -1;
    for (std::size_t head = 0; head < frontier.size() && closing < 0; ++head) {
      const int v = frontier[head];
      for (int a : out[v]) {
        const int w = arcs[a].dst;
        if (comp[w] != comp[s]) continue;
        if (w == s) {
          closing = v;
          break;
        }
        if (prev[w] == -2) {
          prev[w] = v;
          frontier.push_back(w);
        }
      }
    }
    if (closing < 0) continue;
    std::vector<ClusterId> walk{s};
    for (int v = closing; v != s; v = prev[v]) walk.push_back(v);
    walk.push_back(s);
    std::reverse(walk.begin() + 1, walk.end() - 1);
    d.cycles.push_back(std::move(walk));
  }
  return d;
}

nlohmann::json to_json(const ClusteredSnn& cs) {
  nlohmann::json j;
  j["constraints"] = {{"max_inputs", cs.constraints.max_inputs},
                      {"max_outputs", cs.constraints.max_outputs},
                      {"max_crosspoints", cs.constraints.max_crosspoints},
                      {"max_buffer_tokens", cs.constraints.max_buffer_tokens}};
  j["stimulus_duration"] = cs.stimulus_duration;
  j["clusters"] = nlohmann::json::array();
  for (const Cluster& c : cs.clusters) {
    const auto u = io_crosspoint_utilization(c, cs.constraints);
    j["clusters"].push_back({{"id", c.id},
                             {"neurons", c.neurons},
                             {"input_ports_used", c.input_ports_used},
                             {"output_ports_used", c.output_ports_used},
                             {"crosspoints_used", c.crosspoints_used},
                             {"buffer_used", c.buffer_used},
                             {"io_percent", u.io_percent},
                             {"crosspoint_percent", u.crosspoint_percent}});
  }
  j["inter_cluster_spikes"] = nlohmann::json::array();
  for (const auto& [pair, spikes] : cs.inter_cluster_spikes) {
    j["inter_cluster_spikes"].push_back({{"src", pair.first}, {"dst", pair.second}, {"spikes", spikes}});
  }
  return j;
}

std::string clusters_to_dot(const ClusteredSnn& cs) {
  std::ostringstream os;
  os << "digraph clusters {\n  node [shape=box];\n";
  for (const Cluster& c : cs.clusters) {
    const auto u = io_crosspoint_utilization(c, cs.constraints);
    os << "  c" << c.id << " [label=\"cluster_" << c.id << "\\n" << c.neurons.size()
       << " neurons\\nio " << detail::format_number(u.io_percent) << "%\"];\n";
  }
  for (const auto& [pair, spikes] : cs.inter_cluster_spikes) {
    os << "  c" << pair.first << " -> c" << pair.second << " [label=\"" << spikes << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace snnc
