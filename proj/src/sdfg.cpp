#include "snnc/sdfg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/rational.hpp>

#include "graph_util.hpp"
#include "snnc/error.hpp"

namespace snnc {

std::string to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::Data: return "data";
    case ChannelKind::BufferBackedge: return "buffer_backedge";
    case ChannelKind::ResourceOrder: return "resource_order";
  }
  return "data";
}

ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "data") return ChannelKind::Data;
  if (s == "buffer_backedge") return ChannelKind::BufferBackedge;
  if (s == "resource_order") return ChannelKind::ResourceOrder;
  throw ParseError("unknown channel kind '" + s + "'");
}

ActorId SdfGraph::add_actor(Actor a) {
  if (!(a.exec_time > 0.0) || !std::isfinite(a.exec_time)) {
    throw ValidationError("actor " + std::to_string(actors_.size()) + ": exec_time must be positive");
  }
  if (!(a.comm_time >= 0.0)) {
    throw ValidationError("actor " + std::to_string(actors_.size()) + ": comm_time must be non-negative");
  }
  a.id = static_cast<ActorId>(actors_.size());
  actors_.push_back(std::move(a));
  return actors_.back().id;
}

ChannelId SdfGraph::add_channel(Channel c) {
  const auto n = static_cast<ActorId>(actors_.size());
  const std::string where = "channel " + std::to_string(channels_.size());
  if (c.src < 0 || c.src >= n || c.dst < 0 || c.dst >= n) {
    throw ValidationError(where + ": endpoint is not an actor");
  }
  if (c.prod_rate <= 0 || c.cons_rate <= 0) throw ValidationError(where + ": rates must be positive");
  if (c.initial_tokens < 0) throw ValidationError(where + ": negative initial tokens");
  if (!(c.hop_latency >= 0.0)) throw ValidationError(where + ": negative hop latency");
  c.id = static_cast<ChannelId>(channels_.size());
  channels_.push_back(c);
  return c.id;
}

std::size_t SdfGraph::count(ChannelKind kind) const {
  return static_cast<std::size_t>(std::count_if(channels_.begin(), channels_.end(),
                                                [&](const Channel& c) { return c.kind == kind; }));
}

std::int64_t spikes_per_iteration(std::int64_t spikes, double duration, double hint) {
  const double tokens = std::ceil(static_cast<double>(spikes) / duration * hint);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(tokens));
}

std::int64_t channel_delay(const Channel& c) { return c.initial_tokens / c.cons_rate; }

namespace {

std::optional<std::vector<ChannelId>> token_free_cycle(const SdfGraph& g, bool data_only) {
  std::vector<detail::Arc> arcs;
  std::vector<ChannelId> ids;
  for (const Channel& c : g.channels()) {
    if (data_only && c.kind != ChannelKind::Data) continue;
    if (channel_delay(c) > 0) continue;
    arcs.push_back({c.src, c.dst});
    ids.push_back(c.id);
  }
  auto cycle = detail::find_cycle(static_cast<int>(g.num_actors()), arcs);
  if (!cycle) return std::nullopt;
  std::vector<ChannelId> out;
  for (int a : *cycle) out.push_back(ids[a]);
  return out;
}

}  // namespace

SdfGraph from_clustered_snn(const ClusteredSnn& cs, const ExecTimeModel& model) {
  SdfGraph g("clustered_snn");
  for (const Cluster& c : cs.clusters) {
    Actor a;
    a.exec_time = model.crossbar_read_latency;
    a.state_space = c.buffer_used;
    a.source_cluster = c.id;
    a.io_ports = c.input_ports_used + c.output_ports_used;
    g.add_actor(a);
  }
  for (const auto& [pair, spikes] : cs.inter_cluster_spikes) {
    if (spikes <= 0) continue;
    const auto rate = spikes_per_iteration(spikes, cs.stimulus_duration, model.iteration_period_hint);
    g.add_channel({0, pair.first, pair.second, rate, rate, 0, ChannelKind::Data, 0.0});
  }
  while (auto cycle = token_free_cycle(g, true)) {
    ChannelId pick = -1;
    for (ChannelId id : *cycle) {
      const Channel& c = g.channel(id);
      if (c.src <= c.dst) continue;
      if (pick < 0 || std::make_pair(c.src, c.dst) < std::make_pair(g.channel(pick).src, g.channel(pick).dst)) {
        pick = id;
      }
    }
    if (pick < 0) throw InternalError("token-free cycle without a descending arc");
    g.channel(pick).initial_tokens = g.channel(pick).prod_rate;
  }
  return g;
}

std::vector<std::int64_t> repetition_vector(const SdfGraph& g) {
  using Q = boost::rational<std::int64_t>;
  const std::size_t n = g.num_actors();
  std::vector<std::vector<ChannelId>> incident(n);
  for (const Channel& c : g.channels()) {
    if (c.kind != ChannelKind::Data) continue;
    incident[c.src].push_back(c.id);
    if (c.dst != c.src) incident[c.dst].push_back(c.id);
  }
  std::vector<std::optional<Q>> q(n);
  std::vector<int> component(n, -1);
  int components = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (q[s]) continue;
    q[s] = Q(1);
    component[s] = components;
    std::vector<std::size_t> frontier{s};
    while (!frontier.empty()) {
      const std::size_t v = frontier.back();
      frontier.pop_back();
      for (ChannelId id : incident[v]) {
        const Channel& c = g.channel(id);
        // prod * q[src] == cons * q[dst]
        const std::size_t other = static_cast<std::size_t>(c.src) == v ? c.dst : c.src;
        const Q expect = static_cast<std::size_t>(c.src) == v ? *q[v] * Q(c.prod_rate, c.cons_rate)
                                                              : *q[v] * Q(c.cons_rate, c.prod_rate);
        if (!q[other]) {
          q[other] = expect;
          component[other] = components;
          frontier.push_back(other);
        } else if (*q[other] != expect) {
          throw ValidationError("inconsistent rates: balance equation fails on channel " +
                                std::to_string(c.id));
        }
      }
    }
    ++components;
  }
  std::vector<std::int64_t> out(n);
  for (int comp = 0; comp < components; ++comp) {
    std::int64_t l = 1;
    for (std::size_t a = 0; a < n; ++a) {
      if (component[a] == comp) l = std::lcm(l, q[a]->denominator());
    }
    std::int64_t gg = 0;
    for (std::size_t a = 0; a < n; ++a) {
      if (component[a] != comp) continue;
      out[a] = q[a]->numerator() * (l / q[a]->denominator());
      gg = std::gcd(gg, out[a]);
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (component[a] == comp) out[a] /= gg;
    }
  }
  return out;
}

DeadlockCheck check_deadlock(const SdfGraph& g) {
  const bool homogeneous = std::all_of(g.channels().begin(), g.channels().end(),
                                       [](const Channel& c) { return c.prod_rate == c.cons_rate; });
  if (homogeneous) {
    auto cycle = token_free_cycle(g, false);
    if (!cycle) return {};
    return {false, std::move(*cycle)};
  }

  // Untimed execution of one iteration.
  const auto q = repetition_vector(g);
  const std::size_t n = g.num_actors();
  std::vector<std::vector<ChannelId>> in(n), out(n);
  for (const Channel& c : g.channels()) {
    in[c.dst].push_back(c.id);
    out[c.src].push_back(c.id);
  }
  std::vector<std::int64_t> tokens;
  for (const Channel& c : g.channels()) tokens.push_back(c.initial_tokens);
  std::vector<std::int64_t> remaining(q.begin(), q.end());
  auto enabled = [&](std::size_t a) {
    return std::all_of(in[a].begin(), in[a].end(),
                       [&](ChannelId id) { return tokens[id] >= g.channel(id).cons_rate; });
  };
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t a = 0; a < n; ++a) {
      while (remaining[a] > 0 && enabled(a)) {
        for (ChannelId id : in[a]) tokens[id] -= g.channel(id).cons_rate;
        for (ChannelId id : out[a]) tokens[id] += g.channel(id).prod_rate;
        --remaining[a];
        progress = true;
      }
    }
  }
  auto blocked = std::find_if(remaining.begin(), remaining.end(), [](std::int64_t r) { return r > 0; });
  if (blocked == remaining.end()) return {};

  // Every unfinished actor waits on a channel whose producer is unfinished
  // too, so following those channels backwards must close a cycle.
  std::vector<ChannelId> waits(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    if (remaining[a] == 0) continue;
    for (ChannelId id : in[a]) {
      if (tokens[id] < g.channel(id).cons_rate) {
        waits[a] = id;
        break;
      }
    }
  }
  std::vector<int> visited(n, -1);
  std::vector<ChannelId> path;
  auto v = static_cast<std::size_t>(blocked - remaining.begin());
  while (visited[v] < 0) {
    visited[v] = static_cast<int>(path.size());
    const ChannelId id = waits[v];
    if (id < 0) throw InternalError("blocked actor without a blocking channel");
    path.push_back(id);
    v = static_cast<std::size_t>(g.channel(id).src);
  }
  std::vector<ChannelId> witness(path.begin() + visited[v], path.end());
  std::reverse(witness.begin(), witness.end());
  return {false, std::move(witness)};
}

std::string export_dot(const SdfGraph& g) {
  std::ostringstream os;
  std::string name = g.name();
  std::replace(name.begin(), name.end(), '"', '\'');
  os << "digraph \"" << name << "\" {\n  rankdir=LR;\n  node [shape=circle];\n";
  for (const Actor& a : g.actors()) {
    os << "  a" << a.id << " [label=\"actor_" << a.id << "\\nt=" << detail::format_number(a.firing_time())
       << "\"];\n";
  }
  for (const Channel& c : g.channels()) {
    os << "  a" << c.src << " -> a" << c.dst << " [label=\"";
    if (c.prod_rate == c.cons_rate) os << c.prod_rate;
    else os << c.prod_rate << ":" << c.cons_rate;
    if (c.initial_tokens > 0) os << " (" << c.initial_tokens << ")";
    os << "\"";
    if (c.kind == ChannelKind::BufferBackedge) os << ", style=dashed";
    if (c.kind == ChannelKind::ResourceOrder) os << ", style=dotted";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

nlohmann::json to_json(const SdfGraph& g) {
  nlohmann::json j;
  j["name"] = g.name();
  j["actors"] = nlohmann::json::array();
  for (const Actor& a : g.actors()) {
    j["actors"].push_back({{"id", a.id},
                           {"exec_time", a.exec_time},
                           {"comm_time", a.comm_time},
                           {"state_space", a.state_space},
                           {"source_cluster", a.source_cluster ? nlohmann::json(*a.source_cluster) : nlohmann::json()},
                           {"io_ports", a.io_ports}});
  }
  j["channels"] = nlohmann::json::array();
  for (const Channel& c : g.channels()) {
    j["channels"].push_back({{"id", c.id},
                             {"src", c.src},
                             {"dst", c.dst},
                             {"prod_rate", c.prod_rate},
                             {"cons_rate", c.cons_rate},
                             {"initial_tokens", c.initial_tokens},
                             {"kind", to_string(c.kind)},
                             {"hop_latency", c.hop_latency}});
  }
  return j;
}

SdfGraph sdfg_from_json(const nlohmann::json& j) {
  try {
    SdfGraph g(j.value("name", std::string("sdfg")));
    const auto& actors = j.at("actors");
    for (std::size_t i = 0; i < actors.size(); ++i) {
      const auto& ja = actors[i];
      if (ja.contains("id") && ja.at("id").get<int>() != static_cast<int>(i)) {
        throw ParseError("actors[" + std::to_string(i) + "].id must equal its position");
      }
      Actor a;
      a.exec_time = ja.at("exec_time").get<double>();
      a.comm_time = ja.value("comm_time", 0.0);
      a.state_space = ja.value("state_space", std::int64_t{0});
      if (ja.contains("source_cluster") && !ja.at("source_cluster").is_null()) {
        a.source_cluster = ja.at("source_cluster").get<int>();
      }
      a.io_ports = ja.value("io_ports", std::int64_t{0});
      g.add_actor(a);
    }
    const auto& channels = j.at("channels");
    for (std::size_t i = 0; i < channels.size(); ++i) {
      const auto& jc = channels[i];
      if (jc.contains("id") && jc.at("id").get<int>() != static_cast<int>(i)) {
        throw ParseError("channels[" + std::to_string(i) + "].id must equal its position");
      }
      Channel c;
      c.src = jc.at("src").get<int>();
      c.dst = jc.at("dst").get<int>();
      const auto rate = jc.value("rate", std::int64_t{1});
      c.prod_rate = jc.value("prod_rate", rate);
      c.cons_rate = jc.value("cons_rate", rate);
      c.initial_tokens = jc.value("initial_tokens", std::int64_t{0});
      c.kind = channel_kind_from_string(jc.value("kind", std::string("data")));
      c.hop_latency = jc.value("hop_latency", 0.0);
      g.add_channel(c);
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("SDFG document: ") + e.what());
  }
}

}  // namespace snnc
