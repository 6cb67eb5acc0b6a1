#include "snnc/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "snnc/error.hpp"

namespace snnc {

void HardwareConfig::validate() const {
  if (num_tiles <= 0) throw ValidationError("num_tiles must be positive");
  if (rows <= 0 || cols <= 0 || rows * cols != num_tiles) {
    throw ValidationError("mesh " + std::to_string(rows) + "x" + std::to_string(cols) + " does not hold " +
                          std::to_string(num_tiles) + " tiles");
  }
  crossbar.validate();
  if (input_buffer_tokens <= 0 || output_buffer_tokens <= 0) throw ValidationError("buffer sizes must be positive");
  if (!(link_bandwidth > 0.0)) throw ValidationError("link_bandwidth must be positive");
  if (!(hop_delay >= 0.0)) throw ValidationError("hop_delay must be non-negative");
  if (!(weights.a >= 0.0 && weights.b >= 0.0 && weights.c >= 0.0 && weights.d >= 0.0)) {
    throw ValidationError("load weights must be non-negative");
  }
  if (!(exec_time > 0.0)) throw ValidationError("exec_time must be positive");
}

int HardwareConfig::manhattan(TileId a, TileId b) const {
  return std::abs(a / cols - b / cols) + std::abs(a % cols - b % cols);
}

HardwareConfig dynapse_preset() { return HardwareConfig{}; }

HardwareConfig with_tiles(const HardwareConfig& hw, int n) {
  if (n <= 0) throw ValidationError("tile count must be positive");
  HardwareConfig out = hw;
  out.num_tiles = n;
  out.rows = 1;
  for (int r = 1; r * r <= n; ++r) {
    if (n % r == 0) out.rows = r;
  }
  out.cols = n / out.rows;
  return out;
}

nlohmann::json to_json(const HardwareConfig& hw) {
  return {{"num_tiles", hw.num_tiles},
          {"mesh", {{"rows", hw.rows}, {"cols", hw.cols}}},
          {"crossbar",
           {{"max_inputs", hw.crossbar.max_inputs},
            {"max_outputs", hw.crossbar.max_outputs},
            {"max_crosspoints", hw.crossbar.max_crosspoints},
            {"max_buffer_tokens", hw.crossbar.max_buffer_tokens}}},
          {"buffers", {{"input_tokens", hw.input_buffer_tokens}, {"output_tokens", hw.output_buffer_tokens}}},
          {"link_bandwidth", hw.link_bandwidth},
          {"hop_delay", hw.hop_delay},
          {"load_weights", {{"a", hw.weights.a}, {"b", hw.weights.b}, {"c", hw.weights.c}, {"d", hw.weights.d}}},
          {"exec_time", hw.exec_time}};
}

HardwareConfig hardware_from_json(const nlohmann::json& j) {
  HardwareConfig hw;
  try {
    if (!j.is_object()) throw ParseError("hardware config: expected an object");
    if (j.contains("num_tiles")) hw = with_tiles(hw, j.at("num_tiles").get<int>());
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      if (m.is_array()) {
        hw.rows = m.at(0).get<int>();
        hw.cols = m.at(1).get<int>();
      } else {
        hw.rows = m.at("rows").get<int>();
        hw.cols = m.at("cols").get<int>();
      }
    }
    if (j.contains("crossbar")) {
      const auto& c = j.at("crossbar");
      hw.crossbar.max_inputs = c.value("max_inputs", hw.crossbar.max_inputs);
      hw.crossbar.max_outputs = c.value("max_outputs", hw.crossbar.max_outputs);
      hw.crossbar.max_crosspoints = c.value("max_crosspoints", hw.crossbar.max_crosspoints);
      hw.crossbar.max_buffer_tokens = c.value("max_buffer_tokens", hw.crossbar.max_buffer_tokens);
    }
    if (j.contains("buffers")) {
      const auto& b = j.at("buffers");
      hw.input_buffer_tokens = b.value("input_tokens", hw.input_buffer_tokens);
      hw.output_buffer_tokens = b.value("output_tokens", hw.output_buffer_tokens);
    }
    hw.link_bandwidth = j.value("link_bandwidth", hw.link_bandwidth);
    hw.hop_delay = j.value("hop_delay", hw.hop_delay);
    if (j.contains("load_weights")) {
      const auto& w = j.at("load_weights");
      hw.weights = {w.value("a", 1.0), w.value("b", 1.0), w.value("c", 1.0), w.value("d", 1.0)};
    }
    hw.exec_time = j.value("exec_time", hw.exec_time);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("hardware config: ") + e.what());
  }
  hw.validate();
  return hw;
}

HardwareConfig load_hardware_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open hardware config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return hardware_from_json(j);
}

std::vector<ActorId> Binding::actors_on(TileId t) const {
  std::vector<ActorId> out;
  for (std::size_t a = 0; a < actor_to_tile.size(); ++a) {
    if (actor_to_tile[a] == t) out.push_back(static_cast<ActorId>(a));
  }
  return out;
}

std::vector<TileId> Binding::occupied_tiles() const {
  std::set<TileId> s(actor_to_tile.begin(), actor_to_tile.end());
  return {s.begin(), s.end()};
}

void validate_binding(const Binding& b, const SdfGraph& g, const HardwareConfig& hw) {
  if (b.actor_to_tile.size() != g.num_actors()) {
    throw ValidationError("binding covers " + std::to_string(b.actor_to_tile.size()) + " actors, graph has " +
                          std::to_string(g.num_actors()));
  }
  for (std::size_t a = 0; a < b.actor_to_tile.size(); ++a) {
    if (b.actor_to_tile[a] < 0 || b.actor_to_tile[a] >= hw.num_tiles) {
      throw ValidationError("actor " + std::to_string(a) + " bound to unknown tile " +
                            std::to_string(b.actor_to_tile[a]));
    }
  }
}

nlohmann::json to_json(const Binding& b) {
  return {{"num_tiles", b.num_tiles}, {"num_actors", b.actor_to_tile.size()}, {"actor_to_tile", b.actor_to_tile}};
}

Binding binding_from_json(const nlohmann::json& j) {
  try {
    Binding b;
    b.actor_to_tile = j.at("actor_to_tile").get<std::vector<TileId>>();
    b.num_tiles = j.value("num_tiles", 0);
    for (TileId t : b.actor_to_tile) {
      if (t < 0) throw ParseError("binding: negative tile id");
      b.num_tiles = std::max(b.num_tiles, t + 1);
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("binding: ") + e.what());
  }
}

namespace {

struct TileTraffic {
  std::int64_t io_ports = 0;
  std::int64_t buffer = 0;        // rate + initial tokens of incoming data channels
  std::int64_t connections = 0;   // inter-tile data channels incident to the tile
  std::int64_t inter_in = 0;      // inter-tile tokens per iteration
  std::int64_t inter_out = 0;
};

std::vector<TileTraffic> traffic(const Binding& b, const SdfGraph& g, int num_tiles) {
  std::vector<TileTraffic> t(static_cast<std::size_t>(num_tiles));
  for (const Actor& a : g.actors()) t[b.tile_of(a.id)].io_ports += a.io_ports;
  for (const Channel& c : g.channels()) {
    if (c.kind != ChannelKind::Data) continue;
    const TileId ts = b.tile_of(c.src), td = b.tile_of(c.dst);
    t[td].buffer += c.prod_rate + c.initial_tokens;
    if (ts != td) {
      ++t[ts].connections;
      ++t[td].connections;
      t[ts].inter_out += c.prod_rate;
      t[td].inter_in += c.cons_rate;
    }
  }
  return t;
}

TileLoad load_from(const TileTraffic& tt, std::size_t data_channels, const HardwareConfig& hw) {
  TileLoad l;
  l.crossbar_term =
      static_cast<double>(tt.io_ports) / static_cast<double>(hw.crossbar.max_inputs + hw.crossbar.max_outputs);
  l.buffer_term = static_cast<double>(tt.buffer) / static_cast<double>(hw.input_buffer_tokens);
  l.connection_term =
      data_channels == 0 ? 0.0 : static_cast<double>(tt.connections) / static_cast<double>(data_channels);
  l.bandwidth_term = static_cast<double>(tt.inter_in + tt.inter_out) / hw.link_bandwidth;
  l.total = hw.weights.a * l.crossbar_term + hw.weights.b * l.buffer_term + hw.weights.c * l.connection_term +
            hw.weights.d * l.bandwidth_term;
  return l;
}

std::vector<TileId> tile_list(const std::vector<TileId>& tiles, const HardwareConfig& hw) {
  if (!tiles.empty()) return tiles;
  std::vector<TileId> all(static_cast<std::size_t>(hw.num_tiles));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

}  // namespace

TileLoad tile_load(const Binding& b, TileId t, const SdfGraph& g, const HardwareConfig& hw) {
  if (t < 0 || t >= hw.num_tiles) throw ValidationError("unknown tile " + std::to_string(t));
  validate_binding(b, g, hw);
  return load_from(traffic(b, g, hw.num_tiles)[t], g.count(ChannelKind::Data), hw);
}

std::vector<std::int64_t> buffer_demand(const Binding& b, const SdfGraph& g) {
  const int n = std::max(b.num_tiles, b.actor_to_tile.empty()
                                          ? 0
                                          : *std::max_element(b.actor_to_tile.begin(), b.actor_to_tile.end()) + 1);
  std::vector<std::int64_t> out(static_cast<std::size_t>(n), 0);
  for (const Channel& c : g.channels()) {
    if (c.kind == ChannelKind::Data) out[b.tile_of(c.dst)] += c.prod_rate + c.initial_tokens;
  }
  return out;
}

CapacityCheck check_capacity(const Binding& b, const SdfGraph& g, const HardwareConfig& hw) {
  CapacityCheck r;
  const auto demand = buffer_demand(b, g);
  for (std::size_t t = 0; t < demand.size(); ++t) {
    if (demand[t] > hw.input_buffer_tokens) r.oversubscribed.push_back(static_cast<TileId>(t));
  }
  std::vector<std::int64_t> out(g.num_actors(), 0);
  for (const Channel& c : g.channels()) {
    if (c.kind == ChannelKind::Data) out[c.src] += c.prod_rate;
  }
  for (std::size_t a = 0; a < out.size(); ++a) {
    if (out[a] > hw.output_buffer_tokens) r.output_overflow.push_back(static_cast<ActorId>(a));
  }
  return r;
}

double load_stddev(const Binding& b, const SdfGraph& g, const HardwareConfig& hw, const std::vector<TileId>& tiles) {
  const auto list = tile_list(tiles, hw);
  const auto tt = traffic(b, g, hw.num_tiles);
  const std::size_t data = g.count(ChannelKind::Data);
  std::vector<double> totals;
  for (TileId t : list) totals.push_back(load_from(tt[t], data, hw).total);
  const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(totals.size());
  double ss = 0.0;
  for (double x : totals) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(totals.size()));
}

Binding balance_bind(const SdfGraph& g, const HardwareConfig& hw, const std::vector<TileId>& tiles) {
  hw.validate();
  const auto list = tile_list(tiles, hw);
  for (TileId t : list) {
    if (t < 0 || t >= hw.num_tiles) throw ValidationError("unknown tile " + std::to_string(t));
  }
  Binding b;
  b.num_tiles = hw.num_tiles;
  for (std::size_t a = 0; a < g.num_actors(); ++a) b.actor_to_tile.push_back(list[a % list.size()]);

  double cur = load_stddev(b, g, hw, list);
  bool feasible = check_capacity(b, g, hw).ok();
  const std::size_t n = g.num_actors();
  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t i = 0; i < n && !improved; ++i) {
      for (std::size_t j = i + 1; j < n && !improved; ++j) {
        if (b.actor_to_tile[i] == b.actor_to_tile[j]) continue;
        std::swap(b.actor_to_tile[i], b.actor_to_tile[j]);
        const double sd = load_stddev(b, g, hw, list);
        const bool ok = check_capacity(b, g, hw).ok();
        if (sd < cur - 1e-12 * std::max(1.0, cur) && (ok || !feasible)) {
          cur = sd;
          feasible = ok;
          improved = true;
        } else {
          std::swap(b.actor_to_tile[i], b.actor_to_tile[j]);
        }
      }
    }
  }

  const auto cap = check_capacity(b, g, hw);
  if (!cap.ok()) {
    std::string msg = "binding exceeds capacity:";
    for (TileId t : cap.oversubscribed) msg += " tile " + std::to_string(t) + " input buffer;";
    for (ActorId a : cap.output_overflow) msg += " actor " + std::to_string(a) + " output buffer;";
    msg.pop_back();
    throw InfeasibleError(msg);
  }
  return b;
}

std::vector<std::int64_t> allocate_buffers(const SdfGraph& g, const Binding& b, const HardwareConfig& hw) {
  validate_binding(b, g, hw);
  const auto demand = buffer_demand(b, g);
  std::vector<std::int64_t> incoming(demand.size(), 0);
  for (const Channel& c : g.channels()) {
    if (c.kind == ChannelKind::Data) ++incoming[b.tile_of(c.dst)];
  }
  for (std::size_t t = 0; t < demand.size(); ++t) {
    if (demand[t] > hw.input_buffer_tokens) {
      throw InfeasibleError("tile " + std::to_string(t) + " needs " + std::to_string(demand[t]) +
                            " buffer tokens, has " + std::to_string(hw.input_buffer_tokens));
    }
  }
  std::vector<std::int64_t> allot(g.num_channels(), 0);
  for (const Channel& c : g.channels()) {
    if (c.kind != ChannelKind::Data) continue;
    const TileId t = b.tile_of(c.dst);
    allot[c.id] = c.prod_rate + c.initial_tokens + (hw.input_buffer_tokens - demand[t]) / incoming[t];
  }
  return allot;
}

SdfGraph hardware_aware_transform(const SdfGraph& g, const Binding& b, const HardwareConfig& hw,
                                  const TileOrders* order, const std::vector<std::int64_t>* allotments) {
  validate_binding(b, g, hw);
  for (const Channel& c : g.channels()) {
    if (c.kind != ChannelKind::Data) throw ValidationError("graph already carries hardware edges");
  }
  std::vector<std::int64_t> allot;
  if (allotments) {
    if (allotments->size() != g.num_channels()) throw ValidationError("one buffer allotment per channel expected");
    allot = *allotments;
  } else {
    allot = allocate_buffers(g, b, hw);
  }
  for (const Channel& c : g.channels()) {
    if (allot[c.id] < c.prod_rate + c.initial_tokens) {
      throw ValidationError("channel " + std::to_string(c.id) + ": buffer of " + std::to_string(allot[c.id]) +
                            " tokens cannot hold one firing plus its initial tokens");
    }
  }

  SdfGraph h(g.name());
  std::vector<std::int64_t> inter(g.num_actors(), 0);
  for (const Channel& c : g.channels()) {
    if (b.tile_of(c.src) == b.tile_of(c.dst)) continue;
    inter[c.src] += c.prod_rate;
    inter[c.dst] += c.cons_rate;
  }
  for (Actor a : g.actors()) {
    a.comm_time = static_cast<double>(inter[a.id]) / hw.link_bandwidth;
    h.add_actor(a);
  }
  auto hop = [&](ActorId x, ActorId y) { return hw.hop_delay * hw.manhattan(b.tile_of(x), b.tile_of(y)); };
  for (Channel c : g.channels()) {
    c.hop_latency = hop(c.src, c.dst);
    h.add_channel(c);
  }
  for (const Channel& c : g.channels()) {
    h.add_channel({0, c.dst, c.src, c.cons_rate, c.prod_rate, allot[c.id] - c.initial_tokens,
                   ChannelKind::BufferBackedge, hop(c.dst, c.src)});
  }
  if (order) {
    if (static_cast<int>(order->size()) != hw.num_tiles) {
      throw ValidationError("order lists " + std::to_string(order->size()) + " tiles, hardware has " +
                            std::to_string(hw.num_tiles));
    }
    for (TileId t = 0; t < hw.num_tiles; ++t) {
      const auto& seq = (*order)[t];
      auto sorted = seq;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != b.actors_on(t)) throw ValidationError("order does not match the binding on tile " + std::to_string(t));
      if (seq.size() < 2) continue;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const bool closing = i + 1 == seq.size();
        h.add_channel({0, seq[i], seq[closing ? 0 : i + 1], 1, 1, closing ? 1 : 0, ChannelKind::ResourceOrder, 0.0});
      }
    }
  }
  return h;
}

SdfGraph strip_hardware_edges(const SdfGraph& g) {
  SdfGraph out(g.name());
  for (Actor a : g.actors()) {
    a.comm_time = 0.0;
    out.add_actor(a);
  }
  for (Channel c : g.channels()) {
    if (c.kind != ChannelKind::Data) continue;
    c.hop_latency = 0.0;
    out.add_channel(c);
  }
  return out;
}

double UtilizationReport::max_percent() const {
  double m = std::max({io_percent, crosspoint_percent, buffer_percent, connection_percent, input_bandwidth_percent,
                       output_bandwidth_percent});
  for (const auto& t : tiles) {
    m = std::max({m, t.io_percent, t.crosspoint_percent, t.buffer_percent, t.input_bandwidth_percent,
                  t.output_bandwidth_percent});
  }
  return m;
}

UtilizationReport utilization_report(const SdfGraph& g, const Binding& b, const HardwareConfig& hw, double rate,
                                     const ClusteredSnn* cs) {
  UtilizationReport r;
  if (g.num_actors() == 0) return r;
  validate_binding(b, g, hw);
  const auto tt = traffic(b, g, hw.num_tiles);
  const double ports = static_cast<double>(hw.crossbar.max_inputs + hw.crossbar.max_outputs);
  for (TileId t : b.occupied_tiles()) {
    TileUtilization u;
    u.tile = t;
    u.actors = b.actors_on(t);
    for (ActorId a : u.actors) {
      const auto& actor = g.actor(a);
      if (cs && actor.source_cluster) {
        const auto util = io_crosspoint_utilization(cs->clusters.at(*actor.source_cluster), hw.crossbar);
        u.io_percent += util.io_percent;
        u.crosspoint_percent += util.crosspoint_percent;
      } else {
        u.io_percent += 100.0 * static_cast<double>(actor.io_ports) / ports;
      }
    }
    u.io_percent /= static_cast<double>(u.actors.size());
    u.crosspoint_percent /= static_cast<double>(u.actors.size());
    u.buffer_percent = 100.0 * static_cast<double>(tt[t].buffer) / static_cast<double>(hw.input_buffer_tokens);
    u.input_bandwidth_percent = 100.0 * static_cast<double>(tt[t].inter_in) * rate / hw.link_bandwidth;
    u.output_bandwidth_percent = 100.0 * static_cast<double>(tt[t].inter_out) * rate / hw.link_bandwidth;
    r.tiles.push_back(u);
  }
  const double k = static_cast<double>(r.tiles.size());
  for (const auto& u : r.tiles) {
    r.io_percent += u.io_percent / k;
    r.crosspoint_percent += u.crosspoint_percent / k;
    r.buffer_percent += u.buffer_percent / k;
    r.input_bandwidth_percent += u.input_bandwidth_percent / k;
    r.output_bandwidth_percent += u.output_bandwidth_percent / k;
  }
  std::size_t data = 0, cross = 0;
  for (const Channel& c : g.channels()) {
    if (c.kind != ChannelKind::Data) continue;
    ++data;
    if (b.tile_of(c.src) != b.tile_of(c.dst)) ++cross;
  }
  r.connection_percent = data == 0 ? 0.0 : 100.0 * static_cast<double>(cross) / static_cast<double>(data);
  return r;
}

nlohmann::json to_json(const UtilizationReport& r) {
  nlohmann::json tiles = nlohmann::json::array();
  for (const auto& u : r.tiles) {
    tiles.push_back({{"tile", u.tile},
                     {"actors", u.actors},
                     {"io_percent", u.io_percent},
                     {"crosspoint_percent", u.crosspoint_percent},
                     {"buffer_percent", u.buffer_percent},
                     {"input_bandwidth_percent", u.input_bandwidth_percent},
                     {"output_bandwidth_percent", u.output_bandwidth_percent}});
  }
  return {{"io_percent", r.io_percent},
          {"crosspoint_percent", r.crosspoint_percent},
          {"buffer_percent", r.buffer_percent},
          {"connection_percent", r.connection_percent},
          {"input_bandwidth_percent", r.input_bandwidth_percent},
          {"output_bandwidth_percent", r.output_bandwidth_percent},
          {"tiles", tiles}};
}

}  // namespace snnc
