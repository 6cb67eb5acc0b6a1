#include "snnc/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <tuple>

#include "snnc/error.hpp"
#include "snnc/maxplus.hpp"

namespace snnc {

nlohmann::json to_json(const StaticOrderSchedule& s) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t t = 0; t < s.per_tile.size(); ++t) j[std::to_string(t)] = s.per_tile[t];
  return j;
}

StaticOrderSchedule schedule_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("schedule: expected an object keyed by tile id");
  std::map<int, std::vector<ActorId>> tiles;
  try {
    for (const auto& [key, value] : j.items()) {
      std::size_t used = 0;
      int t = -1;
      try {
        t = std::stoi(key, &used);
      } catch (const std::exception&) {
      }
      if (t < 0 || used != key.size()) throw ParseError("schedule: bad tile key '" + key + "'");
      tiles[t] = value.get<std::vector<ActorId>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schedule: ") + e.what());
  }
  StaticOrderSchedule s;
  if (!tiles.empty()) s.per_tile.resize(static_cast<std::size_t>(tiles.rbegin()->first) + 1);
  for (auto& [t, order] : tiles) s.per_tile[t] = std::move(order);
  return s;
}

nlohmann::json to_json(const SingleTileSchedule& s) { return {{"order", s.order}}; }

SingleTileSchedule single_tile_from_json(const nlohmann::json& j) {
  try {
    if (j.is_array()) return {j.get<std::vector<ActorId>>()};
    return {j.at("order").get<std::vector<ActorId>>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("single-tile schedule: ") + e.what());
  }
}

Binding binding_of(const StaticOrderSchedule& s, std::size_t num_actors) {
  Binding b;
  b.num_tiles = static_cast<int>(s.per_tile.size());
  b.actor_to_tile.assign(num_actors, -1);
  for (std::size_t t = 0; t < s.per_tile.size(); ++t) {
    for (ActorId a : s.per_tile[t]) {
      if (a < 0 || static_cast<std::size_t>(a) >= num_actors) {
        throw ValidationError("schedule names unknown actor " + std::to_string(a));
      }
      if (b.actor_to_tile[a] >= 0) throw ValidationError("actor " + std::to_string(a) + " scheduled twice");
      b.actor_to_tile[a] = static_cast<TileId>(t);
    }
  }
  for (std::size_t a = 0; a < num_actors; ++a) {
    if (b.actor_to_tile[a] < 0) throw ValidationError("actor " + std::to_string(a) + " missing from the schedule");
  }
  return b;
}

std::vector<double> ExecutionTrace::iteration_completion_times() const {
  std::vector<double> c(static_cast<std::size_t>(iterations), 0.0);
  for (const Firing& f : firings) {
    if (f.iteration < iterations) c[f.iteration] = std::max(c[f.iteration], f.end);
  }
  return c;
}

namespace {

constexpr double kGrid = 1e-9;

std::int64_t quantize(double x) { return std::llround(x / kGrid); }

struct Arrival {
  double time;
  std::int64_t seq;
  ChannelId channel;
  std::int64_t count;
  ActorId source;
  bool operator>(const Arrival& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
};

// Periodic tail of the iteration completion times, for executions whose
// state never repeats (e.g. a source racing ahead of a slower consumer).
SteadyState periodic_tail(const std::vector<double>& c) {
  SteadyState s;
  const auto k = static_cast<std::int64_t>(c.size());
  if (k < 8) return s;
  const std::int64_t lo = k / 2;
  for (std::int64_t p = 1; p <= k / 4; ++p) {
    const double d = c[k - 1] - c[k - 1 - p];
    const double tol = 1e-9 * std::max(1.0, std::abs(d)) * static_cast<double>(k);
    auto holds = [&](std::int64_t i) { return std::abs(c[i + p] - c[i] - d) <= tol; };
    bool ok = true;
    for (std::int64_t i = lo; i + p < k && ok; ++i) ok = holds(i);
    if (!ok) continue;
    std::int64_t start = lo;
    while (start > 0 && holds(start - 1)) --start;
    s.found = true;
    s.transient_iterations = start;
    s.period_iterations = p;
    s.period_time = d;
    return s;
  }
  return s;
}

}  // namespace

ExecutionTrace self_timed_simulate(const SdfGraph& g, const StaticOrderSchedule& sched, const SimOptions& opts) {
  const std::size_t n = g.num_actors();
  if (opts.horizon <= 0) throw ValidationError("horizon must be positive");
  TileOrders orders;
  std::vector<TileId> report_tile(n, 0);
  if (opts.unconstrained_tiles) {
    for (std::size_t a = 0; a < n; ++a) {
      orders.push_back({static_cast<ActorId>(a)});
      report_tile[a] = static_cast<TileId>(a);
    }
  } else {
    const Binding b = binding_of(sched, n);
    orders = sched.per_tile;
    report_tile = b.actor_to_tile;
  }
  const std::size_t tiles = orders.size();

  std::vector<std::vector<ChannelId>> in(n), out(n);
  for (const Channel& c : g.channels()) {
    in[c.dst].push_back(c.id);
    out[c.src].push_back(c.id);
  }
  std::vector<std::int64_t> tokens;
  for (const Channel& c : g.channels()) tokens.push_back(c.initial_tokens);

  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> arrivals;
  std::int64_t seq = 0;
  std::vector<std::size_t> pos(tiles, 0);
  std::vector<char> busy(tiles, 0);
  std::vector<ActorId> running(tiles, -1);
  std::vector<double> busy_until(tiles, 0.0);
  std::vector<std::int64_t> started(n, 0), finished(n, 0);

  ExecutionTrace tr;
  std::map<std::vector<std::int64_t>, std::pair<double, std::int64_t>> seen;
  bool detecting = n > 0;
  const ActorId ref = 0;

  auto deliver = [&](ChannelId c, std::int64_t count, double t, ActorId src) {
    tokens[c] += count;
    if (opts.record_tokens) tr.tokens.push_back({c, t, count, src});
  };
  auto all_done = [&]() {
    return std::all_of(finished.begin(), finished.end(), [&](std::int64_t f) { return f >= opts.horizon; });
  };

  double now = 0.0;
  bool stop = false;
  while (!stop) {
    for (std::size_t t = 0; t < tiles; ++t) {
      if (busy[t] || orders[t].empty()) continue;
      const ActorId a = orders[t][pos[t]];
      if (started[a] >= opts.horizon) continue;
      const bool ready = std::all_of(in[a].begin(), in[a].end(),
                                     [&](ChannelId c) { return tokens[c] >= g.channel(c).cons_rate; });
      if (!ready) continue;
      for (ChannelId c : in[a]) tokens[c] -= g.channel(c).cons_rate;
      busy[t] = 1;
      running[t] = a;
      busy_until[t] = now + g.actor(a).firing_time();
      pos[t] = (pos[t] + 1) % orders[t].size();
      tr.firings.push_back({a, report_tile[a], now, busy_until[t], started[a]});
      ++started[a];
    }
    if (all_done()) break;

    double next = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < tiles; ++t) {
      if (busy[t]) next = std::min(next, busy_until[t]);
    }
    if (!arrivals.empty()) next = std::min(next, arrivals.top().time);
    if (!std::isfinite(next)) {
      std::string msg = "simulation stalled at time " + std::to_string(now) + "; waiting:";
      for (std::size_t t = 0; t < tiles; ++t) {
        if (!orders[t].empty() && started[orders[t][pos[t]]] < opts.horizon) {
          msg += " actor_" + std::to_string(orders[t][pos[t]]);
        }
      }
      throw DeadlockError(msg);
    }
    now = next;

    bool ref_completed = false;
    for (std::size_t t = 0; t < tiles; ++t) {
      if (!busy[t] || busy_until[t] != now) continue;
      const ActorId a = running[t];
      busy[t] = 0;
      ++finished[a];
      if (a == ref) ref_completed = true;
      for (ChannelId c : out[a]) {
        const Channel& ch = g.channel(c);
        if (ch.hop_latency > 0.0) {
          arrivals.push({now + ch.hop_latency, seq++, c, ch.prod_rate, a});
        } else {
          deliver(c, ch.prod_rate, now, a);
        }
      }
    }
    while (!arrivals.empty() && arrivals.top().time <= now) {
      const Arrival ar = arrivals.top();
      arrivals.pop();
      deliver(ar.channel, ar.count, ar.time, ar.source);
    }

    if (detecting && ref_completed) {
      if (*std::max_element(started.begin(), started.end()) >= opts.horizon) {
        detecting = false;
        continue;
      }
      std::vector<std::int64_t> key(tokens.begin(), tokens.end());
      for (std::size_t t = 0; t < tiles; ++t) {
        key.push_back(static_cast<std::int64_t>(pos[t]));
        key.push_back(busy[t] ? quantize(busy_until[t] - now) : -1);
      }
      for (std::size_t a = 0; a < n; ++a) key.push_back(started[a] - started[ref]);
      std::vector<std::tuple<std::int64_t, ChannelId, std::int64_t>> flight;
      auto copy = arrivals;
      while (!copy.empty()) {
        flight.emplace_back(quantize(copy.top().time - now), copy.top().channel, copy.top().count);
        copy.pop();
      }
      std::sort(flight.begin(), flight.end());
      for (const auto& [dt, c, count] : flight) {
        key.push_back(dt);
        key.push_back(c);
        key.push_back(count);
      }
      auto [it, inserted] = seen.try_emplace(std::move(key), now, finished[ref]);
      if (!inserted) {
        SteadyState& s = tr.steady_state;
        s.found = true;
        s.period_iterations = finished[ref] - it->second.second;
        s.period_time = now - it->second.first;
        // Firings started before the first repeated state are not
        // guaranteed periodic; the regime starts after the furthest one.
        std::int64_t furthest = it->second.second;
        for (std::size_t a = 0; a < n; ++a) {
          furthest = std::max(furthest, it->second.second + (started[a] - started[ref]));
        }
        s.transient_iterations = furthest;
        detecting = false;
        if (opts.stop_at_steady_state) stop = true;
      }
    }
  }
  tr.iterations = n == 0 ? 0 : *std::min_element(finished.begin(), finished.end());
  if (!tr.steady_state.found) tr.steady_state = periodic_tail(tr.iteration_completion_times());
  return tr;
}

SteadyState steady_state_analysis(const SdfGraph& g, const StaticOrderSchedule& sched, bool unconstrained_tiles,
                                  std::int64_t max_iterations) {
  SimOptions o;
  o.horizon = max_iterations;
  o.unconstrained_tiles = unconstrained_tiles;
  o.stop_at_steady_state = true;
  return self_timed_simulate(g, sched, o).steady_state;
}

double measured_throughput(const ExecutionTrace& tr, std::int64_t warmup) {
  const auto c = tr.iteration_completion_times();
  const auto k = static_cast<std::int64_t>(c.size());
  const SteadyState& s = tr.steady_state;
  if (k - 1 <= warmup) {
    throw ValidationError("trace has " + std::to_string(k) + " iterations, warmup needs more than " +
                          std::to_string(warmup + 1));
  }
  const std::int64_t w = std::max(warmup, s.found ? s.transient_iterations : 0);
  if (s.found) {
    const std::int64_t p = s.period_iterations;
    const std::int64_t m = w < k ? (k - 1 - w) / p : 0;
    if (m >= 1) return static_cast<double>(m * p) / (c[w + m * p] - c[w]);
    return 1.0 / s.period();
  }
  if (k - 1 - w < 1) {
    throw ValidationError("trace has " + std::to_string(k) + " iterations, warmup needs more than " +
                          std::to_string(w + 1));
  }
  return static_cast<double>(k - 1 - w) / (c[k - 1] - c[w]);
}

StaticOrderSchedule id_order_schedule(const Binding& b, std::size_t num_actors) {
  StaticOrderSchedule s;
  s.per_tile.resize(static_cast<std::size_t>(b.num_tiles));
  for (std::size_t a = 0; a < num_actors; ++a) s.per_tile.at(b.tile_of(static_cast<ActorId>(a))).push_back(static_cast<ActorId>(a));
  return s;
}

namespace {

double mcm_or_inf(const SdfGraph& g, const Binding& b, const HardwareConfig& hw, const StaticOrderSchedule& s,
                  const std::vector<std::int64_t>& allot) {
  const SdfGraph h = hardware_aware_transform(g, b, hw, &s.per_tile, &allot);
  try {
    return max_cycle_mean(build_ratio_digraph(h)).mcm;
  } catch (const DeadlockError&) {
    return std::numeric_limits<double>::infinity();
  }
}

bool better(double cand, double best) {
  if (!std::isfinite(best)) return std::isfinite(cand);
  return cand < best - 1e-12 * std::max(1.0, best);
}

}  // namespace

double schedule_mcm(const SdfGraph& g, const Binding& b, const HardwareConfig& hw, const StaticOrderSchedule& s) {
  return mcm_or_inf(g, b, hw, s, allocate_buffers(g, b, hw));
}

StaticOrderSchedule design_time_schedule(const SdfGraph& g, const Binding& b, const HardwareConfig& hw,
                                         const DesignSearchOptions& opts, DesignSearchStats* stats) {
  DesignSearchStats local;
  DesignSearchStats& st = stats ? *stats : local;
  st = {};
  validate_binding(b, g, hw);
  const auto allot = allocate_buffers(g, b, hw);
  const std::size_t n = g.num_actors();

  // Ready order of the buffer-constrained graph without tile sharing.
  const SdfGraph buffered = hardware_aware_transform(g, b, hw, nullptr, &allot);
  const StaticOrderSchedule none;
  const SteadyState ss = steady_state_analysis(buffered, none, true);
  ++st.simulations;
  const std::int64_t k = ss.found ? ss.transient_iterations : 0;
  SimOptions o;
  o.horizon = k + 1;
  o.unconstrained_tiles = true;
  const ExecutionTrace tr = self_timed_simulate(buffered, none, o);
  ++st.simulations;
  std::vector<double> start(n, 0.0);
  for (const Firing& f : tr.firings) {
    if (f.iteration == k) start[f.actor] = f.start;
  }
  StaticOrderSchedule asap;
  asap.per_tile.resize(static_cast<std::size_t>(hw.num_tiles));
  for (TileId t = 0; t < hw.num_tiles; ++t) {
    auto actors = b.actors_on(t);
    std::stable_sort(actors.begin(), actors.end(), [&](ActorId x, ActorId y) { return start[x] < start[y]; });
    asap.per_tile[t] = std::move(actors);
  }

  StaticOrderSchedule best = asap;
  double best_mcm = mcm_or_inf(g, b, hw, asap, allot);
  ++st.evaluations;
  std::vector<StaticOrderSchedule> seeds = opts.extra_seeds;
  seeds.push_back(id_order_schedule(b, n));
  for (const auto& s : seeds) {
    const double m = mcm_or_inf(g, b, hw, s, allot);
    ++st.evaluations;
    if (better(m, best_mcm)) {
      best = s;
      best_mcm = m;
    }
  }

  std::uint64_t combos = 1;
  for (const auto& tile : best.per_tile) {
    for (std::uint64_t f = 2; f <= tile.size() && combos <= opts.exhaustive_limit; ++f) combos *= f;
  }
  if (combos <= opts.exhaustive_limit) {
    st.exhaustive = true;
    StaticOrderSchedule cur;
    for (TileId t = 0; t < hw.num_tiles; ++t) cur.per_tile.push_back(b.actors_on(t));
    for (;;) {
      const double m = mcm_or_inf(g, b, hw, cur, allot);
      ++st.evaluations;
      if (better(m, best_mcm)) {
        best = cur;
        best_mcm = m;
      }
      std::size_t t = cur.per_tile.size();
      while (t > 0 && !std::next_permutation(cur.per_tile[t - 1].begin(), cur.per_tile[t - 1].end())) --t;
      if (t == 0) break;
    }
  } else {
    StaticOrderSchedule cur = best;
    for (bool improved = true; improved && st.evaluations < opts.max_evaluations;) {
      improved = false;
      for (auto& tile : cur.per_tile) {
        for (std::size_t i = 0; i < tile.size(); ++i) {
          for (std::size_t j = i + 1; j < tile.size() && st.evaluations < opts.max_evaluations; ++j) {
            std::swap(tile[i], tile[j]);
            const double m = mcm_or_inf(g, b, hw, cur, allot);
            ++st.evaluations;
            if (better(m, best_mcm)) {
              best = cur;
              best_mcm = m;
              improved = true;
            } else {
              std::swap(tile[i], tile[j]);
            }
          }
        }
      }
    }
  }
  if (!std::isfinite(best_mcm)) throw DeadlockError("no deadlock-free static order found");
  st.best_mcm = best_mcm;
  return best;
}

SingleTileSchedule single_tile_schedule(const SdfGraph& g, const HardwareConfig& hw, const DesignSearchOptions& opts,
                                        DesignSearchStats* stats) {
  HardwareConfig one = with_tiles(hw, 1);
  Binding b{1, std::vector<TileId>(g.num_actors(), 0)};
  one.input_buffer_tokens = std::max(one.input_buffer_tokens, buffer_demand(b, g).empty() ? 0 : buffer_demand(b, g)[0]);
  return {design_time_schedule(g, b, one, opts, stats).per_tile.at(0)};
}

StaticOrderSchedule derive_runtime_schedule(const SingleTileSchedule& single, const Binding& b) {
  std::vector<char> seen(b.actor_to_tile.size(), 0);
  for (ActorId a : single.order) {
    if (a < 0 || static_cast<std::size_t>(a) >= seen.size() || seen[a]) {
      throw ValidationError("single-tile order is not a permutation of the bound actors");
    }
    seen[a] = 1;
  }
  if (single.order.size() != b.actor_to_tile.size()) {
    throw ValidationError("single-tile order covers " + std::to_string(single.order.size()) + " actors, binding has " +
                          std::to_string(b.actor_to_tile.size()));
  }
  StaticOrderSchedule s;
  s.per_tile.resize(static_cast<std::size_t>(b.num_tiles));
  for (ActorId a : single.order) s.per_tile.at(b.tile_of(a)).push_back(a);
  return s;
}

StaticOrderSchedule random_order_schedule(const SdfGraph& g, const Binding& b, std::uint64_t seed) {
  const std::size_t n = g.num_actors();
  std::vector<std::vector<ActorId>> succ(n);
  std::vector<int> indegree(n, 0);
  for (const Channel& c : g.channels()) {
    if (c.kind != ChannelKind::Data || c.src == c.dst || channel_delay(c) > 0) continue;
    succ[c.src].push_back(c.dst);
    ++indegree[c.dst];
  }
  std::mt19937_64 rng(seed);
  std::vector<ActorId> ready, order;
  for (std::size_t a = 0; a < n; ++a) {
    if (indegree[a] == 0) ready.push_back(static_cast<ActorId>(a));
  }
  while (!ready.empty()) {
    const std::size_t pick = static_cast<std::size_t>(rng() % ready.size());
    const ActorId v = ready[pick];
    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));
    order.push_back(v);
    for (ActorId w : succ[v]) {
      if (--indegree[w] == 0) ready.insert(std::lower_bound(ready.begin(), ready.end(), w), w);
    }
  }
  if (order.size() != n) throw DeadlockError("data channels form a cycle without initial tokens");
  return derive_runtime_schedule({order}, b);
}

void write_trace_jsonl(const ExecutionTrace& tr, std::ostream& out) {
  for (const Firing& f : tr.firings) {
    out << nlohmann::json{{"actor", f.actor}, {"tile", f.tile}, {"start", f.start}, {"end", f.end}, {"iter", f.iteration}}
               .dump()
        << '\n';
  }
}

}  // namespace snnc
