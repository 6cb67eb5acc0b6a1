#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "snnc/hardware.hpp"
#include "snnc/sdfg.hpp"

namespace snnc {

struct StaticOrderSchedule {
  TileOrders per_tile;  // per_tile[t] = firing order of tile t in one iteration

  bool operator==(const StaticOrderSchedule&) const = default;
};

struct SingleTileSchedule {
  std::vector<ActorId> order;

  bool operator==(const SingleTileSchedule&) const = default;
};

nlohmann::json to_json(const StaticOrderSchedule& s);
StaticOrderSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SingleTileSchedule& s);
SingleTileSchedule single_tile_from_json(const nlohmann::json& j);

/// Binding implied by a schedule: each actor sits on the tile listing it.
Binding binding_of(const StaticOrderSchedule& s, std::size_t num_actors);

struct Firing {
  ActorId actor = 0;
  TileId tile = 0;
  double start = 0.0;
  double end = 0.0;
  std::int64_t iteration = 0;
};

/// A batch of tokens becoming available on a channel (source + time, as an
/// address-event packet would carry).
struct TokenEvent {
  ChannelId channel = 0;
  double time = 0.0;
  std::int64_t count = 0;
  ActorId source = 0;
};

struct SteadyState {
  bool found = false;
  std::int64_t transient_iterations = 0;  // iteration at which the periodic regime starts
  std::int64_t period_iterations = 0;
  double period_time = 0.0;  // time per period_iterations
  double period() const { return period_time / static_cast<double>(period_iterations); }
};

struct ExecutionTrace {
  std::vector<Firing> firings;  // in start-time order, ties by tile id
  std::vector<TokenEvent> tokens;
  std::int64_t iterations = 0;
  SteadyState steady_state;

  /// Time at which every actor has finished its k-th firing.
  std::vector<double> iteration_completion_times() const;
};

struct SimOptions {
  std::int64_t horizon = 200;
  /// Ignore tile sharing: every actor runs on its own virtual tile.
  bool unconstrained_tiles = false;
  bool record_tokens = false;
  /// End the run as soon as the state repeats.
  bool stop_at_steady_state = false;
};

/// Self-timed execution. An actor starts when it is next in its tile's
/// cyclic order, the tile is idle, and every input channel (back-edges
/// included) holds cons_rate tokens. Tokens are taken at the start and
/// delivered hop_latency after the end. Each actor fires `horizon` times.
/// Throws DeadlockError on a stall.
ExecutionTrace self_timed_simulate(const SdfGraph& g, const StaticOrderSchedule& sched, const SimOptions& opts = {});

/// Simulates until the state repeats (at most `max_iterations`).
SteadyState steady_state_analysis(const SdfGraph& g, const StaticOrderSchedule& sched, bool unconstrained_tiles = false,
                                  std::int64_t max_iterations = 1000);

/// Iterations per time unit after discarding max(warmup, transient)
/// iterations. Throws ValidationError when too few iterations remain.
double measured_throughput(const ExecutionTrace& tr, std::int64_t warmup = 10);

/// Trivial schedule: actors on each tile in id order.
StaticOrderSchedule id_order_schedule(const Binding& b, std::size_t num_actors);

struct DesignSearchOptions {
  /// Enumerate every per-tile permutation when there are at most this many.
  std::uint64_t exhaustive_limit = 5040;
  /// Budget of analyzed candidates for the local search otherwise.
  std::int64_t max_evaluations = 2000;
  std::vector<StaticOrderSchedule> extra_seeds;
};

struct DesignSearchStats {
  std::int64_t simulations = 0;
  std::int64_t evaluations = 0;
  bool exhaustive = false;
  double best_mcm = 0.0;
};

/// Seeds with the order in which actors fire during the first steady-state
/// iteration of the buffer-constrained graph on unconstrained tiles (ties by
/// start time, then actor id), then searches per-tile orders for a lower
/// mcm of the hardware-aware graph.
StaticOrderSchedule design_time_schedule(const SdfGraph& g, const Binding& b, const HardwareConfig& hw,
                                         const DesignSearchOptions& opts = {}, DesignSearchStats* stats = nullptr);

/// design_time_schedule on a single tile, flattened. The tile's input
/// buffer is widened to the application's demand if needed, since only the
/// order is kept.
SingleTileSchedule single_tile_schedule(const SdfGraph& g, const HardwareConfig& hw,
                                        const DesignSearchOptions& opts = {}, DesignSearchStats* stats = nullptr);

/// Per tile, the subsequence of `single` bound to that tile.
StaticOrderSchedule derive_runtime_schedule(const SingleTileSchedule& single, const Binding& b);

/// Baseline: a seeded random topological order of the token-free data
/// channels, projected per tile. Deterministic per seed.
StaticOrderSchedule random_order_schedule(const SdfGraph& g, const Binding& b, std::uint64_t seed);

/// Mcm of the hardware-aware graph for a schedule; +inf if it deadlocks.
double schedule_mcm(const SdfGraph& g, const Binding& b, const HardwareConfig& hw, const StaticOrderSchedule& s);

/// One JSON object per line: {actor, tile, start, end, iter}.
void write_trace_jsonl(const ExecutionTrace& tr, std::ostream& out);

}  // namespace snnc
