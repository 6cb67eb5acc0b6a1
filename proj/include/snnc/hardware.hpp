#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snnc/partitioner.hpp"
#include "snnc/sdfg.hpp"

namespace snnc {

using TileId = int;

struct LoadWeights {
  double a = 1.0;  // crossbar
  double b = 1.0;  // buffer
  double c = 1.0;  // connections
  double d = 1.0;  // bandwidth
};

struct HardwareConfig {
  int num_tiles = 4;
  int rows = 2;
  int cols = 2;
  CrossbarConstraints crossbar;
  std::int64_t input_buffer_tokens = 4096;
  std::int64_t output_buffer_tokens = 4096;
  double link_bandwidth = 256.0;  // tokens per time unit
  double hop_delay = 0.05;
  LoadWeights weights;
  double exec_time = 1.0;  // crossbar read latency of one actor firing

  void validate() const;
  int manhattan(TileId a, TileId b) const;
};

/// 2x2 mesh of 128x128 crossbars with 65,536 crosspoints each.
HardwareConfig dynapse_preset();

/// Same platform with n tiles on the squarest rows x cols mesh.
HardwareConfig with_tiles(const HardwareConfig& hw, int n);

nlohmann::json to_json(const HardwareConfig& hw);
HardwareConfig hardware_from_json(const nlohmann::json& j);
HardwareConfig load_hardware_file(const std::string& path);

struct Binding {
  int num_tiles = 0;
  std::vector<TileId> actor_to_tile;

  TileId tile_of(ActorId a) const { return actor_to_tile.at(static_cast<std::size_t>(a)); }
  std::vector<ActorId> actors_on(TileId t) const;
  std::vector<TileId> occupied_tiles() const;

  bool operator==(const Binding&) const = default;
};

/// Checks totality against g and hw; throws ValidationError.
void validate_binding(const Binding& b, const SdfGraph& g, const HardwareConfig& hw);

nlohmann::json to_json(const Binding& b);
Binding binding_from_json(const nlohmann::json& j);

struct TileLoad {
  double crossbar_term = 0.0;    // sum of io ports / (max_inputs + max_outputs)
  double buffer_term = 0.0;      // incoming data tokens / input_buffer_tokens
  double connection_term = 0.0;  // inter-tile data channels at t / all data channels
  double bandwidth_term = 0.0;   // inter-tile tokens in + out / link_bandwidth
  double total = 0.0;
};

TileLoad tile_load(const Binding& b, TileId t, const SdfGraph& g, const HardwareConfig& hw);

/// Buffer tokens each tile must hold per iteration: rate + initial tokens
/// of every incoming data channel.
std::vector<std::int64_t> buffer_demand(const Binding& b, const SdfGraph& g);

struct CapacityCheck {
  std::vector<TileId> oversubscribed;
  std::vector<ActorId> output_overflow;
  bool ok() const { return oversubscribed.empty() && output_overflow.empty(); }
};

CapacityCheck check_capacity(const Binding& b, const SdfGraph& g, const HardwareConfig& hw);

/// Round-robin over `tiles` (all tiles when empty), then first-improvement
/// pairwise swaps in ascending (i, j) order while the population standard
/// deviation of tile totals strictly decreases. A swap that breaks buffer
/// capacity is not taken unless the current binding is already over.
/// Throws InfeasibleError when the final binding is over capacity.
Binding balance_bind(const SdfGraph& g, const HardwareConfig& hw, const std::vector<TileId>& tiles = {});

double load_stddev(const Binding& b, const SdfGraph& g, const HardwareConfig& hw,
                   const std::vector<TileId>& tiles = {});

/// Buffer tokens per data channel. Each channel first gets rate + initial
/// tokens; the rest of its tile's input buffer is split evenly (floor) over
/// the tile's incoming channels. Throws InfeasibleError when the minimum
/// does not fit.
std::vector<std::int64_t> allocate_buffers(const SdfGraph& g, const Binding& b, const HardwareConfig& hw);

using TileOrders = std::vector<std::vector<ActorId>>;

/// Adds, in this order: one buffer back-edge per data channel (tokens =
/// allotment - initial tokens), and one resource-order ring per tile with
/// two or more actors when `order` is given. Sets hop latency on inter-tile
/// channels and back-edges, and comm_time = inter-tile tokens / bandwidth.
SdfGraph hardware_aware_transform(const SdfGraph& g, const Binding& b, const HardwareConfig& hw,
                                  const TileOrders* order = nullptr,
                                  const std::vector<std::int64_t>* allotments = nullptr);

/// Drops back-edges and rings, clears hop latency and comm time.
SdfGraph strip_hardware_edges(const SdfGraph& g);

struct TileUtilization {
  TileId tile = 0;
  std::vector<ActorId> actors;
  double io_percent = 0.0;
  double crosspoint_percent = 0.0;
  double buffer_percent = 0.0;
  double input_bandwidth_percent = 0.0;
  double output_bandwidth_percent = 0.0;
};

struct UtilizationReport {
  std::vector<TileUtilization> tiles;  // occupied tiles only
  double io_percent = 0.0;
  double crosspoint_percent = 0.0;
  double buffer_percent = 0.0;
  double connection_percent = 0.0;
  double input_bandwidth_percent = 0.0;
  double output_bandwidth_percent = 0.0;

  double max_percent() const;
};

/// `g` is the application graph, `rate` its iterations per time unit.
/// Crossbar figures come from the clusters when `cs` is given, otherwise
/// from actor io_ports.
UtilizationReport utilization_report(const SdfGraph& g, const Binding& b, const HardwareConfig& hw,
                                     double rate, const ClusteredSnn* cs = nullptr);

nlohmann::json to_json(const UtilizationReport& r);

}  // namespace snnc
