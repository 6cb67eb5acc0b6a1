#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snnc/partitioner.hpp"

namespace snnc {

using ActorId = int;
using ChannelId = int;

struct Actor {
  ActorId id = 0;
  double exec_time = 1.0;     // crossbar execution time
  double comm_time = 0.0;     // network-interface time added by the hardware-aware transform
  std::int64_t state_space = 0;
  std::optional<ClusterId> source_cluster;  // nullopt for synthetic actors
  std::int64_t io_ports = 0;  // crossbar input + output ports used

  /// Duration of one firing.
  double firing_time() const noexcept { return exec_time + comm_time; }

  bool operator==(const Actor&) const = default;
};

enum class ChannelKind { Data, BufferBackedge, ResourceOrder };

std::string to_string(ChannelKind k);
ChannelKind channel_kind_from_string(const std::string& s);

struct Channel {
  ChannelId id = 0;
  ActorId src = 0;
  ActorId dst = 0;
  std::int64_t prod_rate = 1;
  std::int64_t cons_rate = 1;
  std::int64_t initial_tokens = 0;
  ChannelKind kind = ChannelKind::Data;
  double hop_latency = 0.0;

  bool operator==(const Channel&) const = default;
};

/// Actor and channel ids equal their positions; add_* assigns them.
class SdfGraph {
 public:
  explicit SdfGraph(std::string name = "sdfg") : name_(std::move(name)) {}

  ActorId add_actor(Actor a);
  ChannelId add_channel(Channel c);

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  const std::vector<Actor>& actors() const noexcept { return actors_; }
  const std::vector<Channel>& channels() const noexcept { return channels_; }
  Actor& actor(ActorId id) { return actors_.at(static_cast<std::size_t>(id)); }
  const Actor& actor(ActorId id) const { return actors_.at(static_cast<std::size_t>(id)); }
  Channel& channel(ChannelId id) { return channels_.at(static_cast<std::size_t>(id)); }
  const Channel& channel(ChannelId id) const { return channels_.at(static_cast<std::size_t>(id)); }

  std::size_t num_actors() const noexcept { return actors_.size(); }
  std::size_t num_channels() const noexcept { return channels_.size(); }
  std::size_t count(ChannelKind kind) const;

  bool operator==(const SdfGraph&) const = default;

 private:
  std::string name_;
  std::vector<Actor> actors_;
  std::vector<Channel> channels_;
};

struct ExecTimeModel {
  double crossbar_read_latency = 1.0;
  double iteration_period_hint = 1.0;
};

/// Tokens per iteration on a channel carrying `spikes` over the stimulus
/// window: ceil(spikes / duration * hint), at least 1.
std::int64_t spikes_per_iteration(std::int64_t spikes, double duration, double hint = 1.0);

/// One actor per cluster, one data channel per non-zero cluster pair.
/// Cycles left by partitioning get one iteration's worth of tokens on one
/// arc each, chosen as the lexicographically smallest (src, dst) arc with
/// src > dst on the first token-free cycle found, until none remains.
SdfGraph from_clustered_snn(const ClusteredSnn& cs, const ExecTimeModel& model = {});

/// Smallest positive integer solution of the balance equations over data
/// channels. Throws ValidationError naming a violating channel.
std::vector<std::int64_t> repetition_vector(const SdfGraph& g);

/// Number of firings a channel's initial tokens allow ahead of its producer
/// when prod_rate == cons_rate: floor(initial_tokens / cons_rate).
std::int64_t channel_delay(const Channel& c);

struct DeadlockCheck {
  bool deadlock_free = true;
  std::vector<ChannelId> witness;  // channels of a blocking cycle
};

/// Equal-rate graphs are checked structurally (every cycle needs a channel
/// holding at least one firing's worth of tokens); multirate graphs by an
/// untimed execution of one iteration.
DeadlockCheck check_deadlock(const SdfGraph& g);

/// Deterministic DOT: data channels solid, buffer back-edges dashed,
/// resource-order channels dotted.
std::string export_dot(const SdfGraph& g);

nlohmann::json to_json(const SdfGraph& g);
SdfGraph sdfg_from_json(const nlohmann::json& j);

}  // namespace snnc
