#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snnc/snn_model.hpp"

namespace snnc {

struct CrossbarConstraints {
  std::int64_t max_inputs = 128;
  std::int64_t max_outputs = 128;
  std::int64_t max_crosspoints = 65536;
  std::int64_t max_buffer_tokens = 2048;

  /// Throws ValidationError when a field is non-positive or there are
  /// fewer crosspoints than input rows.
  void validate() const;
};

using ClusterId = int;
using ClusterPair = std::pair<ClusterId, ClusterId>;

/// Neurons placed on one crossbar together with their fanin synapses.
///
/// Port accounting: each member neuron takes one output port, each distinct
/// presynaptic source of a member takes one input row (shared sources are
/// counted once), and each fanin synapse takes one crosspoint.
struct Cluster {
  ClusterId id = 0;
  std::vector<NeuronId> neurons;              // ascending
  std::vector<NeuronId> input_sources;        // ascending, distinct
  std::vector<std::size_t> synapses;          // fanin synapses of members
  std::vector<std::size_t> internal_synapses; // both endpoints inside
  std::int64_t spike_sum = 0;                 // spikes emitted by members
  std::int64_t input_ports_used = 0;
  std::int64_t output_ports_used = 0;
  std::int64_t crosspoints_used = 0;
  std::int64_t buffer_used = 0;  // ceil(spike_sum / stimulus_duration)
};

struct ClusteredSnn {
  CrossbarConstraints constraints;
  double stimulus_duration = 1.0;
  std::vector<NeuronId> source_neurons;  // every neuron of the partitioned SNN
  std::vector<Cluster> clusters;         // clusters[i].id == i
  std::map<NeuronId, ClusterId> neuron_to_cluster;
  /// Spikes per ordered cluster pair; an entry exists for every pair joined
  /// by at least one synapse, even when it carries no spikes.
  std::map<ClusterPair, std::int64_t> inter_cluster_spikes;

  ClusterId cluster_of(NeuronId n) const;
};

struct Utilization {
  double io_percent = 0.0;
  double crosspoint_percent = 0.0;
};

Utilization io_crosspoint_utilization(const Cluster& c, const CrossbarConstraints& k);

/// Greedy crossbar-aware partitioning. Neurons are visited by ascending
/// fanin (ties: ascending id) and merged into the first cluster that still
/// fits; the candidate list is kept in descending (io, crosspoint)
/// utilization order, ties by ascending cluster id, and re-sorted after
/// every assignment. Throws InfeasibleError for a neuron that cannot fit an
/// empty crossbar.
ClusteredSnn partition(const SnnGraph& g, const CrossbarConstraints& k);

/// Build a clustering from explicit neuron groups (group i becomes cluster i).
/// Constraints are recorded but not enforced; use check_clustered.
ClusteredSnn make_clustered(const SnnGraph& g, const CrossbarConstraints& k,
                            const std::vector<std::vector<NeuronId>>& groups);

std::map<ClusterPair, std::int64_t> inter_cluster_spikes(const SnnGraph& g,
                                                         const ClusteredSnn& cs);

struct ClusterDiagnostics {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  /// One closed walk per non-trivial strongly connected component of the
  /// cluster graph, e.g. {1, 2, 1}.
  std::vector<std::vector<ClusterId>> cycles;
  /// Number of weakly connected components of the cluster graph.
  std::size_t components = 0;

  bool ok() const { return errors.empty(); }
};

ClusterDiagnostics check_clustered(const ClusteredSnn& cs);

nlohmann::json to_json(const ClusteredSnn& cs);
std::string clusters_to_dot(const ClusteredSnn& cs);

}  // namespace snnc
