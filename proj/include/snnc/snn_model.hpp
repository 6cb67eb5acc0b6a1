#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace snnc {

using NeuronId = std::int64_t;

struct Neuron {
  NeuronId id = 0;
  std::int64_t spike_count = 0;
  std::optional<std::string> layer;

  bool operator==(const Neuron&) const = default;
};

struct Synapse {
  NeuronId src = 0;
  NeuronId dst = 0;
  double weight = 0.0;
  std::int64_t spike_count = 0;

  bool operator==(const Synapse&) const = default;
};

/// An SNN together with the spike activity recorded over a stimulus window.
///
/// Neurons are kept sorted by id; synapses keep their input order. Both are
/// immutable after construction, and the constructor enforces every
/// structural invariant (unique ids, no dangling endpoints, synapse counts
/// bounded by the source neuron's count).
class SnnGraph {
 public:
  SnnGraph(std::vector<Neuron> neurons, std::vector<Synapse> synapses,
           double stimulus_duration = 1.0, bool synapse_counts_estimated = false);

  const std::vector<Neuron>& neurons() const noexcept { return neurons_; }
  const std::vector<Synapse>& synapses() const noexcept { return synapses_; }
  double stimulus_duration() const noexcept { return stimulus_duration_; }
  bool synapse_counts_estimated() const noexcept { return estimated_; }

  std::size_t num_neurons() const noexcept { return neurons_.size(); }

  /// Dense index of a neuron id, or nullopt when absent.
  std::optional<std::size_t> index_of(NeuronId id) const;
  bool contains(NeuronId id) const { return index_of(id).has_value(); }

  // Dense-index views, parallel to synapses().
  std::size_t src_index(std::size_t synapse) const { return src_idx_[synapse]; }
  std::size_t dst_index(std::size_t synapse) const { return dst_idx_[synapse]; }

  /// Synapse indices whose dst is the neuron at dense index `n`.
  const std::vector<std::size_t>& fanin_synapses(std::size_t n) const { return fanin_[n]; }
  const std::vector<std::size_t>& fanout_synapses(std::size_t n) const { return fanout_[n]; }

  /// Equality over the canonical content (the estimation flag is metadata).
  bool operator==(const SnnGraph& other) const;

 private:
  std::vector<Neuron> neurons_;
  std::vector<Synapse> synapses_;
  double stimulus_duration_;
  bool estimated_;
  std::vector<std::size_t> src_idx_, dst_idx_;
  std::vector<std::vector<std::size_t>> fanin_, fanout_;
};

/// Number of synapses with dst = n. Throws ValidationError for unknown ids.
std::size_t fanin(const SnnGraph& g, NeuronId n);

struct LoadOptions {
  bool strict = false;  // unknown keys become errors instead of warnings
};

struct LoadResult {
  SnnGraph graph;
  std::vector<std::string> warnings;
};

/// Parse the JSON SNN document (see README for the schema).
LoadResult load_snn(std::istream& in, const LoadOptions& opts = {});
LoadResult load_snn(std::string_view text, const LoadOptions& opts = {});
LoadResult load_snn_file(const std::string& path, const LoadOptions& opts = {});

/// Write the canonical form: neurons by id, synapses in stored order,
/// every synapse count explicit.
void save_snn(const SnnGraph& g, std::ostream& out);
std::string save_snn(const SnnGraph& g);

}  // namespace snnc
