#include "snnc/snn_model.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "snnc/error.hpp"

namespace snnc {

SnnGraph::SnnGraph(std::vector<Neuron> neurons, std::vector<Synapse> synapses,
                   double stimulus_duration, bool synapse_counts_estimated)
    : neurons_(std::move(neurons)),
      synapses_(std::move(synapses)),
      stimulus_duration_(stimulus_duration),
      estimated_(synapse_counts_estimated) {
  if (neurons_.empty()) throw ValidationError("no neurons");
  if (!(stimulus_duration_ > 0.0)) {
    throw ValidationError("stimulus_duration must be positive");
  }
  std::stable_sort(neurons_.begin(), neurons_.end(),
                   [](const Neuron& a, const Neuron& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < neurons_.size(); ++i) {
    if (neurons_[i].id < 0) {
      throw ValidationError("neuron id " + std::to_string(neurons_[i].id) + " is negative");
    }
    if (neurons_[i].spike_count < 0) {
      throw ValidationError("neuron " + std::to_string(neurons_[i].id) +
                            ": spike_count is negative");
    }
    if (i > 0 && neurons_[i].id == neurons_[i - 1].id) {
      throw ValidationError("duplicate neuron id " + std::to_string(neurons_[i].id));
    }
  }

  src_idx_.resize(synapses_.size());
  dst_idx_.resize(synapses_.size());
  fanin_.assign(neurons_.size(), {});
  fanout_.assign(neurons_.size(), {});
  for (std::size_t s = 0; s < synapses_.size(); ++s) {
    const Synapse& syn = synapses_[s];
    const auto src = index_of(syn.src);
    const auto dst = index_of(syn.dst);
    const std::string where = "synapses[" + std::to_string(s) + "]";
    if (!src) throw ValidationError(where + ": unknown src neuron " + std::to_string(syn.src));
    if (!dst) throw ValidationError(where + ": unknown dst neuron " + std::to_string(syn.dst));
    if (syn.spike_count < 0) throw ValidationError(where + ": spike_count is negative");
    if (syn.spike_count > neurons_[*src].spike_count) {
      throw ValidationError(where + ": spike_count " + std::to_string(syn.spike_count) +
                            " exceeds source neuron's " +
                            std::to_string(neurons_[*src].spike_count));
    }
    src_idx_[s] = *src;
    dst_idx_[s] = *dst;
    fanin_[*dst].push_back(s);
    fanout_[*src].push_back(s);
  }
}

std::optional<std::size_t> SnnGraph::index_of(NeuronId id) const {
  auto it = std::lower_bound(neurons_.begin(), neurons_.end(), id,
                             [](const Neuron& n, NeuronId v) { return n.id < v; });
  if (it == neurons_.end() || it->id != id) return std::nullopt;
  return static_cast<std::size_t>(it - neurons_.begin());
}

bool SnnGraph::operator==(const SnnGraph& other) const {
  return neurons_ == other.neurons_ && synapses_ == other.synapses_ &&
         stimulus_duration_ == other.stimulus_duration_;
}

std::size_t fanin(const SnnGraph& g, NeuronId n) {
  const auto idx = g.index_of(n);
  if (!idx) throw ValidationError("unknown neuron id " + std::to_string(n));
  return g.fanin_synapses(*idx).size();
}

namespace {

using nlohmann::json;

// Streaming reader for the SNN document. Keeps only the decoded records in
// memory so that million-synapse files load without building a DOM.
class SnnSaxReader : public nlohmann::json_sax<json> {
 public:
  explicit SnnSaxReader(bool strict) : strict_(strict) {}

  struct PartialSynapse {
    std::optional<std::int64_t> src, dst, count;
    std::optional<double> weight;
  };

  std::vector<Neuron> neurons;
  std::vector<PartialSynapse> synapses;
  std::optional<double> duration;
  std::vector<std::string> warnings;
  std::string error;
  bool syntax_error = false;
  std::size_t error_pos = 0;

  bool null() override { return scalar(nullptr); }
  bool boolean(bool v) override { return scalar(v); }
  bool number_integer(number_integer_t v) override { return scalar(std::int64_t{v}); }
  bool number_unsigned(number_unsigned_t v) override {
    if (v > static_cast<number_unsigned_t>(std::numeric_limits<std::int64_t>::max())) {
      return scalar(static_cast<double>(v));
    }
    return scalar(static_cast<std::int64_t>(v));
  }
  bool number_float(number_float_t v, const string_t&) override { return scalar(double{v}); }
  bool string(string_t& v) override { return scalar(v); }
  bool binary(binary_t&) override { return fail("binary values are not supported"); }

  bool start_object(std::size_t) override {
    if (skip_) return ++skip_, true;
    switch (ctx()) {
      case Ctx::Root:
        stack_.push_back(Ctx::Top);
        return true;
      case Ctx::Top:
        if (key_ == "neurons" || key_ == "synapses" || key_ == "stimulus_duration") {
          return fail(key_ + ": unexpected object");
        }
        return unknown(key_) && (skip_ = 1, true);
      case Ctx::Neurons:
        stack_.push_back(Ctx::Neuron);
        cur_neuron_ = {};
        seen_.clear();
        return true;
      case Ctx::Synapses:
        stack_.push_back(Ctx::Synapse);
        cur_synapse_ = {};
        seen_.clear();
        return true;
      case Ctx::Neuron:
      case Ctx::Synapse:
        if (known_field()) return fail(field() + ": expected a scalar");
        return unknown(field()) && (skip_ = 1, true);
    }
    return true;
  }

  bool end_object() override {
    if (skip_) return --skip_, true;
    const Ctx c = ctx();
    stack_.pop_back();
    if (c == Ctx::Neuron) return finish_neuron();
    if (c == Ctx::Synapse) return finish_synapse();
    return true;
  }

  bool start_array(std::size_t) override {
    if (skip_) return ++skip_, true;
    switch (ctx()) {
      case Ctx::Root:
        return fail("top-level value must be an object");
      case Ctx::Top:
        if (key_ == "neurons") return stack_.push_back(Ctx::Neurons), true;
        if (key_ == "synapses") return stack_.push_back(Ctx::Synapses), true;
        if (key_ == "stimulus_duration") return fail("stimulus_duration: expected a number");
        return unknown(key_) && (skip_ = 1, true);
      case Ctx::Neurons:
        return fail(element("neurons", neurons.size()) + ": expected an object");
      case Ctx::Synapses:
        return fail(element("synapses", synapses.size()) + ": expected an object");
      case Ctx::Neuron:
      case Ctx::Synapse:
        if (known_field()) return fail(field() + ": expected a scalar");
        return unknown(field()) && (skip_ = 1, true);
    }
    return true;
  }

  bool end_array() override {
    if (skip_) return --skip_, true;
    stack_.pop_back();
    return true;
  }

  bool key(string_t& k) override {
    if (skip_) return true;
    key_ = k;
    if (ctx() == Ctx::Neuron || ctx() == Ctx::Synapse) {
      if (std::find(seen_.begin(), seen_.end(), k) != seen_.end()) {
        return fail(field() + ": duplicate field");
      }
      seen_.push_back(k);
    }
    return true;
  }

  bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) override {
    syntax_error = true;
    error_pos = pos;
    error = ex.what();
    return false;
  }

 private:
  enum class Ctx { Root, Top, Neurons, Neuron, Synapses, Synapse };
  using Value = std::variant<std::nullptr_t, bool, std::int64_t, double, std::string>;

  bool strict_;
  std::vector<Ctx> stack_{Ctx::Root};
  int skip_ = 0;
  std::string key_;
  std::vector<std::string> seen_;
  struct {
    std::optional<std::int64_t> id, count;
    std::optional<std::string> layer;
  } cur_neuron_;
  PartialSynapse cur_synapse_;

  Ctx ctx() const { return stack_.back(); }

  static std::string element(const char* array, std::size_t i) {
    return std::string(array) + "[" + std::to_string(i) + "]";
  }
  std::string field() const {
    if (ctx() == Ctx::Neuron) return element("neurons", neurons.size()) + "." + key_;
    return element("synapses", synapses.size()) + "." + key_;
  }
  bool known_field() const {
    if (ctx() == Ctx::Neuron) return key_ == "id" || key_ == "spike_count" || key_ == "layer";
    return key_ == "src" || key_ == "dst" || key_ == "weight" || key_ == "spike_count";
  }

  bool fail(std::string msg) {
    error = std::move(msg);
    return false;
  }

  bool unknown(const std::string& where) {
    if (strict_) return fail("unknown key '" + where + "'");
    warnings.push_back("unknown key '" + where + "' ignored");
    return true;
  }

  static std::optional<std::int64_t> as_count(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v); i && *i >= 0) return *i;
    return std::nullopt;
  }

  bool scalar(Value v) {
    if (skip_) return true;
    switch (ctx()) {
      case Ctx::Root:
        return fail("top-level value must be an object");
      case Ctx::Neurons:
        return fail(element("neurons", neurons.size()) + ": expected an object");
      case Ctx::Synapses:
        return fail(element("synapses", synapses.size()) + ": expected an object");
      case Ctx::Top:
        if (key_ == "stimulus_duration") {
          if (const auto* d = std::get_if<double>(&v)) duration = *d;
          else if (const auto* i = std::get_if<std::int64_t>(&v)) duration = static_cast<double>(*i);
          else return fail("stimulus_duration: expected a number");
          return true;
        }
        if (key_ == "neurons" || key_ == "synapses") return fail(key_ + ": expected an array");
        return unknown(key_);
      case Ctx::Neuron:
        if (key_ == "id" || key_ == "spike_count") {
          auto n = as_count(v);
          if (!n) return fail(field() + ": expected a non-negative integer");
          (key_ == "id" ? cur_neuron_.id : cur_neuron_.count) = n;
          return true;
        }
        if (key_ == "layer") {
          if (auto* s = std::get_if<std::string>(&v)) cur_neuron_.layer = std::move(*s);
          else if (!std::holds_alternative<std::nullptr_t>(v)) return fail(field() + ": expected a string");
          return true;
        }
        return unknown(field());
      case Ctx::Synapse:
        if (key_ == "src" || key_ == "dst" || key_ == "spike_count") {
          auto n = as_count(v);
          if (!n) return fail(field() + ": expected a non-negative integer");
          if (key_ == "src") cur_synapse_.src = n;
          else if (key_ == "dst") cur_synapse_.dst = n;
          else cur_synapse_.count = n;
          return true;
        }
        if (key_ == "weight") {
          if (const auto* d = std::get_if<double>(&v)) cur_synapse_.weight = *d;
          else if (const auto* i = std::get_if<std::int64_t>(&v)) cur_synapse_.weight = static_cast<double>(*i);
          else return fail(field() + ": expected a number");
          return true;
        }
        return unknown(field());
    }
    return true;
  }

  bool finish_neuron() {
    const std::string where = element("neurons", neurons.size());
    if (!cur_neuron_.id) return fail(where + ": missing field 'id'");
    if (!cur_neuron_.count) return fail(where + ": missing field 'spike_count'");
    neurons.push_back({*cur_neuron_.id, *cur_neuron_.count, std::move(cur_neuron_.layer)});
    return true;
  }

  bool finish_synapse() {
    const std::string where = element("synapses", synapses.size());
    if (!cur_synapse_.src) return fail(where + ": missing field 'src'");
    if (!cur_synapse_.dst) return fail(where + ": missing field 'dst'");
    if (!cur_synapse_.weight) return fail(where + ": missing field 'weight'");
    synapses.push_back(cur_synapse_);
    return true;
  }
};

std::string line_col(std::string_view text, std::size_t pos) {
  pos = std::min(pos, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < pos; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

LoadResult load_snn(std::string_view text, const LoadOptions& opts) {
  SnnSaxReader reader(opts.strict);
  const bool ok = json::sax_parse(text.begin(), text.end(), &reader);
  if (!ok) {
    if (reader.syntax_error) {
      throw ParseError("SNN parse error at " + line_col(text, reader.error_pos) + ": " +
                       reader.error);
    }
    throw ParseError("SNN parse error: " + reader.error);
  }
  if (reader.neurons.empty()) throw ValidationError("no neurons");

  // Synapse counts default to a uniform split of the source neuron's spikes
  // over its fanout; the remainder goes to the earliest synapses.
  bool estimated = false;
  std::vector<Synapse> synapses;
  synapses.reserve(reader.synapses.size());
  for (const auto& s : reader.synapses) {
    synapses.push_back({*s.src, *s.dst, *s.weight, s.count.value_or(0)});
    estimated = estimated || !s.count;
  }
  if (estimated) {
    std::vector<Neuron> sorted = reader.neurons;
    std::sort(sorted.begin(), sorted.end(),
              [](const Neuron& a, const Neuron& b) { return a.id < b.id; });
    auto find = [&](NeuronId id) -> const Neuron* {
      auto it = std::lower_bound(sorted.begin(), sorted.end(), id,
                                 [](const Neuron& n, NeuronId v) { return n.id < v; });
      return (it != sorted.end() && it->id == id) ? &*it : nullptr;
    };
    std::vector<std::int64_t> fanout(sorted.size(), 0), seen(sorted.size(), 0);
    for (const auto& s : synapses) {
      if (const Neuron* n = find(s.src)) ++fanout[n - sorted.data()];
    }
    for (std::size_t i = 0; i < synapses.size(); ++i) {
      const Neuron* n = find(synapses[i].src);
      if (!n) continue;  // reported as dangling by the graph constructor
      const std::size_t k = n - sorted.data();
      const std::int64_t ordinal = seen[k]++;
      if (!reader.synapses[i].count) {
        const std::int64_t base = n->spike_count / fanout[k];
        synapses[i].spike_count = base + (ordinal < n->spike_count % fanout[k] ? 1 : 0);
      }
    }
  }

  SnnGraph graph(std::move(reader.neurons), std::move(synapses), reader.duration.value_or(1.0),
                 estimated);
  return {std::move(graph), std::move(reader.warnings)};
}

LoadResult load_snn(std::istream& in, const LoadOptions& opts) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_snn(std::string_view(text), opts);
}

LoadResult load_snn_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open SNN file '" + path + "'");
  return load_snn(in, opts);
}

void save_snn(const SnnGraph& g, std::ostream& out) {
  out << "{\n  \"stimulus_duration\": " << json(g.stimulus_duration()).dump() << ",\n";
  out << "  \"neurons\": [";
  const auto& neurons = g.neurons();
  for (std::size_t i = 0; i < neurons.size(); ++i) {
    const Neuron& n = neurons[i];
    out << (i ? ",\n    " : "\n    ") << "{\"id\": " << n.id << ", \"spike_count\": " << n.spike_count;
    if (n.layer) out << ", \"layer\": " << json(*n.layer).dump();
    out << "}";
  }
  out << (neurons.empty() ? "],\n" : "\n  ],\n");
  out << "  \"synapses\": [";
  const auto& synapses = g.synapses();
  for (std::size_t i = 0; i < synapses.size(); ++i) {
    const Synapse& s = synapses[i];
    out << (i ? ",\n    " : "\n    ") << "{\"src\": " << s.src << ", \"dst\": " << s.dst
        << ", \"weight\": " << json(s.weight).dump() << ", \"spike_count\": " << s.spike_count << "}";
  }
  out << (synapses.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

std::string save_snn(const SnnGraph& g) {
  std::ostringstream os;
  save_snn(g, os);
  return os.str();
}

}  // namespace snnc
