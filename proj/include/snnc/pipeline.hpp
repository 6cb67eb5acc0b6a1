#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snnc/hardware.hpp"
#include "snnc/maxplus.hpp"
#include "snnc/partitioner.hpp"
#include "snnc/scheduler.hpp"
#include "snnc/sdfg.hpp"
#include "snnc/snn_model.hpp"

namespace snnc {

enum class Mode { DesignTime, RunTime };
enum class SchedulerKind { StaticOrder, RandomOrder };

std::string to_string(Mode m);
std::string to_string(SchedulerKind s);
Mode mode_from_string(const std::string& s);
SchedulerKind scheduler_from_string(const std::string& s);

struct PipelineOptions {
  Mode mode = Mode::DesignTime;
  SchedulerKind scheduler = SchedulerKind::StaticOrder;
  std::uint64_t seed = 1;
  std::int64_t horizon = 200;
  std::int64_t warmup = 10;
  /// Tiles the binding may use; all tiles when empty.
  std::vector<TileId> available_tiles;
  /// Reused instead of recomputed in run_time mode.
  std::optional<SingleTileSchedule> single_tile;
  DesignSearchOptions search;
  DesignSearchOptions single_tile_search{5040, 400, {}};
};

/// Everything an SNN-level config names, for the CLI.
struct PipelineConfig {
  std::string snn_path;
  std::string hw_path;  // empty: use the preset
  std::string preset = "dynapse";
  std::optional<int> tiles;
  std::string out_dir;
  bool strict = false;
  PipelineOptions options;
};

struct ClusteringStats {
  std::size_t neurons = 0;
  std::size_t synapses = 0;
  std::size_t clusters = 0;
  std::size_t inter_cluster_pairs = 0;
  std::size_t cluster_cycles = 0;
  bool synapse_counts_estimated = false;
  std::vector<std::string> warnings;
};

struct CompileReport {
  Mode mode = Mode::DesignTime;
  SchedulerKind scheduler = SchedulerKind::StaticOrder;
  std::uint64_t seed = 0;
  int num_tiles = 0;
  ClusteringStats clustering;
  std::size_t actors = 0;
  std::size_t channels = 0;
  double app_mcm = 0.0;        // application graph, unlimited resources
  double app_throughput = 0.0;
  double mcm = 0.0;            // hardware-aware graph
  double throughput_analyzed = 0.0;
  double throughput_simulated = 0.0;
  std::vector<ActorId> critical_cycle;
  UtilizationReport utilization;
  DesignSearchStats search;
  // Wall-clock, milliseconds. Kept out of report.json.
  double binding_ms = 0.0;
  double scheduling_ms = 0.0;
  double single_tile_ms = 0.0;
  double total_ms = 0.0;
};

struct CompileResult {
  std::optional<ClusteredSnn> clustered;
  SdfGraph app;
  HardwareConfig hw;
  Binding binding;
  StaticOrderSchedule schedule;
  std::optional<SingleTileSchedule> single_tile;
  SdfGraph hw_graph;
  AnalysisReport analysis;
  ExecutionTrace trace;
  CompileReport report;
};

/// partition -> SDFG -> bind -> schedule -> hardware-aware analysis ->
/// simulation. Errors keep their kind and are prefixed with the stage name.
CompileResult compile(const SnnGraph& snn, const HardwareConfig& hw, const PipelineOptions& opts = {});

/// Same from an application SDFG (no clustering stage).
CompileResult compile_sdfg(const SdfGraph& app, const HardwareConfig& hw, const PipelineOptions& opts = {},
                           const ClusteredSnn* cs = nullptr);

/// Run-time admission: tiles used by `existing` are excluded. Throws
/// InfeasibleError when none is left.
CompileResult admit(const SnnGraph& snn, const HardwareConfig& hw, const std::vector<Binding>& existing,
                    PipelineOptions opts = {});

std::vector<CompileResult> sweep_tiles(const SnnGraph& snn, const HardwareConfig& hw, const std::vector<int>& tiles,
                                       const PipelineOptions& opts = {});

/// Deterministic content only; timings go to timing_json.
nlohmann::json report_json(const CompileReport& r);
nlohmann::json timing_json(const CompileReport& r);
std::string sweep_table(const std::vector<CompileResult>& runs);

/// clusters.json/.dot, sdfg.json/.dot, binding.json, schedule.json,
/// single_tile_schedule.json, hw_sdfg.json/.dot, analysis.json,
/// trace.jsonl, report.json, timing.json.
void write_artifacts(const CompileResult& r, const std::string& dir);

}  // namespace snnc
