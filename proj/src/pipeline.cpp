#include "snnc/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "snnc/error.hpp"

namespace snnc {

std::string to_string(Mode m) { return m == Mode::DesignTime ? "design_time" : "run_time"; }
std::string to_string(SchedulerKind s) { return s == SchedulerKind::StaticOrder ? "static_order" : "random_order"; }

Mode mode_from_string(const std::string& s) {
  if (s == "design_time") return Mode::DesignTime;
  if (s == "run_time") return Mode::RunTime;
  throw ValidationError("unknown mode '" + s + "' (design_time, run_time)");
}

SchedulerKind scheduler_from_string(const std::string& s) {
  if (s == "static_order") return SchedulerKind::StaticOrder;
  if (s == "random_order") return SchedulerKind::RandomOrder;
  throw ValidationError("unknown scheduler '" + s + "' (static_order, random_order)");
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

[[noreturn]] void rethrow_in_stage(const Error& e, const std::string& stage) {
  const std::string msg = stage + ": " + e.what();
  if (dynamic_cast<const DeadlockError*>(&e)) throw DeadlockError(msg);
  if (dynamic_cast<const ParseError*>(&e)) throw ParseError(msg);
  if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(msg);
  if (dynamic_cast<const InfeasibleError*>(&e)) throw InfeasibleError(msg);
  if (dynamic_cast<const InternalError*>(&e)) throw InternalError(msg);
  throw Error(e.kind(), msg);
}

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_in_stage(e, name);
  }
}

CompileResult run(const SdfGraph& app, const HardwareConfig& hw, const PipelineOptions& opts, const ClusteredSnn* cs,
                  Clock::time_point t_start) {
  if (opts.mode == Mode::RunTime && opts.scheduler == SchedulerKind::RandomOrder) {
    throw ValidationError("run_time mode derives its schedule from the single-tile order; use static_order");
  }
  stage("config", [&] {
    hw.validate();
    return 0;
  });
  CompileResult r;
  r.app = app;
  r.hw = hw;
  if (cs) r.clustered = *cs;
  CompileReport& rep = r.report;
  rep.mode = opts.mode;
  rep.scheduler = opts.scheduler;
  rep.seed = opts.seed;
  rep.num_tiles = hw.num_tiles;
  rep.actors = app.num_actors();
  rep.channels = app.num_channels();

  stage("sdfg", [&] {
    const auto dl = check_deadlock(app);
    if (!dl.deadlock_free) throw DeadlockError("application graph has a cycle without initial tokens");
    repetition_vector(app);
    const double m = max_cycle_mean(build_ratio_digraph(app)).mcm;
    rep.app_mcm = m;
    rep.app_throughput = m > 0.0 ? 1.0 / m : 0.0;
    return 0;
  });

  auto t = Clock::now();
  r.binding = stage("binding", [&] { return balance_bind(app, hw, opts.available_tiles); });
  rep.binding_ms = ms_since(t);

  auto compute_single = [&] {
    return stage("single-tile schedule", [&] {
      if (opts.single_tile) {
        derive_runtime_schedule(*opts.single_tile, r.binding);  // coverage check
        return *opts.single_tile;
      }
      return single_tile_schedule(app, hw, opts.single_tile_search);
    });
  };

  if (opts.mode == Mode::RunTime) {
    t = Clock::now();
    r.single_tile = compute_single();
    rep.single_tile_ms = ms_since(t);
    t = Clock::now();
    r.schedule = stage("scheduling", [&] { return derive_runtime_schedule(*r.single_tile, r.binding); });
    rep.scheduling_ms = ms_since(t);
  } else if (opts.scheduler == SchedulerKind::RandomOrder) {
    t = Clock::now();
    r.schedule = stage("scheduling", [&] { return random_order_schedule(app, r.binding, opts.seed); });
    rep.scheduling_ms = ms_since(t);
  } else {
    t = Clock::now();
    r.single_tile = compute_single();
    r.schedule = stage("scheduling", [&] {
      DesignSearchOptions search = opts.search;
      search.extra_seeds.push_back(derive_runtime_schedule(*r.single_tile, r.binding));
      return design_time_schedule(app, r.binding, hw, search, &rep.search);
    });
    rep.scheduling_ms = ms_since(t);
  }

  r.hw_graph = stage("transform", [&] { return hardware_aware_transform(app, r.binding, hw, &r.schedule.per_tile); });
  r.analysis = stage("analysis", [&] { return analyze(r.hw_graph); });
  rep.mcm = r.analysis.mcm;
  rep.throughput_analyzed = r.analysis.throughput;
  rep.critical_cycle = r.analysis.critical_cycle;
  stage("simulation", [&] {
    SimOptions so;
    so.horizon = opts.horizon;
    r.trace = self_timed_simulate(r.hw_graph, r.schedule, so);
    rep.throughput_simulated = measured_throughput(r.trace, opts.warmup);
    return 0;
  });
  rep.utilization = stage("utilization", [&] {
    return utilization_report(app, r.binding, hw, rep.throughput_analyzed, cs);
  });
  rep.total_ms = ms_since(t_start);
  return r;
}

}  // namespace

CompileResult compile(const SnnGraph& snn, const HardwareConfig& hw, const PipelineOptions& opts) {
  const auto t0 = Clock::now();
  stage("config", [&] {
    hw.validate();
    return 0;
  });
  const ClusteredSnn cs = stage("partition", [&] { return partition(snn, hw.crossbar); });
  const ClusterDiagnostics diag = check_clustered(cs);
  if (!diag.ok()) throw InternalError("partition: " + diag.errors.front());
  const SdfGraph app = stage("sdfg", [&] { return from_clustered_snn(cs, {hw.exec_time, 1.0}); });
  CompileResult r = run(app, hw, opts, &cs, t0);
  ClusteringStats& st = r.report.clustering;
  st.neurons = snn.num_neurons();
  st.synapses = snn.synapses().size();
  st.clusters = cs.clusters.size();
  st.inter_cluster_pairs = cs.inter_cluster_spikes.size();
  st.cluster_cycles = diag.cycles.size();
  st.synapse_counts_estimated = snn.synapse_counts_estimated();
  st.warnings = diag.warnings;
  return r;
}

CompileResult compile_sdfg(const SdfGraph& app, const HardwareConfig& hw, const PipelineOptions& opts,
                           const ClusteredSnn* cs) {
  return run(app, hw, opts, cs, Clock::now());
}

CompileResult admit(const SnnGraph& snn, const HardwareConfig& hw, const std::vector<Binding>& existing,
                    PipelineOptions opts) {
  std::set<TileId> occupied;
  for (const Binding& b : existing) {
    for (TileId t : b.actor_to_tile) {
      if (t < 0 || t >= hw.num_tiles) {
        throw ValidationError("admission: existing binding uses unknown tile " + std::to_string(t));
      }
      occupied.insert(t);
    }
  }
  opts.mode = Mode::RunTime;
  opts.scheduler = SchedulerKind::StaticOrder;
  opts.available_tiles.clear();
  for (TileId t = 0; t < hw.num_tiles; ++t) {
    if (!occupied.count(t)) opts.available_tiles.push_back(t);
  }
  if (opts.available_tiles.empty()) throw InfeasibleError("admission: every tile is occupied");
  return compile(snn, hw, opts);
}

std::vector<CompileResult> sweep_tiles(const SnnGraph& snn, const HardwareConfig& hw, const std::vector<int>& tiles,
                                       const PipelineOptions& opts) {
  std::vector<CompileResult> out;
  for (int n : tiles) out.push_back(compile(snn, with_tiles(hw, n), opts));
  return out;
}

nlohmann::json report_json(const CompileReport& r) {
  const auto& c = r.clustering;
  return {{"mode", to_string(r.mode)},
          {"scheduler", to_string(r.scheduler)},
          {"seed", r.seed},
          {"num_tiles", r.num_tiles},
          {"clustering",
           {{"neurons", c.neurons},
            {"synapses", c.synapses},
            {"clusters", c.clusters},
            {"inter_cluster_pairs", c.inter_cluster_pairs},
            {"cluster_cycles", c.cluster_cycles},
            {"synapse_counts_estimated", c.synapse_counts_estimated},
            {"warnings", c.warnings}}},
          {"actors", r.actors},
          {"channels", r.channels},
          {"application", {{"mcm", r.app_mcm}, {"throughput", r.app_throughput}}},
          {"mcm", r.mcm},
          {"throughput", {{"analyzed", r.throughput_analyzed}, {"simulated", r.throughput_simulated}}},
          {"critical_cycle", r.critical_cycle},
          {"utilization", to_json(r.utilization)},
          {"search",
           {{"simulations", r.search.simulations},
            {"evaluations", r.search.evaluations},
            {"exhaustive", r.search.exhaustive}}}};
}

nlohmann::json timing_json(const CompileReport& r) {
  return {{"binding_ms", r.binding_ms},
          {"scheduling_ms", r.scheduling_ms},
          {"single_tile_ms", r.single_tile_ms},
          {"total_ms", r.total_ms}};
}

std::string sweep_table(const std::vector<CompileResult>& runs) {
  std::string out = "tiles  actors        mcm  thr_analyzed  thr_simulated  max_util%  bind_ms  sched_ms\n";
  char line[160];
  for (const auto& r : runs) {
    const auto& p = r.report;
    std::snprintf(line, sizeof line, "%5d  %6zu  %9.4f  %12.6f  %13.6f  %9.2f  %7.2f  %8.2f\n", p.num_tiles, p.actors,
                  p.mcm, p.throughput_analyzed, p.throughput_simulated, p.utilization.max_percent(), p.binding_ms,
                  p.scheduling_ms);
    out += line;
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write '" + p.string() + "'");
  out << text;
}

}  // namespace

void write_artifacts(const CompileResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path d(dir);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw ValidationError("cannot create '" + dir + "': " + ec.message());
  if (r.clustered) {
    write_file(d / "clusters.json", to_json(*r.clustered).dump(2) + "\n");
    write_file(d / "clusters.dot", clusters_to_dot(*r.clustered));
  }
  write_file(d / "sdfg.json", to_json(r.app).dump(2) + "\n");
  write_file(d / "sdfg.dot", export_dot(r.app));
  write_file(d / "hardware.json", to_json(r.hw).dump(2) + "\n");
  write_file(d / "binding.json", to_json(r.binding).dump(2) + "\n");
  write_file(d / "schedule.json", to_json(r.schedule).dump(2) + "\n");
  if (r.single_tile) write_file(d / "single_tile_schedule.json", to_json(*r.single_tile).dump(2) + "\n");
  write_file(d / "hw_sdfg.json", to_json(r.hw_graph).dump(2) + "\n");
  write_file(d / "hw_sdfg.dot", export_dot(r.hw_graph));
  write_file(d / "analysis.json", to_json(r.analysis).dump(2) + "\n");
  std::ofstream trace(d / "trace.jsonl");
  write_trace_jsonl(r.trace, trace);
  write_file(d / "report.json", report_json(r.report).dump(2) + "\n");
  write_file(d / "timing.json", timing_json(r.report).dump(2) + "\n");
}

}  // namespace snnc
