// snnc: map an SNN onto tiled neuromorphic hardware and report throughput.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snnc/error.hpp"
#include "snnc/pipeline.hpp"

namespace {

using namespace snnc;

struct Flags {
  std::string snn, hw, preset = "dynapse", mode = "design_time", scheduler = "static_order", out, single_tile;
  std::string sdfg, schedule;
  std::uint64_t seed = 1;
  std::int64_t horizon = 200;
  int tiles = 0;
  std::vector<int> tile_list{4, 9, 16};
  std::vector<std::string> existing;
  bool strict = false;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

HardwareConfig hardware(const Flags& f) {
  HardwareConfig hw;
  if (!f.hw.empty()) {
    hw = load_hardware_file(f.hw);
  } else if (f.preset == "dynapse") {
    hw = dynapse_preset();
  } else {
    throw ValidationError("unknown preset '" + f.preset + "'");
  }
  if (f.tiles > 0) hw = with_tiles(hw, f.tiles);
  return hw;
}

SnnGraph snn(const Flags& f) {
  LoadResult r = load_snn_file(f.snn, {f.strict});
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return std::move(r.graph);
}

PipelineOptions options(const Flags& f) {
  PipelineOptions o;
  o.mode = mode_from_string(f.mode);
  o.scheduler = scheduler_from_string(f.scheduler);
  o.seed = f.seed;
  o.horizon = f.horizon;
  if (!f.single_tile.empty()) o.single_tile = single_tile_from_json(read_json(f.single_tile));
  return o;
}

void print_summary(const CompileResult& r) {
  const auto& p = r.report;
  std::cout << "clusters " << p.clustering.clusters << ", actors " << p.actors << ", channels " << p.channels
            << ", tiles " << p.num_tiles << "\n"
            << "mcm " << p.mcm << ", throughput analyzed " << p.throughput_analyzed << ", simulated "
            << p.throughput_simulated << "\n"
            << "binding " << p.binding_ms << " ms, scheduling " << p.scheduling_ms << " ms, total " << p.total_ms
            << " ms\n"
            << "max utilization " << p.utilization.max_percent() << "%\n";
}

void add_pipeline_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--snn", f.snn, "SNN JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--hw", f.hw, "hardware config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "named hardware config")->check(CLI::IsMember({"dynapse"}));
  cmd->add_option("--mode", f.mode)->check(CLI::IsMember({"design_time", "run_time"}));
  cmd->add_option("--scheduler", f.scheduler)->check(CLI::IsMember({"static_order", "random_order"}));
  cmd->add_option("--seed", f.seed);
  cmd->add_option("--horizon", f.horizon, "simulated iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "artifact directory");
  cmd->add_option("--single-tile", f.single_tile, "precomputed single-tile schedule")->check(CLI::ExistingFile);
  cmd->add_flag("--strict", f.strict, "unknown input keys are errors");
}

int run(int argc, char** argv) {
  CLI::App app{"snnc - SNN to tiled neuromorphic hardware compiler"};
  app.require_subcommand(1);
  Flags f;

  auto* compile_cmd = app.add_subcommand("compile", "full pipeline for one hardware config");
  add_pipeline_flags(compile_cmd, f);
  compile_cmd->add_option("--tiles", f.tiles, "override tile count")->check(CLI::PositiveNumber);

  auto* sweep_cmd = app.add_subcommand("sweep-tiles", "compile for several tile counts");
  add_pipeline_flags(sweep_cmd, f);
  sweep_cmd->add_option("--tiles", f.tile_list, "tile counts, e.g. 4,9,16")->delimiter(',');

  auto* admit_cmd = app.add_subcommand("admit", "run-time admission next to existing applications");
  add_pipeline_flags(admit_cmd, f);
  admit_cmd->add_option("--existing", f.existing, "binding JSON of a running application")->check(CLI::ExistingFile);
  admit_cmd->add_option("--tiles", f.tiles, "override tile count")->check(CLI::PositiveNumber);

  auto* analyze_cmd = app.add_subcommand("analyze", "throughput analysis of an SDFG");
  analyze_cmd->add_option("--sdfg", f.sdfg, "SDFG JSON file")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--out", f.out, "write analysis JSON here");

  auto* simulate_cmd = app.add_subcommand("simulate", "self-timed simulation trace of an SDFG");
  simulate_cmd->add_option("--sdfg", f.sdfg, "SDFG JSON file")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--schedule", f.schedule, "static-order schedule JSON; every actor on its own tile if absent")
      ->check(CLI::ExistingFile);
  simulate_cmd->add_option("--horizon", f.horizon)->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--out", f.out, "trace file (line-delimited JSON); stdout if absent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*compile_cmd) {
    const CompileResult r = compile(snn(f), hardware(f), options(f));
    if (!f.out.empty()) write_artifacts(r, f.out);
    print_summary(r);
  } else if (*sweep_cmd) {
    const auto runs = sweep_tiles(snn(f), hardware(f), f.tile_list, options(f));
    std::cout << sweep_table(runs);
    if (!f.out.empty()) {
      nlohmann::json all = nlohmann::json::array();
      for (const auto& r : runs) {
        write_artifacts(r, f.out + "/tiles_" + std::to_string(r.report.num_tiles));
        all.push_back(report_json(r.report));
      }
      std::ofstream(f.out + "/sweep.json") << all.dump(2) << "\n";
    }
  } else if (*admit_cmd) {
    std::vector<Binding> existing;
    for (const auto& path : f.existing) existing.push_back(binding_from_json(read_json(path)));
    const CompileResult r = admit(snn(f), hardware(f), existing, options(f));
    if (!f.out.empty()) write_artifacts(r, f.out);
    print_summary(r);
  } else if (*analyze_cmd) {
    const SdfGraph g = sdfg_from_json(read_json(f.sdfg));
    const DeadlockCheck dl = check_deadlock(g);
    if (!dl.deadlock_free) {
      std::string msg = "deadlock: cycle without initial tokens over channels";
      for (ChannelId c : dl.witness) msg += " " + std::to_string(c);
      throw DeadlockError(msg);
    }
    const std::string text = to_json(analyze(g)).dump(2) + "\n";
    if (!f.out.empty()) std::ofstream(f.out) << text;
    std::cout << text;
  } else if (*simulate_cmd) {
    const SdfGraph g = sdfg_from_json(read_json(f.sdfg));
    SimOptions so;
    so.horizon = f.horizon;
    StaticOrderSchedule s;
    if (f.schedule.empty()) {
      so.unconstrained_tiles = true;
    } else {
      s = schedule_from_json(read_json(f.schedule));
    }
    const ExecutionTrace tr = self_timed_simulate(g, s, so);
    if (f.out.empty()) {
      write_trace_jsonl(tr, std::cout);
    } else {
      std::ofstream out(f.out);
      write_trace_jsonl(tr, out);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const snnc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
