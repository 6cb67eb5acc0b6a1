#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "snnc_cli_test";

int snnc(const std::string& args) {
  const std::string cmd = std::string(SNNC_BINARY) + " " + args + " > " + (kWork / "stdout.txt").string() + " 2> " +
                          (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string write(const std::string& name, const std::string& text) {
  const auto p = kWork / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Three neurons, each on its own crossbar of a 2-tile platform.
const char* kSnn = R"({"neurons": [{"id": 0, "spike_count": 4}, {"id": 1, "spike_count": 3}, {"id": 2, "spike_count": 2}],
 "synapses": [{"src": 0, "dst": 1, "weight": 0.5, "spike_count": 4}, {"src": 1, "dst": 2, "weight": 0.5, "spike_count": 3}]})";
const char* kHw = R"({"num_tiles": 2, "mesh": {"rows": 1, "cols": 2},
 "crossbar": {"max_inputs": 4, "max_outputs": 1, "max_crosspoints": 16, "max_buffer_tokens": 100},
 "buffers": {"input_tokens": 64, "output_tokens": 64}, "link_bandwidth": 32, "hop_delay": 0.1})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    snn = write("snn.json", kSnn);
    hw = write("hw.json", kHw);
  }
  void TearDown() override { fs::remove_all(kWork); }
  std::string snn, hw;
};

}  // namespace

TEST_F(Cli, CompileWritesArtifacts) {
  const auto out = kWork / "out";
  ASSERT_EQ(snnc("compile --snn " + snn + " --hw " + hw + " --out " + out.string()), 0) << slurp(kWork / "stderr.txt");
  for (const char* f : {"clusters.json", "sdfg.json", "binding.json", "schedule.json", "hw_sdfg.dot", "trace.jsonl",
                        "report.json", "timing.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_GT(report["throughput"]["analyzed"].get<double>(), 0.0);
  EXPECT_EQ(report["num_tiles"], 2);
}

TEST_F(Cli, RunTimeModeAndPresetTiles) {
  EXPECT_EQ(snnc("compile --snn " + snn + " --preset dynapse --tiles 9 --mode run_time"), 0)
      << slurp(kWork / "stderr.txt");
  EXPECT_NE(slurp(kWork / "stdout.txt").find("tiles 9"), std::string::npos);
}

TEST_F(Cli, SweepTilesTable) {
  const auto out = kWork / "sweep";
  ASSERT_EQ(snnc("sweep-tiles --snn " + snn + " --hw " + hw + " --tiles 2,4 --out " + out.string()), 0)
      << slurp(kWork / "stderr.txt");
  EXPECT_TRUE(fs::exists(out / "tiles_2" / "report.json"));
  EXPECT_TRUE(fs::exists(out / "tiles_4" / "report.json"));
  EXPECT_EQ(nlohmann::json::parse(slurp(out / "sweep.json")).size(), 2u);
}

TEST_F(Cli, AdmitFullHardwareExitsInfeasible) {
  const auto busy = write("busy.json", R"({"num_tiles": 2, "num_actors": 2, "actor_to_tile": [0, 1]})");
  EXPECT_EQ(snnc("admit --snn " + snn + " --hw " + hw + " --existing " + busy), 3);
  const auto half = write("half.json", R"({"num_tiles": 2, "num_actors": 1, "actor_to_tile": [0]})");
  EXPECT_EQ(snnc("admit --snn " + snn + " --hw " + hw + " --existing " + half), 0) << slurp(kWork / "stderr.txt");
}

TEST_F(Cli, ParseAndValidationErrorsExitTwo) {
  const auto broken = write("broken.json", "{\"neurons\": [");
  EXPECT_EQ(snnc("compile --snn " + broken), 2);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("line"), std::string::npos);
  const auto empty = write("empty.json", R"({"neurons": [], "synapses": []})");
  EXPECT_EQ(snnc("compile --snn " + empty), 2);
  EXPECT_EQ(snnc("compile --snn " + snn + " --mode sometimes"), 2);
  EXPECT_EQ(snnc("compile"), 2);
  EXPECT_EQ(snnc("compile --snn " + snn + " --mode run_time --scheduler random_order"), 2);
  const auto extra = write("extra.json", R"({"neurons": [{"id": 0, "spike_count": 1, "x": 1}], "synapses": []})");
  EXPECT_EQ(snnc("compile --snn " + extra), 0);
  EXPECT_EQ(snnc("compile --snn " + extra + " --strict"), 2);
}

TEST_F(Cli, InfeasibleExitsThree) {
  const auto wide = write("wide.json", R"({"neurons": [{"id": 0, "spike_count": 1}, {"id": 1, "spike_count": 1},
    {"id": 2, "spike_count": 1}, {"id": 3, "spike_count": 1}, {"id": 4, "spike_count": 1}, {"id": 5, "spike_count": 1}],
    "synapses": [{"src": 0, "dst": 5, "weight": 1}, {"src": 1, "dst": 5, "weight": 1}, {"src": 2, "dst": 5, "weight": 1},
                 {"src": 3, "dst": 5, "weight": 1}, {"src": 4, "dst": 5, "weight": 1}]})");
  EXPECT_EQ(snnc("compile --snn " + wide + " --hw " + hw), 3);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("partition"), std::string::npos);
}

TEST_F(Cli, DeadlockedSdfgExitsFour) {
  const auto g = write("dead.json", R"({"actors": [{"exec_time": 1}, {"exec_time": 1}],
    "channels": [{"src": 0, "dst": 1, "rate": 1}, {"src": 1, "dst": 0, "rate": 1}]})");
  EXPECT_EQ(snnc("analyze --sdfg " + g), 4);
  EXPECT_EQ(snnc("simulate --sdfg " + g), 4);
}

TEST_F(Cli, AnalyzeAndSimulate) {
  const auto g = write("ok.json", R"({"actors": [{"exec_time": 1}, {"exec_time": 2}],
    "channels": [{"src": 0, "dst": 1, "rate": 1}, {"src": 1, "dst": 0, "rate": 1, "initial_tokens": 1}]})");
  const auto a = kWork / "analysis.json";
  ASSERT_EQ(snnc("analyze --sdfg " + g + " --out " + a.string()), 0) << slurp(kWork / "stderr.txt");
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(slurp(a))["mcm"].get<double>(), 3.0);
  const auto t = kWork / "trace.jsonl";
  ASSERT_EQ(snnc("simulate --sdfg " + g + " --horizon 5 --out " + t.string()), 0) << slurp(kWork / "stderr.txt");
  std::istringstream lines(slurp(t));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("actor") && j.contains("tile") && j.contains("start") && j.contains("end") && j.contains("iter"));
    ++n;
  }
  EXPECT_EQ(n, 10);
}
