// Copyright 2026 The MFE Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "mfelab/errors.hpp"
#include "mfelab/run.hpp"

namespace mfe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("mfelab_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = root_ / name;
    std::ofstream(p) << text;
    return p;
  }
  fs::path out(const std::string& name) const { return root_ / name; }

  fs::path root_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

const char* kCapacity = R"(model = "capacity"
command = "solve"
[grid]
states = 40
actions = 41
[params]
d = 1.0
)";

TEST_F(CliTest, SolveWritesEveryArtifact) {
  const fs::path o = out("solve");
  ASSERT_EQ(run_config(write("c.toml", kCapacity), o), kExitOk);
  for (const char* f : {"result.json", "population.csv", "policy.csv", "value.csv",
                        "diagnostics.json", "trace.csv"}) {
    EXPECT_TRUE(fs::exists(o / f)) << f;
  }
  EXPECT_FALSE(fs::exists(o / "error.json"));

  std::ifstream pop(o / "population.csv");
  std::string line;
  std::getline(pop, line);
  EXPECT_EQ(line, "node,x1,weight");
  double total = 0.0;
  std::size_t rows = 0;
  while (std::getline(pop, line)) {
    total += std::stod(line.substr(line.rfind(',') + 1));
    ++rows;
  }
  EXPECT_EQ(rows, 40u);
  EXPECT_NEAR(total, 1.0, 1e-9);

  const json r = load(o / "result.json");
  EXPECT_EQ(r["command"], "solve");
  EXPECT_EQ(r["result"]["status"], "converged");
  EXPECT_LE(r["result"]["residual"].get<double>(), r["solver"]["tol"].get<double>());
}

TEST_F(CliTest, DiscountOutOfRangeIsAConfigError) {
  const fs::path o = out("bad");
  const fs::path c = write("bad.toml", "model = \"capacity\"\n[params]\nbeta = 1.2\n");
  ASSERT_EQ(run_config(c, o), kExitConfig);
  const json e = load(o / "error.json");
  EXPECT_EQ(e["check"], "discount out of range");
  EXPECT_EQ(e["exit_code"], 4);
}

TEST_F(CliTest, StrictSchema) {
  const fs::path o = out("strict");
  EXPECT_EQ(run_config(write("u.toml", "model = \"capacity\"\nfoo = 1\n"), o), kExitConfig);
  EXPECT_EQ(load(o / "error.json")["check"], "unknown key");
  EXPECT_EQ(run_config(write("u2.toml", "model = \"capacity\"\n[params]\nrho = 0.5\nzeta = 2\n"), o),
            kExitConfig);
  EXPECT_EQ(load(o / "error.json")["check"], "unknown key");
  EXPECT_EQ(run_config(write("t.toml", "model = \"capacity\"\n[params]\nd = \"one\"\n"), o),
            kExitConfig);
  EXPECT_EQ(load(o / "error.json")["check"], "wrong type");
  EXPECT_EQ(run_config(write("m.toml", "command = \"solve\"\n"), o), kExitConfig);
  EXPECT_EQ(load(o / "error.json")["check"], "missing key");
  EXPECT_EQ(run_config(write("p.toml", "model = [\n"), o), kExitConfig);
  EXPECT_EQ(load(o / "error.json")["check"], "parse error");
  EXPECT_EQ(run_config(root_ / "missing.toml", o), kExitConfig);
  EXPECT_EQ(run_config(write("g.toml", "model = \"capacity\"\n[grid]\nstates = 1\n"), o),
            kExitConfig);
  EXPECT_EQ(run_config(write("n.toml", "model = \"nonsense\"\n"), o), kExitConfig);
}

TEST_F(CliTest, ValidationFailureExitsThree) {
  const fs::path o = out("v");
  const fs::path c = write("v.toml", R"(model = "aiyagari"
[grid]
states = 20
[params]
fixed_prices = [1.0, 1e-12]
)");
  ASSERT_EQ(run_config(c, o), kExitValidation);
  EXPECT_EQ(load(o / "error.json")["check"], "empty feasible set");
}

TEST_F(CliTest, NonConvergenceExitsTwoAndKeepsBestIterate) {
  const fs::path o = out("nc");
  const fs::path c = write("nc.toml", R"(model = "capacity"
[grid]
states = 40
[solver]
tol = 1e-13
max_outer = 2
)");
  ASSERT_EQ(run_config(c, o), kExitNonConvergence);
  EXPECT_EQ(load(o / "error.json")["check"], "max outer iterations exceeded");
  EXPECT_EQ(load(o / "result.json")["result"]["status"], "max outer iterations exceeded");
}

TEST_F(CliTest, SweepReportsMonotoneFlag) {
  const fs::path o = out("sweep");
  const fs::path c = write("s.toml", R"(model = "capacity"
command = "sweep"
[grid]
states = 40
actions = 41
[sweep]
param = "d"
values = [0.5, 1.0, 2.0]
expected_direction = "decreasing"
)");
  ASSERT_EQ(run_config(c, o), kExitOk);
  const json r = load(o / "result.json");
  EXPECT_EQ(r["monotone_flag"], true);
  EXPECT_EQ(r["values"].size(), 3u);
}

TEST_F(CliTest, SweepValuesMustBeStrictlyOrdered) {
  const fs::path o = out("sweep_bad");
  const fs::path c = write("s.toml", R"(model = "capacity"
command = "sweep"
[sweep]
param = "d"
values = [1.0, 0.5, 2.0]
expected_direction = "decreasing"
)");
  EXPECT_EQ(run_config(c, o), kExitConfig);
  EXPECT_EQ(load(o / "error.json")["check"], "value out of range");
}

TEST_F(CliTest, OutputsAreByteStable) {
  const fs::path c = write("c.toml", kCapacity);
  ASSERT_EQ(run_config(c, out("a")), kExitOk);
  ASSERT_EQ(run_config(c, out("b")), kExitOk);
  for (const char* f : {"result.json", "population.csv", "policy.csv", "value.csv",
                        "diagnostics.json", "trace.csv"}) {
    EXPECT_EQ(slurp(out("a") / f), slurp(out("b") / f)) << f;
  }
}

TEST_F(CliTest, SimulationIsByteStableForASeed) {
  const fs::path c = write("sim.toml", R"(model = "capacity"
command = "simulate"
seed = 11
[grid]
states = 30
actions = 31
[simulate]
agents = 300
horizon = 30
burn_in = 5
)");
  RunOverrides jobs;
  jobs.jobs = 2;
  ASSERT_EQ(run_config(c, out("a")), kExitOk);
  ASSERT_EQ(run_config(c, out("b"), jobs), kExitOk);
  EXPECT_EQ(slurp(out("a") / "result.json"), slurp(out("b") / "result.json"));
  EXPECT_TRUE(fs::exists(out("a") / "empirical.csv"));
  RunOverrides other;
  other.seed = 12;
  ASSERT_EQ(run_config(c, out("c"), other), kExitOk);
  EXPECT_NE(slurp(out("a") / "result.json"), slurp(out("c") / "result.json"));
}

TEST_F(CliTest, ReloadedResultReproducesResidual) {
  const fs::path c = write("c.toml", kCapacity);
  ASSERT_EQ(run_config(c, out("r")), kExitOk);
  const RecheckResult rc = recheck_result(load_config(c), out("r") / "result.json");
  EXPECT_NEAR(rc.recomputed, rc.recorded, 1e-12);
}

TEST_F(CliTest, ChecksPassForShippedModels) {
  for (const char* model : {"capacity", "quality_ladder", "reputation"}) {
    const fs::path c = write(std::string(model) + ".toml",
                             "model = \"" + std::string(model) +
                                 "\"\ncommand = \"check\"\n[grid]\nstates = 12\nactions = 21\n");
    EXPECT_EQ(run_config(c, out(model)), kExitOk) << model;
    EXPECT_EQ(load(out(model) / "result.json")["pass"], true) << model;
  }
}

TEST_F(CliTest, ProbeWritesOneClusterForCapacity) {
  const fs::path c = write("p.toml", R"(model = "capacity"
command = "probe-uniqueness"
[grid]
states = 30
actions = 31
)");
  ASSERT_EQ(run_config(c, out("p")), kExitOk);
  EXPECT_EQ(load(out("p") / "result.json")["report"]["cluster_count"], 1);
}

TEST_F(CliTest, TypedFamilySolves) {
  const fs::path c = write("t.toml", R"(model = "custom-typed"
[grid]
states = 30
actions = 31
[typed]
base = "capacity"
masses = [0.5, 0.5]
param = "d"
values = [0.8, 1.6]
)");
  EXPECT_EQ(run_config(c, out("t")), kExitOk);
}

TEST_F(CliTest, BinaryParsesFlags) {
  const fs::path c = write("c.toml", kCapacity);
  const std::string bin = MFE_LAB_BIN;
  auto exit_of = [](const std::string& cmd) {
    const int st = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  };
  EXPECT_EQ(exit_of(bin + " solve --config " + c.string() + " --out " + out("bin").string() +
                    " --tol 1e-6 --mode mu_s --jobs 1"),
            0);
  EXPECT_EQ(load(out("bin") / "result.json")["solver"]["tol"], 1e-6);
  EXPECT_EQ(exit_of(bin + " solve --config " + (root_ / "none.toml").string()), 4);
  EXPECT_EQ(exit_of(bin + " solve --config " + c.string() + " --mode sideways"), 4);
  EXPECT_EQ(exit_of(bin + " levitate --config " + c.string()), 4);
}

}  // namespace
}  // namespace mfe
