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

// mfe_lab: solve, probe, sweep, simulate and check mean field equilibrium
// models described by a TOML config.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

#include "mfelab/errors.hpp"
#include "mfelab/run.hpp"

namespace {

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("mfe_lab");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("MFE_LAB_LOG");
  const std::string level = env ? env : "warn";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::warn);
    spdlog::warn("MFE_LAB_LOG={} not recognised; using warn", level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Mean field equilibrium lab"};
  app.require_subcommand(1);

  std::string config;
  std::string out = "mfe_out";
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  double tol = 0.0;
  std::string mode;

  for (const char* name : {"solve", "probe-uniqueness", "sweep", "simulate", "check"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "TOML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--jobs", jobs, "worker threads for probes, sweeps and simulation")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--tol", tol, "outer tolerance (overrides the config)");
    sub->add_option("--mode", mode, "outer map")->check(CLI::IsMember({"mu_s", "phi"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mfe::kExitConfig;
  }

  mfe::RunOverrides overrides;
  for (const CLI::App* sub : app.get_subcommands()) {
    overrides.command = sub->get_name();
    if (sub->count("--jobs")) overrides.jobs = jobs;
    if (sub->count("--seed")) overrides.seed = seed;
    if (sub->count("--tol")) overrides.tol = tol;
    if (sub->count("--mode")) overrides.mode = mfe::outer_map_from_string(mode);
  }
  return mfe::run_config(config, out, overrides);
}
