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

#ifndef MFELAB_CONFIG_HPP_
#define MFELAB_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mfelab/mfe.hpp"
#include "mfelab/model.hpp"
#include "mfelab/sim.hpp"

namespace mfe {

using ParamValue =
    std::variant<double, bool, std::vector<double>, std::vector<std::vector<double>>>;
using ParamMap = std::map<std::string, ParamValue>;

struct SweepConfig {
  std::string param;
  std::vector<double> values;
  Direction expected = Direction::kIncreasing;
};

struct TypedConfig {
  std::string base = "capacity";
  std::vector<double> masses;
  std::string param;
  std::vector<double> values;  // one per type
};

struct RunConfig {
  std::string model;
  std::string command = "solve";
  std::optional<std::size_t> states;
  std::optional<std::size_t> actions;
  ParamMap params;
  SolverSettings solver;
  SweepConfig sweep;
  std::vector<std::string> starts{"dirac_lo", "dirac_hi", "uniform", "random", "random"};
  SimConfig simulate;
  TypedConfig typed;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c{"solve", "probe-uniqueness", "sweep", "simulate",
                                          "check"};
  return c;
}

// Parses TOML text against the strict schema. Throws ConfigError naming the
// offending key; parameter values are range-checked when the model is built.
RunConfig parse_config(const std::string& toml_text);
RunConfig load_config(const std::filesystem::path& path);

// Model spec for the config, with `overrides` applied on top of [params].
// Throws ConfigError for unknown keys and InvalidParams for out-of-range
// values.
ModelSpec build_spec(const RunConfig& cfg, const ParamMap& overrides = {});

// Builder for sweeps over cfg.sweep.param.
SpecBuilder sweep_builder(const RunConfig& cfg);

// Named start state: dirac_lo, dirac_hi, uniform or random (k-th random draw
// from the seed).
PopulationState named_start(const ModelSpec& spec, const std::string& name,
                            std::uint64_t seed, std::size_t k);

}  // namespace mfe

#endif  // MFELAB_CONFIG_HPP_
