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

#ifndef MFELAB_RUN_HPP_
#define MFELAB_RUN_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mfelab/config.hpp"

namespace mfe {

enum ExitCode : int {
  kExitOk = 0,
  kExitNonConvergence = 2,
  kExitValidation = 3,
  kExitConfig = 4,
};

struct RunOverrides {
  std::optional<std::string> command;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<OuterMap> mode;
};

// Loads the config, applies the overrides, runs the command and writes its
// artifacts into `out` (created if needed). Every failure also writes
// error.json. Returns the process exit code.
int run_config(const std::filesystem::path& config, const std::filesystem::path& out,
               const RunOverrides& overrides = {});

// Same for an already parsed config.
int run(const RunConfig& cfg, const std::filesystem::path& out, std::size_t jobs = 1);

// Recomputes the consistency residual of the population stored in a solve's
// result.json under the config that produced it.
struct RecheckResult {
  double recorded = 0.0;
  double recomputed = 0.0;
};
RecheckResult recheck_result(const RunConfig& cfg, const std::filesystem::path& result_json);

}  // namespace mfe

#endif  // MFELAB_RUN_HPP_
