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

#ifndef MFELAB_ERRORS_HPP_
#define MFELAB_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace mfe {

// Base class for every error raised by the library. `check()` is a stable,
// machine-readable name of the violated condition; the CLI writes it into
// error.json.
class MfeError : public std::runtime_error {
 public:
  MfeError(std::string check, std::string detail)
      : std::runtime_error(check + ": " + detail),
        check_(std::move(check)),
        detail_(std::move(detail)) {}

  const std::string& check() const noexcept { return check_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string check_;
  std::string detail_;
};

#define MFELAB_DEFINE_ERROR(Name, check_name)              \
  class Name : public MfeError {                           \
   public:                                                 \
    explicit Name(const std::string& detail)               \
        : MfeError(check_name, detail) {}                  \
    Name(std::string check, const std::string& detail)     \
        : MfeError(std::move(check), detail) {}            \
  }

MFELAB_DEFINE_ERROR(InvalidGrid, "invalid grid");
MFELAB_DEFINE_ERROR(InvalidMeasure, "invalid population state");
MFELAB_DEFINE_ERROR(PointOutOfBounds, "point out of bounds");
MFELAB_DEFINE_ERROR(GridMismatch, "grid mismatch");
MFELAB_DEFINE_ERROR(MarginalMismatch, "marginal mismatch");
MFELAB_DEFINE_ERROR(Unsupported, "unsupported");
MFELAB_DEFINE_ERROR(TransitionEscape, "transition escapes grid");
MFELAB_DEFINE_ERROR(MaxIterationsExceeded, "max iterations exceeded");
MFELAB_DEFINE_ERROR(UnorderedProbes, "unordered probes");
MFELAB_DEFINE_ERROR(InvalidParams, "invalid parameters");
MFELAB_DEFINE_ERROR(InfeasibleBudget, "infeasible budget");
MFELAB_DEFINE_ERROR(NonPositiveCapital, "non-positive capital");
MFELAB_DEFINE_ERROR(MassSumViolation, "mass sum violation");
MFELAB_DEFINE_ERROR(ConfigError, "config error");

#undef MFELAB_DEFINE_ERROR

}  // namespace mfe

#endif  // MFELAB_ERRORS_HPP_
