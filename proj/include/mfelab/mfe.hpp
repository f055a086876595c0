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

#ifndef MFELAB_MFE_HPP_
#define MFELAB_MFE_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfelab/dp.hpp"
#include "mfelab/kernel.hpp"
#include "mfelab/measure.hpp"
#include "mfelab/model.hpp"

namespace mfe {

enum class OuterMap {
  kMuS,  // s <- (1 - lambda) s + lambda mu_s
  kPhi,  // s <- (1 - lambda) s + lambda s^T Q
};
std::string to_string(OuterMap m);
OuterMap outer_map_from_string(const std::string& s);

struct SolverSettings {
  double tol = 1e-7;
  double damping = 0.5;
  std::size_t max_outer = 2000;
  OuterMap mode = OuterMap::kMuS;
  // Halve the damping (down to min_damping) when the residual has not
  // improved on its best value for `patience` iterations.
  bool adaptive_damping = true;
  double min_damping = 1.0 / 64.0;
  std::size_t patience = 8;
  ViOptions vi{};
  InvariantOptions invariant{};
  bool warm_start = true;
  bool diagnostics = true;
  std::size_t ergodicity_horizon = 200;
};

enum class MfeStatus { kConverged, kMaxOuterExceeded, kFailed };
std::string to_string(MfeStatus s);

struct MfeDiagnostics {
  std::optional<MonotonicityReport> monotone_in_x;
  std::optional<ErgodicityReport> ergodicity;
  Ergodicity inner_flag = Ergodicity::kUnique;
  std::size_t vi_iterations_total = 0;
};

struct MfeResult {
  MfeStatus status = MfeStatus::kFailed;
  std::string error;        // set when status == kFailed
  std::string error_check;  // check name of the failure
  std::optional<PopulationState> population;
  Policy policy;
  ValueFunction value;
  double residual = 0.0;        // kolmogorov_distance(s, mu_s) at the returned s
  double aggregate_gap = 0.0;   // |H(mu_s) - H(s)|
  double aggregator_at_eq = 0.0;
  std::size_t outer_iterations = 0;
  std::vector<double> trace;    // residual per outer iteration
  bool non_ergodic_at_candidate = false;
  MfeDiagnostics diagnostics;

  bool converged() const { return status == MfeStatus::kConverged; }
};

// Invariant distribution of the kernel induced by the optimal policy at s,
// lifted to the population grid for action-coupled specs and computed per
// type for typed families.
struct InnerSolve {
  ViResult vi;
  MarkovKernel kernel;
  InvariantResult invariant;
  PopulationState mu;  // on the population grid
};
InnerSolve inner_solve(const PopulationState& s, const ModelSpec& spec,
                       const SolverSettings& settings = {},
                       const ValueFunction* warm_start = nullptr);

// One step of the population flow under the optimal policy at s.
PopulationState phi_apply(const PopulationState& s, const ModelSpec& spec,
                          const ViOptions& vi = {});

// Damped fixed-point iteration for s = mu_s (or s = Phi s). Never throws for
// solver trouble: non-convergence and inner failures are reported in status.
MfeResult solve_mfe(const ModelSpec& spec, const PopulationState& s0,
                    const SolverSettings& settings = {});

// kolmogorov_distance(s, mu_s), computed from a cold start.
double consistency_residual(const PopulationState& s, const ModelSpec& spec,
                            const SolverSettings& settings = {});

struct ProbeLocalization {
  std::size_t low = 0;   // cluster representatives, ordered by H
  std::size_t high = 0;
  bool monotone_in_x = true;
  bool decreasing_in_s = true;
  bool ergodic = true;
  std::string broken;    // names of the failed hypotheses, or empty
};

struct UniquenessReport {
  std::vector<MfeResult> results;
  std::vector<std::size_t> cluster_of;        // per start; SIZE_MAX if the solve failed
  std::size_t cluster_count = 0;
  std::vector<std::vector<double>> distance;  // Kolmogorov, NaN when unavailable
  std::vector<std::vector<double>> aggregate_gap;
  // Ordering of cluster i vs j under the aggregator and under the stochastic
  // order (or "n/a" when undefined).
  std::vector<std::vector<std::string>> aggregator_order;
  std::vector<std::vector<std::string>> sd_order;
  // For multiple clusters: whether every pair is incomparable in the
  // stochastic order, and which uniqueness hypotheses failed.
  bool distinct_pairs_incomparable = true;
  std::vector<ProbeLocalization> localization;
};

UniquenessReport uniqueness_probe(const ModelSpec& spec,
                                  const std::vector<PopulationState>& starts,
                                  const SolverSettings& settings = {},
                                  std::size_t jobs = 1);

enum class Direction { kIncreasing, kDecreasing };
std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct SweepPoint {
  double param = 0.0;
  MfeResult result;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  Direction expected = Direction::kIncreasing;
  bool monotone_flag = false;
};

using SpecBuilder = std::function<ModelSpec(double)>;
using StartBuilder = std::function<PopulationState(const ModelSpec&)>;

// Solves at every parameter value (from `start`, uniform by default) and
// flags whether H at equilibrium moves in the expected direction, allowing
// tol * H-range of slack between neighbours.
SweepResult comparative_sweep(const SpecBuilder& builder, const std::vector<double>& params,
                              Direction expected, const SolverSettings& settings = {},
                              const StartBuilder& start = nullptr, std::size_t jobs = 1);

// Runs f(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f);

}  // namespace mfe

#endif  // MFELAB_MFE_HPP_
