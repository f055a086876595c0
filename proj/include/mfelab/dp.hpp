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

#ifndef MFELAB_DP_HPP_
#define MFELAB_DP_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfelab/measure.hpp"
#include "mfelab/model.hpp"

namespace mfe {

struct ValueFunction {
  GridPtr grid;
  std::vector<double> values;

  static ValueFunction zeros(GridPtr grid);
};

// Greedy policy. `index` is the grid argmax; `action` equals
// action_grid[index] unless continuous refinement moved it inside the
// bracketing action cells.
struct Policy {
  GridPtr grid;
  std::vector<double> action_grid;
  std::vector<std::size_t> index;
  std::vector<double> action;
};

// Payoffs and projected next-state masses for every (node, feasible action)
// at one population state. Fixed across value-iteration sweeps.
class StageTable {
 public:
  StageTable(const ModelSpec& spec, const PopulationView& view);

  std::size_t nodes() const { return ranges_.size(); }
  const ActionRange& range(std::size_t node) const { return ranges_[node]; }

  // Q-value of action `ai` at `node` against continuation values v.
  double q_value(std::size_t node, std::size_t ai, std::span<const double> v,
                 double beta) const;

 private:
  std::vector<ActionRange> ranges_;
  std::vector<std::size_t> offset_;  // first (node, action) slot of each node
  std::vector<double> payoff_;
  std::vector<std::size_t> mass_begin_;
  std::vector<std::size_t> mass_node_;
  std::vector<double> mass_weight_;
};

// One application of the Bellman operator on the feasible action grid. Ties
// break to the lowest action index.
std::pair<ValueFunction, Policy> bellman_apply(const ValueFunction& v,
                                               const PopulationState& s,
                                               const ModelSpec& spec);

struct ViOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 100000;
  // Continuous refinement of the greedy policy (only for specs with
  // continuous_actions).
  bool refine = true;
  bool record_trace = false;
};

struct ViResult {
  ValueFunction value;
  Policy policy;
  std::size_t iterations = 0;
  double residual = 0.0;       // last sup-norm Bellman residual
  std::vector<double> trace;   // successive sup-norm differences
};

// Iterates T until ||TV - V|| <= tol (1 - beta) / (2 beta), so the returned
// value is within tol / 2 of the fixed point. beta = 0 stops after one sweep.
ViResult value_iterate(const PopulationState& s, const ModelSpec& spec,
                       const ViOptions& options = {},
                       const ValueFunction* warm_start = nullptr);
ViResult value_iterate(const PopulationView& view, const ModelSpec& spec,
                       const ViOptions& options = {},
                       const ValueFunction* warm_start = nullptr);

// Greedy policy for v at view, refined when the model has continuous actions.
Policy greedy_policy(const ValueFunction& v, const PopulationView& view,
                     const ModelSpec& spec, bool refine = true);

// Value of one continuous action at a node: payoff plus discounted
// interpolated continuation.
double action_value(const ModelSpec& spec, const PopulationView& view,
                    const ValueFunction& v, std::size_t node, double a);

struct PolicyReport {
  bool monotone_in_x = true;
  bool decreasing_in_s = true;
  bool lipschitz_checked = false;
  bool lipschitz_ok = true;
  double lipschitz_ratio = 0.0;  // max adjacent-node slope of the policy
  std::vector<std::string> violations;
  // Transformed policy per probe, node-major.
  std::vector<std::vector<double>> transformed;

  bool pass() const { return monotone_in_x && decreasing_in_s && lipschitz_ok; }
};

// Structure of the transformed policy across H-ordered probes: monotone in x
// (along the first axis), non-increasing in s, and Lipschitz when the model
// declares a bound. Every comparison allows one action cell of slack.
// Throws UnorderedProbes when the probes are not H-increasing.
PolicyReport policy_structure_report(const ModelSpec& spec,
                                     const std::vector<PopulationState>& probes,
                                     const ViOptions& options = {});

}  // namespace mfe

#endif  // MFELAB_DP_HPP_
