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

#ifndef MFELAB_MODEL_HPP_
#define MFELAB_MODEL_HPP_

#include <any>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfelab/measure.hpp"

namespace mfe {

// One realization of the idiosyncratic shock. `z2` is only read by models
// with two-dimensional shocks.
struct Shock {
  double z = 0.0;
  double z2 = 0.0;
  double prob = 0.0;
};

struct ShockDistribution {
  std::vector<Shock> outcomes;

  static ShockDistribution make(const std::vector<double>& values,
                                const std::vector<double>& probs);
  static ShockDistribution deterministic(double z = 1.0);

  // Empty string when valid, otherwise a description of the first problem.
  std::string problem() const;
  double max_value() const;
  double min_value() const;
};

enum class Coupling { kStatesOnly, kStatesAndActions };

// Contiguous inclusive index range into the action grid.
struct ActionRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

// Everything a payoff/transition closure may read about the population:
// the state itself, its aggregator value, and an optional model-defined
// cache built once per population state.
struct PopulationView {
  PopulationState state;
  double aggregate = 0.0;
  std::any cache;
};

using PayoffFn =
    std::function<double(const StatePoint& x, double a, const PopulationView& s)>;
using TransitionFn = std::function<StatePoint(
    const StatePoint& x, double a, const PopulationView& s, const Shock& shock)>;
using FeasibleFn = std::function<ActionRange(
    std::size_t node, const StatePoint& x, const PopulationView& s)>;
using AggregatorFn = std::function<double(const PopulationState& s)>;

// With probability `prob` an agent leaves and is replaced by a newcomer at
// `node`. Enters the population kernel only; the agent's own problem treats
// exit as terminal and folds survival into the discount factor.
struct Regeneration {
  double prob = 0.0;
  std::size_t node = 0;
};

// An anonymous stochastic game reduced to the single-agent primitives.
// Closures must be pure and re-entrant: solvers call them concurrently.
struct ModelSpec {
  std::string name;
  GridPtr state_grid;
  // Grid the population state lives on: state_grid, or state x action grid
  // when coupling == kStatesAndActions.
  GridPtr population_grid;
  std::vector<double> action_grid;

  PayoffFn payoff;
  TransitionFn transition;
  FeasibleFn feasible;
  ShockDistribution shocks;
  double discount = 0.9;
  AggregatorFn aggregator;
  Coupling coupling = Coupling::kStatesOnly;

  std::function<std::any(const PopulationState&)> make_cache;

  // Actions form an interval and closures accept any action inside
  // [action_grid.front(), action_grid.back()]; the grid argmax is then
  // refined continuously within the bracketing action cells.
  bool continuous_actions = false;
  std::optional<Regeneration> regeneration;

  // Transformed policy used by structure reports (e.g. post-investment
  // state). Defaults to the action itself.
  std::function<double(const StatePoint& x, double a)> policy_transform;
  // When set, the transformed policy is checked for this Lipschitz bound.
  std::optional<double> lipschitz_bound;

  // Non-empty for ex-ante heterogeneous families: axis 1 of state_grid is a
  // categorical type axis whose per-type masses are conserved.
  std::vector<double> type_masses;
};

PopulationView make_view(const ModelSpec& spec, const PopulationState& s);

// H(s). Throws GridMismatch if s is not on spec.population_grid.
double aggregator_value(const PopulationState& s, const ModelSpec& spec);

// |H(Dirac at last node) - H(Dirac at first node)|, floored at 1.
double aggregator_range(const ModelSpec& spec);

// State marginal of a population (identity unless actions are coupled).
PopulationState state_marginal(const ModelSpec& spec, const PopulationState& s);

// Lift of a state distribution to the state-action grid that puts the mass
// of each state y on the action actions[y] (split between bracketing action
// nodes). Identity for state-only coupling.
PopulationState lift_population(const ModelSpec& spec,
                                const PopulationState& state_dist,
                                std::span<const double> actions);

struct Violation {
  std::string check;
  std::string detail;
};

struct ValidationReport {
  bool pass = true;
  std::vector<Violation> violations;

  void add(std::string check, std::string detail);
};

// Grid-scale check of the standing conditions: discount in (0,1), valid
// shock distribution and action grid, nonempty feasible sets, finite payoffs
// and transitions, transition images inside the grid.
ValidationReport validate_model(const ModelSpec& spec,
                                const std::vector<PopulationState>& probes);

struct TypedMember {
  ModelSpec spec;
  double mass = 0.0;
};

struct TypedModelFamily {
  std::vector<TypedMember> types;
};

// Extended model on X x Theta (type axis categorical, labels 0..T-1). Member
// closures are evaluated at the type-marginalized population state.
ModelSpec extend_with_types(const TypedModelFamily& family);

// Product of a base population state with the type masses.
PopulationState typed_population(const ModelSpec& extended,
                                 const PopulationState& base);

// Type-marginalized state S(s_h) on the base grid.
PopulationState marginalize_types(const PopulationState& extended,
                                  const GridPtr& base_grid);

}  // namespace mfe

#endif  // MFELAB_MODEL_HPP_
