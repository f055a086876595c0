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

#ifndef MFELAB_SIM_HPP_
#define MFELAB_SIM_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mfelab/dp.hpp"
#include "mfelab/measure.hpp"
#include "mfelab/model.hpp"

namespace mfe {

enum class AgentStates {
  // Agents move on the continuous state space; the policy is interpolated
  // from the grid and clamped to the feasible range.
  kContinuous,
  // Agents sit on grid nodes; an off-grid next state is rounded to one of its
  // bracketing nodes with the interpolation weights as probabilities, so the
  // agent chain is exactly the discretized kernel.
  kLattice,
};

struct SimConfig {
  std::size_t m = 1000;
  std::size_t horizon = 200;
  std::uint64_t seed = 0;
  std::size_t burn_in = 50;
  std::size_t snapshot_every = 1;
  AgentStates states = AgentStates::kContinuous;
  // Number of agents whose trajectories are recorded (the first ones).
  std::size_t sample_agents = 0;
  // Keep the empirical distribution at every snapshot.
  bool keep_snapshots = false;
  std::size_t jobs = 1;
};

struct SimReport {
  std::vector<std::size_t> times;        // snapshot periods, 0 = initial draw
  std::vector<double> distance;          // Kolmogorov distance to s* per snapshot
  double mean_distance_post_burn = 0.0;  // over snapshots with t >= burn_in
  std::vector<std::vector<double>> snapshots;
  std::vector<double> final_empirical;
  std::vector<std::vector<StatePoint>> trajectories;  // [agent][snapshot]
};

// Uniform draw in [0, 1) for (seed, agent, period, stream); agents own
// independent streams so results do not depend on m or on sharding.
double counter_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t period,
                       std::uint64_t stream);

// Agents start from i.i.d. draws of (the state marginal of) s_star and play
// the frozen policy against s_star. Throws InvalidParams for a malformed
// config.
SimReport simulate_population(const ModelSpec& spec, const Policy& policy,
                              const PopulationState& s_star, const SimConfig& cfg);

}  // namespace mfe

#endif  // MFELAB_SIM_HPP_
