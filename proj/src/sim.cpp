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

#include "mfelab/sim.hpp"

#include <algorithm>
#include <cmath>

#include "mfelab/errors.hpp"
#include "mfelab/mfe.hpp"

namespace mfe {

namespace {

enum Stream : std::uint64_t { kInit = 0, kShock = 1, kRegen = 2, kRound = 3 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t pick(std::span<const double> cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

StatePoint clamp_to(const Grid& g, StatePoint y) {
  for (std::size_t axis = 0; axis < g.dims(); ++axis) {
    if (g.axis_kind(axis) == AxisKind::kCategorical) continue;
    double& v = axis == 0 ? y.x1 : y.x2;
    v = std::clamp(v, g.lo(axis), g.hi(axis));
  }
  return y;
}

std::size_t lower_node(const Grid& g, const StatePoint& x) {
  const std::size_t i0 = project_axis(x.x1, g, 0).lo_index;
  if (g.dims() == 1) return i0;
  const AxisWeights w1 = project_axis(x.x2, g, 1);
  // Round the second axis to its nearest node so the feasible set is taken
  // at a matching slice.
  const std::size_t i1 = w1.lo_weight >= 0.5 ? w1.lo_index : w1.lo_index + 1;
  return g.flat(i0, i1);
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t agent, std::uint64_t period,
                       std::uint64_t stream) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ agent);
  h = splitmix64(h ^ period);
  h = splitmix64(h ^ stream);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

SimReport simulate_population(const ModelSpec& spec, const Policy& policy,
                              const PopulationState& s_star, const SimConfig& cfg) {
  if (cfg.m < 2) throw InvalidParams("simulation needs m >= 2 agents");
  if (cfg.horizon < 1) throw InvalidParams("simulation horizon must be at least 1");
  if (cfg.burn_in >= cfg.horizon) throw InvalidParams("burn_in must be below the horizon");
  if (cfg.snapshot_every < 1) throw InvalidParams("snapshot cadence must be at least 1");
  const Grid& g = *spec.state_grid;
  if (policy.action.size() != g.size()) throw GridMismatch("policy does not match the state grid");

  const PopulationView view = make_view(spec, s_star);
  const PopulationState target = state_marginal(spec, s_star);
  std::vector<double> init_cdf(target.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) init_cdf[k] = (acc += target[k]);
  std::vector<double> shock_cdf;
  acc = 0.0;
  for (const Shock& z : spec.shocks.outcomes) shock_cdf.push_back(acc += z.prob);
  const auto& ag = spec.action_grid;
  const bool lattice = cfg.states == AgentStates::kLattice;

  std::vector<StatePoint> x(cfg.m);
  std::vector<std::size_t> node(cfg.m);
  for (std::size_t i = 0; i < cfg.m; ++i) {
    node[i] = pick(init_cdf, counter_uniform(cfg.seed, i, 0, kInit) * init_cdf.back());
    x[i] = g.point(node[i]);
  }

  SimReport rep;
  rep.trajectories.resize(std::min(cfg.sample_agents, cfg.m));
  const double inv_m = 1.0 / static_cast<double>(cfg.m);
  auto snapshot = [&](std::size_t t) {
    // Sum agent counts first so atoms hold whole multiples of 1/m.
    std::vector<double> w(g.size(), 0.0);
    for (std::size_t i = 0; i < cfg.m; ++i) {
      if (lattice) {
        w[node[i]] += 1.0;
      } else {
        const SparseMass mass = project_mass(x[i], g);
        for (std::size_t k = 0; k < mass.count; ++k) w[mass.node[k]] += mass.weight[k];
      }
    }
    for (double& v : w) v *= inv_m;
    const PopulationState emp = PopulationState::normalized(spec.state_grid, w);
    rep.times.push_back(t);
    rep.distance.push_back(kolmogorov_distance(emp, target));
    if (cfg.keep_snapshots) rep.snapshots.push_back(w);
    for (std::size_t i = 0; i < rep.trajectories.size(); ++i) rep.trajectories[i].push_back(x[i]);
    if (t == cfg.horizon) rep.final_empirical = std::move(w);
  };
  snapshot(0);

  auto advance = [&](std::size_t i, std::size_t t) {
    if (spec.regeneration &&
        counter_uniform(cfg.seed, i, t, kRegen) < spec.regeneration->prob) {
      node[i] = spec.regeneration->node;
      x[i] = g.point(node[i]);
      return;
    }
    const Shock& z = spec.shocks.outcomes[pick(shock_cdf, counter_uniform(cfg.seed, i, t, kShock) *
                                                             shock_cdf.back())];
    if (lattice) {
      const StatePoint y = clamp_to(g, spec.transition(g.point(node[i]), policy.action[node[i]],
                                                       view, z));
      const SparseMass mass = project_mass(y, g);
      const double u = counter_uniform(cfg.seed, i, t, kRound);
      double c = 0.0;
      std::size_t chosen = mass.node[mass.count - 1];
      for (std::size_t k = 0; k < mass.count; ++k) {
        c += mass.weight[k];
        if (u < c) {
          chosen = mass.node[k];
          break;
        }
      }
      node[i] = chosen;
      x[i] = g.point(chosen);
      return;
    }
    const std::size_t near = lower_node(g, x[i]);
    const ActionRange r = spec.feasible(near, x[i], view);
    const double a = std::clamp(interpolate(policy.action, g, x[i]), ag[r.first], ag[r.last]);
    x[i] = clamp_to(g, spec.transition(x[i], a, view, z));
  };

  const std::size_t shards = std::max<std::size_t>(1, std::min(cfg.jobs, cfg.m));
  const std::size_t chunk = (cfg.m + shards - 1) / shards;
  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    parallel_for(shards, shards, [&](std::size_t s) {
      for (std::size_t i = s * chunk; i < std::min(cfg.m, (s + 1) * chunk); ++i) advance(i, t);
    });
    if (t % cfg.snapshot_every == 0 || t == cfg.horizon) snapshot(t);
  }

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    if (rep.times[k] >= cfg.burn_in) {
      total += rep.distance[k];
      ++count;
    }
  }
  rep.mean_distance_post_burn = count ? total / static_cast<double>(count) : 0.0;
  return rep;
}

}  // namespace mfe
