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

#include "mfelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "mfelab/errors.hpp"

namespace mfe {

namespace {

std::string describe_point(const Grid& g, const StatePoint& x) {
  std::ostringstream os;
  os.precision(17);
  os << "x = (" << x.x1;
  if (g.dims() > 1) os << ", " << x.x2;
  os << ")";
  return os.str();
}

std::string node_label(const Grid& g, std::size_t node) {
  if (node + 1 == g.size()) return "hi";
  if (node == 0) return "lo";
  return describe_point(g, g.point(node));
}

bool inside(const Grid& g, const StatePoint& y) {
  for (std::size_t axis = 0; axis < g.dims(); ++axis) {
    const double v = y[axis];
    if (g.axis_kind(axis) == AxisKind::kCategorical) {
      const auto pts = g.axis(axis);
      if (std::find(pts.begin(), pts.end(), v) == pts.end()) return false;
    } else if (v < g.lo(axis) - kBoundsTol || v > g.hi(axis) + kBoundsTol) {
      return false;
    }
  }
  return true;
}

struct TypedCache {
  std::vector<PopulationView> member_views;
};

}  // namespace

ShockDistribution ShockDistribution::make(const std::vector<double>& values,
                                          const std::vector<double>& probs) {
  if (values.size() != probs.size()) {
    throw InvalidParams("shock values and probabilities differ in length");
  }
  ShockDistribution d;
  for (std::size_t j = 0; j < values.size(); ++j) {
    d.outcomes.push_back({values[j], 0.0, probs[j]});
  }
  return d;
}

ShockDistribution ShockDistribution::deterministic(double z) {
  return ShockDistribution{{{z, 0.0, 1.0}}};
}

std::string ShockDistribution::problem() const {
  if (outcomes.empty()) return "no shock outcomes";
  double total = 0.0;
  for (const Shock& s : outcomes) {
    if (!std::isfinite(s.z) || !std::isfinite(s.z2)) return "non-finite shock value";
    if (!(s.prob >= 0.0)) return "negative shock probability";
    total += s.prob;
  }
  if (std::abs(total - 1.0) > kMassTol) return "shock probabilities do not sum to 1";
  return {};
}

double ShockDistribution::max_value() const {
  double m = outcomes.front().z;
  for (const Shock& s : outcomes) m = std::max(m, s.z);
  return m;
}

double ShockDistribution::min_value() const {
  double m = outcomes.front().z;
  for (const Shock& s : outcomes) m = std::min(m, s.z);
  return m;
}

PopulationView make_view(const ModelSpec& spec, const PopulationState& s) {
  require_same_grid(s.grid(), *spec.population_grid, "population state");
  PopulationView view{s, spec.aggregator(s), {}};
  if (spec.make_cache) view.cache = spec.make_cache(s);
  return view;
}

double aggregator_value(const PopulationState& s, const ModelSpec& spec) {
  require_same_grid(s.grid(), *spec.population_grid, "aggregator_value");
  return spec.aggregator(s);
}

double aggregator_range(const ModelSpec& spec) {
  const GridPtr& g = spec.population_grid;
  PopulationState lo = PopulationState::dirac(g, 0);
  PopulationState hi = PopulationState::dirac(g, g->size() - 1);
  if (!spec.type_masses.empty()) {
    // Dirac states would violate the type masses; use extreme states per type.
    const std::size_t n0 = g->axis_size(0);
    std::vector<double> wl(g->size(), 0.0), wh(g->size(), 0.0);
    for (std::size_t t = 0; t < spec.type_masses.size(); ++t) {
      wl[g->flat(0, t)] = spec.type_masses[t];
      wh[g->flat(n0 - 1, t)] = spec.type_masses[t];
    }
    lo = PopulationState::normalized(g, wl);
    hi = PopulationState::normalized(g, wh);
  }
  const double r = std::abs(spec.aggregator(hi) - spec.aggregator(lo));
  return std::max(1.0, r);
}

PopulationState state_marginal(const ModelSpec& spec, const PopulationState& s) {
  require_same_grid(s.grid(), *spec.population_grid, "state_marginal");
  if (spec.coupling == Coupling::kStatesOnly) return s;
  return PopulationState::normalized(spec.state_grid, marginal(s, 0));
}

PopulationState lift_population(const ModelSpec& spec,
                                const PopulationState& state_dist,
                                std::span<const double> actions) {
  require_same_grid(state_dist.grid(), *spec.state_grid, "lift_population");
  if (spec.coupling == Coupling::kStatesOnly) return state_dist;
  const Grid& pg = *spec.population_grid;
  std::vector<double> w(pg.size(), 0.0);
  for (std::size_t y = 0; y < state_dist.size(); ++y) {
    const double m = state_dist[y];
    if (m == 0.0) continue;
    const AxisWeights aw = project_axis(actions[y], pg, 1);
    w[pg.flat(y, aw.lo_index)] += m * aw.lo_weight;
    if (aw.lo_weight < 1.0) w[pg.flat(y, aw.lo_index + 1)] += m * (1.0 - aw.lo_weight);
  }
  return PopulationState::normalized(spec.population_grid, std::move(w));
}

void ValidationReport::add(std::string check, std::string detail) {
  pass = false;
  violations.push_back({std::move(check), std::move(detail)});
}

ValidationReport validate_model(const ModelSpec& spec,
                                const std::vector<PopulationState>& probes) {
  ValidationReport report;
  if (!(spec.discount > 0.0 && spec.discount < 1.0)) {
    std::ostringstream os;
    os << "beta = " << spec.discount << " not in (0, 1)";
    report.add("discount out of range", os.str());
  }
  if (const std::string p = spec.shocks.problem(); !p.empty()) {
    report.add("invalid shock distribution", p);
  }
  if (spec.action_grid.empty()) {
    report.add("invalid action grid", "empty action grid");
  }
  for (std::size_t i = 1; i < spec.action_grid.size(); ++i) {
    if (!(spec.action_grid[i] > spec.action_grid[i - 1])) {
      report.add("invalid action grid", "actions not strictly increasing");
      break;
    }
  }
  if (probes.empty()) report.add("no probe states", "probe list is empty");
  if (!report.pass && report.violations.front().check == "invalid action grid") {
    return report;
  }

  const Grid& g = *spec.state_grid;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    if (!probes[p].grid().same_as(*spec.population_grid)) {
      report.add("probe grid mismatch", "probe " + std::to_string(p));
      continue;
    }
    const PopulationView view = make_view(spec, probes[p]);
    if (!std::isfinite(view.aggregate)) {
      report.add("aggregator not finite", "probe " + std::to_string(p));
      continue;
    }
    // One entry per (check, node) is enough to localize a failure.
    for (std::size_t node = 0; node < g.size(); ++node) {
      const StatePoint x = g.point(node);
      ActionRange r;
      try {
        r = spec.feasible(node, x, view);
      } catch (const MfeError& e) {
        report.add("empty feasible set", describe_point(g, x) + ": " + e.what());
        continue;
      }
      if (r.first > r.last || r.last >= spec.action_grid.size()) {
        report.add("empty feasible set", describe_point(g, x) + ", probe " +
                                             std::to_string(p));
        continue;
      }
      bool payoff_bad = false, trans_bad = false, escape = false;
      for (std::size_t ai = r.first; ai <= r.last; ++ai) {
        const double a = spec.action_grid[ai];
        const double pi = spec.payoff(x, a, view);
        if (!payoff_bad && !std::isfinite(pi)) {
          payoff_bad = true;
          std::ostringstream os;
          os << describe_point(g, x) << ", a = " << a << ", probe " << p;
          report.add("payoff not finite", os.str());
        }
        for (const Shock& z : spec.shocks.outcomes) {
          const StatePoint y = spec.transition(x, a, view, z);
          if (!std::isfinite(y.x1) || !std::isfinite(y.x2)) {
            if (!trans_bad) {
              trans_bad = true;
              report.add("transition not finite", describe_point(g, x));
            }
          } else if (!escape && !inside(g, y)) {
            escape = true;
            std::ostringstream os;
            os << "at x = " << node_label(g, node) << " (a = " << a
               << ", zeta = " << z.z << ", image " << describe_point(g, y)
               << ")";
            report.add("transition escapes grid", os.str());
          }
        }
      }
    }
  }
  return report;
}

PopulationState marginalize_types(const PopulationState& extended,
                                  const GridPtr& base_grid) {
  const Grid& g = extended.grid();
  std::vector<double> w(base_grid->size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) w[g.unflat(k).first] += extended[k];
  return PopulationState::normalized(base_grid, std::move(w));
}

PopulationState typed_population(const ModelSpec& extended,
                                 const PopulationState& base) {
  const Grid& g = *extended.state_grid;
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t t = 0; t < extended.type_masses.size(); ++t) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      w[g.flat(i, t)] = base[i] * extended.type_masses[t];
    }
  }
  return PopulationState::normalized(extended.state_grid, std::move(w));
}

ModelSpec extend_with_types(const TypedModelFamily& family) {
  if (family.types.empty()) throw InvalidParams("type family is empty");
  double total = 0.0;
  for (const TypedMember& m : family.types) {
    if (!(m.mass >= 0.0)) throw MassSumViolation("negative type mass");
    total += m.mass;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    throw MassSumViolation("type masses sum to " + std::to_string(total));
  }
  const ModelSpec& base = family.types.front().spec;
  if (base.state_grid->dims() != 1) {
    throw Unsupported("typed families require a 1-D base state grid");
  }
  for (const TypedMember& m : family.types) {
    require_same_grid(*m.spec.state_grid, *base.state_grid, "typed family");
    if (m.spec.coupling != Coupling::kStatesOnly || m.spec.regeneration) {
      throw Unsupported("typed families support state-coupled models without regeneration");
    }
    if (m.spec.discount != base.discount) {
      throw InvalidParams("typed family members must share the discount factor");
    }
    if (m.spec.shocks.outcomes.size() != base.shocks.outcomes.size()) {
      throw InvalidParams("typed family members must share the shock support");
    }
    if (m.spec.action_grid != base.action_grid) {
      throw InvalidParams("typed family members must share the action grid");
    }
  }

  const GridPtr base_grid = base.state_grid;
  std::vector<double> labels(family.types.size());
  for (std::size_t t = 0; t < labels.size(); ++t) labels[t] = static_cast<double>(t);
  const auto base_axis = base_grid->axis(0);
  GridPtr grid = Grid::product(std::vector<double>(base_axis.begin(), base_axis.end()),
                               labels, AxisKind::kCategorical);

  auto members = std::make_shared<std::vector<ModelSpec>>();
  for (const TypedMember& m : family.types) members->push_back(m.spec);
  const std::size_t n0 = base_grid->size();

  ModelSpec ext;
  ext.name = base.name + "_typed";
  ext.state_grid = grid;
  ext.population_grid = grid;
  ext.action_grid = base.action_grid;
  ext.shocks = base.shocks;
  ext.discount = base.discount;
  ext.continuous_actions = base.continuous_actions;
  ext.lipschitz_bound = base.lipschitz_bound;
  for (const TypedMember& m : family.types) ext.type_masses.push_back(m.mass);

  ext.make_cache = [members, base_grid](const PopulationState& s) -> std::any {
    const PopulationState marg = marginalize_types(s, base_grid);
    TypedCache cache;
    for (const ModelSpec& m : *members) cache.member_views.push_back(make_view(m, marg));
    return cache;
  };
  ext.aggregator = [members, base_grid](const PopulationState& s) {
    return members->front().aggregator(marginalize_types(s, base_grid));
  };
  auto type_of = [](const StatePoint& x) { return static_cast<std::size_t>(x.x2); };
  auto member_view = [](const PopulationView& v, std::size_t t) -> const PopulationView& {
    return std::any_cast<const TypedCache&>(v.cache).member_views[t];
  };
  ext.payoff = [members, type_of, member_view](const StatePoint& x, double a,
                                               const PopulationView& v) {
    const std::size_t t = type_of(x);
    return (*members)[t].payoff({x.x1, 0.0}, a, member_view(v, t));
  };
  ext.transition = [members, type_of, member_view](const StatePoint& x, double a,
                                                   const PopulationView& v,
                                                   const Shock& z) {
    const std::size_t t = type_of(x);
    const StatePoint y = (*members)[t].transition({x.x1, 0.0}, a, member_view(v, t), z);
    return StatePoint{y.x1, x.x2};
  };
  ext.feasible = [members, type_of, member_view, n0](std::size_t node, const StatePoint& x,
                                                     const PopulationView& v) {
    const std::size_t t = type_of(x);
    return (*members)[t].feasible(node % n0, {x.x1, 0.0}, member_view(v, t));
  };
  ext.policy_transform = [members, type_of](const StatePoint& x, double a) {
    const ModelSpec& m = (*members)[type_of(x)];
    return m.policy_transform ? m.policy_transform({x.x1, 0.0}, a) : a;
  };
  return ext;
}

}  // namespace mfe
