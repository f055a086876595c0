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

#include "mfelab/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "mfelab/errors.hpp"

namespace mfe {

namespace {

constexpr std::size_t kMaxReportedViolations = 20;

SparseMass project_or_throw(const StatePoint& y, const Grid& g, std::size_t node,
                            double a) {
  try {
    return project_mass(y, g);
  } catch (const PointOutOfBounds& e) {
    std::ostringstream os;
    os.precision(17);
    os << "node " << node << ", a = " << a << ": " << e.what();
    throw TransitionEscape(os.str());
  }
}

ValueFunction sweep(const StageTable& table, const ValueFunction& v, double beta,
                    const GridPtr& grid, std::vector<std::size_t>* argmax) {
  ValueFunction out{grid, std::vector<double>(table.nodes())};
  if (argmax) argmax->assign(table.nodes(), 0);
  for (std::size_t node = 0; node < table.nodes(); ++node) {
    const ActionRange r = table.range(node);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = r.first;
    for (std::size_t ai = r.first; ai <= r.last; ++ai) {
      const double q = table.q_value(node, ai, v.values, beta);
      if (q > best) {
        best = q;
        best_i = ai;
      }
    }
    out.values[node] = best;
    if (argmax) (*argmax)[node] = best_i;
  }
  return out;
}

// Maximizes a box-smoothed objective f over the bracketing action cells of
// the grid argmax: the root of the central difference (f(a+h) - f(a-h)) / 2h
// varies continuously with the data even where f has kinks from the
// piecewise-linear continuation value.
double refine_action(const ModelSpec& spec, const PopulationView& view,
                     const ValueFunction& v, std::size_t node, ActionRange r,
                     std::size_t grid_index) {
  const auto& ag = spec.action_grid;
  if (r.first == r.last) return ag[grid_index];
  const double amin = ag[r.first];
  const double amax = ag[r.last];
  const double lo = ag[grid_index > r.first ? grid_index - 1 : r.first];
  const double hi = ag[grid_index < r.last ? grid_index + 1 : r.last];
  double cell = std::numeric_limits<double>::infinity();
  for (std::size_t i = std::max(r.first, grid_index == 0 ? 0 : grid_index - 1);
       i < std::min(r.last, grid_index + 1); ++i) {
    cell = std::min(cell, ag[i + 1] - ag[i]);
  }
  const double h = 1e-2 * cell;
  auto f = [&](double a) { return action_value(spec, view, v, node, a); };
  auto slope = [&](double a) {
    const double up = std::min(a + h, amax);
    const double dn = std::max(a - h, amin);
    return (f(up) - f(dn)) / (up - dn);
  };
  const double g_lo = slope(lo);
  const double g_hi = slope(hi);
  if (!(g_lo > 0.0 && g_hi < 0.0)) return ag[grid_index];
  std::uintmax_t max_iter = 100;
  const auto root = boost::math::tools::toms748_solve(
      slope, lo, hi, g_lo, g_hi, boost::math::tools::eps_tolerance<double>(48),
      max_iter);
  return 0.5 * (root.first + root.second);
}

Policy policy_from_table(const StageTable& table, const ValueFunction& v,
                         const PopulationView& view, const ModelSpec& spec,
                         bool refine) {
  Policy p{spec.state_grid, spec.action_grid, {}, {}};
  sweep(table, v, spec.discount, spec.state_grid, &p.index);
  p.action.resize(p.index.size());
  const bool do_refine = refine && spec.continuous_actions;
  for (std::size_t node = 0; node < p.index.size(); ++node) {
    p.action[node] =
        do_refine ? refine_action(spec, view, v, node, table.range(node), p.index[node])
                  : spec.action_grid[p.index[node]];
  }
  return p;
}

}  // namespace

ValueFunction ValueFunction::zeros(GridPtr grid) {
  const std::size_t n = grid->size();
  return {std::move(grid), std::vector<double>(n, 0.0)};
}

StageTable::StageTable(const ModelSpec& spec, const PopulationView& view) {
  const Grid& g = *spec.state_grid;
  const std::size_t n = g.size();
  ranges_.resize(n);
  offset_.resize(n + 1, 0);
  std::vector<std::pair<std::size_t, double>> merged;
  for (std::size_t node = 0; node < n; ++node) {
    const StatePoint x = g.point(node);
    const ActionRange r = spec.feasible(node, x, view);
    if (r.first > r.last || r.last >= spec.action_grid.size()) {
      throw InvalidParams("empty feasible set", "node " + std::to_string(node));
    }
    ranges_[node] = r;
    offset_[node] = payoff_.size();
    for (std::size_t ai = r.first; ai <= r.last; ++ai) {
      const double a = spec.action_grid[ai];
      payoff_.push_back(spec.payoff(x, a, view));
      mass_begin_.push_back(mass_node_.size());
      merged.clear();
      for (const Shock& z : spec.shocks.outcomes) {
        const SparseMass m = project_or_throw(spec.transition(x, a, view, z), g, node, a);
        for (std::size_t k = 0; k < m.count; ++k) {
          auto it = std::find_if(merged.begin(), merged.end(),
                                 [&](const auto& e) { return e.first == m.node[k]; });
          if (it == merged.end()) {
            merged.emplace_back(m.node[k], z.prob * m.weight[k]);
          } else {
            it->second += z.prob * m.weight[k];
          }
        }
      }
      for (const auto& [j, w] : merged) {
        mass_node_.push_back(j);
        mass_weight_.push_back(w);
      }
    }
  }
  offset_[n] = payoff_.size();
  mass_begin_.push_back(mass_node_.size());
}

double StageTable::q_value(std::size_t node, std::size_t ai, std::span<const double> v,
                           double beta) const {
  const std::size_t slot = offset_[node] + (ai - ranges_[node].first);
  double cont = 0.0;
  for (std::size_t k = mass_begin_[slot]; k < mass_begin_[slot + 1]; ++k) {
    cont += mass_weight_[k] * v[mass_node_[k]];
  }
  return payoff_[slot] + beta * cont;
}

double action_value(const ModelSpec& spec, const PopulationView& view,
                    const ValueFunction& v, std::size_t node, double a) {
  const Grid& g = *spec.state_grid;
  const StatePoint x = g.point(node);
  double cont = 0.0;
  for (const Shock& z : spec.shocks.outcomes) {
    const SparseMass m = project_or_throw(spec.transition(x, a, view, z), g, node, a);
    for (std::size_t k = 0; k < m.count; ++k) cont += z.prob * m.weight[k] * v.values[m.node[k]];
  }
  return spec.payoff(x, a, view) + spec.discount * cont;
}

std::pair<ValueFunction, Policy> bellman_apply(const ValueFunction& v,
                                               const PopulationState& s,
                                               const ModelSpec& spec) {
  require_same_grid(*v.grid, *spec.state_grid, "bellman_apply");
  const PopulationView view = make_view(spec, s);
  const StageTable table(spec, view);
  Policy p{spec.state_grid, spec.action_grid, {}, {}};
  ValueFunction tv = sweep(table, v, spec.discount, spec.state_grid, &p.index);
  for (std::size_t i : p.index) p.action.push_back(spec.action_grid[i]);
  return {std::move(tv), std::move(p)};
}

ViResult value_iterate(const PopulationState& s, const ModelSpec& spec,
                       const ViOptions& options, const ValueFunction* warm_start) {
  return value_iterate(make_view(spec, s), spec, options, warm_start);
}

ViResult value_iterate(const PopulationView& view, const ModelSpec& spec,
                       const ViOptions& options, const ValueFunction* warm_start) {
  if (!(options.tol > 0.0)) throw InvalidParams("value iteration tolerance must be positive");
  const double beta = spec.discount;
  const StageTable table(spec, view);
  ViResult out;
  out.value = (warm_start && warm_start->values.size() == spec.state_grid->size())
                  ? ValueFunction{spec.state_grid, warm_start->values}
                  : ValueFunction::zeros(spec.state_grid);
  const double threshold = beta > 0.0 ? options.tol * (1.0 - beta) / (2.0 * beta)
                                      : std::numeric_limits<double>::infinity();
  for (std::size_t k = 1;; ++k) {
    ValueFunction next = sweep(table, out.value, beta, spec.state_grid, nullptr);
    const double d = sup_distance(next.values, out.value.values);
    out.value = std::move(next);
    out.iterations = k;
    out.residual = d;
    if (options.record_trace) out.trace.push_back(d);
    if (d <= threshold) break;
    if (k >= options.max_iterations) {
      std::ostringstream os;
      os << "value iteration: residual " << d << " after " << k << " sweeps (target "
         << threshold << ")";
      throw MaxIterationsExceeded(os.str());
    }
  }
  out.policy = policy_from_table(table, out.value, view, spec, options.refine);
  return out;
}

Policy greedy_policy(const ValueFunction& v, const PopulationView& view,
                     const ModelSpec& spec, bool refine) {
  const StageTable table(spec, view);
  return policy_from_table(table, v, view, spec, refine);
}

PolicyReport policy_structure_report(const ModelSpec& spec,
                                     const std::vector<PopulationState>& probes,
                                     const ViOptions& options) {
  const double range = aggregator_range(spec);
  for (std::size_t p = 1; p < probes.size(); ++p) {
    const double h0 = aggregator_value(probes[p - 1], spec);
    const double h1 = aggregator_value(probes[p], spec);
    if (h1 < h0 - 1e-12 * range) {
      std::ostringstream os;
      os << "H(probe " << p << ") = " << h1 << " < H(probe " << p - 1 << ") = " << h0;
      throw UnorderedProbes(os.str());
    }
  }
  const Grid& g = *spec.state_grid;
  const auto& ag = spec.action_grid;
  auto transform = [&](const StatePoint& x, double a) {
    return spec.policy_transform ? spec.policy_transform(x, a) : a;
  };

  PolicyReport report;
  report.lipschitz_checked = spec.lipschitz_bound.has_value();
  std::vector<std::vector<double>> slack;
  auto note = [&report](std::string msg) {
    if (report.violations.size() < kMaxReportedViolations) {
      report.violations.push_back(std::move(msg));
    }
  };

  for (const PopulationState& s : probes) {
    const ViResult vi = value_iterate(s, spec, options);
    std::vector<double> t(g.size()), sl(g.size(), 0.0);
    for (std::size_t node = 0; node < g.size(); ++node) {
      const StatePoint x = g.point(node);
      const std::size_t i = vi.policy.index[node];
      t[node] = transform(x, vi.policy.action[node]);
      const double here = transform(x, ag[i]);
      if (i + 1 < ag.size()) sl[node] = std::max(sl[node], std::abs(transform(x, ag[i + 1]) - here));
      if (i > 0) sl[node] = std::max(sl[node], std::abs(here - transform(x, ag[i - 1])));
    }
    report.transformed.push_back(std::move(t));
    slack.push_back(std::move(sl));
  }

  const std::size_t n0 = g.axis_size(0);
  const std::size_t n1 = g.dims() > 1 ? g.axis_size(1) : 1;
  const auto x0 = g.axis(0);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& t = report.transformed[p];
    for (std::size_t j = 0; j < n1; ++j) {
      for (std::size_t i = 0; i + 1 < n0; ++i) {
        const std::size_t a = g.flat(i, j), b = g.flat(i + 1, j);
        const double allow = std::max(slack[p][a], slack[p][b]);
        const double diff = t[b] - t[a];
        if (diff < -allow - 1e-12) {
          report.monotone_in_x = false;
          std::ostringstream os;
          os << "probe " << p << ": policy decreases from node " << a << " to " << b
             << " by " << -diff;
          note(os.str());
        }
        if (report.lipschitz_checked) {
          const double dx = x0[i + 1] - x0[i];
          report.lipschitz_ratio = std::max(report.lipschitz_ratio, std::abs(diff) / dx);
          if (std::abs(diff) > *spec.lipschitz_bound * dx + allow + 1e-12) {
            report.lipschitz_ok = false;
            std::ostringstream os;
            os << "probe " << p << ": slope " << std::abs(diff) / dx << " between nodes "
               << a << " and " << b;
            note(os.str());
          }
        }
      }
    }
  }
  for (std::size_t p = 1; p < probes.size(); ++p) {
    for (std::size_t node = 0; node < g.size(); ++node) {
      const double up = report.transformed[p][node] - report.transformed[p - 1][node];
      const double allow = std::max(slack[p][node], slack[p - 1][node]);
      if (up > allow + 1e-12) {
        report.decreasing_in_s = false;
        std::ostringstream os;
        os << "node " << node << ": policy rises by " << up << " from probe " << p - 1
           << " to probe " << p;
        note(os.str());
      }
    }
  }
  return report;
}

}  // namespace mfe
