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

#include "mfelab/mfe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "mfelab/errors.hpp"

namespace mfe {

namespace {

constexpr std::size_t kNoCluster = std::numeric_limits<std::size_t>::max();

std::string describe(const std::exception& e) {
  if (const auto* m = dynamic_cast<const MfeError*>(&e)) return m->what();
  return std::string("error: ") + e.what();
}

void record_failure(MfeResult& r, const std::exception& e) {
  r.status = MfeStatus::kFailed;
  r.error = describe(e);
  const auto* m = dynamic_cast<const MfeError*>(&e);
  r.error_check = m ? m->check() : "error";
}

OrderingResult aggregator_compare(double h1, double h2, double slack) {
  if (std::abs(h1 - h2) <= slack) return OrderingResult::kEqual;
  return h1 > h2 ? OrderingResult::kDominates : OrderingResult::kDominatedBy;
}

std::string sd_compare(const PopulationState& a, const PopulationState& b, double tol) {
  try {
    if (a.grid().dims() == 1) return to_string(fosd_compare(a, b, tol));
    return to_string(fosd_compare_x1(a, b, tol));
  } catch (const MarginalMismatch&) {
    return "n/a";
  }
}

void fill_diagnostics(MfeResult& r, const InnerSolve& inner, const SolverSettings& settings) {
  r.diagnostics.inner_flag = inner.invariant.flag;
  r.non_ergodic_at_candidate = inner.invariant.flag == Ergodicity::kNonUnique;
  if (!settings.diagnostics) return;
  const MarkovKernel& q = inner.kernel;
  try {
    r.diagnostics.monotone_in_x =
        q.grid().dims() == 1 ? check_monotone_in_x(q) : check_monotone_in_x(q, 0);
  } catch (const Unsupported&) {
  }
  r.diagnostics.ergodicity = ergodicity_probe(q, std::max<std::size_t>(1, settings.ergodicity_horizon));
}

}  // namespace

std::string to_string(OuterMap m) { return m == OuterMap::kMuS ? "mu_s" : "phi"; }

OuterMap outer_map_from_string(const std::string& s) {
  if (s == "mu_s") return OuterMap::kMuS;
  if (s == "phi") return OuterMap::kPhi;
  throw ConfigError("mode must be mu_s or phi, got '" + s + "'");
}

std::string to_string(MfeStatus s) {
  switch (s) {
    case MfeStatus::kConverged: return "converged";
    case MfeStatus::kMaxOuterExceeded: return "max outer iterations exceeded";
    case MfeStatus::kFailed: return "failed";
  }
  return "failed";
}

std::string to_string(Direction d) {
  return d == Direction::kIncreasing ? "increasing" : "decreasing";
}

Direction direction_from_string(const std::string& s) {
  if (s == "increasing") return Direction::kIncreasing;
  if (s == "decreasing") return Direction::kDecreasing;
  throw ConfigError("expected_direction must be increasing or decreasing, got '" + s + "'");
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

InnerSolve inner_solve(const PopulationState& s, const ModelSpec& spec,
                       const SolverSettings& settings, const ValueFunction* warm_start) {
  const PopulationView view = make_view(spec, s);
  ViResult vi = value_iterate(view, spec, settings.vi, warm_start);
  MarkovKernel q = build_kernel(vi.policy, view, spec);
  const PopulationState own = state_marginal(spec, s);
  InvariantResult inv =
      spec.type_masses.empty()
          ? invariant_distribution(q, settings.invariant, &own)
          : invariant_distribution_typed(q, spec.type_masses, settings.invariant, &own);
  PopulationState mu = lift_population(spec, inv.mu, vi.policy.action);
  return {std::move(vi), std::move(q), std::move(inv), std::move(mu)};
}

PopulationState phi_apply(const PopulationState& s, const ModelSpec& spec, const ViOptions& vi) {
  const PopulationView view = make_view(spec, s);
  const ViResult r = value_iterate(view, spec, vi);
  const MarkovKernel q = build_kernel(r.policy, view, spec);
  return lift_population(spec, apply_M(state_marginal(spec, s), q), r.policy.action);
}

MfeResult solve_mfe(const ModelSpec& spec, const PopulationState& s0,
                    const SolverSettings& settings) {
  MfeResult out;
  try {
    require_same_grid(s0.grid(), *spec.population_grid, "solve_mfe start");
    if (!(settings.damping > 0.0 && settings.damping <= 1.0)) {
      throw InvalidParams("damping must lie in (0, 1]");
    }
    if (!(settings.tol > 0.0)) throw InvalidParams("solver tolerance must be positive");
    const double h_slack = settings.tol * aggregator_range(spec);
    PopulationState s = s0;
    double lambda = settings.damping;
    double best = std::numeric_limits<double>::infinity();
    std::size_t stall = 0;
    std::optional<ValueFunction> warm;
    std::optional<InnerSolve> best_inner;
    bool projected = spec.coupling == Coupling::kStatesOnly;

    for (std::size_t it = 1; it <= settings.max_outer; ++it) {
      InnerSolve inner = inner_solve(s, spec, settings,
                                     settings.warm_start && warm ? &*warm : nullptr);
      out.diagnostics.vi_iterations_total += inner.vi.iterations;
      const double resid = kolmogorov_distance(s, inner.mu);
      const double gap = std::abs(spec.aggregator(inner.mu) - spec.aggregator(s));
      out.trace.push_back(resid);
      out.outer_iterations = it;
      const bool done = resid <= settings.tol && gap <= h_slack;
      if (done && !projected) {
        // Damping leaves traces of earlier policies in the action axis; put
        // the state marginal back on the current policy and confirm there.
        projected = true;
        warm = inner.vi.value;
        s = lift_population(spec, state_marginal(spec, s), inner.vi.policy.action);
        continue;
      }
      if (resid < best || done) {
        out.population = s;
        out.residual = resid;
        out.aggregate_gap = gap;
      }
      if (done) {
        out.status = MfeStatus::kConverged;
        best_inner = std::move(inner);
        break;
      }
      if (resid < best) {
        best = resid;
        stall = 0;
        best_inner.reset();
        best_inner.emplace(inner);
      } else if (settings.adaptive_damping && ++stall >= settings.patience &&
                 lambda > settings.min_damping) {
        lambda = std::max(settings.min_damping, 0.5 * lambda);
        stall = 0;
      }
      const PopulationState target =
          settings.mode == OuterMap::kMuS
              ? inner.mu
              : lift_population(spec, apply_M(state_marginal(spec, s), inner.kernel),
                                inner.vi.policy.action);
      warm = inner.vi.value;
      s = s.mix(target, lambda);
    }
    if (out.status != MfeStatus::kConverged) out.status = MfeStatus::kMaxOuterExceeded;
    if (best_inner) {
      out.policy = best_inner->vi.policy;
      out.value = best_inner->vi.value;
      out.aggregator_at_eq = spec.aggregator(*out.population);
      fill_diagnostics(out, *best_inner, settings);
    }
  } catch (const std::exception& e) {
    record_failure(out, e);
  }
  return out;
}

double consistency_residual(const PopulationState& s, const ModelSpec& spec,
                            const SolverSettings& settings) {
  const InnerSolve inner = inner_solve(s, spec, settings, nullptr);
  return kolmogorov_distance(s, inner.mu);
}

UniquenessReport uniqueness_probe(const ModelSpec& spec,
                                  const std::vector<PopulationState>& starts,
                                  const SolverSettings& settings, std::size_t jobs) {
  if (starts.size() < 2) throw InvalidParams("uniqueness probe needs at least two starts");
  const std::size_t n = starts.size();
  UniquenessReport rep;
  rep.results.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) { rep.results[i] = solve_mfe(spec, starts[i], settings); });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double range = aggregator_range(spec);
  rep.distance.assign(n, std::vector<double>(n, nan));
  rep.aggregate_gap.assign(n, std::vector<double>(n, nan));
  rep.aggregator_order.assign(n, std::vector<std::string>(n, "n/a"));
  rep.sd_order.assign(n, std::vector<std::string>(n, "n/a"));
  rep.cluster_of.assign(n, kNoCluster);

  auto ok = [&](std::size_t i) { return rep.results[i].converged(); };
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok(i)) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!ok(j)) continue;
      const PopulationState& a = *rep.results[i].population;
      const PopulationState& b = *rep.results[j].population;
      rep.distance[i][j] = kolmogorov_distance(a, b);
      const double hi = rep.results[i].aggregator_at_eq;
      const double hj = rep.results[j].aggregator_at_eq;
      rep.aggregate_gap[i][j] = std::abs(hi - hj);
      rep.aggregator_order[i][j] = to_string(aggregator_compare(hi, hj, settings.tol * range));
      rep.sd_order[i][j] = sd_compare(a, b, 10.0 * settings.tol);
    }
  }

  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok(i)) continue;
    for (std::size_t c = 0; c < reps.size(); ++c) {
      if (rep.distance[i][reps[c]] <= 10.0 * settings.tol) {
        rep.cluster_of[i] = c;
        break;
      }
    }
    if (rep.cluster_of[i] == kNoCluster) {
      rep.cluster_of[i] = reps.size();
      reps.push_back(i);
    }
  }
  rep.cluster_count = reps.size();

  for (std::size_t c = 0; c < reps.size(); ++c) {
    for (std::size_t d = c + 1; d < reps.size(); ++d) {
      std::size_t lo = reps[c], hi = reps[d];
      if (rep.results[lo].aggregator_at_eq > rep.results[hi].aggregator_at_eq) std::swap(lo, hi);
      if (rep.sd_order[lo][hi] != "Incomparable") rep.distinct_pairs_incomparable = false;
      ProbeLocalization loc;
      loc.low = lo;
      loc.high = hi;
      std::vector<std::string> broken;
      try {
        for (std::size_t k : {lo, hi}) {
          const InnerSolve inner = inner_solve(*rep.results[k].population, spec, settings);
          const MarkovKernel& q = inner.kernel;
          const MonotonicityReport m =
              q.grid().dims() == 1 ? check_monotone_in_x(q) : check_monotone_in_x(q, 0);
          if (!m.pass) loc.monotone_in_x = false;
          if (inner.invariant.flag == Ergodicity::kNonUnique) loc.ergodic = false;
        }
        const MonotonicityReport dec = check_decreasing_in_s(
            spec, *rep.results[lo].population, *rep.results[hi].population, kDefaultCompareTol,
            settings.vi);
        loc.decreasing_in_s = dec.pass;
      } catch (const MfeError& e) {
        broken.push_back(std::string("diagnostic error: ") + e.what());
      }
      if (!loc.monotone_in_x) broken.push_back("kernel increasing in x");
      if (!loc.decreasing_in_s) broken.push_back("kernel decreasing in s");
      if (!loc.ergodic) broken.push_back("ergodicity");
      for (std::size_t k = 0; k < broken.size(); ++k) {
        loc.broken += (k ? "; " : "") + broken[k];
      }
      rep.localization.push_back(std::move(loc));
    }
  }
  return rep;
}

SweepResult comparative_sweep(const SpecBuilder& builder, const std::vector<double>& params,
                              Direction expected, const SolverSettings& settings,
                              const StartBuilder& start, std::size_t jobs) {
  if (params.size() < 2) throw InvalidParams("sweep needs at least two parameter values");
  const bool up = params[1] > params[0];
  for (std::size_t i = 1; i < params.size(); ++i) {
    if (up ? !(params[i] > params[i - 1]) : !(params[i] < params[i - 1])) {
      throw InvalidParams("sweep parameters must be strictly monotone");
    }
  }
  SweepResult out;
  out.expected = expected;
  out.points.resize(params.size());
  std::vector<double> ranges(params.size(), 1.0);
  parallel_for(params.size(), jobs, [&](std::size_t i) {
    out.points[i].param = params[i];
    try {
      const ModelSpec spec = builder(params[i]);
      ranges[i] = aggregator_range(spec);
      const PopulationState s0 =
          start ? start(spec) : PopulationState::uniform(spec.population_grid);
      out.points[i].result = solve_mfe(spec, s0, settings);
    } catch (const std::exception& e) {
      record_failure(out.points[i].result, e);
    }
  });
  const double slack = settings.tol * *std::max_element(ranges.begin(), ranges.end());
  out.monotone_flag = true;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    if (!out.points[i].result.converged()) out.monotone_flag = false;
  }
  for (std::size_t i = 1; out.monotone_flag && i < out.points.size(); ++i) {
    // Orient the comparison by the parameter order, so a descending
    // parameter list is handled like an ascending one.
    double dh = out.points[i].result.aggregator_at_eq - out.points[i - 1].result.aggregator_at_eq;
    if (!up) dh = -dh;
    if (expected == Direction::kIncreasing ? dh < -slack : dh > slack) out.monotone_flag = false;
  }
  return out;
}

}  // namespace mfe
