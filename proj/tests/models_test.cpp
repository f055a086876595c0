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

#include <gtest/gtest.h>

#include <cmath>

#include "mfelab/errors.hpp"
#include "mfelab/mfe.hpp"
#include "mfelab/models.hpp"

namespace mfe {
namespace {

CapacityParams small_capacity() {
  CapacityParams p;
  p.n_states = 60;
  p.n_actions = 51;
  return p;
}

ReputationParams small_reputation() {
  ReputationParams p;
  p.n_rank = 12;
  p.m2 = 4;
  p.n_actions = 31;
  return p;
}

AiyagariParams small_aiyagari() {
  AiyagariParams p;
  p.n_savings = 60;
  return p;
}

std::vector<ModelSpec> all_models() {
  QualityLadderParams q;
  q.n_states = 60;
  AdvertisingParams ad;
  ad.n_states = 40;
  ad.n_actions = 31;
  return {capacity_model(small_capacity()), quality_ladder_model(q), advertising_model(ad),
          reputation_model(small_reputation()), aiyagari_model(small_aiyagari())};
}

TEST(Capacity, GridBoundIsTheDynamicsFixedPoint) {
  const CapacityParams p;
  // k(1) = 1.1, so xbar = 1.1 * 1.2 / (1 - 0.84) = 8.25 before headroom.
  EXPECT_NEAR(investment_upper_bound(p), 1.01 * 8.25, 1e-12);
  const ModelSpec spec = capacity_model(p);
  EXPECT_NEAR(spec.state_grid->axis(0).back(), 1.01 * 8.25, 1e-12);
}

TEST(Capacity, CompactnessConditionIsEnforced) {
  CapacityParams p;
  EXPECT_NO_THROW(capacity_model(p));
  p.delta = 0.05;
  try {
    capacity_model(p);
    FAIL() << "delta = 0.05 accepted";
  } catch (const InvalidParams& e) {
    EXPECT_NE(std::string(e.what()).find("compactness"), std::string::npos) << e.what();
  }
}

TEST(Capacity, RejectsNonConcaveInvestment) {
  CapacityParams p;
  p.eta = 1.5;
  EXPECT_THROW(capacity_model(p), InvalidParams);
  p = CapacityParams{};
  p.kappa0 = 0.0;
  EXPECT_THROW(capacity_model(p), InvalidParams);
}

TEST(Capacity, TransitionImagesStayOnTheGrid) {
  for (const CapacityParams& p : {CapacityParams{}, small_capacity()}) {
    const ModelSpec spec = capacity_model(p);
    const double hi = spec.state_grid->axis(0).back();
    const PopulationView view = make_view(spec, PopulationState::uniform(spec.state_grid));
    for (std::size_t node = 0; node < spec.state_grid->size(); ++node) {
      const StatePoint x = spec.state_grid->point(node);
      const ActionRange r = spec.feasible(node, x, view);
      for (std::size_t a = r.first; a <= r.last; ++a) {
        for (const Shock& z : spec.shocks.outcomes) {
          const StatePoint y = spec.transition(x, spec.action_grid[a], view, z);
          ASSERT_GE(y.x1, 0.0);
          ASSERT_LE(y.x1, hi) << "node " << node << " action " << a;
        }
      }
    }
  }
}

TEST(Quality, DiracPopulationGivesConstantProfit) {
  QualityLadderParams p;
  p.n_states = 30;
  p.c_tilde = 1.7;
  const ModelSpec spec = quality_ladder_model(p);
  for (std::size_t node = 0; node < 30; node += 7) {
    const StatePoint x = spec.state_grid->point(node);
    const PopulationView v = make_view(spec, PopulationState::dirac(spec.state_grid, node));
    EXPECT_NEAR(spec.payoff(x, 0.0, v), 1.7, 1e-12);
  }
}

TEST(Quality, DirectEvaluation) {
  QualityLadderParams p;
  p.theta1 = 0.5;
  p.c_tilde = 1.0;
  const ModelSpec spec = quality_ladder_model(p);
  const PopulationView v = make_view(spec, PopulationState::dirac(spec.state_grid, 0));
  EXPECT_NEAR(spec.payoff({3.0, 0.0}, 0.0, v), 2.0, 1e-12);
  EXPECT_NEAR(spec.payoff({3.0, 0.0}, 1.0, v), 2.0 - p.d, 1e-12);
}

TEST(Oligopoly, DecreasingDifferencesHold) {
  QualityLadderParams q;
  q.n_states = 60;
  for (const ModelSpec& spec : {capacity_model(small_capacity()), quality_ladder_model(q)}) {
    const auto v = decreasing_differences_violations(spec, default_probes(spec));
    EXPECT_TRUE(v.empty()) << spec.name << ": " << v.front();
  }
}

TEST(Oligopoly, DiagnosticsPassAtOrderedProbes) {
  QualityLadderParams q;
  q.n_states = 60;
  for (const ModelSpec& spec : {capacity_model(small_capacity()), quality_ladder_model(q)}) {
    const auto probes = default_probes(spec);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const ViResult vi = value_iterate(probes[i], spec);
      EXPECT_TRUE(check_monotone_in_x(build_kernel(vi.policy, probes[i], spec)).pass)
          << spec.name << " probe " << i;
      if (i + 1 < probes.size()) {
        EXPECT_TRUE(check_decreasing_in_s(spec, probes[i], probes[i + 1]).pass)
            << spec.name << " probes " << i << "," << i + 1;
      }
    }
    const PolicyReport r = policy_structure_report(spec, probes);
    EXPECT_TRUE(r.pass()) << spec.name;
    for (const auto& t : r.transformed) EXPECT_GT(t.front(), 0.0);
  }
}

TEST(Advertising, AggregatorOnASingleAtom) {
  AdvertisingParams p;
  p.gamma2 = 0.5;
  const ModelSpec spec = advertising_model(p);
  const GridPtr g = Grid::product({0.0, 2.0}, {1.0, 2.0}, AxisKind::kContinuous);
  const PopulationState atom = PopulationState::dirac(g, g->flat(1, 0));
  EXPECT_NEAR(spec.aggregator(atom), std::pow(3.0, 0.5), 1e-14);
}

TEST(Advertising, DirectEvaluation) {
  AdvertisingParams p;
  p.r = 2.0;
  p.gamma1 = 0.5;
  p.gamma2 = 0.5;
  const ModelSpec spec = advertising_model(p);
  const GridPtr g = Grid::product({0.0, 3.0}, {1.0, 2.0}, AxisKind::kContinuous);
  const PopulationState atom = PopulationState::dirac(g, g->flat(1, 0));
  const PopulationView v{atom, spec.aggregator(atom), {}};
  EXPECT_NEAR(spec.payoff({3.0, 0.0}, 1.0, v), 1.0, 1e-14);
}

TEST(Advertising, ActionsStartAtOne) {
  const ModelSpec spec = advertising_model(AdvertisingParams{});
  EXPECT_EQ(spec.action_grid.front(), 1.0);
  EXPECT_EQ(spec.coupling, Coupling::kStatesAndActions);
  AdvertisingParams bad;
  bad.a_max = 1.0;
  EXPECT_THROW(advertising_model(bad), InvalidParams);
}

TEST(Advertising, EquilibriumCarriesOnlyOnPolicyActionMass) {
  AdvertisingParams p;
  p.n_states = 40;
  p.n_actions = 31;
  const ModelSpec spec = advertising_model(p);
  const MfeResult r = solve_mfe(spec, default_probes(spec)[1]);
  ASSERT_TRUE(r.converged()) << r.error;
  const Grid& pg = *spec.population_grid;
  const auto& ag = spec.action_grid;
  for (std::size_t y = 0; y < spec.state_grid->size(); ++y) {
    const double g = r.policy.action[y];
    double mass = 0.0, first_moment = 0.0;
    for (std::size_t a = 0; a < ag.size(); ++a) {
      const double w = (*r.population)[pg.flat(y, a)];
      // Only the action nodes bracketing g(y) may carry mass.
      const bool bracket = (a + 1 < ag.size() && ag[a] <= g && g < ag[a + 1]) ||
                           (a > 0 && ag[a - 1] < g && g <= ag[a]) || ag[a] == g;
      if (!bracket) {
        ASSERT_EQ(w, 0.0) << "y=" << y << " a=" << a;
      }
      mass += w;
      first_moment += w * ag[a];
    }
    // The lift used the policy one solve earlier, which agrees with g to
    // solver precision.
    if (mass > 1e-14) {
      EXPECT_NEAR(first_moment / mass, g, 1e-6);
    }
  }
}

TEST(Reputation, NewcomerMassAtEveryRow) {
  const ReputationParams p = small_reputation();
  const ModelSpec spec = reputation_model(p);
  for (const PopulationState& s : default_probes(spec)) {
    const ViResult vi = value_iterate(s, spec);
    const MarkovKernel q = build_kernel(vi.policy, s, spec);
    for (std::size_t i = 0; i < q.size(); ++i) ASSERT_GE(q.at(i, 0), 1.0 - p.beta) << i;
  }
}

TEST(Reputation, ReviewCountCapBinds) {
  const ReputationParams p = small_reputation();
  const ModelSpec spec = reputation_model(p);
  const PopulationView v = make_view(spec, default_probes(spec)[1]);
  const double cap = static_cast<double>(p.m2);
  for (const Shock& z : spec.shocks.outcomes) {
    EXPECT_EQ(spec.transition({2.0, cap}, 0.5, v, z).x2, cap);
    EXPECT_EQ(spec.transition({2.0, 1.0}, 0.5, v, z).x2, 2.0);
  }
}

TEST(Reputation, FirstReviewIgnoresTheOldRanking) {
  ReputationParams p = small_reputation();
  p.kappa0 = 0.5;  // k(0) = 0.5
  const ModelSpec spec = reputation_model(p);
  const PopulationView v = make_view(spec, default_probes(spec)[1]);
  for (double x1 : {0.0, 1.3, 4.0, 5.0}) {
    EXPECT_DOUBLE_EQ(spec.transition({x1, 0.0}, 0.0, v, Shock{1.0, 0.0, 1.0}).x1, 0.5);
  }
}

TEST(Reputation, KernelIncreasingAlongRankAtProbes) {
  const ModelSpec spec = reputation_model(small_reputation());
  for (const PopulationState& s : default_probes(spec)) {
    const ViResult vi = value_iterate(s, spec);
    EXPECT_TRUE(check_monotone_in_x(build_kernel(vi.policy, s, spec), 0).pass);
  }
}

TEST(Aiyagari, PricesAtKnownCapital) {
  AiyagariParams p;
  p.tfp = 1.0;
  p.alpha = 0.5;
  p.delta_k = 0.1;
  auto [r1, w1] = aiyagari_prices(1.0, p);
  EXPECT_NEAR(r1, 1.4, 1e-14);
  EXPECT_NEAR(w1, 0.5, 1e-14);
  auto [r4, w4] = aiyagari_prices(4.0, p);
  EXPECT_NEAR(r4, 1.15, 1e-14);
  EXPECT_NEAR(w4, 1.0, 1e-14);
  EXPECT_THROW(aiyagari_prices(0.0, p), NonPositiveCapital);
  EXPECT_THROW(aiyagari_prices(-1.0, p), NonPositiveCapital);
}

TEST(Aiyagari, OutputSplitsIntoFactorPayments) {
  const AiyagariParams p;
  for (double k : {0.1, 0.7, 3.0, 12.5, 40.0}) {
    const auto [r, w] = aiyagari_prices(k, p);
    const double f = p.tfp * std::pow(k, p.alpha);
    const double fprime = r - 1.0 + p.delta_k;
    EXPECT_NEAR(f, k * fprime + w, 1e-12 * std::max(1.0, f));
  }
}

TEST(Aiyagari, SavingsIncreaseWithWealth) {
  const ModelSpec spec = aiyagari_model(small_aiyagari());
  const PopulationState s = default_probes(spec)[1];
  const ViResult vi = value_iterate(s, spec);
  const Grid& g = *spec.state_grid;
  for (std::size_t j = 0; j < g.axis_size(1); ++j) {
    for (std::size_t i = 0; i + 1 < g.axis_size(0); ++i) {
      ASSERT_GE(vi.policy.action[g.flat(i + 1, j)], vi.policy.action[g.flat(i, j)] - 1e-12);
    }
  }
  EXPECT_TRUE(check_monotone_in_x(build_kernel(vi.policy, s, spec), 0).pass);
}

TEST(Aiyagari, ConsumptionIsSmoothedWithoutRisk) {
  AiyagariParams p;
  p.n_savings = 80;
  p.b_hi = 20.0;
  p.labor = {1.0};
  p.labor_transition = {{1.0}};
  p.fixed_prices = std::pair{1.0 / p.beta, 1.0};
  const ModelSpec spec = aiyagari_model(p);
  ViOptions o;
  o.tol = 1e-10;
  const ViResult vi = value_iterate(PopulationState::uniform(spec.state_grid), spec, o);
  const auto xs = spec.state_grid->axis(0);
  // R beta = 1: the Euler equation keeps consumption flat, so a(x) = x.
  for (std::size_t i = 5; i + 15 < xs.size(); ++i) {
    const double cell = xs[i + 1] - xs[i - 1];
    EXPECT_NEAR(vi.policy.action[i], xs[i], cell) << "node " << i;
  }
}

TEST(Aiyagari, EquilibriumClearsTheCapitalMarket) {
  const ModelSpec spec = aiyagari_model(small_aiyagari());
  SolverSettings st;
  const MfeResult r = solve_mfe(spec, default_probes(spec)[1], st);
  ASSERT_TRUE(r.converged()) << r.error;
  const double k = aggregator_value(*r.population, spec);
  // Households facing prices set at K = H(s*) supply exactly K in the
  // long run.
  const InnerSolve inner = inner_solve(*r.population, spec, st);
  EXPECT_NEAR(aggregator_value(inner.mu, spec), k, 1e-5);
  EXPECT_GT(k, 0.0);
}

TEST(Aiyagari, RejectsBadLaborChain) {
  AiyagariParams p;
  p.labor_transition = {{0.9, 0.2}, {0.1, 0.9}};
  EXPECT_THROW(aiyagari_model(p), InvalidParams);
  p = AiyagariParams{};
  p.labor = {1.5, 0.5};
  EXPECT_THROW(aiyagari_model(p), InvalidParams);
}

TEST(AllModels, PayoffsFiniteOnGridAndProbes) {
  for (const ModelSpec& spec : all_models()) {
    for (const PopulationState& s : default_probes(spec)) {
      const PopulationView v = make_view(spec, s);
      for (std::size_t node = 0; node < spec.state_grid->size(); ++node) {
        const StatePoint x = spec.state_grid->point(node);
        const ActionRange r = spec.feasible(node, x, v);
        for (std::size_t a = r.first; a <= r.last; ++a) {
          ASSERT_TRUE(std::isfinite(spec.payoff(x, spec.action_grid[a], v)))
              << spec.name << " node " << node << " action " << a;
        }
      }
    }
  }
}

TEST(AllModels, PassStandingValidation) {
  for (const ModelSpec& spec : all_models()) {
    const ValidationReport r = validate_model(spec, default_probes(spec));
    EXPECT_TRUE(r.pass) << spec.name << ": "
                        << (r.violations.empty() ? "" : r.violations.front().detail);
  }
}

TEST(AllModels, ProbesAreOrderedByAggregator) {
  for (const ModelSpec& spec : all_models()) {
    const auto probes = default_probes(spec);
    ASSERT_EQ(probes.size(), 3u);
    for (std::size_t i = 1; i < probes.size(); ++i) {
      EXPECT_GE(aggregator_value(probes[i], spec), aggregator_value(probes[i - 1], spec))
          << spec.name;
    }
  }
}

}  // namespace
}  // namespace mfe
