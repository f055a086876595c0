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

#include <random>

#include "mfelab/errors.hpp"
#include "mfelab/mfe.hpp"
#include "mfelab/model.hpp"
#include "mfelab/models.hpp"
#include "support.hpp"

namespace mfe {
namespace {

bool has_check(const ValidationReport& r, const std::string& check) {
  for (const auto& v : r.violations) {
    if (v.check == check) return true;
  }
  return false;
}

ModelSpec small_capacity(double d = 1.0, std::size_t n = 40) {
  CapacityParams p;
  p.d = d;
  p.n_states = n;
  p.n_actions = 41;
  return capacity_model(p);
}

TEST(Shocks, Validation) {
  EXPECT_TRUE(ShockDistribution::make({0.8, 1.2}, {0.5, 0.5}).problem().empty());
  EXPECT_FALSE(ShockDistribution::make({0.8, 1.2}, {0.5, 0.6}).problem().empty());
  EXPECT_FALSE(ShockDistribution::make({0.8, 1.2}, {1.5, -0.5}).problem().empty());
  EXPECT_THROW(ShockDistribution::make({0.8}, {0.5, 0.5}), InvalidParams);
  EXPECT_EQ(ShockDistribution::deterministic(2.0).outcomes.size(), 1u);
}

TEST(Validate, WellFormedCapacityPasses) {
  const ModelSpec spec = small_capacity();
  const ValidationReport r = validate_model(spec, default_probes(spec));
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.violations.empty());
}

TEST(Validate, DiscountAtBoundary) {
  ModelSpec spec = small_capacity();
  spec.discount = 1.0;
  const ValidationReport r = validate_model(spec, default_probes(spec));
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(has_check(r, "discount out of range"));
}

TEST(Validate, EscapingTransitionNamesTheUpperNode) {
  ModelSpec spec = small_capacity();
  // Swap in a depreciation rate that breaks (1 - delta) zeta_n < 1.
  const InvestmentParams p;
  spec.transition = [p](const StatePoint& x, double a, const PopulationView&, const Shock& z) {
    return StatePoint{((1.0 - 0.05) * x.x1 + p.k(a)) * z.z, 0.0};
  };
  const ValidationReport r = validate_model(spec, default_probes(spec));
  ASSERT_FALSE(r.pass);
  bool at_hi = false;
  for (const auto& v : r.violations) {
    if (v.check == "transition escapes grid" && v.detail.rfind("at x = hi", 0) == 0) at_hi = true;
  }
  EXPECT_TRUE(at_hi);
}

TEST(Validate, EmptyFeasibleSetAndNonFinitePayoff) {
  ModelSpec spec = testing::identity_spec();
  spec.feasible = [](std::size_t node, const StatePoint&, const PopulationView&) {
    return node == 2 ? ActionRange{1, 0} : ActionRange{0, 1};
  };
  spec.payoff = [](const StatePoint& x, double, const PopulationView&) {
    return x.x1 > 0.9 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  const ValidationReport r = validate_model(spec, {PopulationState::uniform(spec.state_grid)});
  EXPECT_TRUE(has_check(r, "empty feasible set"));
  EXPECT_TRUE(has_check(r, "payoff not finite"));
}

TEST(Validate, IsIdempotent) {
  ModelSpec spec = small_capacity();
  spec.discount = 1.5;
  const auto probes = default_probes(spec);
  const ValidationReport a = validate_model(spec, probes);
  const ValidationReport b = validate_model(spec, probes);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    EXPECT_EQ(a.violations[i].check, b.violations[i].check);
    EXPECT_EQ(a.violations[i].detail, b.violations[i].detail);
  }
}

TEST(Aggregator, MeanExamples) {
  ModelSpec spec = testing::identity_spec();
  spec.state_grid = spec.population_grid = Grid::line({0.0, 0.7, 1.0});
  EXPECT_DOUBLE_EQ(aggregator_value(PopulationState::dirac(spec.state_grid, 1), spec), 0.7);
  ModelSpec unit = testing::identity_spec();
  unit.state_grid = unit.population_grid = Grid::line({0.0, 1.0});
  EXPECT_DOUBLE_EQ(aggregator_value(PopulationState::uniform(unit.state_grid), unit), 0.5);
  EXPECT_THROW(aggregator_value(PopulationState::uniform(Grid::line({0.0, 2.0})), unit),
               GridMismatch);
}

TEST(Aggregator, QualityIndexAtThree) {
  const ModelSpec spec = quality_ladder_model(QualityLadderParams{});
  const PopulationState s = PopulationState::dirac(Grid::line({0.0, 3.0, 5.0}), 1);
  EXPECT_DOUBLE_EQ(spec.aggregator(s), 2.0);
}

// Random pairs ordered by moving mass up the first axis within each slice.
TEST(Aggregator, AgreesWithStochasticDominance) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AiyagariParams ap;
  ap.n_savings = 30;
  ReputationParams rp;
  rp.n_rank = 10;
  AdvertisingParams adp;
  adp.n_states = 20;
  adp.n_actions = 11;
  const std::vector<ModelSpec> specs{small_capacity(), quality_ladder_model(QualityLadderParams{}),
                                     advertising_model(adp), reputation_model(rp),
                                     aiyagari_model(ap)};
  for (const ModelSpec& spec : specs) {
    const GridPtr& g = spec.population_grid;
    const std::size_t n0 = g->axis_size(0);
    const std::size_t n1 = g->dims() == 2 ? g->axis_size(1) : 1;
    for (int t = 0; t < 50; ++t) {
      std::vector<double> lo(g->size());
      for (double& w : lo) w = 0.05 + u(rng);
      std::vector<double> hi = lo;
      for (std::size_t j = 0; j < n1; ++j) {
        for (std::size_t i = n0 - 1; i-- > 0;) {
          const double m = hi[g->flat(i, j)] * u(rng);
          hi[g->flat(i, j)] -= m;
          hi[g->flat(i + 1, j)] += m;
        }
      }
      const PopulationState s_lo = PopulationState::normalized(g, lo);
      const PopulationState s_hi = PopulationState::normalized(g, hi);
      ASSERT_GE(aggregator_value(s_hi, spec), aggregator_value(s_lo, spec) - 1e-12) << spec.name;
    }
  }
}

TEST(Lift, PutsStateMassOnPolicyAction) {
  AdvertisingParams p;
  p.n_states = 6;
  p.n_actions = 4;
  const ModelSpec spec = advertising_model(p);
  const PopulationState x = PopulationState::uniform(spec.state_grid);
  std::vector<double> actions(spec.state_grid->size(), spec.action_grid[2]);
  const PopulationState lifted = lift_population(spec, x, actions);
  const Grid& pg = *spec.population_grid;
  for (std::size_t i = 0; i < pg.axis_size(0); ++i) {
    for (std::size_t a = 0; a < pg.axis_size(1); ++a) {
      EXPECT_DOUBLE_EQ(lifted[pg.flat(i, a)], a == 2 ? x[i] : 0.0);
    }
  }
  const PopulationState back = state_marginal(spec, lifted);
  EXPECT_EQ(kolmogorov_distance(back, x), 0.0);
}

TEST(Typed, MassesMustSumToOne) {
  TypedModelFamily f;
  f.types.push_back({small_capacity(), 0.5});
  f.types.push_back({small_capacity(), 0.6});
  EXPECT_THROW(extend_with_types(f), MassSumViolation);
}

TEST(Typed, MembersMustShareTheGrid) {
  TypedModelFamily f;
  f.types.push_back({small_capacity(1.0, 40), 0.5});
  f.types.push_back({small_capacity(1.0, 30), 0.5});
  EXPECT_THROW(extend_with_types(f), GridMismatch);
}

TEST(Typed, MarginalizeInvertsProduct) {
  TypedModelFamily f;
  f.types.push_back({small_capacity(), 0.3});
  f.types.push_back({small_capacity(2.0), 0.7});
  const ModelSpec ext = extend_with_types(f);
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(f.types[0].spec.state_grid->size());
  for (double& x : w) x = e(rng);
  const PopulationState base = PopulationState::normalized(f.types[0].spec.state_grid, w);
  const PopulationState prod = typed_population(ext, base);
  const PopulationState back = marginalize_types(prod, f.types[0].spec.state_grid);
  for (std::size_t i = 0; i < base.size(); ++i) ASSERT_NEAR(back[i], base[i], 1e-15);
  const auto types = marginal(prod, 1);
  EXPECT_NEAR(types[0], 0.3, 1e-15);
  EXPECT_NEAR(types[1], 0.7, 1e-15);
}

TEST(Typed, SingleTypeRoundTrip) {
  const ModelSpec base = small_capacity();
  TypedModelFamily f;
  f.types.push_back({base, 1.0});
  const ModelSpec ext = extend_with_types(f);
  SolverSettings st;
  st.diagnostics = false;
  const MfeResult rb = solve_mfe(base, PopulationState::uniform(base.population_grid), st);
  const MfeResult re =
      solve_mfe(ext, typed_population(ext, PopulationState::uniform(base.population_grid)), st);
  ASSERT_TRUE(rb.converged());
  ASSERT_TRUE(re.converged());
  for (std::size_t i = 0; i < base.state_grid->size(); ++i) {
    ASSERT_NEAR(re.value.values[i], rb.value.values[i], 1e-12);
    ASSERT_NEAR((*re.population)[i], (*rb.population)[i], 1e-12);
  }
}

TEST(Typed, IdenticalTypesPlayIdentically) {
  const ModelSpec base = small_capacity();
  TypedModelFamily f;
  f.types.push_back({base, 0.5});
  f.types.push_back({base, 0.5});
  const ModelSpec ext = extend_with_types(f);
  SolverSettings st;
  st.diagnostics = false;
  const MfeResult rb = solve_mfe(base, PopulationState::uniform(base.population_grid), st);
  const MfeResult re =
      solve_mfe(ext, typed_population(ext, PopulationState::uniform(base.population_grid)), st);
  ASSERT_TRUE(re.converged());
  const PopulationState marg = marginalize_types(*re.population, base.state_grid);
  EXPECT_LE(kolmogorov_distance(marg, *rb.population), 10.0 * st.tol);
  const std::size_t n0 = base.state_grid->size();
  for (std::size_t i = 0; i < n0; ++i) {
    ASSERT_EQ(re.policy.action[i], re.policy.action[n0 + i]);
  }
}

TEST(Typed, CostlierTypeInvestsLess) {
  TypedModelFamily f;
  f.types.push_back({small_capacity(0.8), 0.5});
  f.types.push_back({small_capacity(1.6), 0.5});
  const ModelSpec ext = extend_with_types(f);
  const MfeResult r = solve_mfe(
      ext, typed_population(ext, PopulationState::uniform(f.types[0].spec.population_grid)), {});
  ASSERT_TRUE(r.converged());
  const std::size_t n0 = f.types[0].spec.state_grid->size();
  std::size_t strictly = 0;
  for (std::size_t i = 0; i < n0; ++i) {
    ASSERT_LE(r.policy.action[n0 + i], r.policy.action[i] + 1e-12) << "node " << i;
    if (r.policy.action[n0 + i] < r.policy.action[i]) ++strictly;
  }
  EXPECT_GT(strictly, 0u);
}

}  // namespace
}  // namespace mfe
