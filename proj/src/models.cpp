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

#include "mfelab/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "mfelab/errors.hpp"

namespace mfe {

namespace {

// Collects violated parameter conditions and throws them together.
class ParamCheck {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void discount(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) {
      std::ostringstream os;
      os << "beta = " << beta << " not in (0, 1)";
      failures_.push_back(os.str());
      discount_bad_ = true;
    }
  }
  void shocks(const std::vector<double>& v, const std::vector<double>& p) {
    const std::string prob = ShockDistribution::make(v, p).problem();
    require(prob.empty(), prob);
    for (std::size_t i = 0; i < v.size(); ++i) {
      require(v[i] > 0.0, "shock values must be positive");
      if (i > 0) require(v[i] > v[i - 1], "shock values must be strictly increasing");
    }
  }
  void done() const {
    if (failures_.empty()) return;
    std::string detail;
    for (std::size_t i = 0; i < failures_.size(); ++i) {
      detail += (i ? "; " : "") + failures_[i];
    }
    if (discount_bad_) throw InvalidParams("discount out of range", detail);
    throw InvalidParams(detail);
  }

 private:
  std::vector<std::string> failures_;
  bool discount_bad_ = false;
};

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  v.back() = hi;
  return v;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void check_investment(const InvestmentParams& p, ParamCheck& c) {
  c.require(p.delta > 0.0 && p.delta < 1.0, "delta must lie in (0, 1)");
  c.shocks(p.shock_values, p.shock_probs);
  c.require(p.d > 0.0, "investment cost d must be positive");
  c.discount(p.beta);
  c.require(p.a_max > 0.0, "a_max must be positive");
  c.require(p.n_states >= 2 && p.n_actions >= 2, "grids need at least two nodes");
  c.require(p.kappa0 > 0.0, "k(0) = kappa0 must be positive");
  c.require(p.kappa1 > 0.0 && p.eta > 0.0 && p.eta < 1.0,
            "k must be strictly increasing and strictly concave (kappa1 > 0, 0 < eta < 1)");
  if (p.additive) {
    c.require(p.additive_upper > 0.0, "additive dynamics need a positive reflecting bound");
  } else if (!p.shock_values.empty()) {
    const double zn = p.shock_values.back();
    c.require(p.shock_values.front() < 1.0 && zn > 1.0, "shocks must satisfy zeta_1 < 1 < zeta_n");
    c.require((1.0 - p.delta) * zn < 1.0, "compactness condition (1 - delta) * zeta_n = " +
                                              fmt((1.0 - p.delta) * zn) + " must be < 1");
  }
  if (p.n_actions >= 3 && p.a_max > 0.0) {
    const std::vector<double> a = linspace(0.0, p.a_max, p.n_actions);
    bool inc = true, concave = true;
    for (std::size_t i = 1; i < a.size(); ++i) {
      if (!(p.k(a[i]) > p.k(a[i - 1]))) inc = false;
      if (i + 1 < a.size() && p.k(a[i + 1]) - 2 * p.k(a[i]) + p.k(a[i - 1]) > 1e-12) {
        concave = false;
      }
    }
    c.require(inc, "k is not strictly increasing on the action grid");
    c.require(concave, "k is not concave on the action grid");
  }
}

// Shared skeleton of the capacity and quality-ladder models.
ModelSpec investment_skeleton(const InvestmentParams& p, const std::string& name) {
  ModelSpec spec;
  spec.name = name;
  const double hi = p.additive ? p.additive_upper : investment_upper_bound(p);
  spec.state_grid = Grid::uniform(0.0, hi, p.n_states);
  spec.population_grid = spec.state_grid;
  spec.action_grid = linspace(0.0, p.a_max, p.n_actions);
  spec.shocks = ShockDistribution::make(p.shock_values, p.shock_probs);
  spec.discount = p.beta;
  spec.continuous_actions = true;
  const std::size_t last = p.n_actions - 1;
  spec.feasible = [last](std::size_t, const StatePoint&, const PopulationView&) {
    return ActionRange{0, last};
  };
  const double delta = p.delta;
  const InvestmentParams q = p;
  if (p.additive) {
    spec.transition = [q, hi](const StatePoint& x, double a, const PopulationView&,
                              const Shock& z) {
      double y = (1.0 - q.delta) * x.x1 + q.k(a) + z.z;
      if (y > hi) y = 2.0 * hi - y;
      return StatePoint{std::clamp(y, 0.0, hi), 0.0};
    };
  } else {
    spec.transition = [q](const StatePoint& x, double a, const PopulationView&,
                          const Shock& z) {
      return StatePoint{((1.0 - q.delta) * x.x1 + q.k(a)) * z.z, 0.0};
    };
  }
  spec.policy_transform = [q, delta](const StatePoint& x, double a) {
    return (1.0 - delta) * x.x1 + q.k(a);
  };
  spec.lipschitz_bound = 1.0;
  return spec;
}

std::size_t labor_index(const std::vector<double>& labor, double x2) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < labor.size(); ++i) {
    if (std::abs(labor[i] - x2) < std::abs(labor[best] - x2)) best = i;
  }
  return best;
}

}  // namespace

double InvestmentParams::k(double a) const {
  return kappa0 + kappa1 * std::pow(std::max(a, 0.0), eta);
}

double CapacityParams::qbar(double x) const { return std::pow(x + q0, rho); }

double CapacityParams::price(double q) const { return std::max(alpha - gamma * q, 0.0); }

double ReputationParams::k(double a) const {
  return kappa0 + kappa1 * std::pow(std::max(a, 0.0), eta);
}

double ReputationParams::nu(double x1, double x2) const {
  return std::pow(1.0 + x1, nu_p) * std::pow(1.0 + x2, nu_q);
}

double AiyagariParams::utility(double c) const {
  if (sigma == 1.0) return std::log(c);
  return std::pow(c, 1.0 - sigma) / (1.0 - sigma);
}

double investment_upper_bound(const InvestmentParams& p) {
  const double zn = p.shock_values.back();
  return 1.01 * p.k(p.a_max) * zn / (1.0 - (1.0 - p.delta) * zn);
}

ModelSpec capacity_model(const CapacityParams& p) {
  ParamCheck c;
  check_investment(p, c);
  c.require(p.rho > 0.0 && p.rho <= 1.0, "rho must lie in (0, 1]");
  c.require(p.q0 > 0.0, "q0 must be positive");
  c.require(p.alpha > 0.0 && p.gamma > 0.0, "inverse demand needs alpha > 0 and gamma > 0");
  c.done();
  ModelSpec spec = investment_skeleton(p, "capacity");
  const CapacityParams q = p;
  spec.aggregator = [q](const PopulationState& s) {
    return s.integrate([&](const StatePoint& x) { return q.qbar(x.x1); });
  };
  spec.payoff = [q](const StatePoint& x, double a, const PopulationView& v) {
    return q.price(v.aggregate) * q.qbar(x.x1) - q.d * a;
  };
  const auto dd = decreasing_differences_violations(spec, default_probes(spec));
  if (!dd.empty()) throw InvalidParams("profit lacks decreasing differences: " + dd.front());
  return spec;
}

ModelSpec quality_ladder_model(const QualityLadderParams& p) {
  ParamCheck c;
  check_investment(p, c);
  c.require(p.theta1 > 0.0 && p.theta1 < 1.0, "theta1 must lie in (0, 1)");
  c.require(p.c_tilde > 0.0, "c_tilde must be positive");
  c.done();
  ModelSpec spec = investment_skeleton(p, "quality_ladder");
  const QualityLadderParams q = p;
  spec.aggregator = [q](const PopulationState& s) {
    return s.integrate([&](const StatePoint& x) { return std::pow(x.x1 + 1.0, q.theta1); });
  };
  spec.payoff = [q](const StatePoint& x, double a, const PopulationView& v) {
    return q.c_tilde * std::pow(x.x1 + 1.0, q.theta1) / v.aggregate - q.d * a;
  };
  const auto dd = decreasing_differences_violations(spec, default_probes(spec));
  if (!dd.empty()) throw InvalidParams("profit lacks decreasing differences: " + dd.front());
  return spec;
}

ModelSpec advertising_model(const AdvertisingParams& p) {
  ParamCheck c;
  c.require(p.delta > 0.0 && p.delta < 1.0, "delta must lie in (0, 1)");
  c.shocks(p.shock_values, p.shock_probs);
  if (!p.shock_values.empty()) {
    c.require((1.0 - p.delta) * p.shock_values.back() < 1.0,
              "compactness condition (1 - delta) * zeta_n = " +
                  fmt((1.0 - p.delta) * p.shock_values.back()) + " must be < 1");
  }
  c.require(p.r > 0.0, "price r must be positive");
  c.require(p.gamma1 > 0.0 && p.gamma1 < 1.0 && p.gamma2 > 0.0 && p.gamma2 < 1.0,
            "gamma1 and gamma2 must lie in (0, 1)");
  c.require(p.a_max > 1.0, "a_max must exceed 1");
  c.discount(p.beta);
  c.require(p.n_states >= 2 && p.n_actions >= 2, "grids need at least two nodes");
  c.done();

  const double zn = p.shock_values.back();
  const double keep = 1.0 - p.delta;
  const double hi = 1.01 * keep * p.a_max * zn / (1.0 - keep * zn);
  ModelSpec spec;
  spec.name = "advertising";
  spec.state_grid = Grid::uniform(0.0, hi, p.n_states);
  spec.action_grid = linspace(1.0, p.a_max, p.n_actions);
  const auto xs = spec.state_grid->axis(0);
  spec.population_grid =
      Grid::product({xs.begin(), xs.end()}, spec.action_grid, AxisKind::kContinuous);
  spec.coupling = Coupling::kStatesAndActions;
  spec.shocks = ShockDistribution::make(p.shock_values, p.shock_probs);
  spec.discount = p.beta;
  spec.continuous_actions = true;
  const std::size_t last = p.n_actions - 1;
  spec.feasible = [last](std::size_t, const StatePoint&, const PopulationView&) {
    return ActionRange{0, last};
  };
  spec.transition = [keep](const StatePoint& x, double a, const PopulationView&, const Shock& z) {
    return StatePoint{keep * (x.x1 + a) * z.z, 0.0};
  };
  const AdvertisingParams q = p;
  spec.aggregator = [q](const PopulationState& s) {
    const double d = s.integrate([](const StatePoint& y) { return y.x1 + y.x2; });
    return std::pow(d, q.gamma2);
  };
  spec.payoff = [q](const StatePoint& x, double a, const PopulationView& v) {
    return q.r * std::pow(x.x1 + a, q.gamma1) / v.aggregate - a;
  };
  return spec;
}

ModelSpec reputation_model(const ReputationParams& p) {
  ParamCheck c;
  c.discount(p.beta);
  c.require(p.d > 0.0, "investment cost d must be positive");
  c.shocks(p.shock_values, p.shock_probs);
  c.require(p.kappa0 >= 0.0 && p.kappa1 > 0.0 && p.eta > 0.0 && p.eta < 1.0,
            "k must be strictly increasing and strictly concave");
  c.require(p.a_max > 0.0, "a_max must be positive");
  c.require(p.m1 > 0.0, "ranking cap M1 must be positive");
  c.require(p.m2 >= 1, "review cap M2 must be a positive integer");
  c.require(p.nu_p > 0.0 && p.nu_p < 1.0 && p.nu_q > 0.0 && p.nu_q < 1.0,
            "nu exponents must lie in (0, 1)");
  c.require(p.n_rank >= 2 && p.n_actions >= 2, "grids need at least two nodes");
  c.done();

  ModelSpec spec;
  spec.name = "reputation";
  std::vector<double> counts(p.m2 + 1);
  for (std::size_t i = 0; i <= p.m2; ++i) counts[i] = static_cast<double>(i);
  spec.state_grid = Grid::product(linspace(0.0, p.m1, p.n_rank), counts);
  spec.population_grid = spec.state_grid;
  spec.action_grid = linspace(0.0, p.a_max, p.n_actions);
  spec.shocks = ShockDistribution::make(p.shock_values, p.shock_probs);
  spec.discount = p.beta;
  spec.continuous_actions = true;
  spec.regeneration = Regeneration{1.0 - p.beta, 0};
  const std::size_t last = p.n_actions - 1;
  spec.feasible = [last](std::size_t, const StatePoint&, const PopulationView&) {
    return ActionRange{0, last};
  };
  const ReputationParams q = p;
  const double cap2 = static_cast<double>(p.m2);
  auto review = [q](const StatePoint& x, double a) {
    return (x.x2 / (1.0 + x.x2)) * x.x1 + q.k(a) / (1.0 + x.x2);
  };
  spec.transition = [q, cap2, review](const StatePoint& x, double a, const PopulationView&,
                                      const Shock& z) {
    return StatePoint{std::min(review(x, a) * z.z, q.m1), std::min(x.x2 + 1.0, cap2)};
  };
  spec.aggregator = [q](const PopulationState& s) {
    return s.integrate([&](const StatePoint& x) { return q.nu(x.x1, x.x2); });
  };
  spec.payoff = [q](const StatePoint& x, double a, const PopulationView& v) {
    return q.nu(x.x1, x.x2) / v.aggregate - q.d * a;
  };
  spec.policy_transform = review;
  return spec;
}

std::pair<double, double> aiyagari_prices(double capital, const AiyagariParams& p) {
  if (!(capital > 0.0) || !std::isfinite(capital)) {
    throw NonPositiveCapital("K = " + fmt(capital) + " must be positive");
  }
  const double r = p.alpha * p.tfp * std::pow(capital, p.alpha - 1.0) - p.delta_k + 1.0;
  const double w = (1.0 - p.alpha) * p.tfp * std::pow(capital, p.alpha);
  return {r, w};
}

ModelSpec aiyagari_model(const AiyagariParams& p) {
  ParamCheck c;
  c.discount(p.beta);
  c.require(p.sigma > 0.0, "sigma must be positive");
  c.require(p.b_lo >= 0.0, "b_lo must be nonnegative");
  c.require(p.b_hi > -p.b_lo, "savings cap must exceed the borrowing limit");
  c.require(p.tfp > 0.0 && p.alpha > 0.0 && p.alpha < 1.0, "need A > 0 and 0 < alpha < 1");
  c.require(p.delta_k >= 0.0 && p.delta_k <= 1.0, "delta_k must lie in [0, 1]");
  c.require(p.n_savings >= 2, "savings grid needs at least two nodes");
  c.require(p.c_floor > 0.0, "c_floor must be positive");
  c.require(!p.labor.empty(), "labor grid is empty");
  for (std::size_t i = 0; i < p.labor.size(); ++i) {
    c.require(p.labor[i] > 0.0, "labor endowments must be positive");
    if (i > 0) c.require(p.labor[i] > p.labor[i - 1], "labor grid must be strictly increasing");
  }
  bool shape = p.labor_transition.size() == p.labor.size();
  for (const auto& row : p.labor_transition) {
    if (row.size() != p.labor.size()) {
      shape = false;
      continue;
    }
    double total = 0.0;
    for (double v : row) {
      c.require(v >= 0.0, "labor transition entries must be nonnegative");
      total += v;
    }
    c.require(std::abs(total - 1.0) <= 1e-12, "labor transition rows must sum to 1");
  }
  c.require(shape, "labor transition must be square and match the labor grid");
  if (p.fixed_prices) {
    c.require(p.fixed_prices->first > 0.0 && p.fixed_prices->second > 0.0,
              "fixed prices must be positive");
  }
  c.done();

  const std::size_t nl = p.labor.size();
  // Encode the labor chain as x2' = m(x2, u) with u uniform on [0, 1]: the
  // union of the row-CDF breakpoints cuts [0, 1] into cells on which every
  // row's inverse CDF is constant.
  std::vector<std::vector<double>> cdf(nl, std::vector<double>(nl));
  std::vector<double> cuts{0.0, 1.0};
  for (std::size_t i = 0; i < nl; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nl; ++j) {
      acc += p.labor_transition[i][j];
      cdf[i][j] = j + 1 == nl ? 1.0 : acc;
      cuts.push_back(cdf[i][j]);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  ShockDistribution shocks;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double len = cuts[k + 1] - cuts[k];
    if (len > 0.0) shocks.outcomes.push_back({0.5 * (cuts[k] + cuts[k + 1]), 0.0, len});
  }
  double total = 0.0;
  for (const Shock& s : shocks.outcomes) total += s.prob;
  for (Shock& s : shocks.outcomes) s.prob /= total;

  ModelSpec spec;
  spec.name = "aiyagari";
  const std::size_t n = p.n_savings;
  std::vector<double> savings(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    savings[i] = -p.b_lo + (p.b_hi + p.b_lo) * t * t;
  }
  savings.back() = p.b_hi;
  spec.state_grid = Grid::product(savings, p.labor,
                                  nl == 1 ? AxisKind::kCategorical : AxisKind::kContinuous);
  spec.population_grid = spec.state_grid;
  spec.action_grid = savings;
  spec.shocks = shocks;
  spec.discount = p.beta;
  spec.continuous_actions = true;

  const AiyagariParams q = p;
  spec.aggregator = [](const PopulationState& s) {
    return s.integrate([](const StatePoint& x) { return x.x1; });
  };
  spec.make_cache = [q](const PopulationState& s) -> std::any {
    if (q.fixed_prices) return *q.fixed_prices;
    return aiyagari_prices(s.integrate([](const StatePoint& x) { return x.x1; }), q);
  };
  auto prices = [](const PopulationView& v) {
    return std::any_cast<const std::pair<double, double>&>(v.cache);
  };
  spec.payoff = [q, prices](const StatePoint& x, double a, const PopulationView& v) {
    const auto [r, w] = prices(v);
    return q.utility(r * x.x1 + w * x.x2 - a);
  };
  spec.feasible = [q, prices, savings](std::size_t node, const StatePoint& x,
                                       const PopulationView& v) {
    const auto [r, w] = prices(v);
    const double cap = r * x.x1 + w * x.x2 - q.c_floor;
    const auto it = std::upper_bound(savings.begin(), savings.end(), cap);
    if (it == savings.begin()) {
      throw InfeasibleBudget("no affordable savings level at node " + std::to_string(node) +
                             " (cash on hand " + fmt(cap + q.c_floor) + ")");
    }
    return ActionRange{0, static_cast<std::size_t>(it - savings.begin()) - 1};
  };
  const std::vector<double> labor = p.labor;
  spec.transition = [labor, cdf](const StatePoint& x, double a, const PopulationView&,
                                 const Shock& z) {
    const auto& row = cdf[labor_index(labor, x.x2)];
    std::size_t j = 0;
    while (j + 1 < row.size() && !(z.z < row[j])) ++j;
    return StatePoint{a, labor[j]};
  };
  return spec;
}

std::vector<std::string> decreasing_differences_violations(
    const ModelSpec& spec, const std::vector<PopulationState>& probes, double tol) {
  std::vector<std::pair<double, const PopulationState*>> order;
  for (const PopulationState& s : probes) order.emplace_back(spec.aggregator(s), &s);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const Grid& g = *spec.state_grid;
  const double a0 = spec.action_grid.front();
  const std::size_t n1 = g.dims() > 1 ? g.axis_size(1) : 1;
  std::vector<std::string> out;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const PopulationView lo = make_view(spec, *order[k - 1].second);
    const PopulationView hi = make_view(spec, *order[k].second);
    for (std::size_t j = 0; j < n1; ++j) {
      for (std::size_t i = 0; i + 1 < g.axis_size(0); ++i) {
        const StatePoint x1 = g.point(g.flat(i, j));
        const StatePoint x2 = g.point(g.flat(i + 1, j));
        const double d_hi = spec.payoff(x2, a0, hi) - spec.payoff(x1, a0, hi);
        const double d_lo = spec.payoff(x2, a0, lo) - spec.payoff(x1, a0, lo);
        if (d_hi > d_lo + tol) {
          std::ostringstream os;
          os << "nodes " << g.flat(i, j) << "-" << g.flat(i + 1, j) << ": difference "
             << d_hi << " at H = " << order[k].first << " exceeds " << d_lo << " at H = "
             << order[k - 1].first;
          out.push_back(os.str());
        }
      }
    }
  }
  return out;
}

std::vector<PopulationState> default_probes(const ModelSpec& spec) {
  const GridPtr& pg = spec.population_grid;
  const Grid& g = *pg;
  std::vector<PopulationState> out;
  if (!spec.type_masses.empty()) {
    const std::size_t n0 = g.axis_size(0);
    for (std::size_t pick : {std::size_t{0}, n0, n0 - 1}) {
      std::vector<double> w(g.size(), 0.0);
      for (std::size_t t = 0; t < spec.type_masses.size(); ++t) {
        for (std::size_t i = 0; i < n0; ++i) {
          if (pick == n0 || pick == i) w[g.flat(i, t)] = spec.type_masses[t] / (pick == n0 ? n0 : 1);
        }
      }
      out.push_back(PopulationState::normalized(pg, std::move(w)));
    }
    return out;
  }
  if (spec.coupling == Coupling::kStatesAndActions || g.dims() == 1) {
    return {PopulationState::dirac(pg, 0), PopulationState::uniform(pg),
            PopulationState::dirac(pg, g.size() - 1)};
  }
  // 2-D state grids: slices along the first axis, uniform over the second,
  // starting at the lowest slice whose population is admissible.
  const std::size_t n0 = g.axis_size(0), n1 = g.axis_size(1);
  auto slice = [&](std::size_t i) {
    std::vector<double> w(g.size(), 0.0);
    for (std::size_t j = 0; j < n1; ++j) w[g.flat(i, j)] = 1.0 / static_cast<double>(n1);
    return PopulationState::normalized(pg, std::move(w));
  };
  std::size_t first = 0;
  for (; first + 1 < n0; ++first) {
    try {
      make_view(spec, slice(first));
      break;
    } catch (const MfeError&) {
    }
  }
  return {slice(first), PopulationState::uniform(pg), slice(n0 - 1)};
}

}  // namespace mfe
