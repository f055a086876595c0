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

// Independent oracles and toy specs shared by the test binaries. Nothing here
// calls into the solver code paths it is used to check.

#ifndef MFELAB_TESTS_SUPPORT_HPP_
#define MFELAB_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mfelab/dp.hpp"
#include "mfelab/kernel.hpp"
#include "mfelab/measure.hpp"
#include "mfelab/model.hpp"

namespace mfe::testing {

using Matrix = std::vector<std::vector<double>>;

// Solves A x = b by Gauss-Jordan elimination with partial pivoting.
inline std::vector<double> gauss_jordan(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-300) throw std::runtime_error("singular system");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    const double inv = 1.0 / a[c][c];
    for (std::size_t k = c; k < n; ++k) a[c][k] *= inv;
    b[c] *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0.0) continue;
      const double f = a[r][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  return b;
}

// Stationary distribution of a dense row-stochastic matrix: (P^T - I) mu = 0
// with the last equation replaced by sum(mu) = 1.
inline std::vector<double> stationary_oracle(const Matrix& p) {
  const std::size_t n = p.size();
  Matrix a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i][j] = p[j][i] - (i == j ? 1.0 : 0.0);
  }
  std::vector<double> b(n, 0.0);
  std::fill(a[n - 1].begin(), a[n - 1].end(), 1.0);
  b[n - 1] = 1.0;
  return gauss_jordan(a, b);
}

// Random irreducible, aperiodic row-stochastic matrix: every row keeps a
// self-loop and an edge to its successor, plus a few random columns.
inline Matrix random_kernel(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_int_distribution<std::size_t> col(0, n - 1);
  Matrix p(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    p[i][i] += u(rng);
    p[i][(i + 1) % n] += u(rng);
    for (int k = 0; k < 3; ++k) p[i][col(rng)] += u(rng);
    double sum = 0.0;
    for (double x : p[i]) sum += x;
    for (double& x : p[i]) x /= sum;
  }
  return p;
}

// A finite MDP on nodes 0..n-1 with actions 0..m-1. Images are arbitrary
// reals in [0, n-1] so off-grid interpolation is exercised.
struct FiniteMdp {
  std::size_t n = 0;
  std::size_t m = 0;
  double beta = 0.9;
  Matrix reward;                              // [x][a]
  std::vector<Matrix> image;                  // [shock][x][a]
  std::vector<double> probs;                  // per shock
};

inline FiniteMdp random_mdp(std::mt19937_64& rng, std::size_t n, std::size_t m,
                            std::size_t shocks, double beta) {
  std::uniform_real_distribution<double> r(-1.0, 2.0);
  std::uniform_real_distribution<double> y(0.0, static_cast<double>(n - 1));
  std::uniform_int_distribution<int> on_node(0, 3);
  FiniteMdp mdp;
  mdp.n = n;
  mdp.m = m;
  mdp.beta = beta;
  mdp.reward.assign(n, std::vector<double>(m));
  for (auto& row : mdp.reward) {
    for (double& v : row) v = r(rng);
  }
  double total = 0.0;
  for (std::size_t j = 0; j < shocks; ++j) {
    Matrix img(n, std::vector<double>(m));
    for (auto& row : img) {
      for (double& v : row) {
        v = y(rng);
        if (on_node(rng) == 0) v = std::round(v);
      }
    }
    mdp.image.push_back(std::move(img));
    const double p = 0.2 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    mdp.probs.push_back(p);
    total += p;
  }
  for (double& p : mdp.probs) p /= total;
  return mdp;
}

// Interpolation weights of y on the integer grid 0..n-1, computed by hand.
inline std::vector<std::pair<std::size_t, double>> integer_split(double y, std::size_t n) {
  const double f = std::floor(y);
  auto lo = static_cast<std::size_t>(f);
  if (lo >= n - 1) return {{n - 1, 1.0}};
  const double frac = y - f;
  if (frac == 0.0) return {{lo, 1.0}};
  return {{lo, 1.0 - frac}, {lo + 1, frac}};
}

inline ModelSpec mdp_spec(const FiniteMdp& mdp) {
  ModelSpec spec;
  spec.name = "finite_mdp";
  spec.state_grid = Grid::uniform(0.0, static_cast<double>(mdp.n - 1), mdp.n);
  spec.population_grid = spec.state_grid;
  for (std::size_t a = 0; a < mdp.m; ++a) spec.action_grid.push_back(static_cast<double>(a));
  spec.discount = mdp.beta;
  std::vector<double> zs;
  for (std::size_t j = 0; j < mdp.image.size(); ++j) zs.push_back(static_cast<double>(j));
  spec.shocks = ShockDistribution::make(zs, mdp.probs);
  const FiniteMdp q = mdp;
  spec.payoff = [q](const StatePoint& x, double a, const PopulationView&) {
    return q.reward[static_cast<std::size_t>(std::lround(x.x1))][static_cast<std::size_t>(std::lround(a))];
  };
  spec.transition = [q](const StatePoint& x, double a, const PopulationView&, const Shock& z) {
    const auto j = static_cast<std::size_t>(std::lround(z.z));
    return StatePoint{q.image[j][static_cast<std::size_t>(std::lround(x.x1))]
                             [static_cast<std::size_t>(std::lround(a))],
                      0.0};
  };
  const std::size_t last = mdp.m - 1;
  spec.feasible = [last](std::size_t, const StatePoint&, const PopulationView&) {
    return ActionRange{0, last};
  };
  spec.aggregator = [](const PopulationState& s) {
    return s.integrate([](const StatePoint& x) { return x.x1; });
  };
  return spec;
}

// Optimal values by enumerating every stationary deterministic policy and
// evaluating it exactly with (I - beta P) V = r.
inline std::vector<double> enumerate_optimal_values(const FiniteMdp& mdp) {
  std::vector<double> best(mdp.n, -1e300);
  std::vector<std::size_t> pol(mdp.n, 0);
  while (true) {
    Matrix a(mdp.n, std::vector<double>(mdp.n, 0.0));
    std::vector<double> r(mdp.n);
    for (std::size_t x = 0; x < mdp.n; ++x) {
      a[x][x] += 1.0;
      r[x] = mdp.reward[x][pol[x]];
      for (std::size_t j = 0; j < mdp.image.size(); ++j) {
        for (const auto& [node, w] : integer_split(mdp.image[j][x][pol[x]], mdp.n)) {
          a[x][node] -= mdp.beta * mdp.probs[j] * w;
        }
      }
    }
    const std::vector<double> v = gauss_jordan(a, r);
    for (std::size_t x = 0; x < mdp.n; ++x) best[x] = std::max(best[x], v[x]);
    std::size_t k = 0;
    while (k < mdp.n && ++pol[k] == mdp.m) pol[k++] = 0;
    if (k == mdp.n) break;
  }
  return best;
}

// Spec on a uniform grid whose transition is the identity for every action.
inline ModelSpec identity_spec(std::size_t n = 5) {
  ModelSpec spec;
  spec.name = "identity";
  spec.state_grid = Grid::uniform(0.0, 1.0, n);
  spec.population_grid = spec.state_grid;
  spec.action_grid = {0.0, 1.0};
  spec.discount = 0.9;
  spec.shocks = ShockDistribution::deterministic();
  spec.payoff = [](const StatePoint& x, double a, const PopulationView&) { return x.x1 - 0.1 * a; };
  spec.transition = [](const StatePoint& x, double, const PopulationView&, const Shock&) {
    return x;
  };
  spec.feasible = [](std::size_t, const StatePoint&, const PopulationView&) {
    return ActionRange{0, 1};
  };
  spec.aggregator = [](const PopulationState& s) {
    return s.integrate([](const StatePoint& x) { return x.x1; });
  };
  return spec;
}

// Investment game on {0, 1, 2} with complementarities: the return to
// investing rises with the population mean, so the payoff has increasing
// differences in (x, s) and high-s agents invest more.
inline ModelSpec complementarity_spec(double feedback = 4.0) {
  ModelSpec spec;
  spec.name = "complementarity";
  spec.state_grid = Grid::uniform(0.0, 2.0, 3);
  spec.population_grid = spec.state_grid;
  spec.action_grid = {0.0, 1.0};
  spec.discount = 0.8;
  spec.shocks = ShockDistribution::make({0.0, 1.0}, {0.5, 0.5});
  spec.payoff = [feedback](const StatePoint& x, double a, const PopulationView& v) {
    return feedback * v.aggregate * x.x1 - 1.5 * a;
  };
  spec.transition = [](const StatePoint& x, double a, const PopulationView&, const Shock& z) {
    // Investment moves the state up one node, otherwise it decays one node
    // when the shock is bad.
    const double up = std::min(2.0, x.x1 + a);
    return StatePoint{z.z > 0.5 ? up : std::max(0.0, up - 1.0), 0.0};
  };
  spec.feasible = [](std::size_t, const StatePoint&, const PopulationView&) {
    return ActionRange{0, 1};
  };
  spec.aggregator = [](const PopulationState& s) {
    return s.integrate([](const StatePoint& x) { return x.x1; });
  };
  return spec;
}

inline double sup_diff(const std::vector<double>& a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace mfe::testing

#endif  // MFELAB_TESTS_SUPPORT_HPP_
