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

#ifndef MFELAB_MODELS_HPP_
#define MFELAB_MODELS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfelab/model.hpp"

namespace mfe {

// Investment dynamics shared by the capacity and quality-ladder models:
// x' = ((1 - delta) x + k(a)) zeta with k(a) = kappa0 + kappa1 a^eta. With
// `additive`, x' = (1 - delta) x + k(a) + zeta, reflected at additive_upper.
struct InvestmentParams {
  double delta = 0.3;
  std::vector<double> shock_values{0.8, 1.2};
  std::vector<double> shock_probs{0.5, 0.5};
  double d = 1.0;
  double beta = 0.9;
  double kappa0 = 0.1;
  double kappa1 = 1.0;
  double eta = 0.5;
  double a_max = 1.0;
  std::size_t n_states = 100;
  std::size_t n_actions = 101;
  bool additive = false;
  double additive_upper = 0.0;

  double k(double a) const;
};

// Profit P(H) qbar(x) - d a with qbar(x) = (x + q0)^rho, P(Q) = max(alpha -
// gamma Q, 0) and H(s) = integral of qbar.
struct CapacityParams : InvestmentParams {
  double rho = 0.5;
  double q0 = 1.0;
  double alpha = 4.0;
  double gamma = 1.0;

  double qbar(double x) const;
  double price(double q) const;
};

// Profit c_tilde (x + 1)^theta1 / H(s) - d a with H(s) = integral of
// (y + 1)^theta1.
struct QualityLadderParams : InvestmentParams {
  QualityLadderParams() { d = 0.2; }
  double theta1 = 0.5;
  double c_tilde = 1.0;
};

// Payoff r (x + a)^gamma1 / D^gamma2 - a with D = integral of (x' + a') over
// the joint state-action population; H = D^gamma2.
struct AdvertisingParams {
  double delta = 0.3;
  std::vector<double> shock_values{0.8, 1.2};
  std::vector<double> shock_probs{0.5, 0.5};
  double r = 2.0;
  double gamma1 = 0.7;
  double gamma2 = 0.5;
  double a_max = 10.0;  // actions live on [1, a_max]
  double beta = 0.9;
  std::size_t n_states = 100;
  std::size_t n_actions = 41;
};

// Ranking x1 in [0, M1] on an interpolated grid, review count x2 in
// {0, ..., M2}; newcomers enter at (0, 0) with probability 1 - beta.
struct ReputationParams {
  double beta = 0.9;
  double d = 1.0;
  double kappa0 = 1.0;
  double kappa1 = 3.0;
  double eta = 0.5;
  double a_max = 1.0;
  std::vector<double> shock_values{0.8, 1.2};
  std::vector<double> shock_probs{0.5, 0.5};
  double m1 = 5.0;
  std::size_t m2 = 9;
  double nu_p = 0.5;
  double nu_q = 0.5;
  std::size_t n_rank = 20;
  std::size_t n_actions = 51;

  double k(double a) const;
  double nu(double x1, double x2) const;
};

struct AiyagariParams {
  double beta = 0.96;
  double sigma = 1.0;  // CRRA coefficient; 1 means log utility
  double b_lo = 0.0;   // borrowing limit is -b_lo
  double b_hi = 40.0;
  std::vector<double> labor{0.5, 1.5};
  std::vector<std::vector<double>> labor_transition{{0.9, 0.1}, {0.1, 0.9}};
  double tfp = 1.0;
  double alpha = 0.36;
  double delta_k = 0.08;
  std::size_t n_savings = 100;
  double c_floor = 1e-10;
  // Partial-equilibrium override: (R, w) held fixed instead of derived from H.
  std::optional<std::pair<double, double>> fixed_prices;

  double utility(double c) const;
};

ModelSpec capacity_model(const CapacityParams& p);
ModelSpec quality_ladder_model(const QualityLadderParams& p);
ModelSpec advertising_model(const AdvertisingParams& p);
ModelSpec reputation_model(const ReputationParams& p);
ModelSpec aiyagari_model(const AiyagariParams& p);

// Upper bound of the capacity/quality state grid: the fixed point of
// x = ((1 - delta) x + k(a_max)) zeta_n, times 1.01.
double investment_upper_bound(const InvestmentParams& p);

// Returns (R, w); throws NonPositiveCapital unless K > 0.
std::pair<double, double> aiyagari_prices(double capital, const AiyagariParams& p);

// Decreasing differences of the per-period profit u(x, s) in (x, s) over the
// grid and H-ordered probes. Empty when it holds, else one entry per failure.
std::vector<std::string> decreasing_differences_violations(
    const ModelSpec& spec, const std::vector<PopulationState>& probes, double tol = 1e-12);

// Three H-ordered probe states of a spec: Dirac at the first node, uniform,
// Dirac at the last node (typed and action-coupled specs get the matching
// product forms).
std::vector<PopulationState> default_probes(const ModelSpec& spec);

}  // namespace mfe

#endif  // MFELAB_MODELS_HPP_
