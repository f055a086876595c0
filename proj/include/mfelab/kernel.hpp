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

#ifndef MFELAB_KERNEL_HPP_
#define MFELAB_KERNEL_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfelab/dp.hpp"
#include "mfelab/measure.hpp"
#include "mfelab/model.hpp"

namespace mfe {

// Row-stochastic matrix over the nodes of a grid, stored in CSR form with
// column indices sorted within each row.
class MarkovKernel {
 public:
  // Rows as (column, probability) lists; duplicates are summed. Throws
  // InvalidMeasure unless every row is nonnegative and sums to 1.
  MarkovKernel(GridPtr grid,
               const std::vector<std::vector<std::pair<std::size_t, double>>>& rows);
  static MarkovKernel from_dense(GridPtr grid, const std::vector<std::vector<double>>& m);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return row_ptr_.size() - 1; }

  std::span<const std::size_t> row_cols(std::size_t i) const;
  std::span<const double> row_vals(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;
  // Row i as a population state on the kernel's grid.
  PopulationState row(std::size_t i) const;
  std::vector<std::vector<double>> dense() const;

 private:
  GridPtr grid_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_;
  std::vector<double> val_;
};

// Row x = sum_j p_j project_mass(w(x, a(x), s, z_j)), mixed with the
// regeneration target when the model has one. Built on the state grid.
MarkovKernel build_kernel(const Policy& policy, const PopulationView& view,
                          const ModelSpec& spec);
MarkovKernel build_kernel(const Policy& policy, const PopulationState& s,
                          const ModelSpec& spec);

// theta^T Q.
PopulationState apply_M(const PopulationState& theta, const MarkovKernel& q);

enum class Ergodicity { kUnique, kNonUnique };
std::string to_string(Ergodicity e);

enum class InvariantMethod { kAuto, kDirect, kPower };

struct InvariantOptions {
  double tol = 1e-12;
  InvariantMethod method = InvariantMethod::kAuto;
  std::size_t direct_threshold = 200;
  std::size_t max_iterations = 1000000;
  std::size_t extrapolate_every = 50;
};

struct InvariantResult {
  PopulationState mu;
  Ergodicity flag = Ergodicity::kUnique;
  std::size_t iterations = 0;  // power iterations (0 for a direct solve)
  double residual = 0.0;       // kolmogorov_distance(mu Q, mu)
};

// Unique fixed point of theta -> theta^T Q when it exists. Power iteration
// runs from Dirac measures at the first and last node; the chain is flagged
// NonUnique if they part by more than 10 tol. The direct solve flags
// NonUnique when (Q^T - I) has a null space of dimension above one. For a
// NonUnique chain the returned measure is the limit of `from` under Q (the
// first-node limit when `from` is null). Throws MaxIterationsExceeded if
// power iteration does not settle, e.g. on periodic chains.
InvariantResult invariant_distribution(const MarkovKernel& q,
                                       const InvariantOptions& options = {},
                                       const PopulationState* from = nullptr);

// For kernels on X x Theta with a categorical type axis that never mixes:
// per-type invariant distributions scaled by the type masses.
InvariantResult invariant_distribution_typed(const MarkovKernel& q,
                                             std::span<const double> type_masses,
                                             const InvariantOptions& options = {},
                                             const PopulationState* from = nullptr);

struct MonotonicityReport {
  bool pass = true;
  std::size_t pairs_checked = 0;
  std::vector<std::string> violations;
};

// Rows for larger x must dominate rows for smaller x. On 2-D grids pass
// axis = 0: rows are compared along the first axis with the second
// coordinate held fixed, in the first-coordinate order.
MonotonicityReport check_monotone_in_x(const MarkovKernel& q,
                                       std::optional<std::size_t> axis = std::nullopt,
                                       double tol = kDefaultCompareTol);

// Solves the single-agent problem at both probes and checks that each row of
// the low-probe kernel dominates the matching row of the high-probe kernel.
// Throws UnorderedProbes unless H(s_high) >= H(s_low).
MonotonicityReport check_decreasing_in_s(const ModelSpec& spec,
                                         const PopulationState& s_low,
                                         const PopulationState& s_high,
                                         double tol = kDefaultCompareTol,
                                         const ViOptions& vi = {});

struct ErgodicityReport {
  std::vector<double> distance_trace;   // d(M^n delta_lo, M^n delta_hi), n = 1..horizon
  std::optional<std::size_t> splitting_step;
  double origin_minorization = 0.0;     // min_x Q(x, node 0)
};

// Extreme-start coupling trace and the first step m at which mass from the
// top node reaches the lower half of the first axis while mass from the
// bottom node reaches the upper half.
ErgodicityReport ergodicity_probe(const MarkovKernel& q, std::size_t horizon,
                                  double tol = 0.0);

}  // namespace mfe

#endif  // MFELAB_KERNEL_HPP_
