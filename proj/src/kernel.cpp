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

#include "mfelab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "mfelab/errors.hpp"

namespace mfe {

namespace {

constexpr double kRowSumTol = 1e-12;

std::vector<double> step(std::span<const double> theta, const MarkovKernel& q) {
  std::vector<double> out(q.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double t = theta[i];
    if (t == 0.0) continue;
    const auto cols = q.row_cols(i);
    const auto vals = q.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += t * vals[k];
  }
  return out;
}

double cdf_gap(const PopulationState& a, std::span<const double> b,
               const GridPtr& grid) {
  return kolmogorov_distance(a, PopulationState::normalized(grid, {b.begin(), b.end()}));
}

struct PowerOutcome {
  PopulationState mu;
  std::size_t iterations;
  double residual;
};

// Plain power iteration with a periodic straight-line extrapolation along the
// last step, kept only when it stays in the simplex and lowers the residual.
PowerOutcome power_iterate(const MarkovKernel& q, PopulationState start,
                           const InvariantOptions& opt) {
  const GridPtr& grid = q.grid_ptr();
  std::vector<double> prev(start.weights().begin(), start.weights().end());
  double prev_step = 0.0;
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    std::vector<double> next = step(prev, q);
    PopulationState cur = PopulationState::normalized(grid, next);
    const PopulationState before = PopulationState::normalized(grid, prev);
    const double d = kolmogorov_distance(cur, before);
    if (d <= opt.tol) {
      const double res = cdf_gap(cur, step(cur.weights(), q), grid);
      if (res <= opt.tol) return {std::move(cur), it, res};
    }
    if (opt.extrapolate_every > 0 && it % opt.extrapolate_every == 0 && prev_step > 0.0) {
      const double rho = d / prev_step;
      if (rho > 0.0 && rho < 1.0) {
        const double c = rho / (1.0 - rho);
        std::vector<double> ext(next.size());
        bool ok = true;
        for (std::size_t i = 0; i < ext.size(); ++i) {
          ext[i] = next[i] + c * (next[i] - prev[i]);
          if (ext[i] < -kMassTol) ok = false;
        }
        if (ok) {
          PopulationState e = PopulationState::normalized(grid, ext);
          const double res = cdf_gap(e, step(e.weights(), q), grid);
          if (res < d) {
            next.assign(e.weights().begin(), e.weights().end());
          }
        }
      }
    }
    prev_step = d;
    prev = std::move(next);
  }
  std::ostringstream os;
  os << "power iteration did not settle within " << opt.max_iterations << " steps";
  throw MaxIterationsExceeded(os.str());
}

// Returns nullopt when the stationary equations do not have a unique
// solution.
std::optional<PopulationState> direct_solve(const MarkovKernel& q) {
  const std::size_t n = q.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cols = q.row_cols(i);
    const auto vals = q.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) a(cols[k], i) += vals[k];
    a(i, i) -= 1.0;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> rank_lu(a);
  rank_lu.setThreshold(1e-11);
  if (n > 1 && static_cast<std::size_t>(rank_lu.rank()) < n - 1) return std::nullopt;
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::VectorXd x = a.partialPivLu().solve(b);
  std::vector<double> w(x.data(), x.data() + n);
  for (double& v : w) {
    if (v < 0.0 && v > -1e-10) v = 0.0;
  }
  return PopulationState::normalized(q.grid_ptr(), std::move(w));
}

bool dominates_or_equal(OrderingResult r) {
  return r == OrderingResult::kDominates || r == OrderingResult::kEqual;
}

}  // namespace

MarkovKernel::MarkovKernel(
    GridPtr grid, const std::vector<std::vector<std::pair<std::size_t, double>>>& rows)
    : grid_(std::move(grid)) {
  const std::size_t n = grid_->size();
  if (rows.size() != n) throw GridMismatch("kernel has " + std::to_string(rows.size()) +
                                           " rows for a grid of " + std::to_string(n));
  row_ptr_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::size_t, double> acc;
    for (const auto& [j, p] : rows[i]) {
      if (j >= n) throw InvalidMeasure("kernel column out of range in row " + std::to_string(i));
      if (!(p >= 0.0)) throw InvalidMeasure("negative kernel entry in row " + std::to_string(i));
      acc[j] += p;
    }
    double total = 0.0;
    for (const auto& [j, p] : acc) {
      if (p == 0.0) continue;
      col_.push_back(j);
      val_.push_back(p);
      total += p;
    }
    if (std::abs(total - 1.0) > kRowSumTol) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << i << " sums to " << total;
      throw InvalidMeasure(os.str());
    }
    row_ptr_.push_back(col_.size());
  }
}

MarkovKernel MarkovKernel::from_dense(GridPtr grid,
                                      const std::vector<std::vector<double>>& m) {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) {
      if (m[i][j] != 0.0) rows[i].emplace_back(j, m[i][j]);
    }
  }
  return MarkovKernel(std::move(grid), rows);
}

std::span<const std::size_t> MarkovKernel::row_cols(std::size_t i) const {
  return {col_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

std::span<const double> MarkovKernel::row_vals(std::size_t i) const {
  return {val_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
}

double MarkovKernel::at(std::size_t i, std::size_t j) const {
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return val_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
}

PopulationState MarkovKernel::row(std::size_t i) const {
  std::vector<double> w(size(), 0.0);
  const auto cols = row_cols(i);
  const auto vals = row_vals(i);
  for (std::size_t k = 0; k < cols.size(); ++k) w[cols[k]] = vals[k];
  return PopulationState::normalized(grid_, std::move(w));
}

std::vector<std::vector<double>> MarkovKernel::dense() const {
  std::vector<std::vector<double>> m(size(), std::vector<double>(size(), 0.0));
  for (std::size_t i = 0; i < size(); ++i) {
    const auto cols = row_cols(i);
    const auto vals = row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) m[i][cols[k]] = vals[k];
  }
  return m;
}

MarkovKernel build_kernel(const Policy& policy, const PopulationView& view,
                          const ModelSpec& spec) {
  const Grid& g = *spec.state_grid;
  if (policy.action.size() != g.size()) {
    throw GridMismatch("policy size does not match the state grid");
  }
  const double keep = spec.regeneration ? 1.0 - spec.regeneration->prob : 1.0;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(g.size());
  for (std::size_t node = 0; node < g.size(); ++node) {
    const StatePoint x = g.point(node);
    const double a = policy.action[node];
    auto& row = rows[node];
    for (const Shock& z : spec.shocks.outcomes) {
      const StatePoint y = spec.transition(x, a, view, z);
      SparseMass m;
      try {
        m = project_mass(y, g);
      } catch (const PointOutOfBounds& e) {
        std::ostringstream os;
        os.precision(17);
        os << "node " << node << ", a = " << a << ": " << e.what();
        throw TransitionEscape(os.str());
      }
      for (std::size_t k = 0; k < m.count; ++k) {
        row.emplace_back(m.node[k], keep * z.prob * m.weight[k]);
      }
    }
    if (spec.regeneration) row.emplace_back(spec.regeneration->node, spec.regeneration->prob);
  }
  return MarkovKernel(spec.state_grid, rows);
}

MarkovKernel build_kernel(const Policy& policy, const PopulationState& s,
                          const ModelSpec& spec) {
  return build_kernel(policy, make_view(spec, s), spec);
}

PopulationState apply_M(const PopulationState& theta, const MarkovKernel& q) {
  require_same_grid(theta.grid(), q.grid(), "apply_M");
  return PopulationState::normalized(q.grid_ptr(), step(theta.weights(), q));
}

std::string to_string(Ergodicity e) {
  return e == Ergodicity::kUnique ? "Unique" : "NonUnique";
}

InvariantResult invariant_distribution(const MarkovKernel& q,
                                       const InvariantOptions& options,
                                       const PopulationState* from) {
  if (!(options.tol > 0.0)) throw InvalidParams("invariant tolerance must be positive");
  const GridPtr& grid = q.grid_ptr();
  if (from) require_same_grid(from->grid(), *grid, "invariant_distribution start");
  // Limit of `from` when given, else of the first-node Dirac.
  auto non_unique = [&](std::size_t spent) {
    PowerOutcome own = power_iterate(q, from ? *from : PopulationState::dirac(grid, 0), options);
    return InvariantResult{std::move(own.mu), Ergodicity::kNonUnique, spent + own.iterations,
                           own.residual};
  };
  const bool direct =
      options.method == InvariantMethod::kDirect ||
      (options.method == InvariantMethod::kAuto && q.size() <= options.direct_threshold);
  if (direct) {
    if (auto mu = direct_solve(q)) {
      const double res = cdf_gap(*mu, step(mu->weights(), q), grid);
      return {std::move(*mu), Ergodicity::kUnique, 0, res};
    }
    return non_unique(0);
  }
  PowerOutcome lo = power_iterate(q, PopulationState::dirac(grid, 0), options);
  PowerOutcome hi = power_iterate(q, PopulationState::dirac(grid, q.size() - 1), options);
  const std::size_t spent = lo.iterations + hi.iterations;
  if (kolmogorov_distance(lo.mu, hi.mu) > 10.0 * options.tol) {
    if (!from) return {std::move(lo.mu), Ergodicity::kNonUnique, spent, lo.residual};
    return non_unique(spent);
  }
  return {std::move(lo.mu), Ergodicity::kUnique, spent, lo.residual};
}

InvariantResult invariant_distribution_typed(const MarkovKernel& q,
                                             std::span<const double> type_masses,
                                             const InvariantOptions& options,
                                             const PopulationState* from) {
  const Grid& g = q.grid();
  if (g.dims() != 2 || g.axis_kind(1) != AxisKind::kCategorical ||
      g.axis_size(1) != type_masses.size()) {
    throw GridMismatch("typed invariant distribution needs a categorical type axis");
  }
  const std::size_t n0 = g.axis_size(0);
  const auto axis0 = g.axis(0);
  const GridPtr base = Grid::line({axis0.begin(), axis0.end()});
  std::vector<double> w(g.size(), 0.0);
  InvariantResult out{PopulationState::uniform(q.grid_ptr()), Ergodicity::kUnique, 0, 0.0};
  for (std::size_t t = 0; t < type_masses.size(); ++t) {
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n0);
    for (std::size_t i = 0; i < n0; ++i) {
      const std::size_t node = g.flat(i, t);
      const auto cols = q.row_cols(node);
      const auto vals = q.row_vals(node);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const auto [c0, c1] = g.unflat(cols[k]);
        if (c1 != t) throw InvalidMeasure("kernel moves mass between types");
        rows[i].emplace_back(c0, vals[k]);
      }
    }
    std::optional<PopulationState> block_from;
    if (from) {
      std::vector<double> slice(n0);
      double mass = 0.0;
      for (std::size_t i = 0; i < n0; ++i) mass += slice[i] = (*from)[g.flat(i, t)];
      if (mass > 0.0) block_from = PopulationState::normalized(base, std::move(slice));
    }
    const InvariantResult block = invariant_distribution(
        MarkovKernel(base, rows), options, block_from ? &*block_from : nullptr);
    for (std::size_t i = 0; i < n0; ++i) w[g.flat(i, t)] = type_masses[t] * block.mu[i];
    if (block.flag == Ergodicity::kNonUnique) out.flag = Ergodicity::kNonUnique;
    out.iterations += block.iterations;
  }
  out.mu = PopulationState::normalized(q.grid_ptr(), std::move(w));
  out.residual = cdf_gap(out.mu, step(out.mu.weights(), q), q.grid_ptr());
  return out;
}

MonotonicityReport check_monotone_in_x(const MarkovKernel& q,
                                       std::optional<std::size_t> axis, double tol) {
  const Grid& g = q.grid();
  MonotonicityReport report;
  auto record = [&](std::size_t lo, std::size_t hi, const std::string& why) {
    report.pass = false;
    report.violations.push_back("rows " + std::to_string(lo) + " -> " + std::to_string(hi) +
                                ": " + why);
  };
  if (g.dims() == 1) {
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      ++report.pairs_checked;
      const OrderingResult r = fosd_compare(q.row(i + 1), q.row(i), tol);
      if (!dominates_or_equal(r)) record(i, i + 1, to_string(r));
    }
    return report;
  }
  if (!axis || *axis != 0) {
    throw Unsupported("2-D kernels are compared along the first axis (axis = 0)");
  }
  for (std::size_t j = 0; j < g.axis_size(1); ++j) {
    for (std::size_t i = 0; i + 1 < g.axis_size(0); ++i) {
      const std::size_t a = g.flat(i, j), b = g.flat(i + 1, j);
      ++report.pairs_checked;
      try {
        const OrderingResult r = fosd_compare_x1(q.row(b), q.row(a), tol);
        if (!dominates_or_equal(r)) record(a, b, to_string(r));
      } catch (const MarginalMismatch& e) {
        record(a, b, e.what());
      }
    }
  }
  return report;
}

MonotonicityReport check_decreasing_in_s(const ModelSpec& spec,
                                         const PopulationState& s_low,
                                         const PopulationState& s_high, double tol,
                                         const ViOptions& vi) {
  const double h_low = aggregator_value(s_low, spec);
  const double h_high = aggregator_value(s_high, spec);
  if (h_high < h_low - 1e-12 * aggregator_range(spec)) {
    std::ostringstream os;
    os << "H(s_high) = " << h_high << " < H(s_low) = " << h_low;
    throw UnorderedProbes(os.str());
  }
  const PopulationView v_low = make_view(spec, s_low);
  const PopulationView v_high = make_view(spec, s_high);
  const MarkovKernel q_low = build_kernel(value_iterate(v_low, spec, vi).policy, v_low, spec);
  const MarkovKernel q_high =
      build_kernel(value_iterate(v_high, spec, vi).policy, v_high, spec);
  MonotonicityReport report;
  const bool two_d = spec.state_grid->dims() == 2;
  for (std::size_t i = 0; i < q_low.size(); ++i) {
    ++report.pairs_checked;
    std::string why;
    try {
      const OrderingResult r = two_d ? fosd_compare_x1(q_low.row(i), q_high.row(i), tol)
                                     : fosd_compare(q_low.row(i), q_high.row(i), tol);
      if (!dominates_or_equal(r)) why = to_string(r);
    } catch (const MarginalMismatch& e) {
      why = e.what();
    }
    if (!why.empty()) {
      report.pass = false;
      report.violations.push_back("row " + std::to_string(i) + ": " + why);
    }
  }
  return report;
}

ErgodicityReport ergodicity_probe(const MarkovKernel& q, std::size_t horizon, double tol) {
  if (horizon < 1) throw InvalidParams("ergodicity horizon must be at least 1");
  const Grid& g = q.grid();
  const GridPtr& grid = q.grid_ptr();
  const std::size_t n0 = g.axis_size(0);
  ErgodicityReport report;
  report.origin_minorization = 1.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    report.origin_minorization = std::min(report.origin_minorization, q.at(i, 0));
  }
  std::vector<double> lo(q.size(), 0.0), hi(q.size(), 0.0);
  lo.front() = 1.0;
  hi.back() = 1.0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    lo = step(lo, q);
    hi = step(hi, q);
    report.distance_trace.push_back(
        kolmogorov_distance(PopulationState::normalized(grid, lo),
                            PopulationState::normalized(grid, hi)));
    if (!report.splitting_step) {
      double down = 0.0, up = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        if (g.unflat(k).first < (n0 + 1) / 2) {
          down += hi[k];
        } else {
          up += lo[k];
        }
      }
      if (down > tol && up > tol) report.splitting_step = n;
    }
  }
  return report;
}

}  // namespace mfe
