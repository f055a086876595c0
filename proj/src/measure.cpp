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

#include "mfelab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mfelab/errors.hpp"

namespace mfe {

namespace {

void validate_axis(const std::vector<double>& pts, AxisKind kind) {
  const std::size_t min_points = kind == AxisKind::kContinuous ? 2 : 1;
  if (pts.size() < min_points) {
    throw InvalidGrid("axis needs at least " + std::to_string(min_points) +
                      " points");
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(pts[i])) throw InvalidGrid("non-finite grid point");
    if (i > 0 && !(pts[i] > pts[i - 1])) {
      throw InvalidGrid("grid points must be strictly increasing");
    }
  }
}

std::vector<double> cumulative(std::span<const double> w) {
  std::vector<double> c(w.size());
  std::partial_sum(w.begin(), w.end(), c.begin());
  return c;
}

// 2-D prefix sums of the difference of two joint mass arrays.
std::vector<double> joint_cdf_difference(const PopulationState& s1,
                                         const PopulationState& s2) {
  const Grid& g = s1.grid();
  const std::size_t n0 = g.axis_size(0);
  const std::size_t n1 = g.dims() > 1 ? g.axis_size(1) : 1;
  std::vector<double> f1(g.size()), f2(g.size());
  for (std::size_t j = 0; j < n1; ++j) {
    double row1 = 0.0, row2 = 0.0;
    for (std::size_t i = 0; i < n0; ++i) {
      const std::size_t k = g.flat(i, j);
      row1 += s1[k];
      row2 += s2[k];
      f1[k] = row1 + (j > 0 ? f1[g.flat(i, j - 1)] : 0.0);
      f2[k] = row2 + (j > 0 ? f2[g.flat(i, j - 1)] : 0.0);
    }
  }
  for (std::size_t k = 0; k < f1.size(); ++k) f1[k] -= f2[k];
  return f1;
}

OrderingResult classify(bool any_below, bool any_above) {
  // below: CDF1 < CDF2 somewhere (s1 has more mass up top there).
  if (!any_below && !any_above) return OrderingResult::kEqual;
  if (any_below && !any_above) return OrderingResult::kDominates;
  if (!any_below && any_above) return OrderingResult::kDominatedBy;
  return OrderingResult::kIncomparable;
}

}  // namespace

Grid::Grid(std::vector<std::vector<double>> axes, std::vector<AxisKind> kinds)
    : axes_(std::move(axes)), kinds_(std::move(kinds)) {
  size_ = 1;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    validate_axis(axes_[k], kinds_[k]);
    size_ *= axes_[k].size();
  }
}

GridPtr Grid::line(std::vector<double> points) {
  return GridPtr(new Grid({std::move(points)}, {AxisKind::kContinuous}));
}

GridPtr Grid::uniform(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw InvalidGrid("uniform grid needs n >= 2, hi > lo");
  std::vector<double> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  pts.back() = hi;
  return line(std::move(pts));
}

GridPtr Grid::product(std::vector<double> axis0, std::vector<double> axis1,
                      AxisKind kind1) {
  return GridPtr(new Grid({std::move(axis0), std::move(axis1)},
                          {AxisKind::kContinuous, kind1}));
}

StatePoint Grid::point(std::size_t node) const {
  const auto [i0, i1] = unflat(node);
  StatePoint p;
  p.x1 = axes_[0][i0];
  if (dims() > 1) p.x2 = axes_[1][i1];
  return p;
}

bool Grid::same_as(const Grid& other) const {
  return this == &other || (axes_ == other.axes_ && kinds_ == other.kinds_);
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!a.same_as(b)) throw GridMismatch(std::string(what) + ": grids differ");
}

PopulationState::PopulationState(GridPtr grid, std::vector<double> weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
  if (!grid_) throw InvalidMeasure("null grid");
  if (weights_.size() != grid_->size()) {
    throw InvalidMeasure("weight count does not match grid size");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidMeasure("weights must be finite and nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << total;
    throw InvalidMeasure(os.str());
  }
}

PopulationState PopulationState::dirac(GridPtr grid, std::size_t node) {
  std::vector<double> w(grid->size(), 0.0);
  if (node >= w.size()) throw InvalidMeasure("dirac node out of range");
  w[node] = 1.0;
  return PopulationState(std::move(grid), std::move(w));
}

PopulationState PopulationState::uniform(GridPtr grid) {
  const double w = 1.0 / static_cast<double>(grid->size());
  std::vector<double> weights(grid->size(), w);
  return normalized(std::move(grid), std::move(weights));
}

PopulationState PopulationState::normalized(GridPtr grid,
                                            std::vector<double> raw) {
  double total = 0.0;
  for (double& w : raw) {
    if (!std::isfinite(w)) throw InvalidMeasure("non-finite weight");
    if (w < 0.0) {
      if (w < -1e-12) throw InvalidMeasure("significantly negative weight");
      w = 0.0;
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidMeasure("zero total mass");
  // Leave rounding-level deviations alone so exact inputs pass through
  // bit for bit.
  if (std::abs(total - 1.0) > 1e-14) {
    for (double& w : raw) w /= total;
  }
  return PopulationState(std::move(grid), std::move(raw));
}

double PopulationState::integrate(
    const std::function<double(const StatePoint&)>& f) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (weights_[k] != 0.0) acc += weights_[k] * f(grid_->point(k));
  }
  return acc;
}

PopulationState PopulationState::mix(const PopulationState& other,
                                     double lambda) const {
  require_same_grid(*grid_, other.grid(), "mix");
  std::vector<double> w(weights_.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = (1.0 - lambda) * weights_[k] + lambda * other.weights_[k];
  }
  return normalized(grid_, std::move(w));
}

PopulationState SparseMass::to_population(const GridPtr& grid) const {
  std::vector<double> w(grid->size(), 0.0);
  for (std::size_t k = 0; k < count; ++k) w[node[k]] += weight[k];
  return PopulationState(grid, std::move(w));
}

AxisWeights project_axis(double x, const Grid& grid, std::size_t axis) {
  const auto pts = grid.axis(axis);
  if (!std::isfinite(x)) throw PointOutOfBounds("non-finite coordinate");
  if (grid.axis_kind(axis) == AxisKind::kCategorical) {
    const auto it = std::find(pts.begin(), pts.end(), x);
    if (it == pts.end()) {
      throw PointOutOfBounds("categorical coordinate " + std::to_string(x) +
                             " is not a grid label");
    }
    return {static_cast<std::size_t>(it - pts.begin()), 1.0};
  }
  const double lo = pts.front();
  const double hi = pts.back();
  if (x < lo - kBoundsTol || x > hi + kBoundsTol) {
    std::ostringstream os;
    os.precision(17);
    os << "coordinate " << x << " outside [" << lo << ", " << hi << "] on axis "
       << axis;
    throw PointOutOfBounds(os.str());
  }
  if (x <= lo) return {0, 1.0};
  if (x >= hi) return {pts.size() - 1, 1.0};
  // First node strictly greater than x; x lies in [pts[j-1], pts[j]).
  const auto it = std::upper_bound(pts.begin(), pts.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - pts.begin());
  const double left = pts[j - 1];
  if (x == left) return {j - 1, 1.0};
  const double right = pts[j];
  return {j - 1, (right - x) / (right - left)};
}

SparseMass project_mass(const StatePoint& point, const Grid& grid) {
  SparseMass out;
  const AxisWeights a0 = project_axis(point.x1, grid, 0);
  if (grid.dims() == 1) {
    out.add(a0.lo_index, a0.lo_weight);
    if (a0.lo_weight < 1.0) out.add(a0.lo_index + 1, 1.0 - a0.lo_weight);
    return out;
  }
  const AxisWeights a1 = project_axis(point.x2, grid, 1);
  const double w0[2] = {a0.lo_weight, 1.0 - a0.lo_weight};
  const double w1[2] = {a1.lo_weight, 1.0 - a1.lo_weight};
  for (std::size_t j = 0; j < 2; ++j) {
    if (j == 1 && a1.lo_weight >= 1.0) break;
    for (std::size_t i = 0; i < 2; ++i) {
      if (i == 1 && a0.lo_weight >= 1.0) break;
      out.add(grid.flat(a0.lo_index + i, a1.lo_index + j), w0[i] * w1[j]);
    }
  }
  return out;
}

double interpolate(std::span<const double> values, const Grid& grid,
                   const StatePoint& point) {
  const SparseMass m = project_mass(point, grid);
  double v = 0.0;
  for (std::size_t k = 0; k < m.count; ++k) v += m.weight[k] * values[m.node[k]];
  return v;
}

std::string to_string(OrderingResult r) {
  switch (r) {
    case OrderingResult::kDominates: return "Dominates";
    case OrderingResult::kDominatedBy: return "DominatedBy";
    case OrderingResult::kEqual: return "Equal";
    case OrderingResult::kIncomparable: return "Incomparable";
  }
  return "?";
}

OrderingResult reverse(OrderingResult r) {
  if (r == OrderingResult::kDominates) return OrderingResult::kDominatedBy;
  if (r == OrderingResult::kDominatedBy) return OrderingResult::kDominates;
  return r;
}

OrderingResult fosd_compare(const PopulationState& s1,
                            const PopulationState& s2, double tol) {
  require_same_grid(s1.grid(), s2.grid(), "fosd_compare");
  if (s1.grid().dims() != 1) {
    throw Unsupported("fosd_compare requires a 1-D grid; use fosd_compare_x1");
  }
  const auto c1 = cumulative(s1.weights());
  const auto c2 = cumulative(s2.weights());
  bool below = false, above = false;
  for (std::size_t k = 0; k < c1.size(); ++k) {
    const double d = c1[k] - c2[k];
    if (d < -tol) below = true;
    if (d > tol) above = true;
  }
  return classify(below, above);
}

OrderingResult fosd_compare_x1(const PopulationState& s1,
                               const PopulationState& s2, double tol) {
  require_same_grid(s1.grid(), s2.grid(), "fosd_compare_x1");
  const Grid& g = s1.grid();
  if (g.dims() != 2) throw Unsupported("fosd_compare_x1 requires a 2-D grid");
  const auto m1 = marginal(s1, 1);
  const auto m2 = marginal(s2, 1);
  for (std::size_t j = 0; j < m1.size(); ++j) {
    if (std::abs(m1[j] - m2[j]) > tol) {
      throw MarginalMismatch("second-axis marginals differ at slice " +
                             std::to_string(j));
    }
  }
  bool below = false, above = false;
  for (std::size_t j = 0; j < g.axis_size(1); ++j) {
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t i = 0; i < g.axis_size(0); ++i) {
      c1 += s1[g.flat(i, j)];
      c2 += s2[g.flat(i, j)];
      const double d = c1 - c2;
      if (d < -tol) below = true;
      if (d > tol) above = true;
    }
  }
  return classify(below, above);
}

double kolmogorov_distance(const PopulationState& s1,
                           const PopulationState& s2) {
  require_same_grid(s1.grid(), s2.grid(), "kolmogorov_distance");
  double best = 0.0;
  if (s1.grid().dims() == 1) {
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t k = 0; k < s1.size(); ++k) {
      c1 += s1[k];
      c2 += s2[k];
      best = std::max(best, std::abs(c1 - c2));
    }
    return best;
  }
  for (double d : joint_cdf_difference(s1, s2)) best = std::max(best, std::abs(d));
  return best;
}

std::vector<double> marginal(const PopulationState& s, std::size_t axis) {
  const Grid& g = s.grid();
  std::vector<double> m(g.axis_size(axis), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto [i0, i1] = g.unflat(k);
    m[axis == 0 ? i0 : i1] += s[k];
  }
  return m;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace mfe
