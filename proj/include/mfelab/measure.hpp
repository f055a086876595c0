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

#ifndef MFELAB_MEASURE_HPP_
#define MFELAB_MEASURE_HPP_

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mfe {

inline constexpr double kDefaultCompareTol = 1e-9;
inline constexpr double kBoundsTol = 1e-12;
inline constexpr double kMassTol = 1e-12;

// A point of a (at most two-dimensional) state space. The second coordinate
// is ignored on one-dimensional grids.
struct StatePoint {
  double x1 = 0.0;
  double x2 = 0.0;

  double operator[](std::size_t axis) const { return axis == 0 ? x1 : x2; }
  friend bool operator==(const StatePoint&, const StatePoint&) = default;
};

enum class AxisKind {
  kContinuous,   // interpolated, at least two strictly increasing points
  kCategorical,  // exact-match labels (type index); may hold a single point
};

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

// Sorted discretization of a compact interval or of a product of two
// intervals. Nodes are flattened with the first axis varying fastest:
// flat = i0 + n0 * i1.
class Grid {
 public:
  static GridPtr line(std::vector<double> points);
  static GridPtr uniform(double lo, double hi, std::size_t n);
  static GridPtr product(std::vector<double> axis0, std::vector<double> axis1,
                         AxisKind kind1 = AxisKind::kContinuous);

  std::size_t dims() const { return axes_.size(); }
  std::size_t size() const { return size_; }
  std::size_t axis_size(std::size_t axis) const { return axes_[axis].size(); }
  std::span<const double> axis(std::size_t axis) const { return axes_[axis]; }
  AxisKind axis_kind(std::size_t axis) const { return kinds_[axis]; }
  double lo(std::size_t axis) const { return axes_[axis].front(); }
  double hi(std::size_t axis) const { return axes_[axis].back(); }

  std::size_t flat(std::size_t i0, std::size_t i1 = 0) const {
    return i0 + axes_[0].size() * i1;
  }
  std::pair<std::size_t, std::size_t> unflat(std::size_t node) const {
    const std::size_t n0 = axes_[0].size();
    return {node % n0, node / n0};
  }
  StatePoint point(std::size_t node) const;

  // Structural equality (same axes, same kinds).
  bool same_as(const Grid& other) const;

 private:
  Grid(std::vector<std::vector<double>> axes, std::vector<AxisKind> kinds);

  std::vector<std::vector<double>> axes_;
  std::vector<AxisKind> kinds_;
  std::size_t size_ = 0;
};

// Probability vector over the nodes of a grid.
class PopulationState {
 public:
  // Validates nonnegativity and unit mass (within kMassTol).
  PopulationState(GridPtr grid, std::vector<double> weights);

  static PopulationState dirac(GridPtr grid, std::size_t node);
  static PopulationState uniform(GridPtr grid);
  // Clamps negatives down to -1e-12 to zero and rescales to unit mass
  // (totals within 1e-14 of one are kept as they are).
  static PopulationState normalized(GridPtr grid, std::vector<double> raw);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> weights() const { return weights_; }
  double operator[](std::size_t node) const { return weights_[node]; }
  std::size_t size() const { return weights_.size(); }

  double integrate(const std::function<double(const StatePoint&)>& f) const;

  // (1 - lambda) * this + lambda * other.
  PopulationState mix(const PopulationState& other, double lambda) const;

 private:
  GridPtr grid_;
  std::vector<double> weights_;
};

// Mass supported on at most four grid nodes, the result of splitting a point
// between the nodes that bracket it.
struct SparseMass {
  std::array<std::size_t, 4> node{};
  std::array<double, 4> weight{};
  std::size_t count = 0;

  void add(std::size_t n, double w) {
    node[count] = n;
    weight[count] = w;
    ++count;
  }
  PopulationState to_population(const GridPtr& grid) const;
};

// Splits a point between the two bracketing nodes on each continuous axis
// (barycentric weights, so the mean is preserved) and matches categorical
// axes exactly. Points within kBoundsTol outside the bounds are clamped;
// anything further throws PointOutOfBounds.
SparseMass project_mass(const StatePoint& point, const Grid& grid);

// Weights on one axis only.
struct AxisWeights {
  std::size_t lo_index = 0;
  double lo_weight = 1.0;  // mass on lo_index; the rest goes to lo_index + 1
};
AxisWeights project_axis(double x, const Grid& grid, std::size_t axis);

// Linear (bilinear in 2-D) interpolation of nodal values, using exactly the
// weights of project_mass.
double interpolate(std::span<const double> values, const Grid& grid,
                   const StatePoint& point);

enum class OrderingResult { kDominates, kDominatedBy, kEqual, kIncomparable };

std::string to_string(OrderingResult r);
OrderingResult reverse(OrderingResult r);

// First-order stochastic dominance on a 1-D grid via CDF comparison:
// s1 dominates s2 iff CDF1 <= CDF2 everywhere.
OrderingResult fosd_compare(const PopulationState& s1,
                            const PopulationState& s2,
                            double tol = kDefaultCompareTol);

// Dominance generated by test functions increasing in the first coordinate on
// a 2-D grid. Only defined when the second-axis marginals agree within tol;
// it then reduces to slice-wise comparison of the first-axis partial sums.
OrderingResult fosd_compare_x1(const PopulationState& s1,
                               const PopulationState& s2,
                               double tol = kDefaultCompareTol);

// Sup-norm distance between CDFs (joint CDF on 2-D grids).
double kolmogorov_distance(const PopulationState& s1,
                           const PopulationState& s2);

// Marginal over one axis of a 2-D population (returned as plain weights).
std::vector<double> marginal(const PopulationState& s, std::size_t axis);

double sup_distance(std::span<const double> a, std::span<const double> b);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace mfe

#endif  // MFELAB_MEASURE_HPP_
