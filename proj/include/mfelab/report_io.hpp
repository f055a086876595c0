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

#ifndef MFELAB_REPORT_IO_HPP_
#define MFELAB_REPORT_IO_HPP_

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "mfelab/dp.hpp"
#include "mfelab/kernel.hpp"
#include "mfelab/mfe.hpp"
#include "mfelab/model.hpp"
#include "mfelab/sim.hpp"

namespace mfe::io {

// Insertion-ordered so files keep a stable, readable key order.
using Json = nlohmann::ordered_json;

// 17 significant digits, enough for an exact double round-trip.
std::string format_real(double x);

Json grid_json(const Grid& g);
Json population_json(const PopulationState& s);
PopulationState population_from_json(const Json& j, const GridPtr& grid);

Json validation_json(const ValidationReport& r);
Json monotonicity_json(const MonotonicityReport& r);
Json ergodicity_json(const ErgodicityReport& e);
Json policy_report_json(const PolicyReport& r);
Json settings_json(const SolverSettings& s);

// Summary plus population, policy and value; the residual trace goes to CSV.
Json mfe_result_json(const MfeResult& r);
Json diagnostics_json(const MfeResult& r);
Json uniqueness_json(const UniquenessReport& r);
Json sweep_json(const SweepResult& r);
Json simulation_json(const SimReport& r);

void write_json(const std::filesystem::path& path, const Json& j);

// Flat CSV with a header row; every cell is a real formatted by format_real.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(const std::vector<double>& row);
  void write(const std::filesystem::path& path) const;
  std::size_t columns() const { return header_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

// Coordinate columns of a grid node: x1 and, on 2-D grids, x2.
std::vector<std::string> coordinate_header(const Grid& g);
std::vector<double> coordinates(const Grid& g, std::size_t node);

}  // namespace mfe::io

#endif  // MFELAB_REPORT_IO_HPP_
