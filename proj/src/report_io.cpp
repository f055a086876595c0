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

#include "mfelab/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mfelab/errors.hpp"

namespace mfe::io {

namespace {

Json size_or_null(std::size_t v) {
  if (v == std::numeric_limits<std::size_t>::max()) return nullptr;
  return v;
}

Json real_matrix(const std::vector<std::vector<double>>& m) {
  Json out = Json::array();
  for (const auto& row : m) {
    Json r = Json::array();
    for (double x : row) r.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
    out.push_back(std::move(r));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("unwritable output", "cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("unwritable output", "failed writing " + path.string());
}

}  // namespace

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json grid_json(const Grid& g) {
  Json axes = Json::array();
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const auto pts = g.axis(a);
    axes.push_back({{"kind", g.axis_kind(a) == AxisKind::kCategorical ? "categorical" : "continuous"},
                    {"points", std::vector<double>(pts.begin(), pts.end())}});
  }
  return {{"size", g.size()}, {"axes", std::move(axes)}};
}

Json population_json(const PopulationState& s) {
  const auto w = s.weights();
  return {{"grid", grid_json(s.grid())}, {"weights", std::vector<double>(w.begin(), w.end())}};
}

PopulationState population_from_json(const Json& j, const GridPtr& grid) {
  if (!j.contains("weights")) throw ConfigError("missing key", "population has no weights");
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != grid->size()) {
    throw GridMismatch("stored population has " + std::to_string(w.size()) +
                       " nodes, grid has " + std::to_string(grid->size()));
  }
  return PopulationState(grid, std::move(w));
}

Json validation_json(const ValidationReport& r) {
  Json v = Json::array();
  for (const auto& x : r.violations) v.push_back({{"check", x.check}, {"detail", x.detail}});
  return {{"pass", r.pass}, {"violations", std::move(v)}};
}

Json monotonicity_json(const MonotonicityReport& r) {
  return {{"pass", r.pass}, {"pairs_checked", r.pairs_checked}, {"violations", r.violations}};
}

Json ergodicity_json(const ErgodicityReport& e) {
  Json j;
  j["splitting_step"] = e.splitting_step ? Json(*e.splitting_step) : Json(nullptr);
  j["origin_minorization"] = e.origin_minorization;
  j["final_extreme_distance"] = e.distance_trace.empty() ? 0.0 : e.distance_trace.back();
  j["distance_trace"] = e.distance_trace;
  return j;
}

Json policy_report_json(const PolicyReport& r) {
  return {{"pass", r.pass()},
          {"monotone_in_x", r.monotone_in_x},
          {"decreasing_in_s", r.decreasing_in_s},
          {"lipschitz_checked", r.lipschitz_checked},
          {"lipschitz_ok", r.lipschitz_ok},
          {"lipschitz_ratio", r.lipschitz_ratio},
          {"violations", r.violations}};
}

Json settings_json(const SolverSettings& s) {
  const char* method = s.invariant.method == InvariantMethod::kAuto     ? "auto"
                       : s.invariant.method == InvariantMethod::kDirect ? "direct"
                                                                        : "power";
  return {{"tol", s.tol},
          {"damping", s.damping},
          {"max_outer", s.max_outer},
          {"mode", to_string(s.mode)},
          {"adaptive_damping", s.adaptive_damping},
          {"min_damping", s.min_damping},
          {"patience", s.patience},
          {"vi_tol", s.vi.tol},
          {"vi_max_iterations", s.vi.max_iterations},
          {"refine_actions", s.vi.refine},
          {"invariant_tol", s.invariant.tol},
          {"invariant_method", method},
          {"direct_threshold", s.invariant.direct_threshold},
          {"warm_start", s.warm_start}};
}

Json mfe_result_json(const MfeResult& r) {
  Json j;
  j["status"] = to_string(r.status);
  j["converged"] = r.converged();
  if (!r.error.empty()) {
    j["error"] = r.error;
    j["error_check"] = r.error_check;
  }
  j["residual"] = r.residual;
  j["aggregate_gap"] = r.aggregate_gap;
  j["aggregator"] = r.aggregator_at_eq;
  j["outer_iterations"] = r.outer_iterations;
  j["non_ergodic_at_candidate"] = r.non_ergodic_at_candidate;
  j["population"] = r.population ? population_json(*r.population) : Json(nullptr);
  if (r.policy.grid) {
    j["policy"] = {{"action_index", r.policy.index}, {"action", r.policy.action}};
  }
  if (r.value.grid) j["value"] = r.value.values;
  return j;
}

Json diagnostics_json(const MfeResult& r) {
  const MfeDiagnostics& d = r.diagnostics;
  Json j;
  j["inner_ergodicity"] = to_string(d.inner_flag);
  j["vi_iterations_total"] = d.vi_iterations_total;
  j["non_ergodic_at_candidate"] = r.non_ergodic_at_candidate;
  j["monotone_in_x"] = d.monotone_in_x ? monotonicity_json(*d.monotone_in_x) : Json(nullptr);
  j["ergodicity"] = d.ergodicity ? ergodicity_json(*d.ergodicity) : Json(nullptr);
  return j;
}

Json uniqueness_json(const UniquenessReport& r) {
  Json j;
  j["cluster_count"] = r.cluster_count;
  Json clusters = Json::array();
  for (std::size_t c : r.cluster_of) clusters.push_back(size_or_null(c));
  j["cluster_of"] = std::move(clusters);
  j["distance"] = real_matrix(r.distance);
  j["aggregate_gap"] = real_matrix(r.aggregate_gap);
  j["aggregator_order"] = r.aggregator_order;
  j["sd_order"] = r.sd_order;
  j["distinct_pairs_incomparable"] = r.distinct_pairs_incomparable;
  Json loc = Json::array();
  for (const auto& l : r.localization) {
    loc.push_back({{"low", l.low},
                   {"high", l.high},
                   {"monotone_in_x", l.monotone_in_x},
                   {"decreasing_in_s", l.decreasing_in_s},
                   {"ergodic", l.ergodic},
                   {"broken", l.broken}});
  }
  j["localization"] = std::move(loc);
  Json results = Json::array();
  for (const auto& res : r.results) results.push_back(mfe_result_json(res));
  j["results"] = std::move(results);
  return j;
}

Json sweep_json(const SweepResult& r) {
  Json j;
  j["expected_direction"] = to_string(r.expected);
  j["monotone_flag"] = r.monotone_flag;
  Json pts = Json::array();
  for (const auto& p : r.points) {
    Json e = mfe_result_json(p.result);
    pts.push_back({{"param", p.param}, {"result", std::move(e)}});
  }
  j["points"] = std::move(pts);
  return j;
}

Json simulation_json(const SimReport& r) {
  Json j;
  j["times"] = r.times;
  j["distance"] = r.distance;
  j["mean_distance_post_burn"] = r.mean_distance_post_burn;
  j["final_empirical"] = r.final_empirical;
  if (!r.trajectories.empty()) {
    Json traj = Json::array();
    for (const auto& path : r.trajectories) {
      Json a = Json::array();
      for (const auto& x : path) a.push_back({x.x1, x.x2});
      traj.push_back(std::move(a));
    }
    j["trajectories"] = std::move(traj);
  }
  return j;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw InvalidParams("csv row width does not match header");
  rows_.push_back(row);
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::string text;
  for (std::size_t c = 0; c < header_.size(); ++c) text += (c ? "," : "") + header_[c];
  text += '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) text += ',';
      text += format_real(row[c]);
    }
    text += '\n';
  }
  write_text(path, text);
}

std::vector<std::string> coordinate_header(const Grid& g) {
  if (g.dims() == 1) return {"x1"};
  return {"x1", "x2"};
}

std::vector<double> coordinates(const Grid& g, std::size_t node) {
  const StatePoint p = g.point(node);
  if (g.dims() == 1) return {p.x1};
  return {p.x1, p.x2};
}

}  // namespace mfe::io
