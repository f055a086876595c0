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

#include "mfelab/run.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <system_error>

#include "mfelab/errors.hpp"
#include "mfelab/kernel.hpp"
#include "mfelab/models.hpp"
#include "mfelab/report_io.hpp"

namespace mfe {

namespace {

namespace fs = std::filesystem;
using io::CsvTable;
using io::Json;

// Carries an exit code out of a command body.
struct RunFailure {
  int code;
  std::string check;
  std::string detail;
};

void write_error(const fs::path& out, const std::string& command, const RunFailure& f) {
  Json j{{"command", command}, {"exit_code", f.code}, {"check", f.check}, {"detail", f.detail}};
  std::error_code ec;
  fs::create_directories(out, ec);
  try {
    io::write_json(out / "error.json", j);
  } catch (const std::exception& e) {
    spdlog::error("could not write error.json: {}", e.what());
  }
  spdlog::error("{}: {} ({})", f.check, f.detail, command);
}

Json header_json(const RunConfig& cfg, const ModelSpec& spec) {
  Json j;
  j["command"] = cfg.command;
  j["model"] = cfg.model;
  j["spec"] = spec.name;
  j["seed"] = cfg.seed;
  j["state_nodes"] = spec.state_grid->size();
  j["population_nodes"] = spec.population_grid->size();
  j["action_nodes"] = spec.action_grid.size();
  j["solver"] = io::settings_json(cfg.solver);
  return j;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<double> row_of(const std::vector<double>& lead, double node,
                           const std::vector<double>& coords, std::vector<double> tail) {
  std::vector<double> row = lead;
  row.push_back(node);
  row.insert(row.end(), coords.begin(), coords.end());
  row.insert(row.end(), tail.begin(), tail.end());
  return row;
}

// The population, policy and value tables, optionally keyed by leading
// columns (start or sweep point).
struct SolutionTables {
  CsvTable population;
  CsvTable policy;
  CsvTable value;

  SolutionTables(const ModelSpec& spec, const std::vector<std::string>& lead)
      : population(concat(concat(concat(lead, {"node"}), io::coordinate_header(*spec.population_grid)),
                          {"weight"})),
        policy(concat(concat(concat(lead, {"node"}), io::coordinate_header(*spec.state_grid)),
                      {"action_index", "action"})),
        value(concat(concat(concat(lead, {"node"}), io::coordinate_header(*spec.state_grid)),
                     {"value"})) {}

  void add(const std::vector<double>& lead, const MfeResult& r) {
    if (r.population) {
      const Grid& g = r.population->grid();
      for (std::size_t k = 0; k < g.size(); ++k) {
        population.add(row_of(lead, static_cast<double>(k), io::coordinates(g, k),
                              {(*r.population)[k]}));
      }
    }
    if (r.policy.grid) {
      const Grid& g = *r.policy.grid;
      for (std::size_t k = 0; k < g.size(); ++k) {
        policy.add(row_of(lead, static_cast<double>(k), io::coordinates(g, k),
                          {static_cast<double>(r.policy.index[k]), r.policy.action[k]}));
      }
    }
    if (r.value.grid) {
      const Grid& g = *r.value.grid;
      for (std::size_t k = 0; k < g.size(); ++k) {
        value.add(row_of(lead, static_cast<double>(k), io::coordinates(g, k), {r.value.values[k]}));
      }
    }
  }

  void write(const fs::path& out) const {
    population.write(out / "population.csv");
    policy.write(out / "policy.csv");
    value.write(out / "value.csv");
  }
};

RunFailure non_convergence(const MfeResult& r) {
  if (r.status == MfeStatus::kFailed) return {kExitNonConvergence, r.error_check, r.error};
  return {kExitNonConvergence, to_string(r.status),
          "residual " + io::format_real(r.residual) + " after " +
              std::to_string(r.outer_iterations) + " outer iterations"};
}

void add_trace(CsvTable& t, const std::vector<double>& lead, const MfeResult& r) {
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    std::vector<double> row = lead;
    row.push_back(static_cast<double>(k + 1));
    row.push_back(r.trace[k]);
    t.add(row);
  }
}

int cmd_solve(const RunConfig& cfg, const ModelSpec& spec, const fs::path& out) {
  const PopulationState s0 = named_start(spec, "uniform", cfg.seed, 0);
  const MfeResult r = solve_mfe(spec, s0, cfg.solver);
  spdlog::info("solve: {} after {} outer iterations, residual {}", to_string(r.status),
               r.outer_iterations, r.residual);

  Json res = header_json(cfg, spec);
  res["result"] = io::mfe_result_json(r);
  res["consistency_residual"] =
      r.population ? Json(consistency_residual(*r.population, spec, cfg.solver)) : Json(nullptr);
  io::write_json(out / "result.json", res);
  io::write_json(out / "diagnostics.json", io::diagnostics_json(r));
  SolutionTables tables(spec, {});
  tables.add({}, r);
  tables.write(out);
  CsvTable trace({"iteration", "residual"});
  add_trace(trace, {}, r);
  trace.write(out / "trace.csv");

  if (!r.converged()) throw non_convergence(r);
  return kExitOk;
}

std::vector<PopulationState> starts_of(const RunConfig& cfg, const ModelSpec& spec) {
  std::vector<PopulationState> starts;
  std::size_t random_draws = 0;
  for (const auto& name : cfg.starts) {
    starts.push_back(named_start(spec, name, cfg.seed, name == "random" ? random_draws++ : 0));
  }
  return starts;
}

int cmd_probe(const RunConfig& cfg, const ModelSpec& spec, const fs::path& out, std::size_t jobs) {
  const UniquenessReport rep = uniqueness_probe(spec, starts_of(cfg, spec), cfg.solver, jobs);
  spdlog::info("probe-uniqueness: {} cluster(s) over {} starts", rep.cluster_count,
               rep.results.size());

  Json res = header_json(cfg, spec);
  res["starts"] = cfg.starts;
  res["report"] = io::uniqueness_json(rep);
  io::write_json(out / "result.json", res);

  Json diag = Json::array();
  SolutionTables tables(spec, {"start"});
  CsvTable trace({"start", "iteration", "residual"});
  for (std::size_t i = 0; i < rep.results.size(); ++i) {
    const std::vector<double> lead{static_cast<double>(i)};
    diag.push_back(io::diagnostics_json(rep.results[i]));
    tables.add(lead, rep.results[i]);
    add_trace(trace, lead, rep.results[i]);
  }
  io::write_json(out / "diagnostics.json", diag);
  tables.write(out);
  trace.write(out / "trace.csv");

  for (const auto& r : rep.results) {
    if (!r.converged()) throw non_convergence(r);
  }
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const fs::path& out, std::size_t jobs) {
  // Build every point up front so bad values surface as config errors.
  const SpecBuilder builder = sweep_builder(cfg);
  for (double v : cfg.sweep.values) {
    try {
      const ModelSpec spec = builder(v);
      const ValidationReport vr = validate_model(spec, default_probes(spec));
      if (!vr.pass) {
        throw RunFailure{kExitValidation, vr.violations.front().check,
                         cfg.sweep.param + " = " + io::format_real(v) + ": " +
                             vr.violations.front().detail};
      }
    } catch (const MfeError& e) {
      throw RunFailure{kExitConfig, e.check(),
                       cfg.sweep.param + " = " + io::format_real(v) + ": " + e.detail()};
    }
  }
  const std::uint64_t seed = cfg.seed;
  const SweepResult sw = comparative_sweep(
      builder, cfg.sweep.values, cfg.sweep.expected, cfg.solver,
      [seed](const ModelSpec& s) { return named_start(s, "uniform", seed, 0); }, jobs);
  spdlog::info("sweep over {}: monotone_flag = {}", cfg.sweep.param, sw.monotone_flag);

  const ModelSpec first = builder(cfg.sweep.values.front());
  Json res = header_json(cfg, first);
  res["param"] = cfg.sweep.param;
  res["values"] = cfg.sweep.values;
  res["expected_direction"] = to_string(sw.expected);
  res["monotone_flag"] = sw.monotone_flag;
  res["report"] = io::sweep_json(sw);
  io::write_json(out / "result.json", res);

  Json diag = Json::array();
  SolutionTables tables(first, {"point", "param"});
  CsvTable trace({"point", "param", "iteration", "residual"});
  for (std::size_t i = 0; i < sw.points.size(); ++i) {
    const std::vector<double> lead{static_cast<double>(i), sw.points[i].param};
    diag.push_back(io::diagnostics_json(sw.points[i].result));
    tables.add(lead, sw.points[i].result);
    add_trace(trace, lead, sw.points[i].result);
  }
  io::write_json(out / "diagnostics.json", diag);
  tables.write(out);
  trace.write(out / "trace.csv");

  for (const auto& p : sw.points) {
    if (!p.result.converged()) throw non_convergence(p.result);
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const ModelSpec& spec, const fs::path& out,
                 std::size_t jobs) {
  const MfeResult r = solve_mfe(spec, named_start(spec, "uniform", cfg.seed, 0), cfg.solver);
  SolutionTables tables(spec, {});
  tables.add({}, r);
  tables.write(out);
  io::write_json(out / "diagnostics.json", io::diagnostics_json(r));
  Json res = header_json(cfg, spec);
  res["mfe"] = io::mfe_result_json(r);
  if (!r.converged()) {
    io::write_json(out / "result.json", res);
    throw non_convergence(r);
  }

  SimConfig sc = cfg.simulate;
  sc.seed = cfg.seed;
  sc.jobs = jobs;
  const SimReport rep = simulate_population(spec, r.policy, *r.population, sc);
  spdlog::info("simulate: post burn-in mean distance {}", rep.mean_distance_post_burn);
  res["simulation"] = io::simulation_json(rep);
  io::write_json(out / "result.json", res);

  CsvTable trace({"t", "distance"});
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    trace.add({static_cast<double>(rep.times[k]), rep.distance[k]});
  }
  trace.write(out / "trace.csv");

  const PopulationState target = state_marginal(spec, *r.population);
  const Grid& g = *spec.state_grid;
  CsvTable emp(concat(concat({"node"}, io::coordinate_header(g)), {"target", "empirical"}));
  for (std::size_t k = 0; k < g.size(); ++k) {
    emp.add(row_of({}, static_cast<double>(k), io::coordinates(g, k),
                   {target[k], rep.final_empirical[k]}));
  }
  emp.write(out / "empirical.csv");
  return kExitOk;
}

int cmd_check(const RunConfig& cfg, const ModelSpec& spec, const fs::path& out) {
  const std::vector<PopulationState> probes = default_probes(spec);
  Json diag;
  std::vector<std::pair<std::string, std::string>> failures;
  // The savings model gets its uniqueness from the monotone kernel alone;
  // the s-antitone checks are reported for it but do not fail the run.
  const std::string base = cfg.model == "custom-typed" ? cfg.typed.base : cfg.model;
  const bool antitone_required = base != "aiyagari";
  diag["s_antitone_checks_required"] = antitone_required;
  auto fail = [&](const std::string& check, const std::string& detail) {
    if (!antitone_required && (check == "kernel decreasing in s" || check == "policy structure")) {
      return;
    }
    failures.emplace_back(check, detail);
  };

  const ValidationReport vr = validate_model(spec, probes);
  diag["standing_conditions"] = io::validation_json(vr);
  for (const auto& v : vr.violations) fail(v.check, v.detail);

  Json per_probe = Json::array();
  std::vector<ViResult> vis;
  if (vr.pass) {
    for (std::size_t p = 0; p < probes.size(); ++p) {
      ViResult vi = value_iterate(probes[p], spec, cfg.solver.vi);
      const MarkovKernel q = build_kernel(vi.policy, probes[p], spec);
      const MonotonicityReport mono = q.grid().dims() == 1 ? check_monotone_in_x(q)
                                                           : check_monotone_in_x(q, 0);
      const ErgodicityReport erg = ergodicity_probe(q, cfg.solver.ergodicity_horizon);
      Json e;
      e["aggregator"] = aggregator_value(probes[p], spec);
      e["kernel_increasing_in_x"] = io::monotonicity_json(mono);
      e["ergodicity"] = io::ergodicity_json(erg);
      if (!mono.pass) fail("kernel increasing in x", "probe " + std::to_string(p));
      if (spec.regeneration) {
        double floor = 1.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
          floor = std::min(floor, q.at(i, spec.regeneration->node));
        }
        const bool ok = floor >= spec.regeneration->prob;
        e["minorization"] = {{"node", spec.regeneration->node},
                             {"required", spec.regeneration->prob},
                             {"min_row_mass", floor},
                             {"pass", ok}};
        if (!ok) fail("minorization", "probe " + std::to_string(p));
      }
      per_probe.push_back(std::move(e));
      vis.push_back(std::move(vi));
    }
    diag["probes"] = std::move(per_probe);

    Json dec = Json::array();
    for (std::size_t p = 0; p + 1 < probes.size(); ++p) {
      const MonotonicityReport m =
          check_decreasing_in_s(spec, probes[p], probes[p + 1], kDefaultCompareTol, cfg.solver.vi);
      dec.push_back(io::monotonicity_json(m));
      if (!m.pass) fail("kernel decreasing in s", "probes " + std::to_string(p) + ", " +
                                                      std::to_string(p + 1));
    }
    diag["kernel_decreasing_in_s"] = std::move(dec);

    const PolicyReport pr = policy_structure_report(spec, probes, cfg.solver.vi);
    diag["policy_structure"] = io::policy_report_json(pr);
    if (!pr.pass()) fail("policy structure", pr.violations.empty() ? "" : pr.violations.front());
    if (base == "capacity" || base == "quality_ladder") {
      const auto dd = decreasing_differences_violations(spec, probes);
      diag["decreasing_differences"] = {{"pass", dd.empty()}, {"violations", dd}};
      if (!dd.empty()) fail("decreasing differences", dd.front());
    }
  }

  const bool pass = failures.empty();
  diag["pass"] = pass;
  Json res = header_json(cfg, spec);
  res["pass"] = pass;
  Json f = Json::array();
  for (const auto& [check, detail] : failures) f.push_back({{"check", check}, {"detail", detail}});
  res["failures"] = std::move(f);
  io::write_json(out / "result.json", res);
  io::write_json(out / "diagnostics.json", diag);
  spdlog::info("check: {} failure(s)", failures.size());
  if (!pass) throw RunFailure{kExitValidation, failures.front().first, failures.front().second};
  return kExitOk;
}

int dispatch(const RunConfig& cfg, const fs::path& out, std::size_t jobs) {
  if (cfg.command == "sweep") return cmd_sweep(cfg, out, jobs);

  ModelSpec spec;
  try {
    spec = build_spec(cfg);
  } catch (const MfeError& e) {
    throw RunFailure{kExitConfig, e.check(), e.detail()};
  }
  spdlog::debug("built {} with {} population nodes", spec.name, spec.population_grid->size());
  if (cfg.command == "check") return cmd_check(cfg, spec, out);

  const ValidationReport vr = validate_model(spec, default_probes(spec));
  if (!vr.pass) {
    throw RunFailure{kExitValidation, vr.violations.front().check, vr.violations.front().detail};
  }
  if (cfg.command == "solve") return cmd_solve(cfg, spec, out);
  if (cfg.command == "probe-uniqueness") return cmd_probe(cfg, spec, out, jobs);
  if (cfg.command == "simulate") return cmd_simulate(cfg, spec, out, jobs);
  throw RunFailure{kExitConfig, "value out of range", "unknown command '" + cfg.command + "'"};
}

}  // namespace

int run(const RunConfig& cfg, const fs::path& out, std::size_t jobs) {
  try {
    fs::create_directories(out);
  } catch (const fs::filesystem_error& e) {
    spdlog::error("cannot create output directory {}: {}", out.string(), e.what());
    return kExitConfig;
  }
  fs::remove(out / "error.json");
  try {
    return dispatch(cfg, out, std::max<std::size_t>(1, jobs));
  } catch (const RunFailure& f) {
    write_error(out, cfg.command, f);
    return f.code;
  } catch (const ConfigError& e) {
    write_error(out, cfg.command, {kExitConfig, e.check(), e.detail()});
    return kExitConfig;
  } catch (const MfeError& e) {
    write_error(out, cfg.command, {kExitValidation, e.check(), e.detail()});
    return kExitValidation;
  } catch (const std::exception& e) {
    write_error(out, cfg.command, {kExitNonConvergence, "error", e.what()});
    return kExitNonConvergence;
  }
}

int run_config(const fs::path& config, const fs::path& out, const RunOverrides& overrides) {
  RunConfig cfg;
  try {
    cfg = load_config(config);
    if (overrides.command) cfg.command = *overrides.command;
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.mode) cfg.solver.mode = *overrides.mode;
    if (overrides.tol) {
      if (!(*overrides.tol > 0.0) || !std::isfinite(*overrides.tol)) {
        throw ConfigError("value out of range", "'--tol' must be positive");
      }
      cfg.solver.tol = *overrides.tol;
    }
    if (cfg.command == "sweep" && cfg.sweep.param.empty()) {
      throw ConfigError("missing key", "the sweep command needs a [sweep] table");
    }
  } catch (const MfeError& e) {
    write_error(out, overrides.command.value_or(cfg.command), {kExitConfig, e.check(), e.detail()});
    return kExitConfig;
  }
  spdlog::info("{} {} -> {}", cfg.command, config.string(), out.string());
  return run(cfg, out, overrides.jobs.value_or(1));
}

RecheckResult recheck_result(const RunConfig& cfg, const fs::path& result_json) {
  std::ifstream in(result_json);
  if (!in) throw ConfigError("unreadable result", "cannot open " + result_json.string());
  const Json j = Json::parse(in);
  const ModelSpec spec = build_spec(cfg);
  const PopulationState s =
      io::population_from_json(j.at("result").at("population"), spec.population_grid);
  return {j.at("consistency_residual").get<double>(), consistency_residual(s, spec, cfg.solver)};
}

}  // namespace mfe
