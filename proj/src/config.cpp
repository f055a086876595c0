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

#include "mfelab/config.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>

#include "mfelab/errors.hpp"
#include "mfelab/models.hpp"

namespace mfe {

namespace {

[[noreturn]] void unknown_key(const std::string& path) {
  throw ConfigError("unknown key", "'" + path + "' is not part of the schema");
}

[[noreturn]] void wrong_type(const std::string& path, const char* expected) {
  throw ConfigError("wrong type", "'" + path + "' must be " + expected);
}

[[noreturn]] void out_of_range(const std::string& path, const std::string& why) {
  throw ConfigError("value out of range", "'" + path + "' " + why);
}

double as_real(const toml::node& n, const std::string& path) {
  if (const auto* i = n.as_integer()) return static_cast<double>(i->get());
  if (const auto* f = n.as_floating_point()) return f->get();
  wrong_type(path, "a number");
}

std::size_t as_count(const toml::node& n, const std::string& path) {
  const auto* i = n.as_integer();
  if (!i) wrong_type(path, "an integer");
  if (i->get() < 0) out_of_range(path, "must be non-negative");
  return static_cast<std::size_t>(i->get());
}

bool as_bool(const toml::node& n, const std::string& path) {
  const auto* b = n.as_boolean();
  if (!b) wrong_type(path, "a boolean");
  return b->get();
}

std::string as_string(const toml::node& n, const std::string& path) {
  const auto* s = n.as_string();
  if (!s) wrong_type(path, "a string");
  return s->get();
}

std::vector<double> as_reals(const toml::node& n, const std::string& path) {
  const auto* arr = n.as_array();
  if (!arr) wrong_type(path, "an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < arr->size(); ++k) {
    out.push_back(as_real(*arr->get(k), path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

std::vector<std::string> as_strings(const toml::node& n, const std::string& path) {
  const auto* arr = n.as_array();
  if (!arr) wrong_type(path, "an array of strings");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < arr->size(); ++k) {
    out.push_back(as_string(*arr->get(k), path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

ParamValue as_param(const toml::node& n, const std::string& path) {
  if (n.is_boolean()) return n.as_boolean()->get();
  if (n.is_number()) return as_real(n, path);
  const auto* arr = n.as_array();
  if (!arr) wrong_type(path, "a number, boolean or array");
  if (!arr->empty() && arr->get(0)->is_array()) {
    std::vector<std::vector<double>> m;
    for (std::size_t k = 0; k < arr->size(); ++k) {
      m.push_back(as_reals(*arr->get(k), path + "[" + std::to_string(k) + "]"));
    }
    return m;
  }
  return as_reals(n, path);
}

const toml::table& as_table(const toml::node& n, const std::string& path) {
  const auto* t = n.as_table();
  if (!t) wrong_type(path, "a table");
  return *t;
}

void positive(double v, const std::string& path) {
  if (!(v > 0.0) || !std::isfinite(v)) out_of_range(path, "must be positive");
}

void parse_solver(const toml::table& t, SolverSettings& s) {
  for (auto&& [k, n] : t) {
    const std::string key{k.str()};
    const std::string path = "solver." + key;
    if (key == "tol") {
      s.tol = as_real(n, path);
      positive(s.tol, path);
    } else if (key == "damping") {
      s.damping = as_real(n, path);
      if (!(s.damping > 0.0 && s.damping <= 1.0)) out_of_range(path, "must lie in (0, 1]");
    } else if (key == "max_outer") {
      s.max_outer = as_count(n, path);
      if (s.max_outer == 0) out_of_range(path, "must be at least 1");
    } else if (key == "mode") {
      s.mode = outer_map_from_string(as_string(n, path));
    } else if (key == "adaptive_damping") {
      s.adaptive_damping = as_bool(n, path);
    } else if (key == "min_damping") {
      s.min_damping = as_real(n, path);
      if (!(s.min_damping > 0.0 && s.min_damping <= 1.0)) out_of_range(path, "must lie in (0, 1]");
    } else if (key == "patience") {
      s.patience = as_count(n, path);
      if (s.patience == 0) out_of_range(path, "must be at least 1");
    } else if (key == "vi_tol") {
      s.vi.tol = as_real(n, path);
      positive(s.vi.tol, path);
    } else if (key == "vi_max_iterations") {
      s.vi.max_iterations = as_count(n, path);
      if (s.vi.max_iterations == 0) out_of_range(path, "must be at least 1");
    } else if (key == "refine_actions") {
      s.vi.refine = as_bool(n, path);
    } else if (key == "invariant_tol") {
      s.invariant.tol = as_real(n, path);
      positive(s.invariant.tol, path);
    } else if (key == "invariant_method") {
      const std::string m = as_string(n, path);
      if (m == "auto") {
        s.invariant.method = InvariantMethod::kAuto;
      } else if (m == "direct") {
        s.invariant.method = InvariantMethod::kDirect;
      } else if (m == "power") {
        s.invariant.method = InvariantMethod::kPower;
      } else {
        out_of_range(path, "must be one of auto, direct, power");
      }
    } else if (key == "direct_threshold") {
      s.invariant.direct_threshold = as_count(n, path);
    } else if (key == "warm_start") {
      s.warm_start = as_bool(n, path);
    } else if (key == "diagnostics") {
      s.diagnostics = as_bool(n, path);
    } else if (key == "ergodicity_horizon") {
      s.ergodicity_horizon = as_count(n, path);
    } else {
      unknown_key(path);
    }
  }
  if (s.min_damping > s.damping) out_of_range("solver.min_damping", "must not exceed damping");
}

void parse_simulate(const toml::table& t, SimConfig& s) {
  for (auto&& [k, n] : t) {
    const std::string key{k.str()};
    const std::string path = "simulate." + key;
    if (key == "agents") {
      s.m = as_count(n, path);
      if (s.m < 2) out_of_range(path, "must be at least 2");
    } else if (key == "horizon") {
      s.horizon = as_count(n, path);
      if (s.horizon < 1) out_of_range(path, "must be at least 1");
    } else if (key == "burn_in") {
      s.burn_in = as_count(n, path);
    } else if (key == "snapshot_every") {
      s.snapshot_every = as_count(n, path);
      if (s.snapshot_every < 1) out_of_range(path, "must be at least 1");
    } else if (key == "sample_agents") {
      s.sample_agents = as_count(n, path);
    } else if (key == "states") {
      const std::string v = as_string(n, path);
      if (v == "continuous") {
        s.states = AgentStates::kContinuous;
      } else if (v == "lattice") {
        s.states = AgentStates::kLattice;
      } else {
        out_of_range(path, "must be continuous or lattice");
      }
    } else {
      unknown_key(path);
    }
  }
  if (s.burn_in >= s.horizon) out_of_range("simulate.burn_in", "must be below the horizon");
}

// ---- model parameter registries ----

template <class P>
using Setter = std::function<void(P&, const ParamValue&, const std::string&)>;
template <class P>
using Registry = std::map<std::string, Setter<P>>;

double get_real(const ParamValue& v, const std::string& path) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  wrong_type(path, "a number");
}

template <class P>
Setter<P> real(double P::*m) {
  return [m](P& p, const ParamValue& v, const std::string& path) { p.*m = get_real(v, path); };
}

template <class P>
Setter<P> count(std::size_t P::*m) {
  return [m](P& p, const ParamValue& v, const std::string& path) {
    const double d = get_real(v, path);
    if (d < 0.0 || d != std::floor(d) || d > 1e9) out_of_range(path, "must be a non-negative integer");
    p.*m = static_cast<std::size_t>(d);
  };
}

template <class P>
Setter<P> flag(bool P::*m) {
  return [m](P& p, const ParamValue& v, const std::string& path) {
    const auto* b = std::get_if<bool>(&v);
    if (!b) wrong_type(path, "a boolean");
    p.*m = *b;
  };
}

template <class P>
Setter<P> reals(std::vector<double> P::*m) {
  return [m](P& p, const ParamValue& v, const std::string& path) {
    const auto* a = std::get_if<std::vector<double>>(&v);
    if (!a) wrong_type(path, "an array of numbers");
    p.*m = *a;
  };
}

template <class P>
void add_investment(Registry<P>& r) {
  r["delta"] = real<P>(&P::delta);
  r["shock_values"] = reals<P>(&P::shock_values);
  r["shock_probs"] = reals<P>(&P::shock_probs);
  r["d"] = real<P>(&P::d);
  r["beta"] = real<P>(&P::beta);
  r["kappa0"] = real<P>(&P::kappa0);
  r["kappa1"] = real<P>(&P::kappa1);
  r["eta"] = real<P>(&P::eta);
  r["a_max"] = real<P>(&P::a_max);
  r["additive"] = flag<P>(&P::additive);
  r["additive_upper"] = real<P>(&P::additive_upper);
}

Registry<CapacityParams> capacity_registry() {
  Registry<CapacityParams> r;
  add_investment(r);
  r["rho"] = real<CapacityParams>(&CapacityParams::rho);
  r["q0"] = real<CapacityParams>(&CapacityParams::q0);
  r["alpha"] = real<CapacityParams>(&CapacityParams::alpha);
  r["gamma"] = real<CapacityParams>(&CapacityParams::gamma);
  return r;
}

Registry<QualityLadderParams> quality_registry() {
  Registry<QualityLadderParams> r;
  add_investment(r);
  r["theta1"] = real<QualityLadderParams>(&QualityLadderParams::theta1);
  r["c_tilde"] = real<QualityLadderParams>(&QualityLadderParams::c_tilde);
  return r;
}

Registry<AdvertisingParams> advertising_registry() {
  using P = AdvertisingParams;
  Registry<P> r;
  r["delta"] = real<P>(&P::delta);
  r["shock_values"] = reals<P>(&P::shock_values);
  r["shock_probs"] = reals<P>(&P::shock_probs);
  r["r"] = real<P>(&P::r);
  r["gamma1"] = real<P>(&P::gamma1);
  r["gamma2"] = real<P>(&P::gamma2);
  r["a_max"] = real<P>(&P::a_max);
  r["beta"] = real<P>(&P::beta);
  return r;
}

Registry<ReputationParams> reputation_registry() {
  using P = ReputationParams;
  Registry<P> r;
  r["beta"] = real<P>(&P::beta);
  r["d"] = real<P>(&P::d);
  r["kappa0"] = real<P>(&P::kappa0);
  r["kappa1"] = real<P>(&P::kappa1);
  r["eta"] = real<P>(&P::eta);
  r["a_max"] = real<P>(&P::a_max);
  r["shock_values"] = reals<P>(&P::shock_values);
  r["shock_probs"] = reals<P>(&P::shock_probs);
  r["m1"] = real<P>(&P::m1);
  r["m2"] = count<P>(&P::m2);
  r["nu_p"] = real<P>(&P::nu_p);
  r["nu_q"] = real<P>(&P::nu_q);
  return r;
}

Registry<AiyagariParams> aiyagari_registry() {
  using P = AiyagariParams;
  Registry<P> r;
  r["beta"] = real<P>(&P::beta);
  r["sigma"] = real<P>(&P::sigma);
  r["b_lo"] = real<P>(&P::b_lo);
  r["b_hi"] = real<P>(&P::b_hi);
  r["labor"] = reals<P>(&P::labor);
  r["labor_transition"] = [](P& p, const ParamValue& v, const std::string& path) {
    const auto* m = std::get_if<std::vector<std::vector<double>>>(&v);
    if (!m) wrong_type(path, "an array of number arrays");
    p.labor_transition = *m;
  };
  r["tfp"] = real<P>(&P::tfp);
  r["alpha"] = real<P>(&P::alpha);
  r["delta_k"] = real<P>(&P::delta_k);
  r["c_floor"] = real<P>(&P::c_floor);
  r["fixed_prices"] = [](P& p, const ParamValue& v, const std::string& path) {
    const auto* a = std::get_if<std::vector<double>>(&v);
    if (!a || a->size() != 2) wrong_type(path, "an array [R, w]");
    p.fixed_prices = std::make_pair((*a)[0], (*a)[1]);
  };
  return r;
}

template <class P>
P apply_params(Registry<P> reg, const ParamMap& params) {
  P p;
  for (const auto& [key, value] : params) {
    const auto it = reg.find(key);
    if (it == reg.end()) unknown_key("params." + key);
    it->second(p, value, "params." + key);
  }
  return p;
}

const std::set<std::string>& base_models() {
  static const std::set<std::string> m{"capacity", "quality_ladder", "advertising", "reputation",
                                       "aiyagari"};
  return m;
}

ModelSpec build_base(const std::string& model, const RunConfig& cfg, const ParamMap& params) {
  auto sizes = [&](std::size_t& states, std::size_t* actions) {
    if (cfg.states) states = *cfg.states;
    if (cfg.actions) {
      if (!actions) throw ConfigError("unknown key", "'grid.actions' is not used by " + model);
      *actions = *cfg.actions;
    }
  };
  if (model == "capacity") {
    auto p = apply_params(capacity_registry(), params);
    sizes(p.n_states, &p.n_actions);
    return capacity_model(p);
  }
  if (model == "quality_ladder") {
    auto p = apply_params(quality_registry(), params);
    sizes(p.n_states, &p.n_actions);
    return quality_ladder_model(p);
  }
  if (model == "advertising") {
    auto p = apply_params(advertising_registry(), params);
    sizes(p.n_states, &p.n_actions);
    return advertising_model(p);
  }
  if (model == "reputation") {
    auto p = apply_params(reputation_registry(), params);
    sizes(p.n_rank, &p.n_actions);
    return reputation_model(p);
  }
  if (model == "aiyagari") {
    auto p = apply_params(aiyagari_registry(), params);
    sizes(p.n_savings, nullptr);
    return aiyagari_model(p);
  }
  throw ConfigError("value out of range", "unknown model '" + model + "'");
}

}  // namespace

RunConfig parse_config(const std::string& toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << e.description() << " at line " << e.source().begin.line;
    throw ConfigError("parse error", os.str());
  }

  RunConfig cfg;
  bool have_model = false;
  bool have_typed = false;
  for (auto&& [k, n] : root) {
    const std::string key{k.str()};
    if (key == "model") {
      cfg.model = as_string(n, key);
      if (!base_models().count(cfg.model) && cfg.model != "custom-typed") {
        out_of_range(key, "must name a known model, got '" + cfg.model + "'");
      }
      have_model = true;
    } else if (key == "command") {
      cfg.command = as_string(n, key);
      const auto& c = known_commands();
      if (std::find(c.begin(), c.end(), cfg.command) == c.end()) {
        out_of_range(key, "must be one of solve, probe-uniqueness, sweep, simulate, check");
      }
    } else if (key == "seed") {
      const auto* i = n.as_integer();
      if (!i) wrong_type(key, "an integer");
      cfg.seed = static_cast<std::uint64_t>(i->get());
    } else if (key == "grid") {
      for (auto&& [gk, gn] : as_table(n, key)) {
        const std::string gkey{gk.str()};
        const std::string path = "grid." + gkey;
        if (gkey == "states") {
          cfg.states = as_count(gn, path);
          if (*cfg.states < 2) out_of_range(path, "must be at least 2");
        } else if (gkey == "actions") {
          cfg.actions = as_count(gn, path);
          if (*cfg.actions < 2) out_of_range(path, "must be at least 2");
        } else {
          unknown_key(path);
        }
      }
    } else if (key == "params") {
      for (auto&& [pk, pn] : as_table(n, key)) {
        const std::string pkey{pk.str()};
        cfg.params[pkey] = as_param(pn, "params." + pkey);
      }
    } else if (key == "solver") {
      parse_solver(as_table(n, key), cfg.solver);
    } else if (key == "sweep") {
      bool have_param = false;
      for (auto&& [sk, sn] : as_table(n, key)) {
        const std::string skey{sk.str()};
        const std::string path = "sweep." + skey;
        if (skey == "param") {
          cfg.sweep.param = as_string(sn, path);
          have_param = true;
        } else if (skey == "values") {
          cfg.sweep.values = as_reals(sn, path);
        } else if (skey == "expected_direction") {
          try {
            cfg.sweep.expected = direction_from_string(as_string(sn, path));
          } catch (const MfeError& e) {
            out_of_range(path, "must be increasing or decreasing");
          }
        } else {
          unknown_key(path);
        }
      }
      if (!have_param) throw ConfigError("missing key", "'sweep.param' is required");
      if (cfg.sweep.values.size() < 2) out_of_range("sweep.values", "needs at least two values");
      const auto& v = cfg.sweep.values;
      const bool up = std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
      const bool down = std::adjacent_find(v.begin(), v.end(), std::less_equal<>()) == v.end();
      if (!up && !down) out_of_range("sweep.values", "must be strictly monotone");
    } else if (key == "probe") {
      for (auto&& [pk, pn] : as_table(n, key)) {
        const std::string pkey{pk.str()};
        const std::string path = "probe." + pkey;
        if (pkey != "starts") unknown_key(path);
        cfg.starts = as_strings(pn, path);
        for (const auto& s : cfg.starts) {
          if (s != "dirac_lo" && s != "dirac_hi" && s != "uniform" && s != "random") {
            out_of_range(path, "entries must be dirac_lo, dirac_hi, uniform or random");
          }
        }
        if (cfg.starts.empty()) out_of_range(path, "needs at least one start");
      }
    } else if (key == "simulate") {
      parse_simulate(as_table(n, key), cfg.simulate);
    } else if (key == "typed") {
      have_typed = true;
      for (auto&& [tk, tn] : as_table(n, key)) {
        const std::string tkey{tk.str()};
        const std::string path = "typed." + tkey;
        if (tkey == "base") {
          cfg.typed.base = as_string(tn, path);
          if (cfg.typed.base != "capacity" && cfg.typed.base != "quality_ladder") {
            out_of_range(path, "must be capacity or quality_ladder");
          }
        } else if (tkey == "masses") {
          cfg.typed.masses = as_reals(tn, path);
        } else if (tkey == "param") {
          cfg.typed.param = as_string(tn, path);
        } else if (tkey == "values") {
          cfg.typed.values = as_reals(tn, path);
        } else {
          unknown_key(path);
        }
      }
    } else {
      unknown_key(key);
    }
  }
  if (!have_model) throw ConfigError("missing key", "'model' is required");
  if (cfg.command == "sweep" && cfg.sweep.param.empty()) {
    throw ConfigError("missing key", "the sweep command needs a [sweep] table");
  }
  if (cfg.model == "custom-typed") {
    if (!have_typed) throw ConfigError("missing key", "custom-typed needs a [typed] table");
    if (cfg.typed.masses.empty()) throw ConfigError("missing key", "'typed.masses' is required");
    for (double m : cfg.typed.masses) {
      if (!(m > 0.0)) out_of_range("typed.masses", "entries must be positive");
    }
    if (!cfg.typed.param.empty() && cfg.typed.values.size() != cfg.typed.masses.size()) {
      out_of_range("typed.values", "needs one value per type");
    }
  } else if (have_typed) {
    throw ConfigError("unknown key", "'typed' is only valid for custom-typed");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("unreadable config", "cannot open " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text);
}

ModelSpec build_spec(const RunConfig& cfg, const ParamMap& overrides) {
  ParamMap params = cfg.params;
  for (const auto& [k, v] : overrides) params[k] = v;
  if (cfg.model != "custom-typed") return build_base(cfg.model, cfg, params);

  TypedModelFamily family;
  for (std::size_t t = 0; t < cfg.typed.masses.size(); ++t) {
    ParamMap member = params;
    if (!cfg.typed.param.empty()) member[cfg.typed.param] = cfg.typed.values[t];
    family.types.push_back({build_base(cfg.typed.base, cfg, member), cfg.typed.masses[t]});
  }
  return extend_with_types(family);
}

SpecBuilder sweep_builder(const RunConfig& cfg) {
  return [cfg](double v) { return build_spec(cfg, {{cfg.sweep.param, v}}); };
}

PopulationState named_start(const ModelSpec& spec, const std::string& name, std::uint64_t seed,
                            std::size_t k) {
  if (name == "dirac_lo") return default_probes(spec)[0];
  if (name == "uniform") return default_probes(spec)[1];
  if (name == "dirac_hi") return default_probes(spec)[2];
  if (name != "random") throw ConfigError("value out of range", "unknown start '" + name + "'");

  const GridPtr& pg = spec.population_grid;
  std::vector<double> w(pg->size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = -std::log1p(-counter_uniform(seed, k, i, 0x5eed));
  }
  if (!spec.type_masses.empty()) {
    // Keep the type marginal fixed at the prescribed masses.
    const std::size_t n0 = pg->axis_size(0);
    for (std::size_t t = 0; t < spec.type_masses.size(); ++t) {
      double block = 0.0;
      for (std::size_t i = 0; i < n0; ++i) block += w[pg->flat(i, t)];
      for (std::size_t i = 0; i < n0; ++i) w[pg->flat(i, t)] *= spec.type_masses[t] / block;
    }
  }
  return PopulationState::normalized(pg, std::move(w));
}

}  // namespace mfe
