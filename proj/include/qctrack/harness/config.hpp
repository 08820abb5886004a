// Copyright 2026 The qctrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file config.hpp
 * @brief JSON run configuration: schema checks, defaults, echo.
 *
 * Matrices are row-major arrays of rows; an entry is a real number or a [re, im] pair.
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qctrack/dynamics.hpp"
#include "qctrack/landscape.hpp"

namespace qctrack::harness {

using json = nlohmann::json;

/// Schema or content violation; field() is the dotted path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error("ConfigError: " + field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct GridConfig {
  double T = 0.0;
  long q = 501;
  long p = 201;
  double ds = 0.005;
  double s_max = 0.0;  // 0 means (p - 1) * ds
};

struct InitialFieldConfig {
  std::string kind = "random";  // random | zero | constant | values
  double amplitude = 0.2;
  int modes = 8;
  double omega_min = 0.5;
  double omega_max = 4.0;
  double value = 0.0;
  std::vector<double> values;
};

struct AlgorithmOptions {
  double beta = 0.0;                    // <= 0: 1/h with h = ds / substeps
  bool fluence = false;
  double fluence_ds = 0.0;              // <= 0: the step size
  bool strict = false;
  double condition_cap = 1e8;
  double pinv_cutoff = 1e-10;
  std::string correction = "combined";  // combined | separate | none
  std::string integrator = "euler";     // euler | rk4
  std::string target = "nearest";       // nearest | kinematic   (unitary target W)
  std::string scalar_target = "ramp";   // ramp | geodesic       (strack)
  long m = 0;                           // vtrack basis size when no observables are listed (0: N^2)
  std::vector<Mat> observables;
  int substeps = 1;
  bool adaptive = true;
  double phi_tol = 1e-6;
  double grad_tol = 1e-8;
};

struct RunConfig {
  long N = 0;
  Mat H0, mu;
  std::optional<MorphEndpoints> morph;
  Mat rho0, theta;
  GridConfig grid;
  std::string algorithm = "grad";
  AlgorithmOptions options;
  InitialFieldConfig initial_field;
  std::uint64_t seed = 0;
  std::string output = "out";
  std::string source;  // path the config was read from

  SystemModel model() const { return SystemModel(H0, mu, morph); }
  TimeGrid time_grid() const { return TimeGrid(grid.T, grid.q); }
  double s_max() const { return grid.s_max > 0.0 ? grid.s_max : static_cast<double>(grid.p - 1) * grid.ds; }
};

namespace detail {

inline const std::set<std::string> kAlgorithms{"grad", "utrack", "vtrack", "strack"};

inline std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

inline void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError(join(path, k), "unknown field");
  }
}

inline const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(join(path, key), "missing required field");
  return obj.at(key);
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

inline long get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(path, "expected an integer");
  return v.get<long>();
}

inline bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
  return v.get<bool>();
}

inline std::string get_string(const json& v, const std::string& path, const std::set<std::string>& allowed = {}) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  auto s = v.get<std::string>();
  if (!allowed.empty() && !allowed.count(s)) {
    std::string opts;
    for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
    throw ConfigError(path, "must be one of {" + opts + "}, got \"" + s + "\"");
  }
  return s;
}

inline cplx get_complex(const json& v, const std::string& path) {
  if (v.is_number()) return {get_number(v, path), 0.0};
  if (v.is_array() && v.size() == 2) return {get_number(v[0], path + "[0]"), get_number(v[1], path + "[1]")};
  throw ConfigError(path, "expected a number or a [re, im] pair");
}

inline Mat get_matrix(const json& v, const std::string& path, long n, bool hermitian = true) {
  if (!v.is_array() || static_cast<long>(v.size()) != n) {
    throw ConfigError(path, "expected " + std::to_string(n) + " rows");
  }
  Mat m(n, n);
  for (long i = 0; i < n; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<long>(row.size()) != n) {
      throw ConfigError(rp, "expected " + std::to_string(n) + " entries");
    }
    for (long j = 0; j < n; ++j) m(i, j) = get_complex(row[static_cast<std::size_t>(j)], rp + "[" + std::to_string(j) + "]");
  }
  if (hermitian && !is_hermitian(m, 1e-10)) {
    throw ConfigError(path, "matrix is not Hermitian (defect " + std::to_string(hermiticity_defect(m)) + ")");
  }
  return hermitian ? hermitian_part(m) : m;
}

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline RunConfig parse_config(const json& root, const std::string& source = "") {
  using namespace detail;
  RunConfig c;
  c.source = source;
  check_keys(root, "", {"system", "rho0", "theta", "grid", "algorithm", "options", "initial_field", "seed", "output"});

  const json& sys = require(root, "", "system");
  check_keys(sys, "system", {"N", "H0", "mu", "morph"});
  c.N = get_integer(require(sys, "system", "N"), "system.N");
  if (c.N < 2) throw ConfigError("system.N", "must be at least 2");
  c.H0 = get_matrix(require(sys, "system", "H0"), "system.H0", c.N);
  c.mu = get_matrix(require(sys, "system", "mu"), "system.mu", c.N);
  if (sys.contains("morph")) {
    const json& mo = sys.at("morph");
    check_keys(mo, "system.morph", {"H0_start", "mu_start", "H0_end", "mu_end"});
    MorphEndpoints me;
    me.h0_start = get_matrix(require(mo, "system.morph", "H0_start"), "system.morph.H0_start", c.N);
    me.mu_start = get_matrix(require(mo, "system.morph", "mu_start"), "system.morph.mu_start", c.N);
    me.h0_end = get_matrix(require(mo, "system.morph", "H0_end"), "system.morph.H0_end", c.N);
    me.mu_end = get_matrix(require(mo, "system.morph", "mu_end"), "system.morph.mu_end", c.N);
    c.morph = me;
    c.H0 = me.h0_start;
    c.mu = me.mu_start;
  }

  c.rho0 = get_matrix(require(root, "", "rho0"), "rho0", c.N);
  try {
    DensityMatrix check(c.rho0);
  } catch (const Error& e) {
    throw ConfigError("rho0", e.what());
  }
  c.theta = get_matrix(require(root, "", "theta"), "theta", c.N);

  const json& g = require(root, "", "grid");
  check_keys(g, "grid", {"T", "q", "p", "ds", "s_max"});
  c.grid.T = get_number(require(g, "grid", "T"), "grid.T");
  if (!(c.grid.T > 0.0)) throw ConfigError("grid.T", "must be positive");
  if (g.contains("q")) c.grid.q = get_integer(g.at("q"), "grid.q");
  if (c.grid.q < 2) throw ConfigError("grid.q", "must be at least 2");
  if (g.contains("p")) c.grid.p = get_integer(g.at("p"), "grid.p");
  if (c.grid.p < 2) throw ConfigError("grid.p", "must be at least 2");
  if (g.contains("ds")) c.grid.ds = get_number(g.at("ds"), "grid.ds");
  if (!(c.grid.ds > 0.0)) throw ConfigError("grid.ds", "must be positive");
  if (g.contains("s_max")) c.grid.s_max = get_number(g.at("s_max"), "grid.s_max");
  if (c.grid.s_max < 0.0) throw ConfigError("grid.s_max", "must be non-negative");

  if (root.contains("algorithm")) c.algorithm = get_string(root.at("algorithm"), "algorithm", kAlgorithms);

  if (root.contains("options")) {
    const json& o = root.at("options");
    check_keys(o, "options", {"beta", "fluence", "fluence_ds", "strict", "condition_cap", "pinv_cutoff", "correction",
                              "integrator", "target", "scalar_target", "m", "observables", "substeps", "adaptive",
                              "phi_tol", "grad_tol"});
    auto& a = c.options;
    if (o.contains("beta")) a.beta = get_number(o.at("beta"), "options.beta");
    if (a.beta < 0.0) throw ConfigError("options.beta", "must be non-negative");
    if (o.contains("fluence")) a.fluence = get_bool(o.at("fluence"), "options.fluence");
    if (o.contains("fluence_ds")) a.fluence_ds = get_number(o.at("fluence_ds"), "options.fluence_ds");
    if (o.contains("strict")) a.strict = get_bool(o.at("strict"), "options.strict");
    if (o.contains("condition_cap")) a.condition_cap = get_number(o.at("condition_cap"), "options.condition_cap");
    if (o.contains("pinv_cutoff")) a.pinv_cutoff = get_number(o.at("pinv_cutoff"), "options.pinv_cutoff");
    if (o.contains("correction")) a.correction = get_string(o.at("correction"), "options.correction", {"combined", "separate", "none"});
    if (o.contains("integrator")) a.integrator = get_string(o.at("integrator"), "options.integrator", {"euler", "rk4"});
    if (o.contains("target")) a.target = get_string(o.at("target"), "options.target", {"nearest", "kinematic"});
    if (o.contains("scalar_target")) a.scalar_target = get_string(o.at("scalar_target"), "options.scalar_target", {"ramp", "geodesic"});
    if (o.contains("m")) a.m = get_integer(o.at("m"), "options.m");
    if (a.m < 0 || a.m > c.N * c.N) throw ConfigError("options.m", "must lie in [0, N^2]");
    if (o.contains("observables")) {
      const json& obs = o.at("observables");
      if (!obs.is_array() || obs.empty()) throw ConfigError("options.observables", "expected a non-empty list of matrices");
      for (std::size_t k = 0; k < obs.size(); ++k) {
        a.observables.push_back(get_matrix(obs[k], "options.observables[" + std::to_string(k) + "]", c.N));
      }
    }
    if (o.contains("substeps")) a.substeps = static_cast<int>(get_integer(o.at("substeps"), "options.substeps"));
    if (a.substeps < 1) throw ConfigError("options.substeps", "must be at least 1");
    if (o.contains("adaptive")) a.adaptive = get_bool(o.at("adaptive"), "options.adaptive");
    if (o.contains("phi_tol")) a.phi_tol = get_number(o.at("phi_tol"), "options.phi_tol");
    if (o.contains("grad_tol")) a.grad_tol = get_number(o.at("grad_tol"), "options.grad_tol");
  }

  if (root.contains("initial_field")) {
    const json& f = root.at("initial_field");
    check_keys(f, "initial_field", {"kind", "amplitude", "modes", "omega_min", "omega_max", "value", "values"});
    auto& fi = c.initial_field;
    if (f.contains("kind")) fi.kind = get_string(f.at("kind"), "initial_field.kind", {"random", "zero", "constant", "values"});
    if (f.contains("amplitude")) fi.amplitude = get_number(f.at("amplitude"), "initial_field.amplitude");
    if (f.contains("modes")) fi.modes = static_cast<int>(get_integer(f.at("modes"), "initial_field.modes"));
    if (f.contains("omega_min")) fi.omega_min = get_number(f.at("omega_min"), "initial_field.omega_min");
    if (f.contains("omega_max")) fi.omega_max = get_number(f.at("omega_max"), "initial_field.omega_max");
    if (f.contains("value")) fi.value = get_number(f.at("value"), "initial_field.value");
    if (f.contains("values")) {
      const json& vs = f.at("values");
      if (!vs.is_array()) throw ConfigError("initial_field.values", "expected an array");
      for (std::size_t j = 0; j < vs.size(); ++j) fi.values.push_back(get_number(vs[j], "initial_field.values[" + std::to_string(j) + "]"));
    }
    if (fi.kind == "values" && static_cast<long>(fi.values.size()) != c.grid.q) {
      throw ConfigError("initial_field.values", "length must equal grid.q");
    }
    if (fi.modes < 1) throw ConfigError("initial_field.modes", "must be at least 1");
  }

  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (root.contains("output")) c.output = get_string(root.at("output"), "output");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("parse error in ") + path + ": " + e.what());
  }
  return parse_config(root, path);
}

/// Full configuration with every default spelled out.
inline json echo(const RunConfig& c) {
  using detail::matrix_to_json;
  json sys{{"N", c.N}, {"H0", matrix_to_json(c.H0)}, {"mu", matrix_to_json(c.mu)}};
  if (c.morph) {
    sys["morph"] = {{"H0_start", matrix_to_json(c.morph->h0_start)}, {"mu_start", matrix_to_json(c.morph->mu_start)},
                    {"H0_end", matrix_to_json(c.morph->h0_end)}, {"mu_end", matrix_to_json(c.morph->mu_end)}};
  }
  const auto& a = c.options;
  json obs = json::array();
  for (const Mat& m : a.observables) obs.push_back(matrix_to_json(m));
  const auto& f = c.initial_field;
  json out{{"system", sys},
           {"rho0", matrix_to_json(c.rho0)},
           {"theta", matrix_to_json(c.theta)},
           {"grid", {{"T", c.grid.T}, {"q", c.grid.q}, {"p", c.grid.p}, {"ds", c.grid.ds}, {"s_max", c.s_max()}}},
           {"algorithm", c.algorithm},
           {"options",
            {{"beta", a.beta}, {"fluence", a.fluence}, {"fluence_ds", a.fluence_ds}, {"strict", a.strict},
             {"condition_cap", a.condition_cap}, {"pinv_cutoff", a.pinv_cutoff}, {"correction", a.correction},
             {"integrator", a.integrator}, {"target", a.target}, {"scalar_target", a.scalar_target}, {"m", a.m},
             {"observables", obs}, {"substeps", a.substeps}, {"adaptive", a.adaptive}, {"phi_tol", a.phi_tol},
             {"grad_tol", a.grad_tol}}},
           {"initial_field",
            {{"kind", f.kind}, {"amplitude", f.amplitude}, {"modes", f.modes}, {"omega_min", f.omega_min},
             {"omega_max", f.omega_max}, {"value", f.value}, {"values", f.values}}},
           {"seed", c.seed},
           {"output", c.output}};
  if (a.observables.empty()) out["options"].erase("observables");
  return out;
}

}  // namespace qctrack::harness
