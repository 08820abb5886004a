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
 * @file run.hpp
 * @brief Dispatch one configured experiment and persist trace.jsonl, field_final.csv
 * and report.json.
 *
 * Exit codes: 0 finished (target, critical point, schedule or s budget), 2 stalled,
 * 3 singular abort, 1 configuration or other error.
 */

#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "qctrack/fields.hpp"
#include "qctrack/gradient_flow.hpp"
#include "qctrack/harness/config.hpp"
#include "qctrack/harness/io.hpp"
#include "qctrack/obs_track.hpp"

namespace qctrack::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitStalled = 2;
inline constexpr int kExitSingular = 3;

inline int exit_code_for(StopReason r) {
  switch (r) {
    case StopReason::stalled: return kExitStalled;
    case StopReason::singular: return kExitSingular;
    default: return kExitOk;
  }
}

struct RunReport {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::string stop_reason;
  int exit_code = 0;
  double initial_phi = 0.0;
  double final_phi = 0.0;
  double phi_max = 0.0;
  long iterations = 0;
  double final_track_err = kNotApplicable;
  double final_fluence = 0.0;
  double pathlength = 0.0;
  double geodesic_distance = kNotApplicable;  // ||log(U0^dag W)||_F for runs that follow a geodesic
  double endpoint_distance = 0.0;             // ||log(U(T,s_0)^dag U(T,s_last))||_F
  double wall_time = 0.0;
  std::string fingerprint;
  std::map<std::string, int> warnings;

  nlohmann::json to_json() const {
    nlohmann::json w = nlohmann::json::object();
    for (const auto& [k, v] : warnings) w[k] = v;
    return {{"algorithm", algorithm},
            {"seed", seed},
            {"stop_reason", stop_reason},
            {"exit_code", exit_code},
            {"initial_phi", json_number(initial_phi)},
            {"final_phi", json_number(final_phi)},
            {"phi_max", json_number(phi_max)},
            {"iterations", iterations},
            {"final_track_err", json_number(final_track_err)},
            {"final_fluence", json_number(final_fluence)},
            {"pathlength", json_number(pathlength)},
            {"geodesic_distance", json_number(geodesic_distance)},
            {"endpoint_distance", json_number(endpoint_distance)},
            {"wall_time", json_number(wall_time)},
            {"system_fingerprint", fingerprint},
            {"warnings", w}};
  }

  static RunReport from_json(const nlohmann::json& j) {
    RunReport r;
    r.algorithm = j.at("algorithm").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.stop_reason = j.at("stop_reason").get<std::string>();
    r.exit_code = j.at("exit_code").get<int>();
    r.initial_phi = number_from_json(j.at("initial_phi"));
    r.final_phi = number_from_json(j.at("final_phi"));
    r.phi_max = number_from_json(j.at("phi_max"));
    r.iterations = j.at("iterations").get<long>();
    r.final_track_err = number_from_json(j.at("final_track_err"));
    r.final_fluence = number_from_json(j.at("final_fluence"));
    r.pathlength = number_from_json(j.at("pathlength"));
    r.geodesic_distance = number_from_json(j.at("geodesic_distance"));
    r.endpoint_distance = number_from_json(j.at("endpoint_distance"));
    r.wall_time = number_from_json(j.at("wall_time"));
    r.fingerprint = j.at("system_fingerprint").get<std::string>();
    for (const auto& [k, v] : j.at("warnings").items()) r.warnings[k] = v.get<int>();
    return r;
  }
};

struct RunOutcome {
  RunReport report;
  OptimizationTrace trace;
  TimeGrid grid;
};

/// FNV-1a over the physical setup (N, Hamiltonians, state, observable, time grid).
inline std::string system_fingerprint(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  auto mix_mat = [&](const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) mix(format_number(m(i, j).real()) + "," + format_number(m(i, j).imag()) + ";");
    }
  };
  mix("N=" + std::to_string(c.N));
  mix_mat(c.H0);
  mix_mat(c.mu);
  if (c.morph) {
    mix_mat(c.morph->h0_end);
    mix_mat(c.morph->mu_end);
  }
  mix_mat(c.rho0);
  mix_mat(c.theta);
  mix("T=" + format_number(c.grid.T) + ";q=" + std::to_string(c.grid.q));
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline RVec initial_field(const RunConfig& c) {
  const TimeGrid grid = c.time_grid();
  const auto& f = c.initial_field;
  if (f.kind == "zero") return RVec::Zero(grid.q);
  if (f.kind == "constant") return RVec::Constant(grid.q, f.value);
  if (f.kind == "values") return Eigen::Map<const RVec>(f.values.data(), static_cast<Eigen::Index>(f.values.size()));
  RandomFieldSpec spec;
  spec.amplitude = f.amplitude;
  spec.modes = f.modes;
  spec.omega_min = f.omega_min;
  spec.omega_max = f.omega_max;
  return random_field(grid, c.seed, spec);
}

inline bool traceless_dipole(const RunConfig& c) {
  auto tl = [](const Mat& m) { return std::abs(m.trace()) < 1e-12 * std::max(1.0, m.norm()); };
  if (!tl(c.mu)) return false;
  if (c.morph && (!tl(c.morph->mu_start) || !tl(c.morph->mu_end))) return false;
  return true;
}

/// Optimal target unitary for tracking runs starting from U0.
inline Mat target_unitary(const RunConfig& c, const Mat& U0) {
  const bool fixed = traceless_dipole(c);
  if (c.options.target == "nearest") return nearest_kinematic_optimum(c.rho0, c.theta, U0, fixed).W;
  const Mat w = kinematic_optimum(c.rho0, c.theta).W;
  return fixed ? align_target_phase(U0, w) : w;
}

/// Run the configured algorithm without touching the filesystem.
inline RunOutcome execute(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const SystemModel model = c.model();
  const TimeGrid grid = c.time_grid();
  const RVec f0 = initial_field(c);
  const auto& o = c.options;
  const Mat U0 = propagate(model, f0, grid, 0.0).final();

  RunOutcome out;
  out.grid = grid;
  RunReport& rep = out.report;
  rep.algorithm = c.algorithm;
  rep.seed = c.seed;
  rep.phi_max = kinematic_optimum(c.rho0, c.theta).phi_max;
  rep.initial_phi = expectation(U0, c.rho0, c.theta);
  rep.fingerprint = system_fingerprint(c);

  const Sampling sampling = Sampling::cell_exact;
  if (c.algorithm == "grad") {
    StopRule rule;
    rule.ds = c.grid.ds;
    rule.s_max = c.s_max();
    rule.max_records = c.grid.p;
    rule.phi_tol = o.phi_tol;
    rule.grad_tol = o.grad_tol;
    rule.adaptive = o.adaptive;
    rule.integrator = o.integrator == "rk4" ? SIntegrator::rk4 : SIntegrator::euler;
    rule.sampling = sampling;
    out.trace = run_gradient_flow(model, f0, grid, c.rho0, c.theta, rule);
  } else {
    const Mat W = target_unitary(c, U0);
    const GeodesicTrack track = geodesic(U0, W, c.grid.p);
    rep.geodesic_distance = track.length();
    if (c.algorithm == "utrack") {
      TrackingOptions to;
      to.correction = o.correction == "none" ? CorrectionMode::none
                      : o.correction == "separate" ? CorrectionMode::separate
                                                   : CorrectionMode::combined;
      to.integrator = o.integrator == "rk4" ? SIntegrator::rk4 : SIntegrator::euler;
      to.sampling = sampling;
      to.step = {o.strict, o.condition_cap, o.pinv_cutoff};
      to.fluence = o.fluence;
      to.fluence_ds = o.fluence_ds;
      out.trace = run_unitary_tracking(model, f0, grid, track, c.rho0, c.theta, to);
    } else {
      ObservableTrackingOptions oo;
      oo.step = {o.strict, o.condition_cap, o.pinv_cutoff};
      oo.sampling = sampling;
      oo.fluence = o.fluence;
      oo.fluence_ds = o.fluence_ds;
      oo.substeps = o.substeps;
      ObservableBasis basis;
      ObservableTrackSpec spec;
      if (c.algorithm == "vtrack") {
        basis = o.observables.empty() ? default_basis(c.theta, o.m > 0 ? o.m : c.N * c.N) : orthogonalize(o.observables);
        spec = targets_from_geodesic(track, c.rho0, basis);
      } else {
        oo.scalar = true;
        basis.raw = {c.theta};
        basis.ortho = {c.theta};
        basis.coeffs = RMat::Ones(1, 1);
        if (o.scalar_target == "ramp") {
          spec = linear_ramp(rep.initial_phi, rep.phi_max, c.grid.p);
          rep.geodesic_distance = kNotApplicable;
        } else {
          spec = targets_from_geodesic(track, c.rho0, basis);
        }
      }
      spec.beta = o.beta;
      out.trace = run_observable_tracking(model, f0, grid, spec, basis, c.rho0, c.theta, oo);
    }
  }

  const auto& tr = out.trace;
  rep.stop_reason = std::string(to_string(tr.stop));
  rep.exit_code = exit_code_for(tr.stop);
  rep.iterations = static_cast<long>(tr.records.size()) - 1;
  rep.final_phi = tr.back().phi;
  rep.final_track_err = tr.back().track_err;
  rep.final_fluence = tr.back().fluence;
  rep.pathlength = tr.back().pathlength_cum;
  rep.endpoint_distance = geodesic_distance(tr.records.front().u_final, tr.back().u_final);
  rep.warnings = tr.warnings;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline void write_artifacts(const RunOutcome& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_trace_jsonl(out.trace, dir / "trace.jsonl");
  write_field_csv(out.trace.final_field, out.grid, dir / "field_final.csv");
  std::ofstream rep(dir / "report.json", std::ios::binary);
  if (!rep) throw InvalidInput("cannot write " + (dir / "report.json").string());
  rep << out.report.to_json().dump(2) << '\n';
}

}  // namespace qctrack::harness
