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
 * @file gradient_flow.hpp
 * @brief Local ascent deps/ds = dPhi/deps(t) on the sampled control field.
 */

#pragma once

#include "qctrack/landscape.hpp"
#include "qctrack/trace.hpp"

namespace qctrack {

enum class SIntegrator { euler, rk4 };

/// Stopping and stepping rules for run_gradient_flow.
struct StopRule {
  double ds = 0.005;
  double s_max = 1.0;
  Eigen::Index max_records = 201;  // p: rows of the stored field history
  double phi_tol = 1e-6;           // stop once Phi_max - Phi < phi_tol
  double grad_tol = 1e-8;          // stop once ||a0||_2 < grad_tol
  double min_ds = 1e-12;           // adaptive halving below this is a stall
  bool adaptive = true;            // halve ds whenever Phi would decrease
  SIntegrator integrator = SIntegrator::euler;
  Sampling sampling = Sampling::cell_exact;
};

namespace detail {

struct FieldEvaluation {
  PropagatorTrajectory traj;
  DipoleTrace dip;
  RVec gradient;
  double phi = 0.0;
  double grad_norm = 0.0;
};

inline FieldEvaluation evaluate_field(const SystemModel& model, const RVec& field, const TimeGrid& grid,
                                      const Mat& rho, const Mat& theta, Sampling sampling, double s = 0.0) {
  FieldEvaluation ev;
  ev.traj = propagate(model, field, grid, s);
  ev.dip = dipole_trace(ev.traj, model.at(s).second, sampling);
  ev.gradient = grad_field(ev.traj, ev.dip, rho, theta);
  ev.phi = expectation(ev.traj.final(), rho, theta);
  ev.grad_norm = field_norm(ev.gradient, ev.dip.weights());
  return ev;
}

}  // namespace detail

/// Gradient ascent of Phi over the control field (alpha = 1). Explicit Euler by default,
/// classical RK4 on request; a step that would lower Phi is retried with half the step.
/// Failures are reported through the trace's stop reason rather than thrown.
inline OptimizationTrace run_gradient_flow(const SystemModel& model, const RVec& field0, const TimeGrid& grid,
                                           const Mat& rho, const Mat& theta, const StopRule& rule = {}) {
  model.validate();
  if (field0.size() != grid.q) throw DimensionError("run_gradient_flow: field length must equal q");
  if (!(rule.ds > 0.0)) throw InvalidInput("run_gradient_flow: ds must be positive");
  const double phi_max = kinematic_optimum(rho, theta).phi_max;

  OptimizationTrace trace;
  RVec field = field0;
  auto ev = detail::evaluate_field(model, field, grid, rho, theta, rule.sampling);
  auto record = [&](double s) {
    TraceRecord rec;
    rec.s = s;
    rec.phi = ev.phi;
    rec.grad_norm = ev.grad_norm;
    rec.fluence = fluence(field, grid);
    rec.u_final = ev.traj.final();
    trace.push(std::move(rec));
  };
  auto converged = [&]() -> std::optional<StopReason> {
    if (ev.grad_norm < rule.grad_tol) return StopReason::critical;
    if (phi_max - ev.phi < rule.phi_tol) return StopReason::target_reached;
    return std::nullopt;
  };

  double s = 0.0;
  record(s);
  trace.stop = StopReason::s_max;
  if (auto r = converged()) {
    trace.stop = *r;
    trace.final_field = field;
    return trace;
  }

  double h = rule.ds;
  while (static_cast<Eigen::Index>(trace.records.size()) < rule.max_records && s < rule.s_max - 1e-15) {
    const double step = std::min(h, rule.s_max - s);
    RVec candidate;
    if (rule.integrator == SIntegrator::euler) {
      candidate = field + step * ev.gradient;
    } else {
      auto grad_at = [&](const RVec& f) {
        return detail::evaluate_field(model, f, grid, rho, theta, rule.sampling).gradient;
      };
      const RVec k1 = ev.gradient;
      const RVec k2 = grad_at(field + 0.5 * step * k1);
      const RVec k3 = grad_at(field + 0.5 * step * k2);
      const RVec k4 = grad_at(field + step * k3);
      candidate = field + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    auto next = detail::evaluate_field(model, candidate, grid, rho, theta, rule.sampling);
    if (rule.adaptive && next.phi < ev.phi - 1e-12) {
      h = 0.5 * step;
      if (h < rule.min_ds) {
        trace.stop = StopReason::stalled;
        trace.warn("step size underflow below " + std::to_string(rule.min_ds));
        break;
      }
      continue;
    }
    field = std::move(candidate);
    ev = std::move(next);
    s += step;
    record(s);
    if (rule.adaptive && h < rule.ds) h = std::min(rule.ds, 2.0 * h);
    if (auto r = converged()) {
      trace.stop = *r;
      break;
    }
  }
  trace.final_field = field;
  return trace;
}

/// Rethrow a failed run as the matching typed error.
inline void require_success(const OptimizationTrace& trace) {
  if (trace.stop == StopReason::stalled) throw StalledOptimization("optimization stalled");
  if (trace.stop == StopReason::singular) throw SingularGMatrix("tracking aborted on a singular correlation matrix");
}

}  // namespace qctrack
