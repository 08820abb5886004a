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
 * @file dmorph.hpp
 * @brief Unitary tracking: steer U(T) along a prescribed path in U(N) by solving the
 * linearized constraint  int vec(mu(t)) deps/ds dt = vec(Delta)  at every step.
 *
 * Sign conventions: U(T) moves as dU/ds = i U Delta, and a geodesic is
 * Q(s) = U0 exp(i A s).
 */

#pragma once

#include <functional>
#include <optional>
#include <string>

#include "qctrack/gradient_flow.hpp"
#include "qctrack/landscape.hpp"
#include "qctrack/trace.hpp"

namespace qctrack {

// ---------------------------------------------------------------------------
// Correlation matrix

/// G = int vec(mu(t)) vec(mu(t))^T dt in the Hermitian vectorization basis.
struct GMatrix {
  RMat g;
  RVec singular_values;  // descending, of the full matrix
  /// sigma_max / sigma_min on the reachable subspace (see phase_reduced); infinite
  /// when sigma_min < 1e-12 sigma_max.
  double condition = kInf;
  /// True when the identity direction was excluded: with a traceless dipole the global
  /// phase of U(T) cannot be steered, so that direction is structurally null.
  bool phase_reduced = false;

  Eigen::Index size() const { return g.rows(); }
  /// Rank the pseudo-inverse must keep for the step to be fully determined.
  Eigen::Index structural_rank() const { return g.rows() - (phase_reduced ? 1 : 0); }
};

namespace detail {

/// Orthonormal basis of the complement of the identity direction in vec space.
inline RMat phase_complement(Eigen::Index n) {
  RVec e = RVec::Zero(n * n);
  e.head(n).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  const RMat e_mat = e;
  Eigen::HouseholderQR<RMat> qr(e_mat);
  const RMat q = qr.householderQ() * RMat::Identity(n * n, n * n);
  return q.rightCols(n * n - 1);
}

inline bool dipole_traceless(const DipoleTrace& dip, double tol = 1e-12) {
  double scale = 0.0;
  for (const Mat& m : dip.mus) scale = std::max(scale, m.norm());
  for (const Mat& m : dip.mus) {
    if (std::abs(m.trace()) > tol * std::max(scale, 1.0)) return false;
  }
  return true;
}

}  // namespace detail

inline GMatrix make_gmatrix(RMat g, bool phase_reduced) {
  if (g.rows() != g.cols()) throw DimensionError("GMatrix must be square");
  GMatrix out;
  out.g = 0.5 * (g + g.transpose());
  out.phase_reduced = phase_reduced;
  out.singular_values = singular_values(out.g);
  if (!(out.singular_values.size() > 0 && out.singular_values(0) > 0.0)) {
    out.condition = kInf;
    return out;
  }
  if (phase_reduced) {
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(g.rows()))));
    const RMat p = detail::phase_complement(n);
    out.condition = condition_from_singular_values(singular_values(p.transpose() * out.g * p));
  } else {
    out.condition = condition_from_singular_values(out.singular_values);
  }
  return out;
}

/// Assemble G from a dipole trace using its own quadrature weights. The identity
/// direction is excluded from the condition number when the dipole is traceless.
inline GMatrix assemble_G(const DipoleTrace& dip) {
  const RMat v = dip.response_matrix();
  const RMat g = v * dip.weights().asDiagonal() * v.transpose();
  return make_gmatrix(g, detail::dipole_traceless(dip));
}

inline GMatrix assemble_G(const DipoleTrace& dip, const TimeGrid& grid) {
  if (!(dip.grid == grid)) throw DimensionError("assemble_G: grid does not match the dipole trace");
  return assemble_G(dip);
}

/// Condition number of an assembled G; a zero matrix has none.
inline double condition_number(const GMatrix& g) {
  if (!(g.singular_values.size() > 0 && g.singular_values(0) > 0.0)) {
    throw InvalidInput("condition number of a zero matrix is undefined");
  }
  return g.condition;
}

// ---------------------------------------------------------------------------
// Geodesic targets

struct GeodesicTrack {
  Mat U0;
  Mat W;
  Mat A;  // Hermitian generator, Q(s) = U0 exp(i A s)
  std::vector<double> schedule;
  bool branch_cut_warning = false;

  Mat at(double s) const { return U0 * exp_i(s * A); }
  /// dQ/ds = i Q(s) A.
  Mat rate(double s) const { return kI * at(s) * A; }
  double length() const { return A.norm(); }
};

inline GeodesicTrack geodesic(const Mat& U0, const Mat& W, Eigen::Index p) {
  require_same_dim(U0, W, "geodesic endpoints");
  if (p < 2) throw InvalidInput("geodesic: at least two schedule points are required");
  if (unitarity_defect(U0) > 1e-8 || unitarity_defect(W) > 1e-8) {
    throw InvalidInput("geodesic: endpoints must be unitary");
  }
  GeodesicTrack out;
  out.U0 = U0;
  out.W = W;
  const auto lg = log_unitary(W.adjoint() * U0);
  out.A = -lg.generator;
  out.branch_cut_warning = lg.branch_cut_warning;
  out.schedule.resize(static_cast<std::size_t>(p));
  for (Eigen::Index k = 0; k < p; ++k) out.schedule[static_cast<std::size_t>(k)] = static_cast<double>(k) / static_cast<double>(p - 1);
  out.schedule.back() = 1.0;
  return out;
}

/// Generator that moves U_current onto Q_next in one step: U exp(i Delta ds) = Q_next.
inline UnitaryLog track_delta(const Mat& Q_next, const Mat& U_current, double ds) {
  require_same_dim(Q_next, U_current, "track_delta");
  if (!(ds > 0.0)) throw InvalidInput("track_delta: ds must be positive");
  auto lg = log_unitary(U_current.adjoint() * Q_next);
  lg.generator /= ds;
  return lg;
}

// ---------------------------------------------------------------------------
// Tracking step

struct StepOptions {
  bool strict = false;
  double condition_cap = 1e8;
  double pinv_cutoff = kPinvCutoff;
};

struct StepDiagnostics {
  Eigen::Index rank = 0;
  bool truncated = false;  // pseudo-inverse dropped a direction beyond the structural null space
};

/// deps/ds = f + V^T G^+ (vec(Delta) + b - int vec(mu) f dt), so that
/// int vec(mu(t)) deps/ds dt = vec(Delta) + b on the range of G.
inline RVec dmorph_step(const GMatrix& G, const Mat& Delta, const RVec& f_s, const DipoleTrace& dip,
                        const StepOptions& opts = {}, const RVec* morph_b = nullptr,
                        StepDiagnostics* diag = nullptr) {
  const RMat v = dip.response_matrix();
  if (G.size() != v.rows()) throw DimensionError("dmorph_step: G does not match the dipole trace");
  if (f_s.size() != v.cols()) throw DimensionError("dmorph_step: free function length must equal q");
  if (opts.strict && !(G.condition <= opts.condition_cap)) {
    throw SingularGMatrix("condition number " + std::to_string(G.condition) + " exceeds cap " +
                          std::to_string(opts.condition_cap));
  }
  RVec rhs = vec_hermitian(hermitian_part(Delta), 1e-8) - v * (dip.weights().asDiagonal() * f_s);
  if (morph_b) rhs += *morph_b;
  const auto pinv = pseudo_inverse(G.g, opts.pinv_cutoff);
  if (diag) {
    diag->rank = pinv.rank;
    diag->truncated = pinv.rank < G.structural_rank();
  }
  return f_s + v.transpose() * (pinv.inverse * rhs);
}

/// Residual int vec(mu) step dt - target of a computed step.
inline RVec constraint_residual(const DipoleTrace& dip, const RVec& step, const RVec& target) {
  return dip.response_matrix() * (dip.weights().asDiagonal() * step) - target;
}

// ---------------------------------------------------------------------------
// Hamiltonian morphing and free functions

/// b = int [vec(a2~(t)) - vec(a1~(t)) eps(t)] dt with a1 = dmu/ds, a2 = dH0/ds in the
/// interaction picture, the term that keeps U(T) fixed while the Hamiltonian changes.
inline RVec morph_term(const SystemModel& model, const PropagatorTrajectory& traj, const RVec& field,
                       Sampling sampling = Sampling::cell_exact) {
  const Eigen::Index n = traj.dim();
  if (!model.morph) return RVec::Zero(n * n);
  if (field.size() != traj.size()) throw DimensionError("morph_term: field length must equal q");
  const auto a1 = interaction_trace(traj, model.morph->dmu_ds(), sampling);
  const auto a2 = interaction_trace(traj, model.morph->dh0_ds(), sampling);
  RVec b = RVec::Zero(n * n);
  for (Eigen::Index j = 0; j < traj.size(); ++j) {
    const double w = a1.weights(j);
    if (w == 0.0) continue;
    const auto k = static_cast<std::size_t>(j);
    b += w * (vec_hermitian(a2.nodes[k]) - field(j) * vec_hermitian(a1.nodes[k]));
  }
  return b;
}

inline RVec morph_term(const SystemModel& model, const RVec& field, double s, const TimeGrid& grid,
                       Sampling sampling = Sampling::cell_exact) {
  if (!model.morph) return RVec::Zero(model.dim() * model.dim());
  return morph_term(model, propagate(model, field, grid, s), field, sampling);
}

/// f(t) = -(1/ds) eps(t) W(t).
inline RVec fluence_free_function(const RVec& field, const RVec& weight, double ds) {
  if (field.size() != weight.size()) throw DimensionError("fluence_free_function: length mismatch");
  if (!(ds > 0.0)) throw InvalidInput("fluence_free_function: ds must be positive");
  if ((weight.array() < 0.0).any()) throw InvalidInput("fluence_free_function: weights must be non-negative");
  return -(field.array() * weight.array()).matrix() / ds;
}

/// Off-diagonal mass of K(t_j, t_l) = Tr(mu(t_j) mu(t_l)): 1 - sum K_jj^2 / sum K_jl^2.
inline double dirac_kernel_diagnostic(const std::vector<Mat>& mus) {
  if (mus.empty()) throw InvalidInput("dirac_kernel_diagnostic: empty trace");
  const Eigen::Index n = mus.front().rows();
  RMat v(n * n, static_cast<Eigen::Index>(mus.size()));
  for (std::size_t j = 0; j < mus.size(); ++j) v.col(static_cast<Eigen::Index>(j)) = vec_hermitian(mus[j]);
  const RMat k = v.transpose() * v;
  const double total = k.squaredNorm();
  if (!(total > 0.0)) throw InvalidInput("dirac_kernel_diagnostic: zero kernel");
  return std::clamp(1.0 - k.diagonal().squaredNorm() / total, 0.0, 1.0);
}

inline double dirac_kernel_diagnostic(const DipoleTrace& dip) { return dirac_kernel_diagnostic(dip.mus); }

// ---------------------------------------------------------------------------
// Tracking driver

enum class CorrectionMode {
  none,      // follow the geodesic generator A only
  separate,  // A plus a correction geodesic from the real point back to Q(s_k)
  combined,  // single step from the real point to Q(s_{k+1})
};

struct TrackingOptions {
  CorrectionMode correction = CorrectionMode::combined;
  SIntegrator integrator = SIntegrator::euler;
  Sampling sampling = Sampling::cell_exact;
  StepOptions step;
  /// Fluence-reducing free function f = -(1/fluence_ds) eps W(t).
  bool fluence = false;
  double fluence_ds = 0.0;  // <= 0 means the step size
  RVec fluence_weight;      // empty means W(t) = 1
};

namespace detail {

struct TrackState {
  PropagatorTrajectory traj;
  DipoleTrace dip;
  GMatrix G;
};

inline TrackState track_state(const SystemModel& model, const RVec& field, const TimeGrid& grid, double s,
                              Sampling sampling) {
  TrackState st;
  st.traj = propagate(model, field, grid, s);
  st.dip = dipole_trace(st.traj, model.at(s).second, sampling);
  st.G = assemble_G(st.dip);
  return st;
}

inline RVec free_function(const TrackingOptions& opts, const RVec& field, double ds) {
  if (!opts.fluence) return RVec::Zero(field.size());
  const RVec w = opts.fluence_weight.size() == field.size() ? opts.fluence_weight
                                                             : RVec::Ones(field.size());
  return fluence_free_function(field, w, opts.fluence_ds > 0.0 ? opts.fluence_ds : ds);
}

}  // namespace detail

/// Drive U(T, s) along the track. One record per schedule point; failures end the run
/// early with stop reason singular (strict mode) and are not thrown.
inline OptimizationTrace run_unitary_tracking(const SystemModel& model, const RVec& field0, const TimeGrid& grid,
                                              const GeodesicTrack& track, const Mat& rho, const Mat& theta,
                                              const TrackingOptions& opts = {}) {
  model.validate();
  if (field0.size() != grid.q) throw DimensionError("run_unitary_tracking: field length must equal q");
  if (track.schedule.size() < 2) throw InvalidInput("run_unitary_tracking: schedule needs two points");
  OptimizationTrace trace;
  if (track.branch_cut_warning) trace.warn("geodesic generator on the branch cut");
  RVec field = field0;

  auto record = [&](double s, const detail::TrackState& st) {
    TraceRecord rec;
    rec.s = s;
    rec.u_final = st.traj.final();
    rec.phi = expectation(rec.u_final, rho, theta);
    rec.grad_norm = field_norm(grad_field(st.traj, st.dip, rho, theta), st.dip.weights());
    rec.fluence = fluence(field, grid);
    rec.condition = st.G.condition;
    rec.track_err = (rec.u_final - track.at(s)).norm();
    trace.push(std::move(rec));
  };

  // Right-hand side for a given field at algorithmic time s; correction_ds scales the
  // return-to-track term (0 disables it).
  auto rhs = [&](double s, const RVec& f, const detail::TrackState& st, const Mat& delta, double ds) {
    StepDiagnostics diag;
    RVec b;
    const RVec* bp = nullptr;
    if (model.morph) {
      b = morph_term(model, st.traj, f, opts.sampling);
      bp = &b;
    }
    (void)s;
    RVec step = dmorph_step(st.G, delta, detail::free_function(opts, f, ds), st.dip, opts.step, bp, &diag);
    if (diag.truncated) trace.warn("G pseudo-inverse truncated below the structural rank");
    return step;
  };
  auto separate_delta = [&](double s, const detail::TrackState& st, double ds) {
    Mat delta = track.A;
    if (opts.correction != CorrectionMode::none) {
      const auto c = track_delta(track.at(s), st.traj.final(), ds);
      if (c.branch_cut_warning) trace.warn("branch cut in correction generator");
      delta += c.generator;
    }
    return delta;
  };

  const auto& sched = track.schedule;
  try {
    for (std::size_t k = 0; k + 1 < sched.size(); ++k) {
      const double s = sched[k];
      const double ds = sched[k + 1] - s;
      auto st = detail::track_state(model, field, grid, s, opts.sampling);
      record(s, st);
      if (opts.integrator == SIntegrator::euler) {
        Mat delta;
        if (opts.correction == CorrectionMode::combined) {
          const auto d = track_delta(track.at(sched[k + 1]), st.traj.final(), ds);
          if (d.branch_cut_warning) trace.warn("branch cut in tracking generator");
          delta = d.generator;
        } else {
          delta = separate_delta(s, st, ds);
        }
        field += ds * rhs(s, field, st, delta, ds);
      } else {
        // Classical RK4 in s; the correction term is evaluated at each stage.
        auto stage = [&](double ss, const RVec& f) {
          auto sst = detail::track_state(model, f, grid, ss, opts.sampling);
          return rhs(ss, f, sst, separate_delta(ss, sst, ds), ds);
        };
        const RVec k1 = rhs(s, field, st, separate_delta(s, st, ds), ds);
        const RVec k2 = stage(s + 0.5 * ds, field + 0.5 * ds * k1);
        const RVec k3 = stage(s + 0.5 * ds, field + 0.5 * ds * k2);
        const RVec k4 = stage(s + ds, field + ds * k3);
        field += (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      if (!field.allFinite()) throw InvalidField("tracking produced a non-finite field");
    }
    record(sched.back(), detail::track_state(model, field, grid, sched.back(), opts.sampling));
    trace.stop = StopReason::track_complete;
  } catch (const SingularGMatrix& e) {
    trace.stop = StopReason::singular;
    trace.warn(e.what());
  }
  trace.final_field = field;
  return trace;
}

}  // namespace qctrack
