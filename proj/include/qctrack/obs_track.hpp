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
 * @file obs_track.hpp
 * @brief Tracking of measured expectation values v_i = Tr(rho(T) Theta'_i) over an
 * orthonormal operator basis, instead of the full propagator.
 */

#pragma once

#include <string>
#include <vector>

#include "qctrack/dmorph.hpp"

namespace qctrack {

// ---------------------------------------------------------------------------
// Operator basis

struct ObservableBasis {
  std::vector<Mat> raw;
  std::vector<Mat> ortho;  // orthonormal under Tr(AB)
  RMat coeffs;             // n x m, raw[k] = sum_i coeffs(k, i) ortho[i]

  Eigen::Index size() const { return static_cast<Eigen::Index>(ortho.size()); }
  Eigen::Index dim() const { return ortho.front().rows(); }

  /// m x N^2 matrix of vec(Theta'_i).
  RMat vec_matrix() const {
    RMat out(size(), dim() * dim());
    for (Eigen::Index i = 0; i < size(); ++i) out.row(i) = vec_hermitian(ortho[static_cast<std::size_t>(i)]).transpose();
    return out;
  }
};

/// Modified Gram-Schmidt (two passes) in the vectorized image; members whose residual
/// falls below drop_tol are dropped.
inline ObservableBasis orthogonalize(const std::vector<Mat>& raw, double drop_tol = 1e-10) {
  if (raw.empty()) throw InvalidInput("orthogonalize: empty operator list");
  for (const Mat& m : raw) {
    require_same_dim(raw.front(), m, "orthogonalize");
    if (!is_hermitian(m, 1e-10)) throw InvalidInput("orthogonalize: operator is not Hermitian");
  }
  std::vector<RVec> q;
  for (const Mat& m : raw) {
    RVec r = vec_hermitian(m);
    for (int pass = 0; pass < 2; ++pass) {
      for (const RVec& e : q) r -= e.dot(r) * e;
    }
    const double nr = r.norm();
    if (nr >= drop_tol) q.push_back(r / nr);
  }
  if (q.empty()) throw InvalidInput("orthogonalize: all operators vanish");
  ObservableBasis out;
  out.raw = raw;
  for (const RVec& e : q) out.ortho.push_back(unvec_hermitian(e));
  out.coeffs.resize(static_cast<Eigen::Index>(raw.size()), static_cast<Eigen::Index>(q.size()));
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const RVec r = vec_hermitian(raw[k]);
    for (std::size_t i = 0; i < q.size(); ++i) out.coeffs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = r.dot(q[i]);
  }
  return out;
}

/// Theta followed by the first m elements of the vectorization basis, orthonormalized and
/// truncated to m members; Theta'_0 is Theta / ||Theta||.
inline ObservableBasis default_basis(const Mat& theta, Eigen::Index m) {
  require_square(theta, "default_basis: Theta");
  const Eigen::Index n = theta.rows();
  if (m < 1 || m > n * n) throw InvalidInput("default_basis: m must lie in [1, N^2]");
  std::vector<Mat> raw{theta};
  for (const Mat& b : hermitian_basis(n)) raw.push_back(b);
  auto full = orthogonalize(raw);
  ObservableBasis out;
  out.ortho.assign(full.ortho.begin(), full.ortho.begin() + m);
  out.raw = {theta};
  out.coeffs = full.coeffs.topLeftCorner(1, m);
  return out;
}

/// Theta together with the remaining Pauli operators, orthonormalized (N = 2 only).
inline ObservableBasis pauli_basis(const Mat& theta, Eigen::Index m = 3) {
  if (theta.rows() != 2) throw DimensionError("pauli_basis requires N = 2");
  auto full = orthogonalize({theta, pauli_x(), pauli_y(), pauli_z()});
  if (m < 1 || m > full.size()) throw InvalidInput("pauli_basis: m out of range");
  ObservableBasis out;
  out.raw = {theta};
  out.ortho.assign(full.ortho.begin(), full.ortho.begin() + m);
  out.coeffs = full.coeffs.topLeftCorner(1, m);
  return out;
}

// ---------------------------------------------------------------------------
// Observable vector and its field derivative

inline RVec observable_vector(const Mat& u, const Mat& rho, const ObservableBasis& basis) {
  require_same_dim(u, rho, "observable_vector: rho");
  const Mat rt = u * rho * u.adjoint();
  RVec v(basis.size());
  for (Eigen::Index i = 0; i < basis.size(); ++i) {
    const Mat& th = basis.ortho[static_cast<std::size_t>(i)];
    require_same_dim(u, th, "observable_vector: basis element");
    v(i) = (rt * th).trace().real();
  }
  return v;
}

inline RVec observable_vector(const PropagatorTrajectory& traj, const Mat& rho, const ObservableBasis& basis) {
  return observable_vector(traj.final(), rho, basis);
}

/// m x N^2 matrix with rows vec(i[rho, U^dag(T) Theta'_i U(T)]).
inline RMat commutator_map(const Mat& u_final, const Mat& rho, const ObservableBasis& basis) {
  const Eigen::Index n = rho.rows();
  RMat c(basis.size(), n * n);
  for (Eigen::Index i = 0; i < basis.size(); ++i) {
    const Mat th = u_final.adjoint() * basis.ortho[static_cast<std::size_t>(i)] * u_final;
    c.row(i) = vec_i_commutator(rho, th).transpose();
  }
  return c;
}

/// Row i is the field gradient of v_i.
inline RMat grad_observable_vector(const PropagatorTrajectory& traj, const DipoleTrace& dip, const Mat& rho,
                                   const ObservableBasis& basis) {
  if (dip.size() != traj.size() || !(dip.grid == traj.grid)) {
    throw DimensionError("grad_observable_vector: dipole trace and trajectory use different grids");
  }
  return commutator_map(traj.final(), rho, basis) * dip.response_matrix();
}

struct GammaMatrix {
  RMat gamma;
  RVec singular_values;  // descending, full matrix
  /// Condition on the kinematically reachable subspace (range of the commutator map
  /// when supplied, otherwise the whole space).
  double condition = kInf;
  double full_condition = kInf;
  Eigen::Index reachable_dim = 0;
};

/// Gamma = grad_v diag(w) grad_v^T. When commutator rows are supplied, directions of v that
/// no unitary motion can produce (e.g. the purity direction for a pure state) are excluded
/// from the condition number.
inline GammaMatrix assemble_Gamma(const RMat& grad_v, const RVec& weights, const RMat* commutators = nullptr) {
  if (grad_v.cols() != weights.size()) throw DimensionError("assemble_Gamma: weight length mismatch");
  if (!grad_v.allFinite()) throw InvalidInput("assemble_Gamma: non-finite gradient rows");
  GammaMatrix out;
  const RMat g = grad_v * weights.asDiagonal() * grad_v.transpose();
  out.gamma = 0.5 * (g + g.transpose());
  out.singular_values = singular_values(out.gamma);
  out.reachable_dim = out.gamma.rows();
  if (!(out.singular_values.size() > 0 && out.singular_values(0) > 0.0)) return out;
  out.full_condition = condition_from_singular_values(out.singular_values);
  out.condition = out.full_condition;
  if (commutators) {
    Eigen::JacobiSVD<RMat> svd(*commutators, Eigen::ComputeFullU);
    const RVec& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > 1e-10 * s(0)) ++r;
    out.reachable_dim = r;
    if (r > 0 && r < out.gamma.rows()) {
      const RMat p = svd.matrixU().leftCols(r);
      out.condition = condition_from_singular_values(singular_values(p.transpose() * out.gamma * p));
    }
  }
  return out;
}

inline GammaMatrix assemble_Gamma(const RMat& grad_v, const TimeGrid& grid) {
  return assemble_Gamma(grad_v, grid.trapezoid_weights());
}

// ---------------------------------------------------------------------------
// Targets

/// Target values w(s_k) and their s-derivatives along a schedule.
struct ObservableTrackSpec {
  std::vector<double> schedule;
  std::vector<RVec> w;
  std::vector<RVec> dw_ds;
  double beta = 0.0;  // <= 0 selects 1/h (h = ds / substeps)

  Eigen::Index size() const { return static_cast<Eigen::Index>(schedule.size()); }
};

inline ObservableTrackSpec targets_from_geodesic(const GeodesicTrack& track, const Mat& rho,
                                                 const ObservableBasis& basis) {
  ObservableTrackSpec out;
  out.schedule = track.schedule;
  const Mat arho = kI * commutator(track.A, rho);
  for (double s : track.schedule) {
    const Mat q = track.at(s);
    out.w.push_back(observable_vector(q, rho, basis));
    const Mat rate = q * arho * q.adjoint();
    RVec d(basis.size());
    for (Eigen::Index i = 0; i < basis.size(); ++i) d(i) = (rate * basis.ortho[static_cast<std::size_t>(i)]).trace().real();
    out.dw_ds.push_back(d);
  }
  return out;
}

/// Scalar linear ramp P(s) = P0 + s (P1 - P0) on a uniform p-point schedule.
inline ObservableTrackSpec linear_ramp(double p0, double p1, Eigen::Index p) {
  if (p < 2) throw InvalidInput("linear_ramp: at least two schedule points are required");
  ObservableTrackSpec out;
  for (Eigen::Index k = 0; k < p; ++k) {
    const double s = k == p - 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(p - 1);
    out.schedule.push_back(s);
    out.w.push_back(RVec::Constant(1, p0 + s * (p1 - p0)));
    out.dw_ds.push_back(RVec::Constant(1, p1 - p0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Steps

struct ObservableStepOptions {
  bool strict = false;
  double condition_cap = 1e8;
  double pinv_cutoff = kPinvCutoff;
};

/// deps/ds = f + grad_v^T Gamma^+ (beta (w - v) + dw/ds - int grad_v f dt).
inline RVec vector_track_step(const GammaMatrix& gamma, const RMat& grad_v, const RVec& weights, const RVec& w,
                              const RVec& v, const RVec& dw_ds, double beta, const RVec& f_s,
                              const ObservableStepOptions& opts = {}) {
  if (w.size() != grad_v.rows() || v.size() != grad_v.rows() || dw_ds.size() != grad_v.rows()) {
    throw DimensionError("vector_track_step: target length must equal m");
  }
  if (f_s.size() != grad_v.cols()) throw DimensionError("vector_track_step: free function length must equal q");
  if (opts.strict && !(gamma.condition <= opts.condition_cap)) {
    throw SingularGamma("condition number " + std::to_string(gamma.condition) + " exceeds cap " +
                        std::to_string(opts.condition_cap));
  }
  const RVec a = grad_v * (weights.asDiagonal() * f_s);
  const RVec r = beta * (w - v) + dw_ds - a;
  return f_s + grad_v.transpose() * (pseudo_inverse(gamma.gamma, opts.pinv_cutoff).inverse * r);
}

inline constexpr double kGammaTolerance = 1e-12;

/// deps/ds = f + [beta (P - <Theta>) + dP/ds - int a0 f dt] / gamma * a0.
inline RVec scalar_track_step(double gamma_s, const RVec& a0, const RVec& weights, double P, double phi_now,
                              double dP_ds, double beta, const RVec& f_s) {
  if (a0.size() != f_s.size() || a0.size() != weights.size()) throw DimensionError("scalar_track_step: length mismatch");
  if (!(gamma_s > kGammaTolerance)) {
    throw NearCriticalSingularity("gamma = " + std::to_string(gamma_s) + " at a near-critical field");
  }
  const double a = (a0.array() * weights.array() * f_s.array()).sum();
  return f_s + ((beta * (P - phi_now) + dP_ds - a) / gamma_s) * a0;
}

// ---------------------------------------------------------------------------
// Degenerate manifold dimensions

enum class ManifoldMode { max, aligned };

namespace detail {

inline long checked_partition(const std::vector<int>& mults, long n_dim, const char* what) {
  long sum = 0, sq = 0;
  for (int m : mults) {
    if (m <= 0) throw InvalidSpectrum(std::string(what) + ": multiplicities must be positive");
    sum += m;
    sq += static_cast<long>(m) * m;
  }
  if (sum != n_dim) throw InvalidSpectrum(std::string(what) + ": multiplicities must sum to N");
  return sq;
}

}  // namespace detail

/// max mode: sum n_i^2 + sum m_j^2 - N. aligned mode: sum n_i^2 + sum m_j^2 - sum k_ij^2
/// where k_ij counts the overlap of rho level i with Theta level j.
inline long degenerate_manifold_dim(const std::vector<int>& rho_mults, const std::vector<int>& theta_mults,
                                    ManifoldMode mode = ManifoldMode::max,
                                    const std::vector<std::vector<int>>& overlap = {}) {
  long n_dim = 0;
  for (int m : rho_mults) n_dim += m;
  const long a = detail::checked_partition(rho_mults, n_dim, "degenerate_manifold_dim (rho)");
  const long b = detail::checked_partition(theta_mults, n_dim, "degenerate_manifold_dim (Theta)");
  if (mode == ManifoldMode::max) return a + b - n_dim;
  if (overlap.size() != rho_mults.size()) throw InvalidSpectrum("degenerate_manifold_dim: overlap rows must match rho levels");
  std::vector<long> col(theta_mults.size(), 0);
  long kk = 0;
  for (std::size_t i = 0; i < overlap.size(); ++i) {
    if (overlap[i].size() != theta_mults.size()) throw InvalidSpectrum("degenerate_manifold_dim: overlap columns must match Theta levels");
    long row = 0;
    for (std::size_t j = 0; j < overlap[i].size(); ++j) {
      const int k = overlap[i][j];
      if (k < 0) throw InvalidSpectrum("degenerate_manifold_dim: negative overlap count");
      row += k;
      col[j] += k;
      kk += static_cast<long>(k) * k;
    }
    if (row != rho_mults[i]) throw InvalidSpectrum("degenerate_manifold_dim: overlap row sums must equal rho multiplicities");
  }
  for (std::size_t j = 0; j < col.size(); ++j) {
    if (col[j] != theta_mults[j]) throw InvalidSpectrum("degenerate_manifold_dim: overlap column sums must equal Theta multiplicities");
  }
  return a + b - kk;
}

/// The two published values for a pure rho and a rank-one Theta: the stated N^2 - N and
/// the max-mode formula with multiplicities (1, N-1) on both sides. They agree only at N = 2.
struct PurePairDims {
  long stated = 0;
  long formula = 0;
};

inline PurePairDims pure_pair_manifold_dim(long n_dim) {
  if (n_dim < 2) throw InvalidSpectrum("pure_pair_manifold_dim: N must be at least 2");
  PurePairDims out;
  out.stated = n_dim * n_dim - n_dim;
  const std::vector<int> mults{1, static_cast<int>(n_dim - 1)};
  out.formula = degenerate_manifold_dim(mults, mults);
  return out;
}

// ---------------------------------------------------------------------------
// Driver

struct ObservableTrackingOptions {
  bool scalar = false;  // track <Theta> itself with the scalar step (w has one entry)
  int substeps = 1;     // Euler sub-steps per schedule interval (targets interpolated linearly)
  ObservableStepOptions step;
  Sampling sampling = Sampling::cell_exact;
  bool fluence = false;
  double fluence_ds = 0.0;
  RVec fluence_weight;
};

/// One record per schedule point. track_err is ||w(s_k) - v(s_k)||; condition is that of
/// Gamma on its reachable subspace. The per-step target rate is the secant
/// (w(s_{k+1}) - w(s_k)) / ds; with beta = 1/h (h = ds / substeps) each sub-step aims at w(s_{k+1}) directly.
inline OptimizationTrace run_observable_tracking(const SystemModel& model, const RVec& field0, const TimeGrid& grid,
                                                 const ObservableTrackSpec& spec, const ObservableBasis& basis,
                                                 const Mat& rho, const Mat& theta,
                                                 const ObservableTrackingOptions& opts = {}) {
  model.validate();
  if (field0.size() != grid.q) throw DimensionError("run_observable_tracking: field length must equal q");
  if (spec.schedule.size() < 2 || spec.w.size() != spec.schedule.size()) {
    throw InvalidInput("run_observable_tracking: malformed target specification");
  }
  const Eigen::Index m = opts.scalar ? 1 : basis.size();
  if (spec.w.front().size() != m) throw DimensionError("run_observable_tracking: target length must equal m");

  OptimizationTrace trace;
  RVec field = field0;
  const auto& sched = spec.schedule;

  struct Eval {
    PropagatorTrajectory traj;
    DipoleTrace dip;
    RMat grad_v;
    RVec v;
    GammaMatrix gamma;
    RVec a0;
  };
  auto evaluate = [&](double s) {
    Eval e;
    e.traj = propagate(model, field, grid, s);
    e.dip = dipole_trace(e.traj, model.at(s).second, opts.sampling);
    e.a0 = grad_field(e.traj, e.dip, rho, theta);
    if (opts.scalar) {
      e.grad_v = e.a0.transpose();
      e.v = RVec::Constant(1, expectation(e.traj.final(), rho, theta));
      e.gamma = assemble_Gamma(e.grad_v, e.dip.weights());
    } else {
      const RMat c = commutator_map(e.traj.final(), rho, basis);
      e.grad_v = c * e.dip.response_matrix();
      e.v = observable_vector(e.traj.final(), rho, basis);
      e.gamma = assemble_Gamma(e.grad_v, e.dip.weights(), &c);
    }
    return e;
  };
  auto record = [&](double s, const Eval& e, std::size_t k) {
    TraceRecord rec;
    rec.s = s;
    rec.u_final = e.traj.final();
    rec.phi = expectation(rec.u_final, rho, theta);
    rec.grad_norm = field_norm(e.a0, e.dip.weights());
    rec.fluence = fluence(field, grid);
    rec.condition = e.gamma.singular_values.size() > 0 && e.gamma.singular_values(0) > 0.0 ? e.gamma.condition : kInf;
    rec.track_err = (spec.w[k] - e.v).norm();
    trace.push(std::move(rec));
  };

  if (opts.substeps < 1) throw InvalidInput("run_observable_tracking: substeps must be positive");
  try {
    for (std::size_t k = 0; k + 1 < sched.size(); ++k) {
      const double s = sched[k];
      const double ds = sched[k + 1] - s;
      const double h = ds / opts.substeps;
      const double beta = spec.beta > 0.0 ? spec.beta : 1.0 / h;
      const RVec rate = (spec.w[k + 1] - spec.w[k]) / ds;
      for (int sub = 0; sub < opts.substeps; ++sub) {
        const double frac = static_cast<double>(sub) / opts.substeps;
        const Eval e = evaluate(s + frac * ds);
        if (sub == 0) record(s, e, k);
        const RVec target = spec.w[k] + frac * (spec.w[k + 1] - spec.w[k]);
        RVec f = RVec::Zero(grid.q);
        if (opts.fluence) {
          const RVec wt = opts.fluence_weight.size() == grid.q ? opts.fluence_weight : RVec::Ones(grid.q);
          f = fluence_free_function(field, wt, opts.fluence_ds > 0.0 ? opts.fluence_ds : h);
        }
        RVec step;
        if (opts.scalar) {
          step = scalar_track_step(e.gamma.gamma(0, 0), e.a0, e.dip.weights(), target(0), e.v(0), rate(0), beta, f);
        } else {
          step = vector_track_step(e.gamma, e.grad_v, e.dip.weights(), target, e.v, rate, beta, f, opts.step);
        }
        field += h * step;
        if (!field.allFinite()) throw InvalidField("observable tracking produced a non-finite field");
      }
    }
    record(sched.back(), evaluate(sched.back()), sched.size() - 1);
    trace.stop = StopReason::track_complete;
  } catch (const SingularGamma& e) {
    trace.stop = StopReason::singular;
    trace.warn(e.what());
  } catch (const NearCriticalSingularity& e) {
    trace.stop = StopReason::singular;
    trace.warn(e.what());
  }
  trace.final_field = field;
  return trace;
}

}  // namespace qctrack
