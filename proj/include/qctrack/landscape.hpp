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
 * @file landscape.hpp
 * @brief Observable objective Phi(U) = Tr(U rho U^dag Theta) and its geometry.
 *
 * Covers the field gradient, the gradient on U(N), kinematic optima and critical
 * manifolds, gradient-subspace dimensions and the closed-form pure-state flow.
 */

#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "qctrack/dynamics.hpp"

namespace qctrack {

// ---------------------------------------------------------------------------
// States and observables

/// Distinct eigenvalues (descending) and their multiplicities.
struct Spectrum {
  RVec values;               // all eigenvalues, descending
  std::vector<double> levels;
  std::vector<int> multiplicities;
};

inline Spectrum spectrum_of(const Mat& h, double tol = 1e-10) {
  Spectrum out;
  out.values = hermitian_eigen_descending(h).values;
  for (Eigen::Index k = 0; k < out.values.size(); ++k) {
    if (!out.levels.empty() && std::abs(out.levels.back() - out.values(k)) <= tol) {
      ++out.multiplicities.back();
    } else {
      out.levels.push_back(out.values(k));
      out.multiplicities.push_back(1);
    }
  }
  return out;
}

/// Multiplicities of the nonzero eigenvalues only (the rho(0) convention of the
/// gradient-subspace formula).
inline std::vector<int> nonzero_multiplicities(const Mat& rho, double tol = 1e-10) {
  const auto sp = spectrum_of(rho, tol);
  std::vector<int> out;
  for (std::size_t k = 0; k < sp.levels.size(); ++k) {
    if (std::abs(sp.levels[k]) > tol) out.push_back(sp.multiplicities[k]);
  }
  return out;
}

/// Validated density matrix: Hermitian, PSD, unit trace.
struct DensityMatrix {
  Mat rho;
  Spectrum spectrum;

  explicit DensityMatrix(Mat m) : rho(std::move(m)) {
    require_square(rho, "DensityMatrix");
    if (!is_hermitian(rho, 1e-10)) throw InvalidInput("DensityMatrix is not Hermitian");
    rho = hermitian_part(rho);
    spectrum = spectrum_of(rho);
    if (spectrum.values.minCoeff() < -1e-12) throw InvalidInput("DensityMatrix has a negative eigenvalue");
    if (std::abs(rho.trace().real() - 1.0) > 1e-10) throw InvalidInput("DensityMatrix trace differs from 1");
  }
};

/// Validated Hermitian observable.
struct Observable {
  Mat theta;
  Spectrum spectrum;

  explicit Observable(Mat m) : theta(std::move(m)) {
    require_square(theta, "Observable");
    if (!is_hermitian(theta, 1e-12)) throw InvalidInput("Observable is not Hermitian");
    theta = hermitian_part(theta);
    spectrum = spectrum_of(theta);
  }
};

// ---------------------------------------------------------------------------
// Objective and gradients

inline double expectation(const Mat& u, const Mat& rho, const Mat& theta) {
  require_square(u, "expectation: U");
  require_same_dim(u, rho, "expectation: U and rho");
  require_same_dim(u, theta, "expectation: U and Theta");
  const cplx val = (u * rho * u.adjoint() * theta).trace();
  if (std::abs(val.imag()) > 1e-10 * std::max(1.0, std::abs(val.real()))) {
    throw NumericalFailure("expectation has an imaginary residue " + std::to_string(val.imag()));
  }
  return val.real();
}

/// Field gradient a0(t_j) = dPhi/deps(t_j) = Tr(node_j * i[rho, U^dag(T) Theta U(T)]).
/// With Sampling::cell_exact this is the exact derivative of the discretized objective
/// divided by the cell width; the last sample is inert and gets 0.
inline RVec grad_field(const PropagatorTrajectory& traj, const DipoleTrace& dip, const Mat& rho,
                       const Mat& theta) {
  if (dip.size() != traj.size() || !(dip.grid == traj.grid)) {
    throw DimensionError("grad_field: dipole trace and trajectory use different grids");
  }
  require_same_dim(traj.final(), rho, "grad_field: rho");
  require_same_dim(traj.final(), theta, "grad_field: Theta");
  const Mat theta_t = traj.final().adjoint() * theta * traj.final();
  const RVec g = vec_i_commutator(rho, theta_t);
  return dip.response_matrix().transpose() * g;
}

/// sqrt(int a0^2 dt) under the trace's quadrature.
inline double field_norm(const RVec& a0, const RVec& weights) {
  return std::sqrt((a0.array().square() * weights.array()).sum());
}

/// Riemannian gradient on U(N): [Theta, U rho U^dag] U.
inline Mat grad_unitary(const Mat& u, const Mat& rho, const Mat& theta) {
  require_same_dim(u, rho, "grad_unitary: rho");
  require_same_dim(u, theta, "grad_unitary: Theta");
  return commutator(theta, u * rho * u.adjoint()) * u;
}

// ---------------------------------------------------------------------------
// Kinematic optimum and critical manifolds

struct KinematicOptimum {
  Mat W;
  double phi_max = 0.0;
};

/// W maps the k-th eigenvector of rho to the k-th eigenvector of Theta (both descending),
/// so Phi(W) = sum_k eps_k lambda_k with both spectra sorted descending.
inline KinematicOptimum kinematic_optimum(const Mat& rho, const Mat& theta) {
  require_same_dim(rho, theta, "kinematic_optimum");
  const auto er = hermitian_eigen_descending(rho);
  const auto et = hermitian_eigen_descending(theta);
  KinematicOptimum out;
  out.W = et.vectors * er.vectors.adjoint();
  out.phi_max = er.values.dot(et.values);
  return out;
}

namespace detail {

/// Index ranges [begin, end) of equal values in a descending list.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> level_blocks(const RVec& values, double tol) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (Eigen::Index k = 0; k < values.size();) {
    Eigen::Index e = k + 1;
    while (e < values.size() && std::abs(values(e) - values(k)) <= tol) ++e;
    out.emplace_back(k, e);
    k = e;
  }
  return out;
}

/// Block-diagonal unitary X maximizing Re Tr(A X) (block-wise polar factors).
inline Mat block_polar(const Mat& a, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& blocks) {
  Mat x = Mat::Zero(a.rows(), a.cols());
  for (const auto& [b, e] : blocks) {
    const Eigen::Index len = e - b;
    Eigen::JacobiSVD<Mat> svd(a.block(b, b, len, len), Eigen::ComputeFullU | Eigen::ComputeFullV);
    x.block(b, b, len, len) = svd.matrixV() * svd.matrixU().adjoint();
  }
  return x;
}

}  // namespace detail

/// W multiplied by the N-th root of unity phase that makes the geodesic from U0 traceless
/// and shortest. With a traceless dipole det U(T) never changes, so only such targets are
/// reachable; the objective is blind to the phase.
inline Mat align_target_phase(const Mat& U0, const Mat& W) {
  const Eigen::Index n = W.rows();
  const cplx ratio = (U0.adjoint() * W).determinant();
  const double base = -std::arg(ratio) / static_cast<double>(n);
  Mat best = W;
  double best_trace = kInf, best_len = kInf;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double phi = base + 2.0 * kPi * static_cast<double>(m) / static_cast<double>(n);
    const Mat cand = std::exp(kI * phi) * W;
    const Mat a = log_unitary(U0.adjoint() * cand).generator;
    const double tr = std::abs(a.trace().real());
    const double len = a.norm();
    if (tr < best_trace - 1e-9 || (std::abs(tr - best_trace) <= 1e-9 && len < best_len)) {
      best = cand;
      best_trace = tr;
      best_len = len;
    }
  }
  return best;
}

namespace detail {

/// Block-diagonal part of a square matrix.
inline Mat block_diagonal_part(const Mat& a, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& blocks) {
  Mat out = Mat::Zero(a.rows(), a.cols());
  for (const auto& [b, e] : blocks) out.block(b, b, e - b, e - b) = a.block(b, b, e - b, e - b);
  return out;
}

}  // namespace detail

/// The maximizer of Phi nearest to U0 in geodesic distance. Every maximizer has the form
/// W = V_Theta Y Z V_rho^dag with Y block-unitary over the Theta levels and Z over the rho
/// levels. A chordal start (largest Re Tr(U0^dag W), alternating block polar factors) is
/// refined by gradient descent of ||log(U0^dag W)||_F^2 along that set. With fixed_det the
/// search stays on det W = det U0 (the only reachable targets when the dipole is traceless).
inline KinematicOptimum nearest_kinematic_optimum(const Mat& rho, const Mat& theta, const Mat& U0,
                                                  bool fixed_det = false, double tol = 1e-10) {
  require_same_dim(rho, theta, "nearest_kinematic_optimum");
  require_same_dim(rho, U0, "nearest_kinematic_optimum: U0");
  const auto er = hermitian_eigen_descending(rho);
  const auto et = hermitian_eigen_descending(theta);
  const auto rho_blocks = detail::level_blocks(er.values, tol);
  const auto theta_blocks = detail::level_blocks(et.values, tol);
  const Eigen::Index n = rho.rows();
  const Mat m = er.vectors.adjoint() * U0.adjoint() * et.vectors;
  Mat y = Mat::Identity(n, n), z = Mat::Identity(n, n);
  double last = -kInf;
  for (int it = 0; it < 100; ++it) {
    y = detail::block_polar(z * m, theta_blocks);  // Re Tr(M Y Z) = Re Tr(Z M Y)
    z = detail::block_polar(m * y, rho_blocks);
    const double val = (m * y * z).trace().real();
    if (val - last < 1e-14) break;
    last = val;
  }
  Mat w = et.vectors * y * z * er.vectors.adjoint();
  if (fixed_det) w = align_target_phase(U0, w);

  // d/dt ||log(U0^dag W e^{itX})||^2 = 2 Tr(L X) with L = log(U0^dag W).
  auto project = [&](const Mat& l, const Mat& basis, const auto& blocks) {
    Mat x = basis * detail::block_diagonal_part(basis.adjoint() * l * basis, blocks) * basis.adjoint();
    if (fixed_det) x -= (x.trace() / static_cast<double>(n)) * Mat::Identity(n, n);
    return hermitian_part(x);
  };
  for (int it = 0; it < 500; ++it) {
    const Mat l = log_unitary(U0.adjoint() * w).generator;
    const Mat xr = project(l, er.vectors, rho_blocks);
    const Mat xl = project(w * l * w.adjoint(), et.vectors, theta_blocks);
    if (xr.norm() + xl.norm() < 1e-12) break;
    w = w * exp_i(-0.5 * xr);
    const Mat l2 = log_unitary(U0.adjoint() * w).generator;
    w = exp_i(-0.5 * project(w * l2 * w.adjoint(), et.vectors, theta_blocks)) * w;
  }
  KinematicOptimum out;
  out.W = w;
  out.phi_max = er.values.dot(et.values);
  return out;
}

struct CriticalManifoldSet {
  std::vector<Mat> representatives;
  std::vector<double> critical_values;
  /// permutations[l][k] = Theta eigen-index that rho eigen-index k is mapped to.
  std::vector<std::vector<int>> permutations;

  std::vector<double> distinct_values(double tol = 1e-10) const {
    std::vector<double> v = critical_values;
    std::sort(v.begin(), v.end(), std::greater<>());
    v.erase(std::unique(v.begin(), v.end(), [tol](double a, double b) { return std::abs(a - b) <= tol; }),
            v.end());
    return v;
  }
};

inline constexpr Eigen::Index kMaxCriticalEnumerationDim = 6;

/// One representative U_l = R^dag P_l Q per class of permutations that assign the same
/// rho eigenvalues to the same Theta eigenvalue levels.
inline CriticalManifoldSet critical_manifolds(const Mat& rho, const Mat& theta, double tol = 1e-10) {
  require_same_dim(rho, theta, "critical_manifolds");
  const Eigen::Index n = rho.rows();
  if (n > kMaxCriticalEnumerationDim) {
    throw InvalidInput("critical_manifolds enumerates permutations only up to N = 6");
  }
  const auto er = hermitian_eigen_descending(rho);
  const auto et = hermitian_eigen_descending(theta);
  auto cluster_ids = [tol](const RVec& v) {
    std::vector<int> id(static_cast<std::size_t>(v.size()));
    int next = -1;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (k == 0 || std::abs(v(k) - v(k - 1)) > tol) ++next;
      id[static_cast<std::size_t>(k)] = next;
    }
    return id;
  };
  const auto rho_id = cluster_ids(er.values);
  const auto theta_id = cluster_ids(et.values);

  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> seen;
  CriticalManifoldSet out;
  do {
    // Canonical class key: rho-level assigned to each Theta position, sorted within Theta levels.
    std::vector<int> key(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) key[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = rho_id[static_cast<std::size_t>(k)];
    for (std::size_t a = 0; a < key.size();) {
      std::size_t b = a;
      while (b < key.size() && theta_id[b] == theta_id[a]) ++b;
      std::sort(key.begin() + static_cast<std::ptrdiff_t>(a), key.begin() + static_cast<std::ptrdiff_t>(b));
      a = b;
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    Mat u = Mat::Zero(n, n);
    double value = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const int target = perm[static_cast<std::size_t>(k)];
      u += et.vectors.col(target) * er.vectors.col(k).adjoint();
      value += er.values(k) * et.values(target);
    }
    out.representatives.push_back(std::move(u));
    out.critical_values.push_back(value);
    out.permutations.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// ---------------------------------------------------------------------------
// Dimension counting

/// Dimension of the subspace explored by the gradient flow:
/// D = N^2 - (N - n)^2 - sum n_i^2 = n(2N - n) - sum n_i^2, with n = sum n_i.
inline long gradient_subspace_dim(const std::vector<int>& multiplicities, long n_dim) {
  if (n_dim < 1) throw InvalidSpectrum("gradient_subspace_dim: N must be positive");
  long n = 0, sq = 0;
  for (int m : multiplicities) {
    if (m <= 0) throw InvalidSpectrum("gradient_subspace_dim: multiplicities must be positive");
    n += m;
    sq += static_cast<long>(m) * m;
  }
  if (n > n_dim) throw InvalidSpectrum("gradient_subspace_dim: multiplicities exceed N");
  return n * (2 * n_dim - n) - sq;
}

// ---------------------------------------------------------------------------
// Double-bracket flow and the closed-form pure-state solution

/// rho' = [rho, [rho, Theta]].
inline Mat double_bracket_rhs(const Mat& rho_s, const Mat& theta) {
  require_same_dim(rho_s, theta, "double_bracket_rhs");
  return hermitian_part(commutator(rho_s, commutator(rho_s, theta)));
}

/// Classical RK4 integration of the double-bracket flow; returns rho at each of the
/// steps + 1 equally spaced s values in [0, s_end].
inline std::vector<Mat> integrate_double_bracket(const Mat& rho0, const Mat& theta, double s_end,
                                                 int steps) {
  if (steps < 1) throw InvalidInput("integrate_double_bracket: steps must be positive");
  const double h = s_end / steps;
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  Mat rho = rho0;
  out.push_back(rho);
  for (int k = 0; k < steps; ++k) {
    const Mat k1 = double_bracket_rhs(rho, theta);
    const Mat k2 = double_bracket_rhs(rho + 0.5 * h * k1, theta);
    const Mat k3 = double_bracket_rhs(rho + 0.5 * h * k2, theta);
    const Mat k4 = double_bracket_rhs(rho + h * k3, theta);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back(rho);
  }
  return out;
}

/// Populations |c_i|^2 in the Theta eigenbasis, ordered by descending eigenvalue.
struct SimplexState {
  RVec x;
};

inline SimplexState populations(const Mat& theta, const CVec& psi) {
  require_square(theta, "populations: Theta");
  if (psi.size() != theta.rows()) throw DimensionError("populations: state length mismatch");
  const double nrm = psi.norm();
  if (std::abs(nrm - 1.0) > 1e-10) throw InvalidInput("populations: state must be normalized");
  const auto et = hermitian_eigen_descending(theta);
  return {(et.vectors.adjoint() * psi).cwiseAbs2()};
}

/// x_i(s) = exp(2 s lambda_i) x_i(0) / sum_j exp(2 s lambda_j) x_j(0).
inline SimplexState pure_flow(const RVec& lambda, const RVec& x0, double s) {
  if (lambda.size() != x0.size()) throw DimensionError("pure_flow: spectrum and state length differ");
  const double shift = lambda.maxCoeff();
  RVec x = x0.array() * (2.0 * s * (lambda.array() - shift)).exp();
  return {x / x.sum()};
}

inline SimplexState analytic_pure_flow(const Mat& theta, const CVec& c0, double s) {
  const auto et = hermitian_eigen_descending(theta);
  return pure_flow(et.values, populations(theta, c0).x, s);
}

/// s -> infinity limit: the population mass of the highest eigenvalue level that the
/// initial state touches, redistributed in proportion to x(0); for a uniform start on a
/// k-fold degenerate maximum this is (1/k, ..., 1/k, 0, ...).
inline SimplexState pure_flow_limit(const RVec& lambda, const RVec& x0, double tol = 1e-10) {
  const Eigen::Index n = lambda.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lambda(a) > lambda(b); });
  for (std::size_t a = 0; a < order.size();) {
    std::size_t b = a;
    double mass = 0.0;
    while (b < order.size() && std::abs(lambda(order[b]) - lambda(order[a])) <= tol) mass += x0(order[b++]);
    if (mass > 0.0) {
      RVec x = RVec::Zero(n);
      for (std::size_t k = a; k < b; ++k) x(order[k]) = x0(order[k]) / mass;
      return {x};
    }
    a = b;
  }
  throw InvalidInput("pure_flow_limit: initial populations are all zero");
}

inline SimplexState analytic_pure_flow_limit(const Mat& theta, const CVec& c0) {
  const auto et = hermitian_eigen_descending(theta);
  return pure_flow_limit(et.values, populations(theta, c0).x);
}

struct DistanceDynamics {
  double dist2 = 0.0;
  double ddist2_ds = 0.0;
};

/// ||x(s) - e_{i*}||^2 along the closed-form flow and its exact s-derivative
///   d/ds = 4 [ sum_i x_i^2 (lambda_i - Phi) - x_{i*} (lambda_{i*} - Phi) ],  Phi = lambda . x.
inline DistanceDynamics distance_dynamics(const RVec& lambda, const RVec& x0, Eigen::Index i_star,
                                          double s) {
  if (i_star < 0 || i_star >= lambda.size()) throw InvalidInput("distance_dynamics: i_star out of range");
  const RVec x = pure_flow(lambda, x0, s).x;
  const double phi = lambda.dot(x);
  DistanceDynamics out;
  out.dist2 = x.squaredNorm() - 2.0 * x(i_star) + 1.0;
  const double quad = (x.array().square() * (lambda.array() - phi)).sum();
  out.ddist2_ds = 4.0 * (quad - x(i_star) * (lambda(i_star) - phi));
  return out;
}

inline DistanceDynamics distance_dynamics(const Mat& theta, const SimplexState& x0, Eigen::Index i_star,
                                          double s) {
  return distance_dynamics(hermitian_eigen_descending(theta).values, x0.x, i_star, s);
}

}  // namespace qctrack
