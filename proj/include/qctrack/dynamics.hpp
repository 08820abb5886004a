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
 * @file dynamics.hpp
 * @brief Schrodinger propagation of a finite-level system under a sampled control field.
 *
 * The step Hamiltonian is H_j = H0 - mu * eps(t_j), held constant on [t_j, t_j + dt).
 * The final field sample therefore never acts on the system; quantities that
 * integrate against the field use weight zero for it when the exact cell
 * sampling is selected.
 */

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qctrack/linalg.hpp"

namespace qctrack {

/// Uniform dynamical time grid t_j = j * T / (q - 1), j = 0..q-1.
struct TimeGrid {
  double T = 1.0;
  Eigen::Index q = 2;

  TimeGrid() = default;
  TimeGrid(double final_time, Eigen::Index samples) : T(final_time), q(samples) { validate(); }

  double dt() const { return T / static_cast<double>(q - 1); }
  double time(Eigen::Index j) const { return dt() * static_cast<double>(j); }

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("TimeGrid: T must be positive and finite");
    if (q < 2) throw InvalidInput("TimeGrid: q must be at least 2");
  }

  /// Composite trapezoid weights over the q samples.
  RVec trapezoid_weights() const {
    RVec w = RVec::Constant(q, dt());
    w(0) *= 0.5;
    w(q - 1) *= 0.5;
    return w;
  }

  /// Weights of the piecewise-constant field cells: dt for j < q-1, 0 for the last sample.
  RVec cell_weights() const {
    RVec w = RVec::Constant(q, dt());
    w(q - 1) = 0.0;
    return w;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Linear interpolation of (H0, mu) between two endpoints over s in [0, 1].
struct MorphEndpoints {
  Mat h0_start, mu_start;
  Mat h0_end, mu_end;

  Mat dh0_ds() const { return h0_end - h0_start; }
  Mat dmu_ds() const { return mu_end - mu_start; }
};

/// Internal Hamiltonian, dipole operator and optional morphing schedule.
struct SystemModel {
  Mat h0;
  Mat mu;
  std::optional<MorphEndpoints> morph;

  SystemModel() = default;
  SystemModel(Mat internal, Mat dipole, std::optional<MorphEndpoints> morphing = std::nullopt)
      : h0(std::move(internal)), mu(std::move(dipole)), morph(std::move(morphing)) {
    validate();
  }

  Eigen::Index dim() const { return h0.rows(); }

  void validate(double tol = 1e-12) const {
    require_square(h0, "SystemModel.H0");
    require_same_dim(h0, mu, "SystemModel: H0 and mu");
    if (h0.rows() < 2) throw InvalidInput("SystemModel: dimension must be at least 2");
    if (!all_finite(h0) || !all_finite(mu)) throw InvalidInput("SystemModel: non-finite entries");
    if (!is_hermitian(h0, tol)) throw InvalidInput("SystemModel: H0 is not Hermitian");
    if (!is_hermitian(mu, tol)) throw InvalidInput("SystemModel: mu is not Hermitian");
    if (morph) {
      for (const Mat* m : {&morph->h0_start, &morph->mu_start, &morph->h0_end, &morph->mu_end}) {
        require_same_dim(h0, *m, "SystemModel: morph endpoint");
        if (!all_finite(*m) || !is_hermitian(*m, tol)) {
          throw InvalidInput("SystemModel: morph endpoint is not a finite Hermitian matrix");
        }
      }
    }
  }

  /// Hamiltonian pair at algorithmic time s (identity map when morphing is off).
  std::pair<Mat, Mat> at(double s) const {
    if (!morph) return {h0, mu};
    return {morph->h0_start + s * morph->dh0_ds(), morph->mu_start + s * morph->dmu_ds()};
  }

  SystemModel model_at(double s) const {
    auto [h, m] = at(s);
    SystemModel out;
    out.h0 = std::move(h);
    out.mu = std::move(m);
    return out;
  }
};

/// p x q history of control fields eps(s_k, t_j).
struct ControlField {
  RMat grid;
  TimeGrid time_grid;
  double ds = 0.0;

  ControlField() = default;
  ControlField(RMat values, TimeGrid tg, double step) : grid(std::move(values)), time_grid(tg), ds(step) {
    validate();
  }

  Eigen::Index rows() const { return grid.rows(); }
  RVec row(Eigen::Index k) const { return grid.row(k).transpose(); }

  void validate() const {
    time_grid.validate();
    if (grid.rows() < 1) throw InvalidField("ControlField needs at least one row");
    if (grid.cols() != time_grid.q) throw DimensionError("ControlField: column count must equal q");
    if (!grid.allFinite()) throw InvalidField("ControlField: non-finite entries");
  }
};

/// Eigen-decomposition of one step Hamiltonian; reused for cell averages.
struct StepSpectrum {
  RVec energies;
  Mat vectors;
};

/// U(t_j, 0) for j = 0..q-1 plus the spectra of the q-1 step Hamiltonians.
struct PropagatorTrajectory {
  std::vector<Mat> propagators;
  std::vector<StepSpectrum> steps;
  TimeGrid grid;

  const Mat& final() const { return propagators.back(); }
  Eigen::Index dim() const { return propagators.front().rows(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(propagators.size()); }
};

/// Total field energy int eps^2 dt over the piecewise-constant cells.
inline double fluence(std::span<const double> field, const TimeGrid& grid) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < field.size(); ++j) acc += field[j] * field[j];
  return acc * grid.dt();
}

inline double fluence(const RVec& field, const TimeGrid& grid) {
  return fluence(std::span<const double>(field.data(), static_cast<std::size_t>(field.size())), grid);
}

/// Piecewise-constant propagation; each step exponentiated through its eigenbasis.
inline PropagatorTrajectory propagate(const Mat& h0, const Mat& mu, std::span<const double> field,
                                      const TimeGrid& grid) {
  grid.validate();
  require_square(h0, "propagate: H0");
  require_same_dim(h0, mu, "propagate: H0 and mu");
  if (static_cast<Eigen::Index>(field.size()) != grid.q) {
    throw DimensionError("propagate: field length " + std::to_string(field.size()) +
                         " != q = " + std::to_string(grid.q));
  }
  for (double e : field) {
    if (!std::isfinite(e)) throw InvalidField("propagate: non-finite field sample");
  }
  const Eigen::Index n = h0.rows();
  const double dt = grid.dt();
  PropagatorTrajectory traj;
  traj.grid = grid;
  traj.propagators.reserve(static_cast<std::size_t>(grid.q));
  traj.steps.reserve(static_cast<std::size_t>(grid.q - 1));
  traj.propagators.push_back(Mat::Identity(n, n));
  CVec phases(n);
  for (Eigen::Index j = 0; j + 1 < grid.q; ++j) {
    auto eig = hermitian_eigen(h0 - mu * field[static_cast<std::size_t>(j)]);
    for (Eigen::Index k = 0; k < n; ++k) phases(k) = std::exp(-kI * eig.values(k) * dt);
    const Mat step = eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
    traj.propagators.push_back(step * traj.propagators.back());
    traj.steps.push_back({std::move(eig.values), std::move(eig.vectors)});
  }
  return traj;
}

inline PropagatorTrajectory propagate(const SystemModel& model, const RVec& field, const TimeGrid& grid,
                                      double s = 0.0) {
  auto [h0, mu] = model.at(s);
  return propagate(h0, mu, std::span<const double>(field.data(), static_cast<std::size_t>(field.size())),
                   grid);
}

/// How time-dependent operators are sampled for integrals against the field.
enum class Sampling {
  /// Exact average of U^dag(t) X U(t) over each field cell, weight dt; the last sample
  /// carries weight zero. Integrals then equal exact derivatives of the discretized dynamics.
  cell_exact,
  /// Point samples U^dag(t_j) X U(t_j) with composite trapezoid weights.
  point_trapezoid,
};

/// Interaction-picture samples of an operator plus their quadrature weights.
struct OperatorTrace {
  std::vector<Mat> nodes;
  RVec weights;
  Sampling sampling = Sampling::cell_exact;
};

namespace detail {

/// (e^{ix} - 1) / (ix), the cell average of e^{i x tau / dt}.
inline cplx phase_average(double x) {
  if (std::abs(x) < 1e-6) return {1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0};
  return (std::exp(kI * x) - 1.0) / (kI * x);
}

}  // namespace detail

/// U^dag(t) X U(t) sampled along a trajectory.
inline OperatorTrace interaction_trace(const PropagatorTrajectory& traj, const Mat& op,
                                       Sampling sampling = Sampling::cell_exact) {
  require_same_dim(traj.propagators.front(), op, "interaction_trace: operator");
  const Eigen::Index q = traj.size();
  OperatorTrace out;
  out.sampling = sampling;
  out.nodes.reserve(static_cast<std::size_t>(q));
  if (sampling == Sampling::point_trapezoid) {
    for (const Mat& u : traj.propagators) out.nodes.push_back(hermitian_part(u.adjoint() * op * u));
    out.weights = traj.grid.trapezoid_weights();
    return out;
  }
  const double dt = traj.grid.dt();
  const Eigen::Index n = op.rows();
  for (Eigen::Index j = 0; j + 1 < q; ++j) {
    const auto& st = traj.steps[static_cast<std::size_t>(j)];
    Mat local = st.vectors.adjoint() * op * st.vectors;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        local(a, b) *= detail::phase_average((st.energies(a) - st.energies(b)) * dt);
      }
    }
    const Mat& u = traj.propagators[static_cast<std::size_t>(j)];
    const Mat w = st.vectors.adjoint() * u;
    out.nodes.push_back(hermitian_part(w.adjoint() * local * w));
  }
  out.nodes.push_back(Mat::Zero(n, n));
  out.weights = traj.grid.cell_weights();
  return out;
}

/// Time-evolved dipole mu(t_j) = U^dag(t_j, 0) mu U(t_j, 0), together with the
/// nodes used when integrating against the field.
struct DipoleTrace {
  std::vector<Mat> mus;  // point samples, q entries
  OperatorTrace response;
  TimeGrid grid;

  Eigen::Index size() const { return static_cast<Eigen::Index>(mus.size()); }
  Eigen::Index dim() const { return mus.front().rows(); }

  /// N^2 x q matrix whose columns are vec(node_j).
  RMat response_matrix() const {
    const Eigen::Index n2 = dim() * dim();
    RMat v(n2, size());
    for (Eigen::Index j = 0; j < size(); ++j) v.col(j) = vec_hermitian(response.nodes[static_cast<std::size_t>(j)]);
    return v;
  }
  const RVec& weights() const { return response.weights; }
};

inline DipoleTrace dipole_trace(const PropagatorTrajectory& traj, const Mat& mu,
                                Sampling sampling = Sampling::cell_exact) {
  if (traj.propagators.empty()) throw InvalidInput("dipole_trace: empty trajectory");
  if (mu.rows() != traj.dim() || mu.cols() != traj.dim()) {
    throw DimensionError("dipole_trace: dipole dimension does not match the trajectory");
  }
  DipoleTrace out;
  out.grid = traj.grid;
  out.mus.reserve(traj.propagators.size());
  for (const Mat& u : traj.propagators) out.mus.push_back(hermitian_part(u.adjoint() * mu * u));
  out.response = interaction_trace(traj, mu, sampling);
  return out;
}

}  // namespace qctrack
