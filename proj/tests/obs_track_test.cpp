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


#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qctrack/fields.hpp"
#include "qctrack/obs_track.hpp"

using namespace qctrack;

namespace {

const Mat kRho0 = (Mat(2, 2) << 1, 0, 0, 0).finished();

}  // namespace

TEST(Basis, OrthonormalAndDropsDependentMembers) {
  const auto b = orthogonalize({pauli_z(), pauli_x(), pauli_z() + pauli_x(), pauli_y()});
  ASSERT_EQ(b.size(), 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      EXPECT_NEAR((b.ortho[i] * b.ortho[j]).trace().real(), i == j ? 1.0 : 0.0, 1e-14);
    }
  }
  // Every raw operator is recovered from its coefficients.
  for (std::size_t k = 0; k < b.raw.size(); ++k) {
    Mat r = Mat::Zero(2, 2);
    for (Eigen::Index i = 0; i < b.size(); ++i) r += b.coeffs(static_cast<Eigen::Index>(k), i) * b.ortho[i];
    EXPECT_LT((r - b.raw[k]).norm(), 1e-14);
  }
  EXPECT_THROW(orthogonalize({Mat::Zero(2, 2)}), InvalidInput);
}

TEST(Basis, DefaultAndPauliStartWithTheta) {
  std::mt19937_64 rng(1);
  const Mat th = oracle::random_hermitian(3, rng);
  const auto d = default_basis(th, 5);
  EXPECT_EQ(d.size(), 5);
  EXPECT_LT((d.ortho[0] - th / th.norm()).norm(), 1e-14);
  const auto p = pauli_basis(pauli_z(), 3);
  EXPECT_LT((p.ortho[0] - pauli_z() / std::sqrt(2.0)).norm(), 1e-15);
  EXPECT_THROW(default_basis(th, 10), InvalidInput);
  EXPECT_THROW(pauli_basis(th), DimensionError);
}

TEST(ObservableVector, MeasurementEquivalence) {
  std::mt19937_64 rng(2);
  const Mat rho = oracle::random_density(3, rng);
  const Mat u = oracle::random_unitary(3, rng);
  const std::vector<Mat> raw{oracle::random_hermitian(3, rng), oracle::random_hermitian(3, rng), oracle::random_hermitian(3, rng)};
  const auto b = orthogonalize(raw);
  const RVec v = observable_vector(u, rho, b);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    EXPECT_NEAR(expectation(u, rho, raw[k]), b.coeffs.row(static_cast<Eigen::Index>(k)).dot(v), 1e-12);
  }
}

TEST(ObservableGradient, MatchesFiniteDifferences) {
  const auto sys = oracle::coupled_system(2, 3);
  const TimeGrid grid(4.0, 61);
  const RVec f = oracle::smooth_field(grid.q, grid.T, 4);
  const auto b = pauli_basis(pauli_z(), 3);
  const auto traj = propagate(SystemModel(sys.h0, sys.mu), f, grid);
  const RMat gv = grad_observable_vector(traj, dipole_trace(traj, sys.mu), kRho0, b);
  for (Eigen::Index i = 0; i < 3; ++i) {
    auto obj = [&](const RVec& x) {
      return oracle::phi(oracle::propagate_final(sys.h0, sys.mu, x, grid.T), kRho0, b.ortho[i]);
    };
    RVec fd = oracle::central_gradient(obj, f, 1e-5) / grid.dt();
    fd(grid.q - 1) = 0.0;
    EXPECT_LT((gv.row(i).transpose() - fd).norm() / fd.norm(), 1e-6);
  }
}

TEST(Gamma, ReachableSubspaceForPureState) {
  const SystemModel model(pauli_z(), pauli_x());
  const TimeGrid grid(20.0, 1001);
  const auto traj = propagate(model, random_field(grid, 3), grid);
  const auto dip = dipole_trace(traj, pauli_x());
  const auto b = pauli_basis(pauli_z(), 3);
  const RMat c = commutator_map(traj.final(), kRho0, b);
  const auto gam = assemble_Gamma(c * dip.response_matrix(), dip.weights(), &c);
  EXPECT_EQ(gam.reachable_dim, 2);
  EXPECT_TRUE(std::isfinite(gam.condition));
  EXPECT_TRUE(std::isinf(gam.full_condition));
  EXPECT_LT((gam.gamma - gam.gamma.transpose()).norm(), 1e-14);
}

TEST(VectorStep, ConstraintHoldsOnRange) {
  const SystemModel model(pauli_z(), pauli_x());
  const TimeGrid grid(20.0, 501);
  const auto traj = propagate(model, random_field(grid, 4), grid);
  const auto dip = dipole_trace(traj, pauli_x());
  const auto b = pauli_basis(pauli_z(), 3);
  const RMat c = commutator_map(traj.final(), kRho0, b);
  const RMat gv = c * dip.response_matrix();
  const auto gam = assemble_Gamma(gv, dip.weights(), &c);
  const RVec v = observable_vector(traj.final(), kRho0, b);
  // A reachable rate: the image of a unitary motion.
  const RVec dw = c * vec_hermitian(pauli_y());
  const RVec step = vector_track_step(gam, gv, dip.weights(), v, v, dw, 1.0, RVec::Zero(grid.q));
  EXPECT_LT((gv * (dip.weights().asDiagonal() * step) - dw).norm(), 1e-8);
  // On track with zero rate and zero free function: no motion.
  EXPECT_LT(vector_track_step(gam, gv, dip.weights(), v, v, RVec::Zero(3), 1.0, RVec::Zero(grid.q)).norm(), 1e-14);
}

TEST(ScalarStep, FormulaAndSingularity) {
  const RVec a0 = (RVec(3) << 1.0, 2.0, 0.0).finished();
  const RVec w = (RVec(3) << 0.5, 0.5, 0.0).finished();
  const double gamma = (a0.array().square() * w.array()).sum();
  const RVec step = scalar_track_step(gamma, a0, w, 0.0, 0.0, 0.3, 0.0, RVec::Zero(3));
  EXPECT_LT((step - (0.3 / gamma) * a0).norm(), 1e-15);
  EXPECT_THROW(scalar_track_step(0.0, a0, w, 0.0, 0.0, 0.3, 0.0, RVec::Zero(3)), NearCriticalSingularity);
}

TEST(ManifoldDims, Formulas) {
  for (int n = 2; n <= 6; ++n) {
    const std::vector<int> ones(static_cast<std::size_t>(n), 1);
    EXPECT_EQ(degenerate_manifold_dim(ones, ones), n);
  }
  EXPECT_EQ(degenerate_manifold_dim({2, 1}, {2, 1}, ManifoldMode::aligned, {{2, 0}, {0, 1}}), 5 + 5 - 5);
  EXPECT_EQ(degenerate_manifold_dim({2, 2}, {2, 2}, ManifoldMode::max) -
                degenerate_manifold_dim({2, 2}, {2, 2}, ManifoldMode::aligned, {{2, 0}, {0, 2}}),
            8 - 4);
  EXPECT_THROW(degenerate_manifold_dim({2, 1}, {1, 1}), InvalidSpectrum);
  EXPECT_THROW(degenerate_manifold_dim({2, 1}, {2, 1}, ManifoldMode::aligned, {{1, 0}, {0, 1}}), InvalidSpectrum);
  const auto p2 = pure_pair_manifold_dim(2);
  EXPECT_EQ(p2.stated, 2);
  EXPECT_EQ(p2.formula, 2);
  const auto p3 = pure_pair_manifold_dim(3);
  EXPECT_EQ(p3.stated, 6);
  EXPECT_EQ(p3.formula, 7);
}

TEST(ObservableTracking, ConstantTargetStaysOnTrack) {
  const SystemModel model(pauli_z(), pauli_x());
  const TimeGrid grid(20.0, 501);
  const RVec f0 = random_field(grid, 5);
  const auto b = pauli_basis(pauli_z(), 3);
  const RVec v0 = observable_vector(propagate(model, f0, grid).final(), kRho0, b);
  ObservableTrackSpec spec;
  for (int k = 0; k < 11; ++k) {
    spec.schedule.push_back(k / 10.0);
    spec.w.push_back(v0);
    spec.dw_ds.push_back(RVec::Zero(3));
  }
  const auto tr = run_observable_tracking(model, f0, grid, spec, b, kRho0, pauli_z());
  for (const auto& r : tr.records) EXPECT_LT(r.track_err, 1e-8);
}

TEST(ObservableTracking, GeodesicTargetsReachOptimum) {
  const SystemModel model(pauli_z(), pauli_x());
  const TimeGrid grid(20.0, 1001);
  const RVec f0 = random_field(grid, 6);
  const Mat u0 = propagate(model, f0, grid).final();
  const auto track = geodesic(u0, nearest_kinematic_optimum(kRho0, pauli_z(), u0, true).W, 101);
  const auto b = pauli_basis(pauli_z(), 3);
  const auto tr = run_observable_tracking(model, f0, grid, targets_from_geodesic(track, kRho0, b), b, kRho0, pauli_z());
  ASSERT_EQ(tr.stop, StopReason::track_complete);
  EXPECT_GE(tr.back().phi, 1.0 - 1e-3);
  for (const auto& r : tr.records) EXPECT_TRUE(std::isfinite(r.condition));
}

TEST(ObservableTracking, ScalarRampWithSubsteps) {
  const SystemModel model(pauli_z(), pauli_x());
  const TimeGrid grid(20.0, 501);
  const RVec f0 = random_field(grid, 7);
  const double phi0 = expectation(propagate(model, f0, grid).final(), kRho0, pauli_z());
  auto spec = linear_ramp(phi0, 0.99, 101);
  spec.beta = 1.0;
  ObservableBasis b;
  b.raw = b.ortho = {pauli_z()};
  b.coeffs = RMat::Ones(1, 1);
  ObservableTrackingOptions opts;
  opts.scalar = true;
  opts.substeps = 8;
  const auto tr = run_observable_tracking(model, f0, grid, spec, b, kRho0, pauli_z(), opts);
  ASSERT_EQ(tr.stop, StopReason::track_complete);
  for (const auto& r : tr.records) EXPECT_LT(r.track_err, 1e-3);
}

TEST(ObservableTracking, CriticalStartIsReportedSingular) {
  const SystemModel model(pauli_z(), pauli_x());
  const TimeGrid grid(5.0, 101);
  auto spec = linear_ramp(1.0, 1.0, 5);
  ObservableBasis b;
  b.raw = b.ortho = {pauli_z()};
  b.coeffs = RMat::Ones(1, 1);
  ObservableTrackingOptions opts;
  opts.scalar = true;
  const auto tr = run_observable_tracking(model, RVec::Zero(grid.q), grid, spec, b, kRho0, pauli_z(), opts);
  EXPECT_EQ(tr.stop, StopReason::singular);
}
