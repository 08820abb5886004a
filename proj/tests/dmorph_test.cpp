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
#include "qctrack/dmorph.hpp"
#include "qctrack/fields.hpp"
#include "qctrack/gradient_flow.hpp"

using namespace qctrack;

namespace {

struct Benchmark {
  SystemModel model{pauli_z(), pauli_x()};
  TimeGrid grid{20.0, 1001};
  Mat rho = (Mat(2, 2) << 1, 0, 0, 0).finished();
  Mat theta = pauli_z();
};

}  // namespace

TEST(GMatrix, SymmetricPositiveAndWellConditioned) {
  Benchmark b;
  const RVec f = random_field(b.grid, 3);
  const auto dip = dipole_trace(propagate(b.model, f, b.grid), pauli_x());
  const auto G = assemble_G(dip, b.grid);
  EXPECT_LT((G.g - G.g.transpose()).norm(), 1e-14);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<RMat>(G.g).eigenvalues().minCoeff(), -1e-12);
  EXPECT_TRUE(G.phase_reduced);
  EXPECT_TRUE(std::isfinite(condition_number(G)));
  // The identity direction is structurally null for a traceless dipole.
  EXPECT_LT(G.singular_values(3) / G.singular_values(0), 1e-12);
}

TEST(GMatrix, CommutingHamiltonianIsRankOne) {
  const TimeGrid grid(20.0, 401);
  const SystemModel model(pauli_z(), pauli_z());
  const auto dip = dipole_trace(propagate(model, random_field(grid, 1), grid), pauli_z());
  const auto G = assemble_G(dip);
  EXPECT_EQ((G.singular_values.array() > 1e-10 * G.singular_values(0)).count(), 1);
  EXPECT_TRUE(std::isinf(G.condition));
  StepOptions strict;
  strict.strict = true;
  EXPECT_THROW(dmorph_step(G, pauli_x(), RVec::Zero(grid.q), dip, strict), SingularGMatrix);
  EXPECT_NO_THROW(dmorph_step(G, pauli_x(), RVec::Zero(grid.q), dip));
  RMat zero = RMat::Zero(4, 4);
  EXPECT_THROW(condition_number(make_gmatrix(zero, false)), InvalidInput);
}

TEST(DmorphStep, SatisfiesLinearConstraint) {
  std::mt19937_64 rng(5);
  const auto sys = oracle::coupled_system(3, 8);
  const TimeGrid grid(10.0, 301);
  const auto dip = dipole_trace(propagate(SystemModel(sys.h0, sys.mu), oracle::smooth_field(grid.q, grid.T, 1), grid), sys.mu);
  const auto G = assemble_G(dip);
  Mat delta = oracle::random_hermitian(3, rng);
  delta -= delta.trace() / 3.0 * Mat::Identity(3, 3);  // the steerable part for a traceless dipole
  std::normal_distribution<double> g;
  RVec f(grid.q);
  for (Eigen::Index j = 0; j < grid.q; ++j) f(j) = g(rng);
  const RVec step = dmorph_step(G, delta, f, dip);
  EXPECT_LT(constraint_residual(dip, step, vec_hermitian(delta)).norm(), 1e-8);
  // Zero target with zero free function gives no motion.
  EXPECT_EQ(dmorph_step(G, Mat::Zero(3, 3), RVec::Zero(grid.q), dip).norm(), 0.0);
}

TEST(Geodesic, EndpointsRateAndLength) {
  std::mt19937_64 rng(9);
  const Mat u0 = oracle::random_unitary(3, rng), w = oracle::random_unitary(3, rng);
  const auto g = geodesic(u0, w, 11);
  EXPECT_LT((g.at(0.0) - u0).norm(), 1e-13);
  EXPECT_LT((g.at(1.0) - w).norm(), 1e-10);
  EXPECT_NEAR(g.length(), geodesic_distance(u0, w), 1e-12);
  const double h = 1e-6;
  EXPECT_LT(((g.at(0.4 + h) - g.at(0.4 - h)) / (2 * h) - g.rate(0.4)).norm(), 1e-8);
  EXPECT_EQ(g.schedule.size(), 11u);
  EXPECT_THROW(geodesic(u0, 2.0 * w, 11), InvalidInput);
}

TEST(TrackDelta, ReachesTargetInOneStep) {
  std::mt19937_64 rng(10);
  const Mat u = oracle::random_unitary(2, rng);
  const Mat q = exp_i(0.01 * oracle::random_hermitian(2, rng)) * u;
  const auto d = track_delta(q, u, 0.005);
  EXPECT_LT((u * exp_i(0.005 * d.generator) - q).norm(), 1e-12);
  EXPECT_THROW(track_delta(q, u, 0.0), InvalidInput);
}

TEST(FreeFunction, FluenceDirection) {
  const RVec f = (RVec(3) << 1.0, -2.0, 0.5).finished();
  const RVec w = RVec::Ones(3);
  EXPECT_LT((fluence_free_function(f, w, 0.5) + 2.0 * f).norm(), 1e-15);
  EXPECT_THROW(fluence_free_function(f, -w, 0.5), InvalidInput);
}

TEST(DiracKernel, DiagnosticInUnitInterval) {
  Benchmark b;
  const auto dip = dipole_trace(propagate(b.model, random_field(b.grid, 2), b.grid), pauli_x());
  const double d = dirac_kernel_diagnostic(dip);
  EXPECT_GE(d, 0.0);
  EXPECT_LE(d, 1.0);
  // Mutually orthogonal samples form a diagonal kernel.
  EXPECT_NEAR(dirac_kernel_diagnostic(std::vector<Mat>{pauli_x(), pauli_y(), pauli_z()}), 0.0, 1e-15);
}

TEST(UnitaryTracking, CombinedCorrectionFollowsGeodesic) {
  Benchmark b;
  const RVec f0 = random_field(b.grid, 4);
  const Mat u0 = propagate(b.model, f0, b.grid).final();
  const auto track = geodesic(u0, nearest_kinematic_optimum(b.rho, b.theta, u0, true).W, 101);
  const auto tr = run_unitary_tracking(b.model, f0, b.grid, track, b.rho, b.theta);
  ASSERT_EQ(tr.stop, StopReason::track_complete);
  ASSERT_EQ(tr.records.size(), 101u);
  for (const auto& r : tr.records) EXPECT_LT(r.track_err, 1e-3);
  EXPECT_NEAR(tr.back().phi, 1.0, 1e-6);
  EXPECT_NEAR(tr.back().pathlength_cum, track.length(), 0.02 * track.length());
  EXPECT_GE(tr.back().pathlength_cum, track.length() - 1e-3);
}

TEST(UnitaryTracking, CorrectionReducesError) {
  Benchmark b;
  for (std::uint64_t seed : {1u, 2u}) {
    const RVec f0 = random_field(b.grid, seed);
    const Mat u0 = propagate(b.model, f0, b.grid).final();
    const auto track = geodesic(u0, nearest_kinematic_optimum(b.rho, b.theta, u0, true).W, 101);
    TrackingOptions none;
    none.correction = CorrectionMode::none;
    const auto a = run_unitary_tracking(b.model, f0, b.grid, track, b.rho, b.theta, none);
    const auto c = run_unitary_tracking(b.model, f0, b.grid, track, b.rho, b.theta);
    EXPECT_LT(c.back().track_err, a.back().track_err) << "seed " << seed;
  }
}

TEST(UnitaryTracking, StrictModeStopsOnSingularG) {
  const TimeGrid grid(20.0, 401);
  const SystemModel model(pauli_z(), pauli_z());
  const Mat rho = (Mat(2, 2) << 1, 0, 0, 0).finished();
  const RVec f0 = random_field(grid, 1);
  const Mat u0 = propagate(model, f0, grid).final();
  const auto track = geodesic(u0, align_target_phase(u0, kinematic_optimum(rho, pauli_x()).W), 21);
  TrackingOptions opts;
  opts.step.strict = true;
  const auto tr = run_unitary_tracking(model, f0, grid, track, rho, pauli_x(), opts);
  EXPECT_EQ(tr.stop, StopReason::singular);
  EXPECT_THROW(require_success(tr), SingularGMatrix);
}

TEST(UnitaryTracking, MorphingHoldsTheFinalPropagator) {
  // Target Q(s) = U0 while the Hamiltonian changes: the morph term must compensate.
  MorphEndpoints me{pauli_z(), pauli_x(), 1.2 * pauli_z() + 0.1 * pauli_x(), pauli_x()};
  const SystemModel model(me.h0_start, me.mu_start, me);
  const TimeGrid grid(10.0, 501);
  const RVec f0 = random_field(grid, 6);
  const Mat u0 = propagate(model, f0, grid, 0.0).final();
  const auto track = geodesic(u0, u0, 51);
  const Mat rho = (Mat(2, 2) << 1, 0, 0, 0).finished();
  const auto tr = run_unitary_tracking(model, f0, grid, track, rho, pauli_z());
  ASSERT_EQ(tr.stop, StopReason::track_complete);
  EXPECT_LT(tr.back().track_err, 1e-3);
  // Without compensation the morphed Hamiltonian would move U(T) substantially.
  EXPECT_GT((propagate(model, f0, grid, 1.0).final() - u0).norm(), 0.1);
}

TEST(GradientFlow, MonotoneAndReachesOptimum) {
  Benchmark b;
  StopRule rule;
  const auto tr = run_gradient_flow(b.model, random_field(b.grid, 5), b.grid, b.rho, b.theta, rule);
  EXPECT_EQ(tr.stop, StopReason::target_reached);
  for (std::size_t k = 1; k < tr.records.size(); ++k) EXPECT_GE(tr.records[k].phi, tr.records[k - 1].phi - 1e-12);
  EXPECT_GE(tr.back().phi, 1.0 - 1e-6);
  bool branch = false;
  EXPECT_NEAR(unitary_pathlength(tr, &branch), tr.back().pathlength_cum, 1e-12);
}

TEST(GradientFlow, EulerConvergesToRk4) {
  Benchmark b;
  const RVec f0 = random_field(b.grid, 7);
  auto flow = [&](SIntegrator integ, double ds, long steps) {
    StopRule rule;
    rule.ds = ds;
    rule.max_records = steps + 1;
    rule.adaptive = false;
    rule.integrator = integ;
    return run_gradient_flow(b.model, f0, b.grid, b.rho, b.theta, rule);
  };
  const auto r = flow(SIntegrator::rk4, 0.002, 10);
  const auto coarse = flow(SIntegrator::euler, 0.002, 10);
  const auto fine = flow(SIntegrator::euler, 0.0002, 100);
  ASSERT_NEAR(r.back().s, fine.back().s, 1e-12);
  const double e_coarse = std::abs(coarse.back().phi - r.back().phi);
  const double e_fine = std::abs(fine.back().phi - r.back().phi);
  EXPECT_LT(e_fine, 0.2 * e_coarse);
  EXPECT_LT(e_fine, 1e-3);
  EXPECT_GT(r.back().phi, r.records.front().phi);
}

TEST(GradientFlow, CriticalStartStopsImmediately) {
  Benchmark b;
  // Zero field: U(T) is diagonal, so [rho, U^dag Theta U] = 0.
  const auto tr = run_gradient_flow(b.model, RVec::Zero(b.grid.q), b.grid, b.rho, b.theta);
  EXPECT_EQ(tr.records.size(), 1u);
  EXPECT_TRUE(tr.stop == StopReason::critical || tr.stop == StopReason::target_reached);
}

TEST(GradientFlow, PathlengthRefinementStable) {
  Benchmark b;
  const RVec f0 = random_field(b.grid, 8);
  StopRule coarse;
  coarse.ds = 0.01;
  coarse.max_records = 1000;
  coarse.s_max = 5.0;
  StopRule fine = coarse;
  fine.ds = 0.005;
  const double lc = run_gradient_flow(b.model, f0, b.grid, b.rho, b.theta, coarse).back().pathlength_cum;
  const double lf = run_gradient_flow(b.model, f0, b.grid, b.rho, b.theta, fine).back().pathlength_cum;
  EXPECT_LE(lf, lc * 1.01);
}
