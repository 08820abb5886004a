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
#include "qctrack/estimation.hpp"

using namespace qctrack;

namespace {

Mat test_state() {
  Mat r(2, 2);
  r << 0.7, cplx(0.2, -0.1), cplx(0.2, 0.1), 0.3;
  return r;
}

}  // namespace

TEST(Povm, PauliAndDefaultAreValid) {
  EXPECT_NO_THROW(pauli_povm().validate());
  EXPECT_EQ(pauli_povm().groups.size(), 3u);
  EXPECT_NO_THROW(default_povm(3).validate());
  PovmSet bad;
  bad.groups = {{Mat::Identity(2, 2), Mat::Identity(2, 2)}};
  EXPECT_THROW(bad.validate(), InvalidPovm);
  PovmSet neg;
  neg.groups = {{2.0 * Mat::Identity(2, 2), -Mat::Identity(2, 2)}};
  EXPECT_THROW(neg.validate(), InvalidPovm);
}

TEST(Parameterization, RoundTripAndGradient) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (Eigen::Index n : {2, 3}) {
    RVec t(n * n);
    for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = g(rng);
    const Mat T = t_to_lower(t, n);
    EXPECT_LT((lower_to_t(T) - t).norm(), 1e-15);
    EXPECT_EQ(T(0, 1), cplx(0.0, 0.0));
    const Mat f = oracle::random_hermitian(n, rng);
    auto p = [&](const RVec& x) {
      const Mat L = t_to_lower(x, n);
      return (L.adjoint() * L * f).trace().real();
    };
    EXPECT_LT((probability_gradient(T, f) - oracle::central_gradient(p, t, 1e-6)).norm(), 1e-7);
    const Mat r = rho_from_t(t, n);
    EXPECT_NEAR(r.trace().real(), 1.0, 1e-14);
    EXPECT_GE(hermitian_eigen(r).values.minCoeff(), -1e-14);
  }
}

TEST(Simulation, DeterministicAndConsistent) {
  const auto povm = pauli_povm();
  const auto a = simulate_measurements(test_state(), povm, 1000, 9);
  const auto b = simulate_measurements(test_state(), povm, 1000, 9);
  EXPECT_EQ(a.counts, b.counts);
  for (const auto& g : a.counts) EXPECT_DOUBLE_EQ(g[0] + g[1], 1000.0);
  EXPECT_THROW(simulate_measurements(test_state(), povm, 0, 1), InvalidInput);
}

TEST(Mle, ExactFrequenciesRecoverTheState) {
  const auto povm = pauli_povm();
  const auto est = mle_reconstruct(expected_record(test_state(), povm, 1e4), povm);
  EXPECT_LT(trace_distance(est.rho_hat, test_state()), 1e-5);
  EXPECT_NEAR(est.t_params.norm(), 1.0, 1e-12);
}

TEST(Mle, PureStateStaysPhysical) {
  const auto povm = pauli_povm();
  Mat pure = Mat::Zero(2, 2);
  pure(0, 0) = 1.0;
  const auto est = mle_reconstruct(simulate_measurements(pure, povm, 5000, 2), povm);
  EXPECT_GE(hermitian_eigen(est.rho_hat).values.minCoeff(), -1e-12);
  EXPECT_LT(trace_distance(est.rho_hat, pure), 0.05);
}

TEST(Mle, LikelihoodMonotoneAndFisherConstraint) {
  const auto povm = pauli_povm();
  const auto rec = simulate_measurements(test_state(), povm, 10000, 4);
  auto est = mle_reconstruct(rec, povm);
  for (std::size_t k = 1; k < est.history.size(); ++k) EXPECT_GE(est.history[k], est.history[k - 1]);
  const RMat v = fisher_covariance(est, rec, povm);
  EXPECT_LT((v * (2.0 * est.t_params)).norm(), 1e-8);
  EXPECT_LT((v - v.transpose()).norm(), 1e-12);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<RMat>(v).eigenvalues().minCoeff(), -1e-12);
}

TEST(Mle, ThreeLevelDefaultPovm) {
  std::mt19937_64 rng(5);
  const Mat rho = oracle::random_density(3, rng);
  const auto povm = default_povm(3);
  const auto est = mle_reconstruct(expected_record(rho, povm, 1e5), povm);
  EXPECT_LT(trace_distance(est.rho_hat, rho), 1e-4);
}

TEST(Mle, RejectsMalformedRecords) {
  const auto povm = pauli_povm();
  MeasurementRecord rec = expected_record(test_state(), povm, 100);
  rec.counts[1][0] = -1.0;
  EXPECT_THROW(mle_reconstruct(rec, povm), InvalidRecord);
  rec.counts.pop_back();
  EXPECT_THROW(mle_reconstruct(rec, povm), InvalidRecord);
}

TEST(TraceDistance, Basics) {
  Mat a = Mat::Zero(2, 2), b = Mat::Zero(2, 2);
  a(0, 0) = 1.0;
  b(1, 1) = 1.0;
  EXPECT_NEAR(trace_distance(a, b), 1.0, 1e-15);
  EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-15);
}
