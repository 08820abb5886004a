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

#pragma once

#include <cstdint>
#include <random>

#include "qctrack/dynamics.hpp"

namespace qctrack {

/// Seeded smooth initial guess: amplitude * sum_k c_k sin(omega_k t + phi_k) / sqrt(modes),
/// with c_k ~ N(0,1), omega_k ~ U[omega_min, omega_max], phi_k ~ U[0, 2pi).
struct RandomFieldSpec {
  double amplitude = 0.2;
  int modes = 8;
  double omega_min = 0.5;
  double omega_max = 4.0;
};

inline RVec random_field(const TimeGrid& grid, std::uint64_t seed, const RandomFieldSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> freq(spec.omega_min, spec.omega_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  RVec field = RVec::Zero(grid.q);
  const double norm = spec.amplitude / std::sqrt(static_cast<double>(std::max(spec.modes, 1)));
  for (int k = 0; k < spec.modes; ++k) {
    const double c = normal(rng);
    const double w = freq(rng);
    const double p = phase(rng);
    for (Eigen::Index j = 0; j < grid.q; ++j) field(j) += norm * c * std::sin(w * grid.time(j) + p);
  }
  return field;
}

}  // namespace qctrack
