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

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qctrack/linalg.hpp"

namespace qctrack {

enum class StopReason {
  critical,       // started (or landed) on a point with vanishing gradient
  target_reached, // objective within tolerance of its kinematic maximum
  track_complete, // a tracking run consumed its whole schedule
  s_max,          // algorithmic time budget exhausted
  stalled,        // adaptive step underflow
  singular,       // strict-mode abort on an ill-conditioned correlation matrix
};

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::critical: return "critical";
    case StopReason::target_reached: return "target_reached";
    case StopReason::track_complete: return "track_complete";
    case StopReason::s_max: return "s_max";
    case StopReason::stalled: return "stalled";
    case StopReason::singular: return "singular";
  }
  return "unknown";
}

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

/// Diagnostics of one algorithmic step. NaN marks a field that does not apply.
struct TraceRecord {
  double s = 0.0;
  double phi = 0.0;
  double grad_norm = 0.0;
  double fluence = 0.0;
  double condition = kNotApplicable;
  double track_err = kNotApplicable;
  double pathlength_cum = 0.0;
  Mat u_final;
};

struct OptimizationTrace {
  std::vector<TraceRecord> records;
  RVec final_field;
  StopReason stop = StopReason::s_max;
  /// Warning text -> number of occurrences.
  std::map<std::string, int> warnings;

  bool empty() const { return records.empty(); }
  const TraceRecord& back() const { return records.back(); }
  void warn(const std::string& text) { ++warnings[text]; }

  /// Append a record and accumulate the unitary path length.
  void push(TraceRecord rec) {
    if (!records.empty()) {
      const auto& prev = records.back();
      if (!(rec.s > prev.s)) throw InvalidInput("OptimizationTrace: s must be strictly increasing");
      const auto seg = log_unitary(prev.u_final.adjoint() * rec.u_final, 1e-6);
      if (seg.branch_cut_warning) warn("branch cut in path length segment");
      rec.pathlength_cum = prev.pathlength_cum + seg.generator.norm();
    } else {
      rec.pathlength_cum = 0.0;
    }
    records.push_back(std::move(rec));
  }
};

/// Sum of geodesic segment lengths ||log(U_k^dag U_{k+1})||_F along the trace.
inline double unitary_pathlength(const OptimizationTrace& trace, bool* branch_cut = nullptr) {
  if (trace.records.size() < 2) throw InvalidInput("unitary_pathlength needs at least two records");
  double total = 0.0;
  bool cut = false;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto seg =
        log_unitary(trace.records[k].u_final.adjoint() * trace.records[k + 1].u_final, 1e-6);
    cut = cut || seg.branch_cut_warning;
    total += seg.generator.norm();
  }
  if (branch_cut) *branch_cut = cut;
  return total;
}

}  // namespace qctrack
