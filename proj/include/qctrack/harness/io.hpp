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

// Trace and field writers. Numbers use 17 significant digits; NaN (not applicable) is
// written as null and infinities as the strings "inf" / "-inf".

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "qctrack/dynamics.hpp"
#include "qctrack/trace.hpp"

namespace qctrack::harness {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Same convention for values placed in a nlohmann::json document.
inline nlohmann::json json_number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double number_from_json(const nlohmann::json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw InvalidInput("unexpected string in numeric field: " + s);
  }
  return v.get<double>();
}

inline std::string trace_line(const TraceRecord& r) {
  std::string out = "{\"s\":" + format_number(r.s);
  out += ",\"phi\":" + format_number(r.phi);
  out += ",\"grad_norm\":" + format_number(r.grad_norm);
  out += ",\"fluence\":" + format_number(r.fluence);
  out += ",\"condition\":" + format_number(r.condition);
  out += ",\"track_err\":" + format_number(r.track_err);
  out += ",\"pathlength_cum\":" + format_number(r.pathlength_cum);
  out += "}";
  return out;
}

inline void write_trace_jsonl(const OptimizationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  for (const auto& r : trace.records) out << trace_line(r) << '\n';
}

inline void write_field_csv(const RVec& field, const TimeGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "t,epsilon\n";
  for (Eigen::Index j = 0; j < field.size(); ++j) {
    out << format_number(grid.time(j)) << ',' << format_number(field(j)) << '\n';
  }
}

}  // namespace qctrack::harness
