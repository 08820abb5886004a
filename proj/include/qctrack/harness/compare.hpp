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

// Side-by-side table of run reports with mean / variance rows.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qctrack/harness/run.hpp"

namespace qctrack::harness {

struct CompareEntry {
  std::string path;
  std::string status;  // ok | incompatible_system | error: ...
  std::optional<RunReport> report;
};

struct Comparison {
  std::vector<CompareEntry> entries;
  std::vector<std::string> errors;  // one line per unreadable path

  std::string csv() const;
};

inline std::vector<CompareEntry> load_reports(const std::vector<std::string>& paths, std::vector<std::string>& errors) {
  std::vector<CompareEntry> out;
  std::string reference;
  for (const auto& p : paths) {
    CompareEntry e;
    e.path = p;
    std::filesystem::path file = p;
    if (std::filesystem::is_directory(file)) file /= "report.json";
    std::ifstream in(file);
    if (!in) {
      e.status = "error: cannot open " + file.string();
      errors.push_back(p + ": cannot open " + file.string());
      out.push_back(std::move(e));
      continue;
    }
    try {
      e.report = RunReport::from_json(nlohmann::json::parse(in));
    } catch (const std::exception& ex) {
      e.status = std::string("error: malformed report");
      errors.push_back(p + ": malformed report (" + ex.what() + ")");
      out.push_back(std::move(e));
      continue;
    }
    if (reference.empty()) reference = e.report->fingerprint;
    e.status = e.report->fingerprint == reference ? "ok" : "incompatible_system";
    out.push_back(std::move(e));
  }
  return out;
}

inline Comparison compare(const std::vector<std::string>& paths) {
  if (paths.size() < 2) throw InvalidInput("compare needs at least two reports");
  Comparison c;
  c.entries = load_reports(paths, c.errors);
  return c;
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string csv_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline std::string Comparison::csv() const {
  using detail::csv_number;
  using detail::csv_quote;
  std::ostringstream out;
  out << "row,path,status,algorithm,seed,fingerprint,iterations,pathlength,geodesic_distance,final_phi,phi_max,"
         "final_track_err,final_fluence,wall_time\n";
  // Numeric columns that get summary rows.
  std::vector<std::vector<double>> cols(7);
  for (const auto& e : entries) {
    out << "run," << csv_quote(e.path) << ',' << csv_quote(e.status);
    if (!e.report) {
      out << ",,,,,,,,,,,\n";
      continue;
    }
    const RunReport& r = *e.report;
    out << ',' << r.algorithm << ',' << r.seed << ',' << r.fingerprint << ',' << r.iterations << ','
        << csv_number(r.pathlength) << ',' << csv_number(r.geodesic_distance) << ',' << csv_number(r.final_phi) << ','
        << csv_number(r.phi_max) << ',' << csv_number(r.final_track_err) << ',' << csv_number(r.final_fluence) << ','
        << csv_number(r.wall_time) << '\n';
    if (e.status == "ok") {
      const double vals[] = {static_cast<double>(r.iterations), r.pathlength, r.final_phi, r.final_track_err,
                             r.final_fluence, r.wall_time, r.geodesic_distance};
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (!std::isnan(vals[k])) cols[k].push_back(vals[k]);
      }
    }
  }
  auto stat = [&](const std::vector<double>& v, bool variance) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (!variance) return mean;
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size() - 1);
  };
  for (bool variance : {false, true}) {
    out << (variance ? "variance" : "mean") << ",,,,,,";
    out << csv_number(stat(cols[0], variance)) << ',' << csv_number(stat(cols[1], variance)) << ','
        << csv_number(stat(cols[6], variance)) << ',' << csv_number(stat(cols[2], variance)) << ",,"
        << csv_number(stat(cols[3], variance)) << ',' << csv_number(stat(cols[4], variance)) << ','
        << csv_number(stat(cols[5], variance)) << '\n';
  }
  return out.str();
}

}  // namespace qctrack::harness
