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

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qctrack/harness/compare.hpp"
#include "qctrack/harness/run.hpp"

using namespace qctrack;
namespace h = qctrack::harness;
namespace fs = std::filesystem;

namespace {

h::json small_config(const std::string& algorithm) {
  h::json j = h::json::parse(R"({
    "system": {"N": 2, "H0": [[1, 0], [0, -1]], "mu": [[0, 1], [1, 0]]},
    "rho0": [[1, 0], [0, 0]],
    "theta": [[1, 0], [0, -1]],
    "grid": {"T": 20, "q": 401, "p": 41, "ds": 0.005},
    "seed": 3
  })");
  j["algorithm"] = algorithm;
  return j;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qctrack_harness_test_" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

void write_json(const fs::path& p, const h::json& j) { std::ofstream(p) << j.dump(2); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const char* exe = std::getenv("QCTRACK_CLI");
  if (!exe) return -1;
  const int status = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string field_of(const h::json& j) {
  try {
    h::parse_config(j);
  } catch (const h::ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsAndEchoRoundTrip) {
  const auto c = h::parse_config(small_config("grad"));
  EXPECT_EQ(c.N, 2);
  EXPECT_EQ(c.options.correction, "combined");
  EXPECT_EQ(c.initial_field.kind, "random");
  EXPECT_DOUBLE_EQ(c.s_max(), 40 * 0.005);
  const auto echoed = h::echo(c);
  EXPECT_EQ(h::echo(h::parse_config(echoed)), echoed);
}

TEST(Config, ErrorsNameTheField) {
  auto j = small_config("grad");
  j.erase("theta");
  EXPECT_EQ(field_of(j), "theta");
  j = small_config("grad");
  j["grid"]["q"] = 1;
  EXPECT_EQ(field_of(j), "grid.q");
  j = small_config("grad");
  j["system"]["H0"] = h::json::parse("[[1, 2], [0, -1]]");
  EXPECT_EQ(field_of(j), "system.H0");
  j = small_config("grad");
  j["options"] = {{"bogus", 1}};
  EXPECT_EQ(field_of(j), "options.bogus");
  j = small_config("grad");
  j["rho0"] = h::json::parse("[[1, 0], [0, 1]]");
  EXPECT_EQ(field_of(j), "rho0");
  j = small_config("teleport");
  EXPECT_EQ(field_of(j), "algorithm");
  j = small_config("grad");
  j["system"]["mu"] = h::json::parse("[[0, 1, 0], [1, 0, 0], [0, 0, 0]]");
  EXPECT_EQ(field_of(j), "system.mu");
}

TEST(Config, ComplexEntries) {
  auto j = small_config("grad");
  j["theta"] = h::json::parse("[[0, [0, -1]], [[0, 1], 0]]");
  const auto c = h::parse_config(j);
  EXPECT_LT((c.theta - pauli_y()).norm(), 1e-15);
}

TEST(Serialization, NumberFormat) {
  EXPECT_EQ(h::format_number(std::numeric_limits<double>::quiet_NaN()), "null");
  EXPECT_EQ(h::format_number(kInf), "\"inf\"");
  EXPECT_EQ(h::format_number(0.1), "0.10000000000000001");
  EXPECT_DOUBLE_EQ(std::stod(h::format_number(1.0 / 3.0)), 1.0 / 3.0);
  TraceRecord r;
  r.s = 0.5;
  r.condition = kInf;
  const auto parsed = h::json::parse(h::trace_line(r));
  EXPECT_TRUE(parsed["track_err"].is_null());
  EXPECT_EQ(parsed["condition"], "inf");
  EXPECT_EQ(parsed.size(), 7u);
}

TEST(Execute, ReportInvariants) {
  for (const char* alg : {"grad", "utrack", "vtrack", "strack"}) {
    auto j = small_config(alg);
    if (std::string(alg) == "strack") j["options"] = {{"beta", 1.0}, {"substeps", 4}};
    const auto out = h::execute(h::parse_config(j));
    const auto& r = out.report;
    EXPECT_EQ(r.exit_code, 0) << alg;
    EXPECT_GE(r.pathlength, r.endpoint_distance - 1e-9) << alg;
    if (std::string(alg) == "utrack") EXPECT_GE(r.pathlength, r.geodesic_distance - 1e-9);
    const auto back = h::RunReport::from_json(r.to_json());
    EXPECT_EQ(back.to_json(), r.to_json());
  }
}

TEST(Cli, RunWritesArtifactsDeterministically) {
  const fs::path dir = scratch("run");
  write_json(dir / "utrack.json", small_config("utrack"));
  ASSERT_EQ(cli("run --config " + (dir / "utrack.json").string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(cli("run --config " + (dir / "utrack.json").string() + " --out " + (dir / "b").string()), 0);
  for (const char* f : {"trace.jsonl", "field_final.csv", "report.json"}) EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  EXPECT_EQ(slurp(dir / "a" / "trace.jsonl"), slurp(dir / "b" / "trace.jsonl"));
  EXPECT_EQ(slurp(dir / "a" / "field_final.csv"), slurp(dir / "b" / "field_final.csv"));
  EXPECT_EQ(slurp(dir / "a" / "field_final.csv").substr(0, 10), "t,epsilon\n");
  // A different seed gives a different trace.
  ASSERT_EQ(cli("run --config " + (dir / "utrack.json").string() + " --seed 99 --out " + (dir / "c").string()), 0);
  EXPECT_NE(slurp(dir / "a" / "trace.jsonl"), slurp(dir / "c" / "trace.jsonl"));
}

TEST(Cli, ParallelJobsMatchSerialRuns) {
  const fs::path dir = scratch("jobs");
  write_json(dir / "g.json", small_config("grad"));
  write_json(dir / "u.json", small_config("utrack"));
  const std::string cfgs = " --config " + (dir / "g.json").string() + " --config " + (dir / "u.json").string();
  ASSERT_EQ(cli("run" + cfgs + " --jobs 2 --out " + (dir / "par").string()), 0);
  ASSERT_EQ(cli("run" + cfgs + " --jobs 1 --out " + (dir / "ser").string()), 0);
  for (const char* name : {"g", "u"}) {
    EXPECT_EQ(slurp(dir / "par" / name / "trace.jsonl"), slurp(dir / "ser" / name / "trace.jsonl"));
  }
}

TEST(Cli, SingularStrictRunExitsWithThree) {
  const fs::path dir = scratch("singular");
  auto j = small_config("utrack");
  j["system"]["mu"] = h::json::parse("[[1, 0], [0, -1]]");
  j["theta"] = h::json::parse("[[0, 1], [1, 0]]");
  write_json(dir / "s.json", j);
  EXPECT_EQ(cli("run --strict --config " + (dir / "s.json").string() + " --out " + (dir / "o").string()), 3);
  const auto rep = h::json::parse(slurp(dir / "o" / "report.json"));
  EXPECT_EQ(rep["stop_reason"], "singular");
}

TEST(Cli, ValidateAndBadInput) {
  const fs::path dir = scratch("validate");
  write_json(dir / "ok.json", small_config("grad"));
  auto bad = small_config("grad");
  bad.erase("rho0");
  write_json(dir / "bad.json", bad);
  EXPECT_EQ(cli("validate --config " + (dir / "ok.json").string()), 0);
  EXPECT_EQ(cli("validate --config " + (dir / "bad.json").string()), 1);
  EXPECT_EQ(cli("run --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()), 1);
  EXPECT_NE(cli("frobnicate"), 0);
}

TEST(Cli, CompareTabulatesAndFlags) {
  const fs::path dir = scratch("compare");
  write_json(dir / "g.json", small_config("grad"));
  write_json(dir / "u.json", small_config("utrack"));
  auto other = small_config("grad");
  other["grid"]["T"] = 15;
  write_json(dir / "o.json", other);
  for (const char* n : {"g", "u", "o"}) {
    ASSERT_EQ(cli(std::string("run --config ") + (dir / (std::string(n) + ".json")).string() + " --out " + (dir / n).string()), 0);
  }
  const std::string csv_path = (dir / "table.csv").string();
  ASSERT_EQ(cli("compare " + (dir / "g").string() + " " + (dir / "u").string() + " " + (dir / "o").string() + " --out " + csv_path), 0);
  const std::string csv = slurp(csv_path);
  EXPECT_NE(csv.find("incompatible_system"), std::string::npos);
  EXPECT_NE(csv.find("\nmean,"), std::string::npos);
  EXPECT_NE(csv.find("\nvariance,"), std::string::npos);
  EXPECT_EQ(cli("compare " + (dir / "g").string() + " " + (dir / "missing").string()), 1);
  EXPECT_EQ(cli("compare " + (dir / "g").string()), 1);
}
