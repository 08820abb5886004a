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


// qctrack: run, compare and validate control-landscape experiments.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qctrack/harness/compare.hpp"
#include "qctrack/harness/run.hpp"

namespace fs = std::filesystem;
namespace h = qctrack::harness;

namespace {

struct Job {
  std::string config_path;
  h::RunConfig config;
  fs::path out_dir;
  int exit_code = h::kExitError;
  std::string summary;
};

// One directory per config; with several configs under --out each gets its own subdirectory.
std::vector<fs::path> output_dirs(const std::vector<h::RunConfig>& configs, const std::vector<std::string>& paths,
                                  const std::optional<std::string>& out) {
  std::vector<fs::path> dirs;
  std::set<std::string> used;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    fs::path d;
    if (out && configs.size() == 1) {
      d = *out;
    } else if (out) {
      std::string stem = fs::path(paths[i]).stem().string();
      std::string name = stem;
      for (int k = 2; used.count(name); ++k) name = stem + "_" + std::to_string(k);
      used.insert(name);
      d = fs::path(*out) / name;
    } else {
      d = configs[i].output;
    }
    dirs.push_back(d);
  }
  return dirs;
}

int cmd_run(const std::vector<std::string>& paths, const std::optional<std::string>& out,
            const std::optional<std::uint64_t>& seed, bool strict, int jobs) {
  std::vector<h::RunConfig> configs;
  for (const auto& p : paths) {
    try {
      configs.push_back(h::load_config(p));
    } catch (const std::exception& e) {
      std::cerr << p << ": " << e.what() << '\n';
      return h::kExitError;
    }
    if (seed) configs.back().seed = *seed;
    if (strict) configs.back().options.strict = true;
  }
  const auto dirs = output_dirs(configs, paths, out);
  std::vector<Job> work(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) work[i] = {paths[i], configs[i], dirs[i], h::kExitError, {}};

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      Job& job = work[i];
      try {
        const h::RunOutcome res = h::execute(job.config);
        h::write_artifacts(res, job.out_dir);
        const auto& r = res.report;
        job.exit_code = r.exit_code;
        job.summary = job.config_path + ": " + r.algorithm + " stop=" + r.stop_reason +
                      " phi=" + h::format_number(r.final_phi) + " iterations=" + std::to_string(r.iterations) +
                      " out=" + job.out_dir.string();
      } catch (const std::exception& e) {
        job.exit_code = h::kExitError;
        job.summary = job.config_path + ": error: " + e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = h::kExitOk;
  for (const auto& job : work) {
    (job.exit_code == h::kExitError ? std::cerr : std::cout) << job.summary << '\n';
    if (job.exit_code == h::kExitError) code = h::kExitError;
    else if (code != h::kExitError) code = std::max(code, job.exit_code);
  }
  return code;
}

int cmd_validate(const std::vector<std::string>& paths) {
  int code = h::kExitOk;
  for (const auto& p : paths) {
    try {
      const auto c = h::load_config(p);
      std::cout << h::echo(c).dump(2) << '\n';
    } catch (const std::exception& e) {
      std::cerr << p << ": " << e.what() << '\n';
      code = h::kExitError;
    }
  }
  return code;
}

int cmd_compare(const std::vector<std::string>& paths, const std::optional<std::string>& out) {
  h::Comparison cmp;
  try {
    cmp = h::compare(paths);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return h::kExitError;
  }
  const std::string table = cmp.csv();
  if (out) {
    std::ofstream f(*out, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write " << *out << '\n';
      return h::kExitError;
    }
    f << table;
  } else {
    std::cout << table;
  }
  for (const auto& e : cmp.errors) std::cerr << "error: " << e << '\n';
  return cmp.errors.empty() ? h::kExitOk : h::kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum control landscape experiments"};
  app.require_subcommand(1);

  std::vector<std::string> run_configs;
  std::optional<std::string> run_out;
  std::optional<std::uint64_t> run_seed;
  bool run_strict = false;
  int run_jobs = 1;
  auto* run = app.add_subcommand("run", "Run one or more experiment configs");
  run->add_option("--config", run_configs, "Experiment config (JSON); repeatable")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (one subdirectory per config when several are given)");
  run->add_option("--seed", run_seed, "Override the config seed");
  run->add_flag("--strict", run_strict, "Abort on ill-conditioned G or Gamma");
  run->add_option("--jobs", run_jobs, "Configs run in parallel")->check(CLI::PositiveNumber);

  std::vector<std::string> cmp_paths;
  std::optional<std::string> cmp_out;
  auto* cmp = app.add_subcommand("compare", "Tabulate run reports");
  cmp->add_option("reports", cmp_paths, "report.json files or run directories")->required();
  cmp->add_option("--out", cmp_out, "CSV output file (default stdout)");

  std::vector<std::string> val_configs;
  auto* val = app.add_subcommand("validate", "Check configs and print them with defaults filled in");
  val->add_option("--config", val_configs, "Experiment config (JSON); repeatable")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : h::kExitError;
  }
  if (*run) return cmd_run(run_configs, run_out, run_seed, run_strict, run_jobs);
  if (*cmp) return cmd_compare(cmp_paths, cmp_out);
  return cmd_validate(val_configs);
}
