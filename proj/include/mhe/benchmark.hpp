// Copyright 2026 The mhe-ipg Authors
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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mhe/pipeline.hpp"

namespace mhe {

/// Monte-Carlo study of the unicycle tracking a spiral. Defaults reproduce the
/// reference setup: dt = 0.2, T = 200, u_i = (3, i/200), x0 = 0, 30 runs.
struct RunConfig {
  double dt = 0.2;
  int T = 200;
  Vector x0 = Vector::Zero(3);
  double speed = 3.0;
  double turn_divisor = 200.0;

  Vector process_std = Vector::Constant(3, 0.1);
  Vector meas_std = Vector::Constant(2, 0.4);
  double clip = 1.5;

  std::vector<int> horizons{5, 10, 15, 20};
  std::vector<Method> methods{Method::mhe_ipg, Method::mhe_newton, Method::mhe_gd, Method::ekf,
                              Method::observations};
  IpgConfig ipg;
  NewtonConfig newton;
  GdConfig gd;
  EkfOptions ekf;

  int runs = 30;
  std::uint64_t base_seed = 1000;
  std::string out_dir = "out";

  // Estimator weights; empty means the simulation noise variances.
  Vector q_diag;
  Vector r_diag;
  double pi0 = 1.0;  // Pi0 = pi0 * I, also the EKF's P0
  Vector xhat0;      // empty means zero

  bool warm_start_preconditioner = true;
  double warm_start_gate = 0.2;

  bool exclude_warmup = true;
  bool wrap_angles = true;
  bool position_only = false;

  // Workers for the run loop; 0 uses the OpenMP default.
  int threads = 0;
  Execution exec = Execution::parallel;
  // Solver time per run is the median over this many repetitions.
  int timing_repeats = 1;

  void validate() const;  // throws ConfigError naming the field

  Weights weights() const;
  NoiseSpec noise(std::uint64_t seed) const;
  PipelineOptions pipeline_options(int horizon) const;
  ErrorOptions error_options(int first_instant) const;
  std::vector<Vector> inputs() const;
};

/// Reads a JSON object or "key = value" lines ('#' starts a comment). Nested
/// JSON objects map to dotted keys, so {"ipg": {"beta": 0.5}} and
/// "ipg.beta = 0.5" are the same setting. Required: dt, T, horizons, runs and
/// one of process_std / process_variance and meas_std / meas_variance.
/// Errors carry "path:line: " prefixes where a line is known.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
nlohmann::json run_config_to_json(const RunConfig& cfg);

struct RunRecord {
  std::uint64_t seed = 0;
  Method method = Method::mhe_ipg;
  int horizon = 0;  // 1 for the EKF, 0 for raw observations
  double rmse = 0.0;
  double time_s = 0.0;
  long iters = 0;
  bool converged = true;
  int solves = 0;
  int spd_violations = 0;
  int preconditioner_reuses = 0;
};

struct BenchRow {
  Method method = Method::mhe_ipg;
  int horizon = 0;
  double mean_rmse = 0.0;
  double var_rmse = 0.0;
  double mean_time_s = 0.0;
  double mean_iters = 0.0;
  double mean_time_per_solve_s = 0.0;
  int nonconverged_runs = 0;
  int spd_violations = 0;
  int preconditioner_reuses = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<RunRecord> records;  // ordered by (method, horizon, run)

  const BenchRow* find(Method m, int horizon) const;
};

/// The (method, horizon) pairs evaluated: every MHE method at every horizon,
/// then the EKF (horizon 1) and raw observations (horizon 0).
std::vector<std::pair<Method, int>> bench_cases(const RunConfig& cfg);

/// Runs one seed of every case. Timing is measured inside the call.
std::vector<RunRecord> bench_run(const RunConfig& cfg, int run_index);

/// All runs, in parallel over runs when cfg.exec is parallel. Records are
/// identical to the serial order apart from timing fields.
BenchReport bench(const RunConfig& cfg);

/// errors.csv, cost.csv, runs.json and summary.json under dir.
void write_bench_outputs(const BenchReport& report, const RunConfig& cfg,
                         const std::filesystem::path& dir);

}  // namespace mhe
