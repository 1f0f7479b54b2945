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

#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "mhe/ekf.hpp"
#include "mhe/problem.hpp"
#include "mhe/solver.hpp"

namespace mhe {

enum class Method { mhe_ipg, mhe_newton, mhe_gd, ekf, observations };

std::string_view to_string(Method m);
// Throws ConfigError on unknown names.
Method method_from_string(std::string_view name);
bool is_mhe(Method m);

struct PipelineOptions {
  int horizon = 5;
  Weights weights;
  Matrix Pi0;  // empty means identity
  Vector xhat0;
  IpgConfig ipg;
  NewtonConfig newton;
  GdConfig gd;
  // Start each instant's IPG preconditioner from the previous instant's K
  // when ||(H(xi0) + beta I) K_prev - I||_F <= warm_start_gate; otherwise
  // fall back to I / (lambda_max + beta).
  bool warm_start_preconditioner = true;
  double warm_start_gate = 0.2;
};

struct InstantRecord {
  int t = 0;
  int iterations = 0;
  SolveStatus status = SolveStatus::converged;
  double seconds = 0.0;
};

struct PipelineStats {
  long total_iterations = 0;
  int solves = 0;
  int nonconverged = 0;
  // Solver wall time only; simulation, problem setup and I/O are excluded.
  double solver_seconds = 0.0;
  // Arrival weights (MHE) or covariances (EKF) that were not symmetric
  // positive definite.
  int spd_violations = 0;
  // IPG instants that reused the previous preconditioner.
  int preconditioner_reuses = 0;
  std::vector<InstantRecord> instants;
};

struct PipelineResult {
  std::vector<Vector> estimates;  // one per instant 0..T
  PipelineStats stats;
};

/// Called after each window solve with the problem, the starting point and
/// the solution.
using InstantObserver = std::function<void(const MheProblem&, const PackedState& start,
                                           const PackedState& solution, const SolveReport&)>;

/// Runs the moving-horizon loop for t = N .. T. The first window starts from
/// xhat0 propagated through the dynamics; later windows are warm-started by
/// shifting the previous solution. The estimate recorded for instant t is the
/// newest state of its window; instants before N keep the propagated guess.
PipelineResult mhe_pipeline(const Trajectory& traj, std::shared_ptr<const SystemModel> model,
                            Method solver, const PipelineOptions& opts,
                            const InstantObserver& observer = {});

/// Filter over the whole trajectory, starting at (xhat0, P0). Instant 0 keeps
/// the prior; instant t >= 1 uses y_t when it exists, prediction otherwise.
PipelineResult ekf_pipeline(const Trajectory& traj, const SystemModel& model, const Matrix& Q,
                            const Matrix& R, const Vector& xhat0, const Matrix& P0,
                            const EkfOptions& opts = {});

struct ErrorOptions {
  // Components compared; empty means all.
  std::vector<int> components;
  // Components wrapped to (-pi, pi] before norming.
  std::vector<int> angle_components;
  bool wrap_angles = true;
  int first_instant = 0;
};

double wrap_angle(double a);

/// Per-instant error vectors estimate - truth over [first_instant, min size).
std::vector<Vector> estimation_errors(std::span<const Vector> estimates,
                                      std::span<const Vector> truth, const ErrorOptions& opts);

/// Raw-observation baseline: y_t - h(x_t) for t in [first_instant, T).
std::vector<Vector> observation_errors(const Trajectory& traj, const SystemModel& model,
                                       int first_instant);

struct RmseSummary {
  double mean = 0.0;
  double variance = 0.0;  // sample variance across runs, 0 for a single run
  std::vector<double> per_run;
};

/// Root-mean-square error norm of one run: sqrt(mean_t ||e_t||^2).
double run_rmse(std::span<const Vector> errors);

/// Mean and sample variance of run_rmse over runs. Throws
/// std::invalid_argument on empty input.
RmseSummary rmse(std::span<const std::vector<Vector>> per_run_errors);

}  // namespace mhe
