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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mhe/objective.hpp"
#include "mhe/problem.hpp"

namespace mhe {

enum class StepSizeMode { theoretical, practical };

struct IpgConfig {
  double beta = 0.5;
  double delta = 1.6;
  double eps = 1e-6;
  int max_iter = 20000;
  StepSizeMode alpha_mode = StepSizeMode::practical;
  double mu = 1.05;          // rate target, theoretical mode
  double lipschitz_l = 1.0;  // gradient Lipschitz estimate, theoretical mode
  double alpha_safety = 0.9;
  // Consecutive objective increases before delta is halved (once).
  int divergence_window = 20;
  bool record_trace = false;
  Execution exec = Execution::serial;

  void validate() const;
};

enum class SolveStatus { converged, max_iterations, diverged, line_search_failed };
std::string_view to_string(SolveStatus s);

struct IterationRecord {
  int iter = 0;
  double step_norm = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
  // ||I - alpha (H + beta I)||; NaN for solvers without a preconditioner.
  double rho = 0.0;
  double objective = 0.0;
  // ||xi_k - xi*|| and ||K_k - K*||, present only for instrumented runs.
  std::optional<double> error_norm;
  std::optional<double> precond_error;
};

struct SolveReport {
  int iterations = 0;
  double final_step_norm = 0.0;
  double final_grad_norm = 0.0;
  double objective_value = 0.0;
  // Last estimate of lambda_max[H]; zero for Newton.
  double lambda_max = 0.0;
  SolveStatus status = SolveStatus::max_iterations;
  bool delta_halved = false;
  std::vector<IterationRecord> trace;

  bool converged() const { return status == SolveStatus::converged; }
};

struct Preconditioner {
  Matrix K;
};

// Known optimum, used to fill the error columns of the trace.
struct Instrumentation {
  Vector xi_star;
  Matrix K_star;
};

struct IpgResult {
  Vector xi;
  Preconditioner K;
  SolveReport report;
};

/// Iteratively preconditioned gradient descent:
///   xi_{k+1} = xi_k - delta K_k g(xi_k)
///   K_{k+1}  = K_k - alpha_k ((H(xi_k) + beta I) K_k - I)
/// stopping once ||xi_{k+1} - xi_k|| < eps. H is never factored or inverted.
IpgResult ipg_solve(const Objective& f, const Vector& xi0, Preconditioner K0,
                    const IpgConfig& cfg, const Instrumentation* instrument = nullptr);

struct MheIpgResult {
  PackedState xi;
  Preconditioner K;
  SolveReport report;
};
MheIpgResult ipg_solve(const MheProblem& p, const PackedState& xi0, Preconditioner K0,
                       const IpgConfig& cfg);

/// ||(H + beta I) K - I||_F, an upper bound on the spectral residual that
/// decides whether a preconditioner carried over from another window is
/// still close enough to (H + beta I)^{-1} to be reused.
double preconditioner_residual(const BlockTridiagonal& H, double beta, const Preconditioner& K,
                               Execution exec = Execution::parallel);

/// K0 = I / (lambda_max[H] + beta).
Preconditioner initial_preconditioner(const BlockTridiagonal& H, double beta);

/// Step size for the preconditioner recursion. Practical mode:
/// alpha_safety / (lambda_max + beta). Theoretical mode: 0.99 times
///   min{ 1/(lambda_max + beta), mu^k (1 - mu rho) / (2 l (1 - (mu rho)^{k+1})) }.
/// Throws ConfigError in theoretical mode when mu * rho_bar >= 1.
double step_alpha(double lambda_max, int k, const IpgConfig& cfg, double rho_bar);
double step_alpha(const Matrix& H_k, int k, const IpgConfig& cfg, double rho_bar);

/// ||I - alpha (H + beta I)||_2 for symmetric H.
double rho_k(const Matrix& H_k, double alpha, double beta);

/// K* = (H* + beta I)^{-1}; eta = ||K*|| = 1 / (lambda_min[H*] + beta).
struct OptimalPreconditioner {
  Preconditioner K;
  double eta = 0.0;
};
OptimalPreconditioner optimal_preconditioner(const Matrix& H_star, double beta);

struct NewtonConfig {
  double eps = 1e-6;
  int max_iter = 500;
  double armijo_c = 1e-4;
  int max_halvings = 50;
  // Shift added when the Hessian is not positive definite.
  double regularization = 0.5;
};

struct SolveResult {
  Vector xi;
  SolveReport report;
};

/// Damped Newton with Armijo backtracking (step halving). Same step-norm
/// stopping rule as ipg_solve.
SolveResult newton_solve(const Objective& f, const Vector& xi0, const NewtonConfig& cfg);

struct GdConfig {
  double eps = 1e-6;
  int max_iter = 200000;
  double beta = 0.5;
  double safety = 0.9;
};

/// Plain gradient descent with step safety / (lambda_max[H] + beta).
SolveResult gd_solve(const Objective& f, const Vector& xi0, const GdConfig& cfg);

/// Checks every recorded ||K_{k+1} - K*|| against
///   rho^{k+1} ||K_0 - K*|| + gamma eta sum_{j<=k} rho^{k-j} alpha_j ||z_j||.
/// Throws std::invalid_argument when the trace lacks instrumentation.
bool lemma1_bound_check(std::span<const IterationRecord> trace, double K0_err, double gamma,
                        double eta, double rho_bar);

}  // namespace mhe
