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

#include "mhe/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace mhe {
namespace {

using Clock = std::chrono::steady_clock;

bool is_spd(const Matrix& M) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    return false;
  }
  return min_eigenvalue(M) > 0.0;
}

struct WindowSolve {
  PackedState xi;
  SolveReport report;
};

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::mhe_ipg: return "mhe-ipg";
    case Method::mhe_newton: return "mhe-newton";
    case Method::mhe_gd: return "mhe-gd";
    case Method::ekf: return "ekf";
    case Method::observations: return "observations";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::mhe_ipg, Method::mhe_newton, Method::mhe_gd, Method::ekf,
                   Method::observations}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_mhe(Method m) {
  return m == Method::mhe_ipg || m == Method::mhe_newton || m == Method::mhe_gd;
}

PipelineResult mhe_pipeline(const Trajectory& traj, std::shared_ptr<const SystemModel> model,
                            Method solver, const PipelineOptions& opts,
                            const InstantObserver& observer) {
  if (!is_mhe(solver)) throw ConfigError("mhe_pipeline: method is not an MHE solver");
  traj.validate();
  const int T = traj.steps();
  const int N = opts.horizon;
  const int n = model->state_dim();
  if (N < 1 || N > T) throw ConfigError("mhe_pipeline: need 1 <= N <= T");
  if (opts.xhat0.size() != n) throw DimensionError("mhe_pipeline: xhat0 has the wrong length");
  const Matrix Pi0 = opts.Pi0.size() == 0 ? Matrix::Identity(n, n) : opts.Pi0;

  PipelineResult result;
  result.estimates.resize(T + 1);

  std::vector<Vector> guess(N + 1);
  guess[0] = opts.xhat0;
  for (int i = 0; i < N; ++i) guess[i + 1] = model->dynamics(guess[i], traj.inputs[i]);
  for (int i = 0; i < N; ++i) result.estimates[i] = guess[i];

  PackedState xi0 = PackedState::pack(guess);
  ArrivalCost arrival{opts.xhat0, Pi0, 0.0};
  std::optional<Preconditioner> K_prev;

  for (int t = N; t <= T; ++t) {
    MheProblem problem(model, Window::from_trajectory(traj.observations, traj.inputs, t, N),
                       arrival, opts.weights);

    const auto start = Clock::now();
    WindowSolve solved{xi0, {}};
    switch (solver) {
      case Method::mhe_ipg: {
        const BlockTridiagonal H0 = hessian(problem, xi0);
        Preconditioner K0;
        if (opts.warm_start_preconditioner && K_prev &&
            preconditioner_residual(H0, opts.ipg.beta, *K_prev, opts.ipg.exec) <=
                opts.warm_start_gate) {
          K0 = std::move(*K_prev);
          result.stats.preconditioner_reuses += 1;
        } else {
          K0 = initial_preconditioner(H0, opts.ipg.beta);
        }
        MheIpgResult r = ipg_solve(problem, xi0, std::move(K0), opts.ipg);
        solved = {std::move(r.xi), std::move(r.report)};
        K_prev = std::move(r.K);
        break;
      }
      case Method::mhe_newton: {
        SolveResult r = newton_solve(MheObjective(problem), xi0.vector(), opts.newton);
        solved = {PackedState(std::move(r.xi), n), std::move(r.report)};
        break;
      }
      case Method::mhe_gd: {
        SolveResult r = gd_solve(MheObjective(problem), xi0.vector(), opts.gd);
        solved = {PackedState(std::move(r.xi), n), std::move(r.report)};
        break;
      }
      default: break;
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();

    PipelineStats& st = result.stats;
    st.solves += 1;
    st.total_iterations += solved.report.iterations;
    st.solver_seconds += seconds;
    if (!solved.report.converged()) st.nonconverged += 1;
    st.instants.push_back({t, solved.report.iterations, solved.report.status, seconds});
    if (observer) observer(problem, xi0, solved.xi, solved.report);

    result.estimates[t] = solved.xi.newest();
    if (t == T) break;

    // Arrival weight for the next window, linearized at the smoothed oldest
    // state of this one.
    const Vector x_old = solved.xi.state(0);
    const Vector& u_old = traj.inputs[t - N];
    Matrix Pi_next = riccati_update(arrival.Pi, model->dynamics_jacobian(x_old, u_old),
                                    model->observation_jacobian(x_old), opts.weights.Q(),
                                    opts.weights.R());
    if (!is_spd(Pi_next)) {
      st.spd_violations += 1;
      Pi_next = Pi0;
    }
    arrival = ArrivalCost{solved.xi.state(1), std::move(Pi_next), solved.report.objective_value};
    xi0 = warm_start(solved.xi, *model, traj.inputs[t]);
  }
  return result;
}

PipelineResult ekf_pipeline(const Trajectory& traj, const SystemModel& model, const Matrix& Q,
                            const Matrix& R, const Vector& xhat0, const Matrix& P0,
                            const EkfOptions& opts) {
  traj.validate();
  const int T = traj.steps();
  PipelineResult result;
  result.estimates.reserve(T + 1);
  EkfState s{xhat0, P0};
  result.estimates.push_back(s.x_hat);

  const auto start = Clock::now();
  for (int t = 1; t <= T; ++t) {
    if (t < T) {
      s = ekf_step(s, traj.inputs[t - 1], traj.observations[t], model, Q, R, opts);
    } else {
      s = ekf_predict(s, traj.inputs[t - 1], model, Q);
    }
    if (!is_spd(s.P)) result.stats.spd_violations += 1;
    result.estimates.push_back(s.x_hat);
  }
  result.stats.solver_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);  // [-pi, pi]
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

std::vector<Vector> estimation_errors(std::span<const Vector> estimates,
                                      std::span<const Vector> truth, const ErrorOptions& opts) {
  const std::size_t end = std::min(estimates.size(), truth.size());
  std::vector<Vector> errors;
  for (std::size_t t = static_cast<std::size_t>(std::max(0, opts.first_instant)); t < end; ++t) {
    Vector e = estimates[t] - truth[t];
    if (opts.wrap_angles) {
      for (int c : opts.angle_components) e(c) = wrap_angle(e(c));
    }
    if (!opts.components.empty()) {
      Vector sub(opts.components.size());
      for (std::size_t i = 0; i < opts.components.size(); ++i) sub(i) = e(opts.components[i]);
      e = std::move(sub);
    }
    errors.push_back(std::move(e));
  }
  return errors;
}

std::vector<Vector> observation_errors(const Trajectory& traj, const SystemModel& model,
                                       int first_instant) {
  std::vector<Vector> errors;
  for (int t = std::max(0, first_instant); t < traj.steps(); ++t) {
    errors.push_back(traj.observations[t] - model.observe(traj.states[t]));
  }
  return errors;
}

double run_rmse(std::span<const Vector> errors) {
  if (errors.empty()) throw std::invalid_argument("run_rmse: no error samples");
  double sum = 0.0;
  for (const Vector& e : errors) sum += e.squaredNorm();
  return std::sqrt(sum / static_cast<double>(errors.size()));
}

RmseSummary rmse(std::span<const std::vector<Vector>> per_run_errors) {
  if (per_run_errors.empty()) throw std::invalid_argument("rmse: no runs");
  RmseSummary s;
  for (const auto& run : per_run_errors) s.per_run.push_back(run_rmse(run));
  const double M = static_cast<double>(s.per_run.size());
  s.mean = std::accumulate(s.per_run.begin(), s.per_run.end(), 0.0) / M;
  if (s.per_run.size() > 1) {
    double ss = 0.0;
    for (double v : s.per_run) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / (M - 1.0);
  }
  return s;
}

}  // namespace mhe
