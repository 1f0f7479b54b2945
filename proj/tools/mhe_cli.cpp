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

// Command-line front end: simulate, estimate, bench, check-convexity.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 convexity not
// certified, 3 solver did not converge at some instant (estimate only),
// 4 runtime failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mhe/benchmark.hpp"
#include "mhe/convexity.hpp"

namespace fs = std::filesystem;
using namespace mhe;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitFailure = 4;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool trace = false;
  bool exclude_warmup = true;
  bool no_wrap = false;
  bool position_only = false;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--config", a.config, "JSON or key = value config file")->check(CLI::ExistingFile);
  app->add_option("--seed", a.seed, "Seed (overrides base_seed)");
  app->add_option("--out", a.out, "Output directory (overrides out_dir)");
  app->add_flag("--trace", a.trace, "Write per-instant IPG iteration traces");
  app->add_flag("--exclude-warmup,!--include-warmup", a.exclude_warmup,
                "Score only instants t >= N (default on)");
  app->add_flag("--no-wrap", a.no_wrap, "Do not wrap heading errors to (-pi, pi]");
  app->add_flag("--position-only", a.position_only, "Score position components only");
}

RunConfig resolve(const CommonArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.seed) cfg.base_seed = *a.seed;
  if (!a.out.empty()) cfg.out_dir = a.out;
  cfg.exclude_warmup = a.exclude_warmup;
  if (a.no_wrap) cfg.wrap_angles = false;
  if (a.position_only) cfg.position_only = true;
  cfg.validate();
  return cfg;
}

std::string pad(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", t);
  return buf;
}

void write_trace(const fs::path& path, const SolveReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.precision(10);
  os << "iter,step_norm,grad_norm,alpha,rho\n";
  for (const IterationRecord& r : report.trace) {
    os << r.iter << ',' << r.step_norm << ',' << r.grad_norm << ',' << r.alpha << ',' << r.rho
       << '\n';
  }
}

int run_simulate(const CommonArgs& a) {
  const RunConfig cfg = resolve(a);
  UnicycleModel model(cfg.dt);
  const Trajectory traj = simulate(model, cfg.x0, cfg.inputs(), cfg.noise(cfg.base_seed), cfg.dt);
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "trajectory.csv";
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(os, traj);
  std::cout << "wrote " << path.string() << " (" << traj.steps() << " steps, seed "
            << cfg.base_seed << ")\n";
  return 0;
}

int run_estimate(const CommonArgs& a, const std::string& method_name, std::optional<int> horizon,
                 std::optional<int> snapshot) {
  RunConfig cfg = resolve(a);
  const Method method = method_from_string(method_name);
  const int N = horizon.value_or(cfg.horizons.front());
  if (N < 1 || N >= cfg.T) throw ConfigError("--horizon must lie in [1, T)");
  if (a.trace) cfg.ipg.record_trace = true;

  const auto model = std::make_shared<UnicycleModel>(cfg.dt);
  const Trajectory traj =
      simulate(*model, cfg.x0, cfg.inputs(), cfg.noise(cfg.base_seed), cfg.dt);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  if (a.trace) fs::create_directories(out / "traces");

  PipelineResult res;
  double rmse = 0.0;
  if (is_mhe(method)) {
    InstantObserver observer = [&](const MheProblem& p, const PackedState&, const PackedState& sol,
                                   const SolveReport& report) {
      const int t = p.window().t;
      if (a.trace && !report.trace.empty()) {
        write_trace(out / "traces" / ("trace_t" + pad(t) + ".csv"), report);
      }
      if (snapshot && *snapshot == t) {
        nlohmann::json j = problem_to_json(p);
        j["xi"] = std::vector<double>(sol.vector().data(), sol.vector().data() + sol.vector().size());
        std::ofstream(out / ("problem_t" + pad(t) + ".json")) << j.dump(2) << '\n';
      }
    };
    res = mhe_pipeline(traj, model, method, cfg.pipeline_options(N), observer);
    rmse = run_rmse(estimation_errors(res.estimates, traj.states, cfg.error_options(N)));
  } else if (method == Method::ekf) {
    const Weights w = cfg.weights();
    const Vector xhat0 = cfg.xhat0.size() ? cfg.xhat0 : Vector(Vector::Zero(3));
    res = ekf_pipeline(traj, *model, w.Q(), w.R(), xhat0, cfg.pi0 * Matrix::Identity(3, 3), cfg.ekf);
    rmse = run_rmse(estimation_errors(res.estimates, traj.states, cfg.error_options(N)));
  } else {
    rmse = run_rmse(observation_errors(traj, *model, cfg.exclude_warmup ? N : 0));
  }

  if (!res.estimates.empty()) {
    std::ofstream os(out / "estimates.csv");
    os.precision(17);
    os << "t,x1,x2,x3,true_x1,true_x2,true_x3\n";
    for (std::size_t t = 0; t < res.estimates.size(); ++t) {
      const Vector& e = res.estimates[t];
      const Vector& x = traj.states[t];
      os << t << ',' << e(0) << ',' << e(1) << ',' << e(2) << ',' << x(0) << ',' << x(1) << ','
         << x(2) << '\n';
    }
  }
  std::cout << to_string(method) << " N=" << N << " seed=" << cfg.base_seed << " rmse=" << rmse
            << " iterations=" << res.stats.total_iterations << " solver_s=" << res.stats.solver_seconds
            << " nonconverged=" << res.stats.nonconverged << '\n';
  return res.stats.nonconverged > 0 ? kExitNonConvergence : 0;
}

int run_bench(const CommonArgs& a, std::optional<int> runs, bool serial) {
  RunConfig cfg = resolve(a);
  if (runs) cfg.runs = *runs;
  if (serial) cfg.exec = Execution::serial;
  cfg.validate();
  const BenchReport report = bench(cfg);
  write_bench_outputs(report, cfg, cfg.out_dir);
  std::printf("%-12s %3s %10s %10s %12s %12s\n", "method", "N", "mean_rmse", "var_rmse",
              "mean_time_s", "mean_iters");
  for (const BenchRow& row : report.rows) {
    std::printf("%-12s %3d %10.4f %10.4f %12.4f %12.1f\n", std::string(to_string(row.method)).c_str(),
                row.horizon, row.mean_rmse, row.var_rmse, row.mean_time_s, row.mean_iters);
  }
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "errors.csv").string() << " and cost.csv\n";
  return 0;
}

int certify_problem_file(const std::string& path, double tol) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open problem file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  const MheProblem p = problem_from_json(j);
  const int n = p.state_dim();
  Vector xi;
  if (j.contains("xi")) {
    xi = Eigen::Map<const Vector>(j["xi"].get<std::vector<double>>().data(),
                                  static_cast<Eigen::Index>(j["xi"].size()));
  } else {
    std::vector<Vector> states{p.arrival().x_hat};
    for (int i = 0; i < p.horizon(); ++i) {
      states.push_back(p.model().dynamics(states.back(), p.window().input(i, p.model().input_dim())));
    }
    xi = PackedState::pack(states).vector();
  }
  if (xi.size() != p.dimension()) throw DimensionError("xi has the wrong length for this window");
  const ConvexityReport r = certify(p, PackedState(xi, n), tol);
  for (const ConvexityBlock& b : r.blocks) {
    std::printf("block %d: min_eig=% .6e psd=%d diag_dominant=%d\n", b.index, b.min_eigenvalue,
                b.psd, b.diag_dominant);
  }
  std::cout << "verdict: " << to_string(r.verdict) << '\n';
  return r.verdict == ConvexityVerdict::inconclusive ? kExitInconclusive : 0;
}

int certify_benchmark(const CommonArgs& a, std::optional<int> horizon, double tol) {
  const RunConfig cfg = resolve(a);
  const int N = horizon.value_or(cfg.horizons.front());
  if (N < 1 || N >= cfg.T) throw ConfigError("--horizon must lie in [1, T)");
  const auto model = std::make_shared<UnicycleModel>(cfg.dt);
  const Trajectory traj =
      simulate(*model, cfg.x0, cfg.inputs(), cfg.noise(cfg.base_seed), cfg.dt);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  std::ofstream os(out / "convexity.csv");
  os.precision(10);
  os << "t,point,verdict,min_block_eigenvalue\n";
  int total = 0, certified = 0;
  auto record = [&](int t, const char* point, const ConvexityReport& r) {
    double lo = std::numeric_limits<double>::infinity();
    for (const ConvexityBlock& b : r.blocks) lo = std::min(lo, b.min_eigenvalue);
    os << t << ',' << point << ',' << to_string(r.verdict) << ',' << lo << '\n';
    ++total;
    certified += r.verdict != ConvexityVerdict::inconclusive;
  };
  mhe_pipeline(traj, model, Method::mhe_newton, cfg.pipeline_options(N),
               [&](const MheProblem& p, const PackedState& start, const PackedState& sol,
                   const SolveReport&) {
                 record(p.window().t, "warm_start", certify(p, start, tol));
                 record(p.window().t, "solution", certify(p, sol, tol));
               });
  std::cout << "certified " << certified << " of " << total << " window evaluations (N=" << N
            << ", seed " << cfg.base_seed << "); details in " << (out / "convexity.csv").string()
            << '\n';
  return certified == total ? 0 : kExitInconclusive;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-horizon estimation with iteratively preconditioned gradient descent"};
  app.require_subcommand(1);

  CommonArgs sim_args, est_args, bench_args, cvx_args;

  auto* sim = app.add_subcommand("simulate", "Simulate one noisy trajectory and write it as CSV");
  add_common(sim, sim_args);

  auto* est = app.add_subcommand("estimate", "Run one estimator on one simulated trajectory");
  add_common(est, est_args);
  std::string method = "mhe-ipg";
  std::optional<int> est_horizon, snapshot;
  est->add_option("--method", method, "mhe-ipg, mhe-newton, mhe-gd, ekf or observations");
  est->add_option("-N,--horizon", est_horizon, "Horizon length (default: first configured)");
  est->add_option("--snapshot", snapshot, "Dump the window problem and solution at instant t");

  auto* ben = app.add_subcommand("bench", "Monte-Carlo comparison of all configured estimators");
  add_common(ben, bench_args);
  std::optional<int> runs;
  bool serial = false;
  ben->add_option("--runs", runs, "Number of Monte-Carlo runs (overrides runs)");
  ben->add_flag("--serial", serial, "Run the Monte-Carlo loop on one thread");

  auto* cvx = app.add_subcommand("check-convexity",
                                 "Certify convexity block-wise, for a problem file or a simulated run");
  add_common(cvx, cvx_args);
  std::string problem;
  std::optional<int> cvx_horizon;
  double tol = 1e-8;
  cvx->add_option("--problem", problem, "Window problem JSON (as written by estimate --snapshot)")
      ->check(CLI::ExistingFile);
  cvx->add_option("-N,--horizon", cvx_horizon, "Horizon length for the simulated run");
  cvx->add_option("--tol", tol, "Relative PSD tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sim) return run_simulate(sim_args);
    if (*est) return run_estimate(est_args, method, est_horizon, snapshot);
    if (*ben) return run_bench(bench_args, runs, serial);
    if (*cvx) {
      return problem.empty() ? certify_benchmark(cvx_args, cvx_horizon, tol)
                             : certify_problem_file(problem, tol);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid problem file: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
