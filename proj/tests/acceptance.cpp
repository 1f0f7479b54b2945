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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails. Groups can be selected with
// --only so ctest can run them as separate tests.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "mhe/benchmark.hpp"
#include "mhe/convexity.hpp"
#include "mhe/ekf.hpp"
#include "mhe/objective.hpp"
#include "mhe/solver.hpp"
#include "test_util.hpp"

namespace mhe {
namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double lambda_min(const Matrix& M) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(M, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

double lambda_max(const Matrix& M) {
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(M, Eigen::EigenvaluesOnly).eigenvalues();
  return ev(ev.size() - 1);
}

double spectral_norm(const Matrix& M) {
  return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
}

// Block-tridiagonal SPD matrix whose spectrum lies in [lo, hi].
BlockTridiagonal spd_band(int blocks, int n, double lo, double hi, std::mt19937_64& rng) {
  BlockTridiagonal H(blocks, n);
  std::normal_distribution<double> nd;
  for (int i = 0; i < blocks; ++i) {
    H.diag[i] = testing::random_spd(n, rng, 0.1);
    if (i + 1 < blocks) H.upper[i] = Matrix::NullaryExpr(n, n, [&] { return nd(rng); });
  }
  const Matrix D = H.to_dense();
  const double a = lambda_min(D), b = lambda_max(D);
  const double scale = (hi - lo) / (b - a);
  for (int i = 0; i < blocks; ++i) {
    H.diag[i] = scale * (H.diag[i] - a * Matrix::Identity(n, n)) + lo * Matrix::Identity(n, n);
    if (i + 1 < blocks) H.upper[i] *= scale;
  }
  return H;
}

// ---------------------------------------------------------------- bench

RunConfig paper_config() {
  RunConfig c;  // defaults are the reference study
  c.ipg.beta = 0.5;
  c.ipg.delta = 1.6;
  c.ipg.eps = 1e-6;
  return c;
}

void bench_criteria(const std::filesystem::path& out, int runs) {
  RunConfig cfg = paper_config();
  if (runs > 0) cfg.runs = runs;
  const auto t0 = std::chrono::steady_clock::now();
  const BenchReport rep = bench(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.empty()) write_bench_outputs(rep, cfg, out);

  std::printf("benchmark: M=%d runs, %.1f s wall\n", cfg.runs, wall);
  std::printf("  %-12s %3s %10s %10s %12s %12s\n", "method", "N", "mean_rmse", "var_rmse",
              "time_s", "iters");
  for (const BenchRow& r : rep.rows) {
    std::printf("  %-12s %3d %10.4f %10.5f %12.4f %12.1f\n", std::string(to_string(r.method)).c_str(),
                r.horizon, r.mean_rmse, r.var_rmse, r.mean_time_s, r.mean_iters);
  }

  // 1. IPG and Newton agree per seed.
  std::map<std::pair<std::uint64_t, int>, double> newton;
  for (const RunRecord& r : rep.records) {
    if (r.method == Method::mhe_newton) newton[{r.seed, r.horizon}] = r.rmse;
  }
  double worst = 0.0;
  int compared = 0;
  for (const RunRecord& r : rep.records) {
    if (r.method != Method::mhe_ipg) continue;
    worst = std::max(worst, std::abs(r.rmse - newton.at({r.seed, r.horizon})));
    ++compared;
  }
  report(1, compared > 0 && worst <= 5e-4 && wall < 600.0,
         format("max |rmse_ipg - rmse_newton| = %.2e over %d seed/N pairs (limit 5e-4); wall %.0f s "
                "(limit 600)",
                worst, compared, wall));

  // 2. Accuracy bands.
  bool band = true, monotone = true;
  std::string means;
  double prev = 1e300;
  for (int N : cfg.horizons) {
    const double m = rep.find(Method::mhe_ipg, N)->mean_rmse;
    band = band && m >= 0.13 && m <= 0.26;
    monotone = monotone && m <= prev + 0.01;
    prev = m;
    means += format("%s%.4f", means.empty() ? "" : "/", m);
  }
  const double obs = rep.find(Method::observations, 0)->mean_rmse;
  const bool obs_ok = obs >= 0.40 && obs <= 0.60;
  report(2, band && monotone && obs_ok,
         format("mhe-ipg mean rmse N=5..20 %s (band [0.13,0.26]: %s, monotone: %s); "
                "observations %.4f (band [0.40,0.60]: %s)",
                means.c_str(), band ? "in" : "OUT", monotone ? "yes" : "NO", obs,
                obs_ok ? "in" : "OUT"));

  // 3. Iterations and cost growth.
  bool fewer = true;
  std::string its;
  std::vector<double> lx, ly;
  for (int N : cfg.horizons) {
    long ipg = 0, gd = 0;
    for (const RunRecord& r : rep.records) {
      if (r.horizon != N) continue;
      if (r.method == Method::mhe_ipg) ipg += r.iters;
      if (r.method == Method::mhe_gd) gd += r.iters;
    }
    fewer = fewer && ipg < gd;
    its += format("%sN=%d %ld<%ld", its.empty() ? "" : ", ", N, ipg, gd);
    lx.push_back(std::log(N));
    ly.push_back(std::log(rep.find(Method::mhe_ipg, N)->mean_time_per_solve_s));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  report(3, fewer && slope <= 2.3,
         format("total iterations ipg<gd: %s [%s]; time-per-window exponent %.2f (limit 2.3)",
                fewer ? "yes" : "NO", its.c_str(), slope));

  // 8. SPD along every run plus an exact noise-free EKF.
  int spd = 0;
  for (const BenchRow& r : rep.rows) spd += r.spd_violations;
  const UnicycleModel model(cfg.dt);
  double ekf_err = 0.0;
  for (double x0th : {0.0, 1.0, -2.5}) {
    const Vector x0 = (Vector(3) << 1.0, -2.0, x0th).finished();
    const Trajectory tr = simulate(model, x0, cfg.inputs(),
                                   NoiseSpec{Vector::Zero(3), Vector::Zero(2), 1.5, 0}, cfg.dt);
    const PipelineResult e = ekf_pipeline(tr, model, 0.01 * Matrix::Identity(3, 3),
                                          0.16 * Matrix::Identity(2, 2), x0, Matrix::Identity(3, 3));
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
      ekf_err = std::max(ekf_err, (e.estimates[t] - tr.states[t]).norm());
    }
    spd += e.stats.spd_violations;
  }
  report(8, spd == 0 && ekf_err <= 1e-8,
         format("SPD violations %d; noise-free EKF max error %.2e (limit 1e-8)", spd, ekf_err));
}

// ---------------------------------------------------------------- rate

void rate_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const double beta = 0.1, mu = 1.05, delta = 1.0;
  bool ok = true;
  double worst = 0.0, lhs_max = 0.0;
  int iterations = 0;
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const BlockTridiagonal H = spd_band(6, 3, 1.0, 4.0, rng);
    const Vector center = testing::random_vector(H.dimension(), rng);
    const QuadraticObjective f(H, center);
    const Matrix D = H.to_dense();
    const OptimalPreconditioner opt = optimal_preconditioner(D, beta);
    // Initial-selection condition with gamma = 0 (quadratic) and K0 = K*:
    // eta*beta + eta*q*|1 - delta| + delta*l*||K0 - K*|| <= 1 / (2 mu). Every
    // xi0 lies within the radius because the gamma term vanishes.
    const double lhs = opt.eta * beta + opt.eta * lambda_max(D) * std::abs(1.0 - delta);
    lhs_max = std::max(lhs_max, lhs);
    ok = ok && lhs <= 1.0 / (2.0 * mu);

    IpgConfig cfg;
    cfg.beta = beta;
    cfg.delta = delta;
    cfg.mu = mu;
    cfg.lipschitz_l = lambda_max(D);
    cfg.alpha_mode = StepSizeMode::theoretical;
    cfg.eps = 1e-300;
    cfg.max_iter = 400;
    cfg.record_trace = true;
    const Instrumentation inst{center, opt.K.K};
    const Vector xi0 = center + testing::random_vector(H.dimension(), rng, 3.0);
    const IpgResult r = ipg_solve(f, xi0, opt.K, cfg, &inst);
    std::vector<double> z;
    for (const IterationRecord& rec : r.report.trace) z.push_back(*rec.error_norm);
    z.push_back((r.xi - center).norm());
    bool reached = false;
    for (std::size_t k = 0; k + 1 < z.size(); ++k) {
      if (z[k] < 1e-12) {
        reached = true;
        break;
      }
      const double ratio = z[k + 1] / z[k];
      worst = std::max(worst, ratio);
      ok = ok && ratio < 1.0 / mu;
      ++iterations;
    }
    ok = ok && (reached || z.back() < 1e-12);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(4, ok && secs < 1.0,
         format("max ||z_k+1||/||z_k|| = %.4f < 1/mu = %.4f over %d iterations; selection lhs %.3f <= "
                "%.3f; %.2f s",
                worst, 1.0 / mu, iterations, lhs_max, 1.0 / (2.0 * mu), secs));
}

// ---------------------------------------------------------------- lemma

// f(x) = a/2 (x - c)^2 + g/6 |x|^3, whose second derivative a + g|x| is
// Lipschitz with constant g.
class CubicScalar final : public Objective {
 public:
  CubicScalar(double a, double c, double g) : a_(a), c_(c), g_(g) {}
  Eigen::Index dimension() const override { return 1; }
  double value(const Vector& x) const override {
    return 0.5 * a_ * std::pow(x(0) - c_, 2) + g_ / 6.0 * std::pow(std::abs(x(0)), 3);
  }
  Vector gradient(const Vector& x) const override {
    return Vector::Constant(1, a_ * (x(0) - c_) + 0.5 * g_ * x(0) * std::abs(x(0)));
  }
  BlockTridiagonal hessian(const Vector& x) const override {
    BlockTridiagonal H(1, 1);
    H.diag[0](0, 0) = second(x(0));
    return H;
  }
  double second(double x) const { return a_ + g_ * std::abs(x); }

 private:
  double a_, c_, g_;
};

void lemma_criterion() {
  int violations = 0, cases = 0;
  double gamma_gap = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(500 + seed);
    // Quadratic family: gamma = 0.
    {
      const BlockTridiagonal H = spd_band(4, 2, 0.2, 5.0, rng);
      const Vector center = testing::random_vector(H.dimension(), rng);
      const QuadraticObjective f(H, center);
      const OptimalPreconditioner opt = optimal_preconditioner(H.to_dense(), 0.5);
      IpgConfig cfg;
      cfg.eps = 1e-300;
      cfg.max_iter = 100;
      cfg.record_trace = true;
      const Instrumentation inst{center, opt.K.K};
      const Preconditioner K0 = initial_preconditioner(H, cfg.beta);
      const IpgResult r = ipg_solve(f, center + testing::random_vector(H.dimension(), rng), K0, cfg, &inst);
      double rho = 0.0;
      for (const IterationRecord& rec : r.report.trace) rho = std::max(rho, rec.rho);
      if (!lemma1_bound_check(r.report.trace, spectral_norm(K0.K - opt.K.K), 0.0, opt.eta, rho)) {
        ++violations;
      }
      ++cases;
    }
    // Scalar cubic-regularised problem with a brute-forced gamma.
    {
      std::uniform_real_distribution<double> ua(0.5, 2.0), uc(-2.0, 2.0), ug(0.1, 1.0);
      const CubicScalar f(ua(rng), uc(rng), ug(rng));
      const Vector x0 = Vector::Constant(1, uc(rng) * 2.0);
      NewtonConfig nc;
      nc.eps = 1e-15;
      nc.regularization = 0.0;
      const Vector xs = newton_solve(f, x0, nc).xi;
      double gamma = 0.0;
      const double lo = -6.0, hi = 6.0;
      for (int i = 0; i <= 400; ++i) {
        for (int j = i + 1; j <= 400; ++j) {
          const double x = lo + (hi - lo) * i / 400.0, y = lo + (hi - lo) * j / 400.0;
          gamma = std::max(gamma, std::abs(f.second(x) - f.second(y)) / (y - x));
        }
      }
      const Matrix Hs = f.hessian(xs).to_dense();
      const OptimalPreconditioner opt = optimal_preconditioner(Hs, 0.5);
      IpgConfig cfg;
      cfg.eps = 1e-300;
      cfg.max_iter = 100;
      cfg.record_trace = true;
      const Instrumentation inst{xs, opt.K.K};
      const Preconditioner K0 = initial_preconditioner(f.hessian(x0), cfg.beta);
      const IpgResult r = ipg_solve(f, x0, K0, cfg, &inst);
      double rho = 0.0;
      for (const IterationRecord& rec : r.report.trace) rho = std::max(rho, rec.rho);
      if (!lemma1_bound_check(r.report.trace, spectral_norm(K0.K - opt.K.K), gamma, opt.eta, rho)) {
        ++violations;
      }
      ++cases;
      gamma_gap = std::max(gamma_gap, std::abs(gamma - f.second(1.0) + f.second(0.0)));
    }
  }
  report(5, violations == 0,
         format("%d violations over %d instrumented runs x 100 iterations "
                "(quadratic gamma=0 and cubic scalar, brute-force gamma within %.1e of exact)",
                violations, cases, gamma_gap));
}

// ---------------------------------------------------------------- derivatives

void derivative_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(600);
  double g_worst = 0.0, h_worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const MheProblem p = testing::random_unicycle_problem(rng, 1 + k % 20);
    const Vector xi = testing::random_vector(p.dimension(), rng);
    const int n = p.state_dim();
    auto F = [&](const Vector& v) { return objective(p, PackedState(v, n)); };
    auto G = [&](const Vector& v) { return Vector(gradient(p, PackedState(v, n))); };
    const Vector g = G(xi);
    const Vector g_fd = testing::fd_gradient(F, xi, 1e-5);
    g_worst = std::max(g_worst, (g - g_fd).norm() / g_fd.norm());
    const Matrix H = hessian(p, PackedState(xi, n)).to_dense();
    Matrix H_fd = testing::fd_jacobian(G, xi, 1e-6);
    H_fd = 0.5 * (H_fd + H_fd.transpose()).eval();
    h_worst = std::max(h_worst, (H - H_fd).norm() / H_fd.norm());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(6, g_worst <= 1e-6 && h_worst <= 1e-4 && secs < 30.0,
         format("200 windows: gradient rel err %.2e (limit 1e-6), Hessian rel err %.2e (limit 1e-4); "
                "%.1f s",
                g_worst, h_worst, secs));
}

// ---------------------------------------------------------------- convexity

void convexity_criterion(int seeds) {
  struct Tally {
    int certified = 0, total = 0;
    double fraction() const { return total ? static_cast<double>(certified) / total : 0.0; }
  };
  std::map<std::string, Tally> tally;
  const RunConfig base = paper_config();
  const auto model = std::make_shared<UnicycleModel>(base.dt);
  for (bool noisy : {false, true}) {
    for (int s = 0; s < seeds; ++s) {
      NoiseSpec noise = base.noise(base.base_seed + s);
      if (!noisy) {
        noise.process_std.setZero();
        noise.meas_std.setZero();
      }
      const Trajectory tr = simulate(*model, base.x0, base.inputs(), noise, base.dt);
      for (int N : base.horizons) {
        PipelineOptions o = base.pipeline_options(N);
        const std::string label = noisy ? "nominal" : "noise-free";
        mhe_pipeline(tr, model, Method::mhe_newton, o,
                     [&](const MheProblem& p, const PackedState& start, const PackedState& sol,
                         const SolveReport&) {
                       for (const auto& [where, xi] :
                            {std::pair{"warm-start", &start}, std::pair{"solution", &sol}}) {
                         Tally& t = tally[label + " " + where];
                         t.total += 1;
                         t.certified +=
                             certify(p, *xi).verdict == ConvexityVerdict::certified_convex_psd;
                       }
                     });
      }
    }
  }
  bool ok = true;
  std::string detail;
  for (const auto& [name, t] : tally) {
    ok = ok && t.fraction() >= 0.95;
    detail += format("%s%s %d/%d (%.1f%%)", detail.empty() ? "" : "; ", name.c_str(), t.certified,
                     t.total, 100.0 * t.fraction());
  }
  const MheProblem scalar =
      testing::scalar_linear_problem(3, 1.0, 1.0, 1.0, 1.0, 1.0, Vector::Zero(3), 0.0);
  const ConvexityBlock b = build_block(scalar, PackedState(Vector::Zero(4), 1), 1);
  Matrix expected(2, 2);
  expected << 2, -1, -1, 1;
  const bool scalar_ok = b.matrix.isApprox(expected, 1e-15) && check_psd(b.matrix) &&
                         check_diag_dominant(b.matrix) && (b.matrix.diagonal().array() >= 0).all() &&
                         certify(scalar, PackedState(Vector::Zero(4), 1)).dominance_route();
  report(7, ok && scalar_ok,
         format("%s; scalar [[2,-1],[-1,1]] both routes: %s (need >= 95%% each)", detail.c_str(),
                scalar_ok ? "yes" : "NO"));
}

// ---------------------------------------------------------------- prop2

void prop2_criterion() {
  std::mt19937_64 rng(900);
  int all_psd = 0, counterexamples = 0;
  const auto model = std::make_shared<UnicycleModel>(0.2);
  for (int k = 0; k < 500; ++k) {
    const int N = 1 + k % 12;
    MheProblem p = testing::random_unicycle_problem(rng, N);
    Vector xi;
    if (k % 2 == 0) {
      xi = testing::random_vector(p.dimension(), rng, 0.5);
    } else {
      // Near-consistent windows, where every block tends to be PSD.
      Vector x = testing::random_vector(3, rng);
      std::vector<Vector> states{x};
      for (int i = 0; i < N; ++i) states.push_back(model->dynamics(states.back(), p.window().input(i, 2)));
      xi = PackedState::pack(states).vector();
      if (k % 4 == 1) xi += testing::random_vector(p.dimension(), rng, 0.01);
    }
    const PackedState s(xi, 3);
    const ConvexityReport rep = certify(p, s);
    if (!rep.all_psd) continue;
    ++all_psd;
    const Matrix H = hessian(p, s).to_dense();
    if (lambda_min(H) < -1e-8 * lambda_max(H)) ++counterexamples;
  }
  report(9, counterexamples == 0,
         format("500 instances, %d with every block PSD, %d with lambda_min(H) < -1e-8 lambda_max(H)",
                all_psd, counterexamples));
}

}  // namespace
}  // namespace mhe

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<std::string> only;
  std::string out;
  int runs = 0, seeds = 30;
  app.add_option("--only", only, "Groups to run: bench, rate, lemma, derivatives, convexity, prop2")
      ->check(CLI::IsMember({"bench", "rate", "lemma", "derivatives", "convexity", "prop2"}));
  app.add_option("--out", out, "Write the benchmark outputs here");
  app.add_option("--runs", runs, "Override the number of benchmark runs");
  app.add_option("--seeds", seeds, "Seeds for the convexity survey");
  CLI11_PARSE(app, argc, argv);

  const std::set<std::string> sel(only.begin(), only.end());
  auto want = [&](const char* g) { return sel.empty() || sel.contains(g); };
  try {
    if (want("rate")) mhe::rate_criterion();
    if (want("lemma")) mhe::lemma_criterion();
    if (want("derivatives")) mhe::derivative_criterion();
    if (want("prop2")) mhe::prop2_criterion();
    if (want("convexity")) mhe::convexity_criterion(seeds);
    if (want("bench")) mhe::bench_criteria(out, runs);
  } catch (const std::exception& e) {
    std::printf("acceptance: error: %s\n", e.what());
    return 2;
  }
  return mhe::failures == 0 ? 0 : 1;
}
