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

#include "mhe/solver.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mhe {
namespace {

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};

Spectrum spectrum(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solver failed");
  return {es.eigenvalues()(0), es.eigenvalues()(es.eigenvalues().size() - 1)};
}

double rho_from_spectrum(const Spectrum& s, double alpha, double beta) {
  return std::max(std::abs(1.0 - alpha * (s.max + beta)), std::abs(1.0 - alpha * (s.min + beta)));
}

}  // namespace

void IpgConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("ipg: beta must be positive");
  if (!(delta > 0.0)) throw ConfigError("ipg: delta must be positive");
  if (!(eps > 0.0)) throw ConfigError("ipg: eps must be positive");
  if (max_iter < 1) throw ConfigError("ipg: max_iter must be at least 1");
  if (!(mu > 1.0)) throw ConfigError("ipg: mu must exceed 1");
  if (!(alpha_safety > 0.0 && alpha_safety < 1.0)) {
    throw ConfigError("ipg: alpha_safety must lie in (0, 1)");
  }
  if (alpha_mode == StepSizeMode::theoretical && !(lipschitz_l > 0.0)) {
    throw ConfigError("ipg: lipschitz_l must be positive in theoretical mode");
  }
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

double step_alpha(double lambda_max, int k, const IpgConfig& cfg, double rho_bar) {
  const double first = 1.0 / (lambda_max + cfg.beta);
  if (cfg.alpha_mode == StepSizeMode::practical) return cfg.alpha_safety * first;

  const double mr = cfg.mu * rho_bar;
  if (!(mr < 1.0)) {
    std::ostringstream msg;
    msg << "step_alpha: mu * rho = " << mr << " >= 1; rate target is unattainable";
    throw ConfigError(msg.str());
  }
  const double second = std::pow(cfg.mu, k) * (1.0 - mr) /
                        (2.0 * cfg.lipschitz_l * (1.0 - std::pow(mr, k + 1)));
  return 0.99 * std::min(first, second);
}

double step_alpha(const Matrix& H_k, int k, const IpgConfig& cfg, double rho_bar) {
  return step_alpha(max_eigenvalue(H_k), k, cfg, rho_bar);
}

double rho_k(const Matrix& H_k, double alpha, double beta) {
  return rho_from_spectrum(spectrum(H_k), alpha, beta);
}

OptimalPreconditioner optimal_preconditioner(const Matrix& H_star, double beta) {
  const Eigen::Index n = H_star.rows();
  const Matrix shifted = H_star + beta * Matrix::Identity(n, n);
  Eigen::FullPivLU<Matrix> lu(shifted);
  if (!lu.isInvertible()) throw NumericalError("optimal_preconditioner: H* + beta I is singular");
  OptimalPreconditioner out;
  out.K.K = lu.inverse();
  out.eta = 1.0 / (min_eigenvalue(H_star) + beta);
  return out;
}

double preconditioner_residual(const BlockTridiagonal& H, double beta, const Preconditioner& K,
                               Execution exec) {
  if (K.K.rows() != H.dimension() || K.K.cols() != H.dimension()) {
    throw DimensionError("preconditioner_residual: K does not match H");
  }
  Matrix R(K.K.rows(), K.K.cols());
  kernels::shifted_multiply(H, beta, K.K, R, exec);
  R.diagonal().array() -= 1.0;
  return R.norm();
}

Preconditioner initial_preconditioner(const BlockTridiagonal& H, double beta) {
  PowerIteration power;
  const double lam = power.lambda_max(H);
  return {Matrix::Identity(H.dimension(), H.dimension()) / (lam + beta)};
}

IpgResult ipg_solve(const Objective& f, const Vector& xi0, Preconditioner K0,
                    const IpgConfig& cfg, const Instrumentation* instrument) {
  cfg.validate();
  const Eigen::Index dim = f.dimension();
  if (xi0.size() != dim) throw DimensionError("ipg_solve: xi0 has the wrong length");
  if (K0.K.rows() != dim || K0.K.cols() != dim) {
    throw DimensionError("ipg_solve: preconditioner has the wrong shape");
  }
  if (!K0.K.allFinite()) throw NumericalError("ipg_solve: preconditioner has non-finite entries");

  IpgResult out{xi0, std::move(K0), {}};
  Vector& xi = out.xi;
  Matrix& K = out.K.K;
  SolveReport& report = out.report;

  PowerIteration power;
  double delta = cfg.delta;
  double rho_bar = 0.0;
  double f_prev = f.value(xi);
  int increases = 0;
  report.status = SolveStatus::max_iterations;
  if (!std::isfinite(f_prev)) {
    report.status = SolveStatus::diverged;
    report.objective_value = f_prev;
    return out;
  }

  const bool need_spectrum = cfg.record_trace || cfg.alpha_mode == StepSizeMode::theoretical;
  for (int k = 0; k < cfg.max_iter; ++k) {
    const Vector g = f.gradient(xi);
    if (!g.allFinite()) {
      report.status = SolveStatus::diverged;
      break;
    }
    const BlockTridiagonal H = f.hessian(xi);
    double lam = power.lambda_max(H);

    Spectrum spec;
    if (need_spectrum) {
      spec = spectrum(H.to_dense());
      lam = spec.max;
    }
    report.lambda_max = lam;

    if (cfg.alpha_mode == StepSizeMode::theoretical) {
      // rho is estimated at the largest admissible step, where the K
      // recursion contracts fastest.
      rho_bar = std::max(rho_bar, rho_from_spectrum(spec, 0.99 / (lam + cfg.beta), cfg.beta));
    }
    const double alpha = step_alpha(lam, k, cfg, rho_bar);

    IterationRecord rec;
    if (cfg.record_trace) {
      rec.iter = k;
      rec.alpha = alpha;
      rec.rho = rho_from_spectrum(spec, alpha, cfg.beta);
      rec.grad_norm = g.norm();
      rec.objective = f_prev;
      assert(rec.rho >= 0.0 && (rec.rho < 1.0 || spec.min + cfg.beta <= 0.0));
      if (instrument != nullptr) {
        rec.error_norm = (xi - instrument->xi_star).norm();
        rec.precond_error = spectral_norm(K - instrument->K_star);
      }
    }

    const Vector step = -delta * (K * g);
    const Vector xi_next = xi + step;
    kernels::preconditioner_update(H, cfg.beta, alpha, K, cfg.exec);

    const double f_next = f.value(xi_next);
    if (!std::isfinite(f_next) || !xi_next.allFinite()) {
      report.status = SolveStatus::diverged;
      break;
    }
    if (f_next > f_prev) {
      if (++increases >= cfg.divergence_window && !report.delta_halved) {
        delta *= 0.5;
        report.delta_halved = true;
        increases = 0;
      }
    } else {
      increases = 0;
    }

    xi = xi_next;
    f_prev = f_next;
    report.iterations = k + 1;
    report.final_step_norm = step.norm();
    if (cfg.record_trace) {
      rec.step_norm = report.final_step_norm;
      report.trace.push_back(rec);
    }
    if (report.final_step_norm < cfg.eps) {
      report.status = SolveStatus::converged;
      break;
    }
  }

  report.objective_value = f_prev;
  report.final_grad_norm = f.gradient(xi).norm();
  return out;
}

MheIpgResult ipg_solve(const MheProblem& p, const PackedState& xi0, Preconditioner K0,
                       const IpgConfig& cfg) {
  MheObjective f(p);
  IpgResult r = ipg_solve(f, xi0.vector(), std::move(K0), cfg);
  return {PackedState(std::move(r.xi), p.state_dim()), std::move(r.K), std::move(r.report)};
}

SolveResult newton_solve(const Objective& f, const Vector& xi0, const NewtonConfig& cfg) {
  if (!(cfg.eps > 0.0) || cfg.max_iter < 1) throw ConfigError("newton: bad eps or max_iter");
  const Eigen::Index dim = f.dimension();
  if (xi0.size() != dim) throw DimensionError("newton_solve: xi0 has the wrong length");

  SolveResult out{xi0, {}};
  Vector& xi = out.xi;
  SolveReport& report = out.report;
  report.status = SolveStatus::max_iterations;
  double fx = f.value(xi);

  for (int k = 0; k < cfg.max_iter; ++k) {
    const Vector g = f.gradient(xi);
    if (!g.allFinite() || !std::isfinite(fx)) {
      report.status = SolveStatus::diverged;
      break;
    }
    Matrix H = f.hessian(xi).to_dense();
    Eigen::LLT<Matrix> llt(H);
    double shift = cfg.regularization;
    while (llt.info() != Eigen::Success) {
      llt.compute(H + shift * Matrix::Identity(dim, dim));
      shift *= 10.0;
      if (shift > 1e12) throw NumericalError("newton_solve: cannot regularize the Hessian");
    }
    const Vector d = -llt.solve(g);

    double t = 1.0;
    double f_trial = fx;
    if (d.norm() >= cfg.eps) {
      const double slope = g.dot(d);
      int halvings = 0;
      f_trial = f.value(xi + d);
      while (!(f_trial <= fx + cfg.armijo_c * t * slope)) {
        if (++halvings > cfg.max_halvings) break;
        t *= 0.5;
        f_trial = f.value(xi + t * d);
      }
      if (halvings > cfg.max_halvings) {
        report.status = SolveStatus::line_search_failed;
        break;
      }
    } else {
      // Below tolerance the Armijo test is dominated by rounding.
      f_trial = f.value(xi + d);
    }

    const Vector step = t * d;
    xi += step;
    fx = f_trial;
    report.iterations = k + 1;
    report.final_step_norm = step.norm();
    if (report.final_step_norm < cfg.eps) {
      report.status = SolveStatus::converged;
      break;
    }
  }
  report.objective_value = fx;
  report.final_grad_norm = f.gradient(xi).norm();
  return out;
}

SolveResult gd_solve(const Objective& f, const Vector& xi0, const GdConfig& cfg) {
  if (!(cfg.eps > 0.0) || cfg.max_iter < 1 || !(cfg.beta > 0.0) ||
      !(cfg.safety > 0.0 && cfg.safety < 1.0)) {
    throw ConfigError("gd: bad configuration");
  }
  if (xi0.size() != f.dimension()) throw DimensionError("gd_solve: xi0 has the wrong length");

  SolveResult out{xi0, {}};
  Vector& xi = out.xi;
  SolveReport& report = out.report;
  report.status = SolveStatus::max_iterations;
  PowerIteration power;

  for (int k = 0; k < cfg.max_iter; ++k) {
    const Vector g = f.gradient(xi);
    if (!g.allFinite()) {
      report.status = SolveStatus::diverged;
      break;
    }
    const double lam = power.lambda_max(f.hessian(xi));
    report.lambda_max = lam;
    const Vector step = -(cfg.safety / (lam + cfg.beta)) * g;
    xi += step;
    report.iterations = k + 1;
    report.final_step_norm = step.norm();
    if (report.final_step_norm < cfg.eps) {
      report.status = SolveStatus::converged;
      break;
    }
  }
  report.objective_value = f.value(xi);
  report.final_grad_norm = f.gradient(xi).norm();
  return out;
}

bool lemma1_bound_check(std::span<const IterationRecord> trace, double K0_err, double gamma,
                        double eta, double rho_bar) {
  for (const IterationRecord& r : trace) {
    if (!r.error_norm || !r.precond_error) {
      throw std::invalid_argument("lemma1_bound_check: trace lacks instrumentation");
    }
  }
  const double slack = 1e-10 * std::max({1.0, K0_err, eta});
  // weighted = sum_{j<=k} rho^{k-j} alpha_j ||z_j||, built incrementally.
  double weighted = 0.0;
  double rho_pow = 1.0;
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    weighted = rho_bar * weighted + trace[k].alpha * *trace[k].error_norm;
    rho_pow *= rho_bar;
    const double bound = rho_pow * K0_err + gamma * eta * weighted;
    if (*trace[k + 1].precond_error > bound * (1.0 + 1e-9) + slack) return false;
  }
  return true;
}

}  // namespace mhe
