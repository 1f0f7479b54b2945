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

#include "mhe/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace mhe {
namespace {

void require_size(const Vector& v, int expected, const char* what) {
  if (v.size() != expected) {
    std::ostringstream msg;
    msg << what << ": expected length " << expected << ", got " << v.size();
    throw DimensionError(msg.str());
  }
}

}  // namespace

Vector unicycle_step(const Vector& x, const Vector& u, double dt) {
  require_size(x, 3, "unicycle state");
  require_size(u, 2, "unicycle input");
  Vector next(3);
  next << x(0) + dt * u(0) * std::cos(x(2)), x(1) + dt * u(0) * std::sin(x(2)),
      x(2) + dt * u(1);
  return next;
}

Vector unicycle_observe(const Vector& x) {
  require_size(x, 3, "unicycle state");
  return x.head<2>();
}

UnicycleDerivatives unicycle_derivatives(const Vector& x, const Vector& u, double dt) {
  require_size(x, 3, "unicycle state");
  require_size(u, 2, "unicycle input");
  const double c = std::cos(x(2));
  const double s = std::sin(x(2));
  const double v = dt * u(0);

  UnicycleDerivatives d;
  d.J_f = Matrix::Identity(3, 3);
  d.J_f(0, 2) = -v * s;
  d.J_f(1, 2) = v * c;

  d.J_h = Matrix::Zero(2, 3);
  d.J_h(0, 0) = 1.0;
  d.J_h(1, 1) = 1.0;

  d.H_f.assign(3, Matrix::Zero(3, 3));
  d.H_f[0](2, 2) = -v * c;
  d.H_f[1](2, 2) = -v * s;
  d.H_h.assign(2, Matrix::Zero(3, 3));
  return d;
}

UnicycleModel::UnicycleModel(double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("unicycle dt must be positive");
}

Vector UnicycleModel::dynamics(const Vector& x, const Vector& u) const {
  return unicycle_step(x, u, dt_);
}

Vector UnicycleModel::observe(const Vector& x) const { return unicycle_observe(x); }

Matrix UnicycleModel::dynamics_jacobian(const Vector& x, const Vector& u) const {
  require_size(x, 3, "unicycle state");
  require_size(u, 2, "unicycle input");
  Matrix J = Matrix::Identity(3, 3);
  J(0, 2) = -dt_ * u(0) * std::sin(x(2));
  J(1, 2) = dt_ * u(0) * std::cos(x(2));
  return J;
}

Matrix UnicycleModel::observation_jacobian(const Vector& x) const {
  require_size(x, 3, "unicycle state");
  Matrix J = Matrix::Zero(2, 3);
  J(0, 0) = 1.0;
  J(1, 1) = 1.0;
  return J;
}

HessianTensor UnicycleModel::dynamics_hessian(const Vector& x, const Vector& u) const {
  require_size(x, 3, "unicycle state");
  require_size(u, 2, "unicycle input");
  HessianTensor H(3, Matrix::Zero(3, 3));
  H[0](2, 2) = -dt_ * u(0) * std::cos(x(2));
  H[1](2, 2) = -dt_ * u(0) * std::sin(x(2));
  return H;
}

HessianTensor UnicycleModel::observation_hessian(const Vector& x) const {
  require_size(x, 3, "unicycle state");
  return HessianTensor(2, Matrix::Zero(3, 3));
}

LinearModel::LinearModel(Matrix A, Matrix B, Matrix C)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
  if (A_.rows() != A_.cols() || B_.rows() != A_.rows() || C_.cols() != A_.rows()) {
    throw DimensionError("linear model: A must be n x n, B n x m, C p x n");
  }
}

Vector LinearModel::dynamics(const Vector& x, const Vector& u) const {
  require_size(x, state_dim(), "linear state");
  require_size(u, input_dim(), "linear input");
  return A_ * x + B_ * u;
}

Vector LinearModel::observe(const Vector& x) const {
  require_size(x, state_dim(), "linear state");
  return C_ * x;
}

Matrix LinearModel::dynamics_jacobian(const Vector&, const Vector&) const { return A_; }
Matrix LinearModel::observation_jacobian(const Vector&) const { return C_; }

HessianTensor LinearModel::dynamics_hessian(const Vector&, const Vector&) const {
  return HessianTensor(state_dim(), Matrix::Zero(state_dim(), state_dim()));
}

HessianTensor LinearModel::observation_hessian(const Vector&) const {
  return HessianTensor(obs_dim(), Matrix::Zero(state_dim(), state_dim()));
}

Matrix numeric_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x,
                        double step) {
  const Vector f0 = fn(x);
  Matrix J(f0.size(), x.size());
  Vector xp = x;
  Vector xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    J.col(j) = (fn(xp) - fn(xm)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return J;
}

HessianTensor numeric_hessian_tensor(const std::function<Vector(const Vector&)>& fn,
                                     const Vector& x, double step) {
  const Eigen::Index n = x.size();
  const Eigen::Index k = fn(x).size();
  HessianTensor H(k, Matrix::Zero(n, n));
  Vector hs(n);
  for (Eigen::Index j = 0; j < n; ++j) hs(j) = step * std::max(1.0, std::abs(x(j)));

  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      Vector xpp = x, xpm = x, xmp = x, xmm = x;
      xpp(a) += hs(a);
      xpp(b) += hs(b);
      xpm(a) += hs(a);
      xpm(b) -= hs(b);
      xmp(a) -= hs(a);
      xmp(b) += hs(b);
      xmm(a) -= hs(a);
      xmm(b) -= hs(b);
      const Vector d = (fn(xpp) - fn(xpm) - fn(xmp) + fn(xmm)) / (4.0 * hs(a) * hs(b));
      for (Eigen::Index i = 0; i < k; ++i) {
        H[i](a, b) = d(i);
        H[i](b, a) = d(i);
      }
    }
  }
  return H;
}

FiniteDifferenceModel::FiniteDifferenceModel(int n, int m, int p, DynamicsFn f, ObservationFn h)
    : n_(n), m_(m), p_(p), f_(std::move(f)), h_(std::move(h)) {
  if (n <= 0 || m < 0 || p <= 0) throw DimensionError("finite-difference model: bad dimensions");
}

Matrix FiniteDifferenceModel::dynamics_jacobian(const Vector& x, const Vector& u) const {
  return numeric_jacobian([&](const Vector& z) { return f_(z, u); }, x);
}

Matrix FiniteDifferenceModel::observation_jacobian(const Vector& x) const {
  return numeric_jacobian(h_, x);
}

HessianTensor FiniteDifferenceModel::dynamics_hessian(const Vector& x, const Vector& u) const {
  return numeric_hessian_tensor([&](const Vector& z) { return f_(z, u); }, x);
}

HessianTensor FiniteDifferenceModel::observation_hessian(const Vector& x) const {
  return numeric_hessian_tensor(h_, x);
}

NoiseSpec NoiseSpec::from_variance(const Vector& process_var, const Vector& meas_var, double clip,
                                   std::uint64_t seed) {
  if ((process_var.array() < 0.0).any() || (meas_var.array() < 0.0).any()) {
    throw ConfigError("noise variances must be non-negative");
  }
  NoiseSpec spec;
  spec.process_std = process_var.cwiseSqrt();
  spec.meas_std = meas_var.cwiseSqrt();
  spec.clip = clip;
  spec.seed = seed;
  return spec;
}

void NoiseSpec::validate() const {
  if (!(clip > 0.0)) throw ConfigError("noise clip must be positive");
  if ((process_std.array() < 0.0).any() || (meas_std.array() < 0.0).any()) {
    throw ConfigError("noise standard deviations must be non-negative");
  }
}

void Trajectory::validate() const {
  if (!(dt > 0.0)) throw ConfigError("trajectory dt must be positive");
  if (states.size() != inputs.size() + 1 || observations.size() != inputs.size()) {
    throw DimensionError("trajectory: need |states| = |inputs| + 1 = |observations| + 1");
  }
}

Trajectory simulate(const SystemModel& model, const Vector& x0, std::span<const Vector> inputs,
                    const NoiseSpec& noise, double dt) {
  noise.validate();
  if (!(dt > 0.0)) throw ConfigError("simulate: dt must be positive");
  if (inputs.empty()) throw DimensionError("simulate: input sequence is empty");
  require_size(x0, model.state_dim(), "simulate x0");
  require_size(noise.process_std, model.state_dim(), "process noise std");
  require_size(noise.meas_std, model.obs_dim(), "measurement noise std");

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](const Vector& std_dev) {
    Vector w(std_dev.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w(i) = std::clamp(std_dev(i) * normal(rng), -noise.clip, noise.clip);
    }
    return w;
  };

  Trajectory traj;
  traj.dt = dt;
  traj.states.reserve(inputs.size() + 1);
  traj.inputs.assign(inputs.begin(), inputs.end());
  traj.observations.reserve(inputs.size());
  traj.states.push_back(x0);
  for (const Vector& u : inputs) {
    require_size(u, model.input_dim(), "simulate input");
    const Vector& x = traj.states.back();
    traj.observations.push_back(model.observe(x) + draw(noise.meas_std));
    traj.states.push_back(model.dynamics(x, u) + draw(noise.process_std));
  }
  return traj;
}

std::vector<Vector> spiral_inputs(int T, double speed, double turn_divisor) {
  if (T <= 0) throw ConfigError("input schedule needs T > 0");
  std::vector<Vector> u(T, Vector(2));
  for (int i = 0; i < T; ++i) u[i] << speed, static_cast<double>(i) / turn_divisor;
  return u;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  traj.validate();
  const Eigen::Index n = traj.states.front().size();
  const Eigen::Index m = traj.inputs.front().size();
  const Eigen::Index p = traj.observations.front().size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
  for (Eigen::Index i = 1; i <= p; ++i) os << ",y" << i;
  os << '\n';

  std::ostringstream row;
  row.precision(17);
  const int T = traj.steps();
  for (int t = 0; t <= T; ++t) {
    row.str("");
    row << t;
    for (Eigen::Index i = 0; i < n; ++i) row << ',' << traj.states[t](i);
    for (Eigen::Index i = 0; i < m; ++i) {
      row << ',';
      if (t < T) row << traj.inputs[t](i);
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      row << ',';
      if (t < T) row << traj.observations[t](i);
    }
    os << row.str() << '\n';
  }
}

}  // namespace mhe
