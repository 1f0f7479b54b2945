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

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>

#include "mhe/problem.hpp"

namespace mhe::testing {

// Central differences, written independently of the library's helpers.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    Vector a = x, b = x;
    a(i) += step;
    b(i) -= step;
    g(i) = (f(a) - f(b)) / (2.0 * step);
  }
  return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    Vector a = x, b = x;
    a(i) += step;
    b(i) -= step;
    J.col(i) = (f(a) - f(b)) / (2.0 * step);
  }
  return J;
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline Matrix random_spd(int n, std::mt19937_64& rng, double floor = 0.1) {
  std::normal_distribution<double> nd;
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = nd(rng);
  return A * A.transpose() + floor * Matrix::Identity(n, n);
}

// Unicycle window with random states, inputs and measurements around a
// plausible trajectory.
inline MheProblem random_unicycle_problem(std::mt19937_64& rng, int N, double dt = 0.2) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> speed(0.5, 4.0), turn(-1.0, 1.0);
  auto model = std::make_shared<UnicycleModel>(dt);
  Window w;
  w.t = N;
  w.horizon = N;
  w.Y.resize(2 * N);
  w.U.resize(2 * N);
  for (int i = 0; i < N; ++i) {
    w.Y.segment(2 * i, 2) << nd(rng), nd(rng);
    w.U.segment(2 * i, 2) << speed(rng), turn(rng);
  }
  Vector q(3), r(2);
  q << 0.01 + 0.1 * std::abs(nd(rng)), 0.01 + 0.1 * std::abs(nd(rng)), 0.01 + 0.1 * std::abs(nd(rng));
  r << 0.1 + std::abs(nd(rng)), 0.1 + std::abs(nd(rng));
  Vector xh(3);
  xh << nd(rng), nd(rng), nd(rng);
  return MheProblem(model, w, ArrivalCost{xh, random_spd(3, rng), 0.0}, Weights{q, r});
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

// x_{k+1} = a x_k + b u_k, y = c x, scalar.
inline MheProblem scalar_linear_problem(int N, double a, double c, double q, double r, double pi,
                                        const Vector& Y, double x_hat) {
  auto model = std::make_shared<LinearModel>(Matrix::Constant(1, 1, a), Matrix::Zero(1, 1),
                                             Matrix::Constant(1, 1, c));
  Window w;
  w.t = N;
  w.horizon = N;
  w.Y = Y;
  w.U = Vector::Zero(N);
  return MheProblem(model, w, ArrivalCost{Vector::Constant(1, x_hat), Matrix::Constant(1, 1, pi), 0.0},
                    Weights{Vector::Constant(1, q), Vector::Constant(1, r)});
}

}  // namespace mhe::testing
