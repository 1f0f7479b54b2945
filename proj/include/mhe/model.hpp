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
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "mhe/common.hpp"

namespace mhe {

// Second derivatives of a vector-valued map: element i is the n x n Hessian
// of output component i with respect to the state.
using HessianTensor = std::vector<Matrix>;

// Discrete-time system x+ = f(x, u), y = h(x) with derivatives in x.
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int obs_dim() const = 0;

  virtual Vector dynamics(const Vector& x, const Vector& u) const = 0;
  virtual Vector observe(const Vector& x) const = 0;

  // n x n
  virtual Matrix dynamics_jacobian(const Vector& x, const Vector& u) const = 0;
  // p x n
  virtual Matrix observation_jacobian(const Vector& x) const = 0;
  virtual HessianTensor dynamics_hessian(const Vector& x, const Vector& u) const = 0;
  virtual HessianTensor observation_hessian(const Vector& x) const = 0;

  // False when derivatives are approximated by finite differences.
  virtual bool analytic_derivatives() const { return true; }
};

/// Unicycle kinematics under forward Euler: state (px, py, heading),
/// input (forward speed, turn rate), observation (px, py).
Vector unicycle_step(const Vector& x, const Vector& u, double dt);
Vector unicycle_observe(const Vector& x);

struct UnicycleDerivatives {
  Matrix J_f;          // 3x3
  Matrix J_h;          // 2x3
  HessianTensor H_f;   // 3 x (3x3)
  HessianTensor H_h;   // 2 x (3x3), identically zero
};

UnicycleDerivatives unicycle_derivatives(const Vector& x, const Vector& u, double dt);

class UnicycleModel final : public SystemModel {
 public:
  explicit UnicycleModel(double dt);

  double dt() const { return dt_; }

  int state_dim() const override { return 3; }
  int input_dim() const override { return 2; }
  int obs_dim() const override { return 2; }
  Vector dynamics(const Vector& x, const Vector& u) const override;
  Vector observe(const Vector& x) const override;
  Matrix dynamics_jacobian(const Vector& x, const Vector& u) const override;
  Matrix observation_jacobian(const Vector& x) const override;
  HessianTensor dynamics_hessian(const Vector& x, const Vector& u) const override;
  HessianTensor observation_hessian(const Vector& x) const override;

 private:
  double dt_;
};

/// x+ = A x + B u, y = C x. Curvature tensors vanish.
class LinearModel final : public SystemModel {
 public:
  LinearModel(Matrix A, Matrix B, Matrix C);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }

  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int input_dim() const override { return static_cast<int>(B_.cols()); }
  int obs_dim() const override { return static_cast<int>(C_.rows()); }
  Vector dynamics(const Vector& x, const Vector& u) const override;
  Vector observe(const Vector& x) const override;
  Matrix dynamics_jacobian(const Vector& x, const Vector& u) const override;
  Matrix observation_jacobian(const Vector& x) const override;
  HessianTensor dynamics_hessian(const Vector& x, const Vector& u) const override;
  HessianTensor observation_hessian(const Vector& x) const override;

 private:
  Matrix A_, B_, C_;
};

/// Wraps user-supplied f and h and approximates every derivative with
/// central differences. Jacobians are accurate to roughly 1e-9 relative and
/// Hessian tensors to roughly 1e-6 for well-scaled smooth maps; prefer an
/// analytic model where one exists.
class FiniteDifferenceModel final : public SystemModel {
 public:
  using DynamicsFn = std::function<Vector(const Vector&, const Vector&)>;
  using ObservationFn = std::function<Vector(const Vector&)>;

  FiniteDifferenceModel(int n, int m, int p, DynamicsFn f, ObservationFn h);

  int state_dim() const override { return n_; }
  int input_dim() const override { return m_; }
  int obs_dim() const override { return p_; }
  Vector dynamics(const Vector& x, const Vector& u) const override { return f_(x, u); }
  Vector observe(const Vector& x) const override { return h_(x); }
  Matrix dynamics_jacobian(const Vector& x, const Vector& u) const override;
  Matrix observation_jacobian(const Vector& x) const override;
  HessianTensor dynamics_hessian(const Vector& x, const Vector& u) const override;
  HessianTensor observation_hessian(const Vector& x) const override;
  bool analytic_derivatives() const override { return false; }

 private:
  int n_, m_, p_;
  DynamicsFn f_;
  ObservationFn h_;
};

// Central-difference helpers, also used as test oracles.
Matrix numeric_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& x,
                        double step = 1e-6);
HessianTensor numeric_hessian_tensor(const std::function<Vector(const Vector&)>& fn,
                                     const Vector& x, double step = 1e-4);

/// Zero-mean Gaussian noise saturated at +/- clip, per component.
struct NoiseSpec {
  Vector process_std;
  Vector meas_std;
  double clip = 1.5;
  std::uint64_t seed = 0;

  static NoiseSpec from_variance(const Vector& process_var, const Vector& meas_var,
                                 double clip, std::uint64_t seed);
  void validate() const;
};

struct Trajectory {
  std::vector<Vector> states;        // T + 1
  std::vector<Vector> inputs;        // T
  std::vector<Vector> observations;  // T, y_i measures states[i]
  double dt = 0.0;

  int steps() const { return static_cast<int>(inputs.size()); }
  void validate() const;
};

/// Rolls the model forward from x0 adding clipped Gaussian process noise after
/// each dynamics step and measurement noise on every observation. The stream
/// is fully determined by noise.seed.
Trajectory simulate(const SystemModel& model, const Vector& x0, std::span<const Vector> inputs,
                    const NoiseSpec& noise, double dt);

/// u_i = (speed, i / turn_divisor) for i = 0 .. T-1.
std::vector<Vector> spiral_inputs(int T, double speed = 3.0, double turn_divisor = 200.0);

/// CSV with header t,x1..xn,u1..um,y1..yp. The final row (t = T) carries the
/// state only; input and observation cells are left empty.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace mhe
