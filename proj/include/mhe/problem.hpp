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

#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "mhe/block_tridiagonal.hpp"
#include "mhe/model.hpp"
#include "mhe/objective.hpp"

namespace mhe {

/// Measurements y_{t-N} .. y_{t-1} and inputs u_{t-N} .. u_{t-1}, stacked.
struct Window {
  int t = 0;
  int horizon = 0;
  Vector Y;  // horizon * p
  Vector U;  // horizon * m

  static Window from_trajectory(std::span<const Vector> observations,
                                std::span<const Vector> inputs, int t, int horizon);
  Vector measurement(int i, int p) const { return Y.segment(i * p, p); }
  Vector input(int i, int m) const { return U.segment(i * m, m); }
};

/// Quadratic prior on the oldest window state. phi_star is carried for
/// reporting and never enters the objective.
struct ArrivalCost {
  Vector x_hat;
  Matrix Pi;
  double phi_star = 0.0;
};

/// Diagonal process (Q) and measurement (R) weights, stored by diagonal.
struct Weights {
  Vector q_diag;
  Vector r_diag;

  Matrix Q() const { return q_diag.asDiagonal(); }
  Matrix R() const { return r_diag.asDiagonal(); }
  void validate() const;
};

/// Stacked window states [x_{t-N}; ...; x_t].
class PackedState {
 public:
  PackedState(Vector xi, int state_dim);

  static PackedState pack(std::span<const Vector> states);
  static std::vector<Vector> unpack(const Vector& xi, int state_dim, int horizon);

  std::vector<Vector> unpack() const { return unpack(xi_, n_, horizon()); }
  Vector state(int i) const { return xi_.segment(i * n_, n_); }
  Vector newest() const { return state(horizon()); }
  const Vector& vector() const { return xi_; }
  int state_dim() const { return n_; }
  int horizon() const { return static_cast<int>(xi_.size() / n_) - 1; }

 private:
  Vector xi_;
  int n_;
};

/// One horizon window of the MHE least-squares problem.
class MheProblem {
 public:
  MheProblem(std::shared_ptr<const SystemModel> model, Window window, ArrivalCost arrival,
             Weights weights);

  const SystemModel& model() const { return *model_; }
  const std::shared_ptr<const SystemModel>& model_ptr() const { return model_; }
  const Window& window() const { return window_; }
  const ArrivalCost& arrival() const { return arrival_; }
  const Weights& weights() const { return weights_; }

  int horizon() const { return window_.horizon; }
  int state_dim() const { return model_->state_dim(); }
  Eigen::Index dimension() const {
    return static_cast<Eigen::Index>(horizon() + 1) * state_dim();
  }

  // Inverse weights, obtained by Cholesky solves against Pi and from the
  // diagonals of Q and R.
  const Matrix& pi_inverse() const { return pi_inv_; }
  const Vector& q_inverse() const { return q_inv_; }
  const Vector& r_inverse() const { return r_inv_; }

 private:
  std::shared_ptr<const SystemModel> model_;
  Window window_;
  ArrivalCost arrival_;
  Weights weights_;
  Matrix pi_inv_;
  Vector q_inv_;
  Vector r_inv_;
};

double objective(const MheProblem& p, const PackedState& xi);
Vector gradient(const MheProblem& p, const PackedState& xi);
/// Exact Hessian, assembled block by block; symmetric by construction.
BlockTridiagonal hessian(const MheProblem& p, const PackedState& xi);

/// Adapts an MheProblem to the solver interface. Holds a reference.
class MheObjective final : public Objective {
 public:
  explicit MheObjective(const MheProblem& p) : p_(p) {}

  Eigen::Index dimension() const override { return p_.dimension(); }
  double value(const Vector& xi) const override;
  Vector gradient(const Vector& xi) const override;
  BlockTridiagonal hessian(const Vector& xi) const override;

 private:
  const MheProblem& p_;
};

/// Arrival weight propagation:
///   S1 = J_h Pi J_h^T + R
///   S2 = J_f Pi J_h^T S1^{-1} J_h Pi J_f^T
///   Pi' = J_f Pi J_f^T - S2 + Q
/// Throws NumericalError when S1 cannot be Cholesky-factored.
Matrix riccati_update(const Matrix& Pi, const Matrix& J_f, const Matrix& J_h, const Matrix& Q,
                      const Matrix& R);

/// Shift the solved window by one state and append f(x_t, u_t).
PackedState warm_start(const PackedState& xi_hat, const SystemModel& model, const Vector& u_t);

// Problem snapshots for debugging and the check-convexity command.
std::shared_ptr<const SystemModel> model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const SystemModel& model);
nlohmann::json problem_to_json(const MheProblem& p);
MheProblem problem_from_json(const nlohmann::json& j);

}  // namespace mhe
