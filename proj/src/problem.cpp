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

#include "mhe/problem.hpp"

#include <sstream>
#include <string>

namespace mhe {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw DimensionError("ragged matrix in JSON");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace

Window Window::from_trajectory(std::span<const Vector> observations,
                               std::span<const Vector> inputs, int t, int horizon) {
  require(horizon >= 1, "window horizon must be at least 1");
  require(t >= horizon, "window requires t >= N");
  require(static_cast<std::size_t>(t) <= observations.size() &&
              static_cast<std::size_t>(t) <= inputs.size(),
          "window extends past the recorded data");
  const Eigen::Index p = observations.front().size();
  const Eigen::Index m = inputs.front().size();
  Window w;
  w.t = t;
  w.horizon = horizon;
  w.Y.resize(horizon * p);
  w.U.resize(horizon * m);
  for (int i = 0; i < horizon; ++i) {
    w.Y.segment(i * p, p) = observations[t - horizon + i];
    w.U.segment(i * m, m) = inputs[t - horizon + i];
  }
  return w;
}

void Weights::validate() const {
  if (q_diag.size() == 0 || r_diag.size() == 0) throw ConfigError("weights must be non-empty");
  if ((q_diag.array() <= 0.0).any() || (r_diag.array() <= 0.0).any()) {
    throw ConfigError("weight diagonals must be strictly positive");
  }
}

PackedState::PackedState(Vector xi, int state_dim) : xi_(std::move(xi)), n_(state_dim) {
  require(n_ > 0, "packed state: state dimension must be positive");
  require(xi_.size() % n_ == 0 && xi_.size() >= 2 * n_,
          "packed state: length must be (N+1)*n with N >= 1");
}

PackedState PackedState::pack(std::span<const Vector> states) {
  require(states.size() >= 2, "pack: need at least two states");
  const Eigen::Index n = states.front().size();
  Vector xi(static_cast<Eigen::Index>(states.size()) * n);
  for (std::size_t i = 0; i < states.size(); ++i) {
    require(states[i].size() == n, "pack: states differ in dimension");
    xi.segment(static_cast<Eigen::Index>(i) * n, n) = states[i];
  }
  return PackedState(std::move(xi), static_cast<int>(n));
}

std::vector<Vector> PackedState::unpack(const Vector& xi, int state_dim, int horizon) {
  require(state_dim > 0 && horizon >= 0, "unpack: bad dimensions");
  require(xi.size() == static_cast<Eigen::Index>(horizon + 1) * state_dim,
          "unpack: length is not (N+1)*n");
  std::vector<Vector> states(horizon + 1);
  for (int i = 0; i <= horizon; ++i) states[i] = xi.segment(i * state_dim, state_dim);
  return states;
}

MheProblem::MheProblem(std::shared_ptr<const SystemModel> model, Window window,
                       ArrivalCost arrival, Weights weights)
    : model_(std::move(model)),
      window_(std::move(window)),
      arrival_(std::move(arrival)),
      weights_(std::move(weights)) {
  require(model_ != nullptr, "problem: null model");
  const int n = model_->state_dim();
  const int m = model_->input_dim();
  const int p = model_->obs_dim();
  const int N = window_.horizon;
  require(N >= 1, "problem: horizon must be at least 1");
  require(window_.t >= N, "problem: window requires t >= N");
  require(window_.Y.size() == static_cast<Eigen::Index>(N) * p, "problem: |Y| != N*p");
  require(window_.U.size() == static_cast<Eigen::Index>(N) * m, "problem: |U| != N*m");
  require(arrival_.x_hat.size() == n, "problem: arrival anchor has wrong dimension");
  require(arrival_.Pi.rows() == n && arrival_.Pi.cols() == n, "problem: Pi must be n x n");
  require(weights_.q_diag.size() == n, "problem: Q must be n x n");
  require(weights_.r_diag.size() == p, "problem: R must be p x p");
  weights_.validate();

  if (!arrival_.Pi.isApprox(arrival_.Pi.transpose(), 1e-12)) {
    throw NumericalError("problem: Pi is not symmetric");
  }
  Eigen::LLT<Matrix> llt(arrival_.Pi);
  if (llt.info() != Eigen::Success) throw NumericalError("problem: Pi is not positive definite");
  pi_inv_ = llt.solve(Matrix::Identity(n, n));
  pi_inv_ = 0.5 * (pi_inv_ + pi_inv_.transpose()).eval();
  q_inv_ = weights_.q_diag.cwiseInverse();
  r_inv_ = weights_.r_diag.cwiseInverse();
}

namespace {

void require_xi(const MheProblem& p, const PackedState& xi) {
  require(xi.state_dim() == p.state_dim() && xi.vector().size() == p.dimension(),
          "packed state does not match the problem dimensions");
}

}  // namespace

double objective(const MheProblem& p, const PackedState& xi) {
  require_xi(p, xi);
  const SystemModel& model = p.model();
  const int n = p.state_dim();
  const int m = model.input_dim();
  const int q = model.obs_dim();
  const Vector& v = xi.vector();

  const Vector d0 = v.head(n) - p.arrival().x_hat;
  double cost = d0.dot(p.pi_inverse() * d0);
  for (int i = 0; i < p.horizon(); ++i) {
    const Vector xi_i = v.segment(i * n, n);
    const Vector w = v.segment((i + 1) * n, n) - model.dynamics(xi_i, p.window().input(i, m));
    const Vector e = p.window().measurement(i, q) - model.observe(xi_i);
    cost += w.dot(p.q_inverse().cwiseProduct(w)) + e.dot(p.r_inverse().cwiseProduct(e));
  }
  return cost;
}

Vector gradient(const MheProblem& p, const PackedState& xi) {
  require_xi(p, xi);
  const SystemModel& model = p.model();
  const int n = p.state_dim();
  const int m = model.input_dim();
  const int q = model.obs_dim();
  const Vector& v = xi.vector();

  Vector g = Vector::Zero(v.size());
  g.head(n) = 2.0 * p.pi_inverse() * (v.head(n) - p.arrival().x_hat);
  Vector x(n), u(m);
  for (int i = 0; i < p.horizon(); ++i) {
    x = v.segment(i * n, n);
    u = p.window().input(i, m);
    const Vector w = p.q_inverse().cwiseProduct(v.segment((i + 1) * n, n) - model.dynamics(x, u));
    const Vector e = p.r_inverse().cwiseProduct(p.window().measurement(i, q) - model.observe(x));
    g.segment((i + 1) * n, n) += 2.0 * w;
    g.segment(i * n, n) -= 2.0 * (model.dynamics_jacobian(x, u).transpose() * w +
                                  model.observation_jacobian(x).transpose() * e);
  }
  return g;
}

BlockTridiagonal hessian(const MheProblem& p, const PackedState& xi) {
  require_xi(p, xi);
  const SystemModel& model = p.model();
  const int n = p.state_dim();
  const int m = model.input_dim();
  const int q = model.obs_dim();
  const int N = p.horizon();
  const Vector& v = xi.vector();
  const auto Qinv = p.q_inverse().asDiagonal();
  const auto Rinv = p.r_inverse().asDiagonal();

  BlockTridiagonal H(N + 1, n);
  H.diag[0] = 2.0 * p.pi_inverse();
  Vector x(n), u(m), vf(n), vh(q);
  Matrix block(n, n);
  for (int i = 0; i < N; ++i) {
    x = v.segment(i * n, n);
    u = p.window().input(i, m);
    const Matrix Jf = model.dynamics_jacobian(x, u);
    const Matrix Jh = model.observation_jacobian(x);
    // Curvature weights (f - x_{i+1}) .* Q^{-1} and (h - y_i) .* R^{-1}.
    vf = p.q_inverse().cwiseProduct(model.dynamics(x, u) - v.segment((i + 1) * n, n));
    vh = p.r_inverse().cwiseProduct(model.observe(x) - p.window().measurement(i, q));

    block.noalias() = Jf.transpose() * Qinv * Jf;
    block.noalias() += Jh.transpose() * Rinv * Jh;
    const HessianTensor Hf = model.dynamics_hessian(x, u);
    const HessianTensor Hh = model.observation_hessian(x);
    for (int k = 0; k < n; ++k) block += vf(k) * Hf[k];
    for (int k = 0; k < q; ++k) block += vh(k) * Hh[k];

    H.diag[i] += 2.0 * block;
    H.diag[i + 1].diagonal() += 2.0 * p.q_inverse();
    H.upper[i].noalias() = -2.0 * Jf.transpose() * Qinv;
  }
  // Enforce exact symmetry of the diagonal blocks against rounding in the
  // curvature sums.
  for (Matrix& d : H.diag) {
    for (int r = 0; r < n; ++r) {
      for (int c = r + 1; c < n; ++c) d(r, c) = d(c, r) = 0.5 * (d(r, c) + d(c, r));
    }
  }
  return H;
}

double MheObjective::value(const Vector& xi) const {
  return objective(p_, PackedState(xi, p_.state_dim()));
}

Vector MheObjective::gradient(const Vector& xi) const {
  return mhe::gradient(p_, PackedState(xi, p_.state_dim()));
}

BlockTridiagonal MheObjective::hessian(const Vector& xi) const {
  return mhe::hessian(p_, PackedState(xi, p_.state_dim()));
}

Matrix riccati_update(const Matrix& Pi, const Matrix& J_f, const Matrix& J_h, const Matrix& Q,
                      const Matrix& R) {
  const Eigen::Index n = Pi.rows();
  const Eigen::Index p = J_h.rows();
  require(Pi.cols() == n && J_f.rows() == n && J_f.cols() == n && J_h.cols() == n &&
              Q.rows() == n && Q.cols() == n && R.rows() == p && R.cols() == p,
          "riccati_update: inconsistent dimensions");

  const Matrix S1 = J_h * Pi * J_h.transpose() + R;
  Eigen::LLT<Matrix> llt(S1);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("riccati_update: S1 = J_h Pi J_h^T + R is singular or indefinite");
  }
  const Matrix cross = J_h * Pi * J_f.transpose();  // p x n
  const Matrix S2 = cross.transpose() * llt.solve(cross);
  Matrix next = J_f * Pi * J_f.transpose() - S2 + Q;
  return 0.5 * (next + next.transpose());
}

PackedState warm_start(const PackedState& xi_hat, const SystemModel& model, const Vector& u_t) {
  const int n = xi_hat.state_dim();
  require(n == model.state_dim(), "warm_start: model and state dimensions differ");
  const Vector& v = xi_hat.vector();
  Vector next(v.size());
  next.head(v.size() - n) = v.tail(v.size() - n);
  next.tail(n) = model.dynamics(xi_hat.newest(), u_t);
  return PackedState(std::move(next), n);
}

QuadraticObjective::QuadraticObjective(BlockTridiagonal A, Vector center)
    : A_(std::move(A)), center_(std::move(center)) {
  A_.validate();
  require(A_.dimension() == center_.size(), "quadratic: center and A differ in size");
}

double QuadraticObjective::value(const Vector& xi) const {
  const Vector d = xi - center_;
  return 0.5 * d.dot(A_.multiply(d));
}

Vector QuadraticObjective::gradient(const Vector& xi) const { return A_.multiply(xi - center_); }

std::shared_ptr<const SystemModel> model_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "unicycle") return std::make_shared<UnicycleModel>(j.at("dt").get<double>());
  if (type == "linear") {
    return std::make_shared<LinearModel>(matrix_from_json(j.at("A")), matrix_from_json(j.at("B")),
                                         matrix_from_json(j.at("C")));
  }
  throw ConfigError("unknown model type '" + type + "'");
}

nlohmann::json model_to_json(const SystemModel& model) {
  if (const auto* uni = dynamic_cast<const UnicycleModel*>(&model)) {
    return {{"type", "unicycle"}, {"dt", uni->dt()}};
  }
  if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
    return {{"type", "linear"},
            {"A", matrix_to_json(lin->A())},
            {"B", matrix_to_json(lin->B())},
            {"C", matrix_to_json(lin->C())}};
  }
  throw ConfigError("model type cannot be serialized");
}

nlohmann::json problem_to_json(const MheProblem& p) {
  return {{"model", model_to_json(p.model())},
          {"window",
           {{"t", p.window().t},
            {"N", p.window().horizon},
            {"Y", vector_to_json(p.window().Y)},
            {"U", vector_to_json(p.window().U)}}},
          {"weights", {{"Q", vector_to_json(p.weights().q_diag)}, {"R", vector_to_json(p.weights().r_diag)}}},
          {"arrival",
           {{"x_hat", vector_to_json(p.arrival().x_hat)},
            {"Pi", matrix_to_json(p.arrival().Pi)},
            {"phi_star", p.arrival().phi_star}}}};
}

MheProblem problem_from_json(const nlohmann::json& j) {
  auto model = model_from_json(j.at("model"));
  const auto& jw = j.at("window");
  Window w;
  w.t = jw.at("t").get<int>();
  w.horizon = jw.at("N").get<int>();
  w.Y = vector_from_json(jw.at("Y"));
  w.U = vector_from_json(jw.at("U"));
  Weights weights{vector_from_json(j.at("weights").at("Q")),
                  vector_from_json(j.at("weights").at("R"))};
  const auto& ja = j.at("arrival");
  ArrivalCost arrival{vector_from_json(ja.at("x_hat")), matrix_from_json(ja.at("Pi")),
                      ja.value("phi_star", 0.0)};
  return MheProblem(std::move(model), std::move(w), std::move(arrival), std::move(weights));
}

}  // namespace mhe
