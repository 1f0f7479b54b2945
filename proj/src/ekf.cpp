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

#include "mhe/ekf.hpp"

namespace mhe {

EkfState ekf_predict(const EkfState& s, const Vector& u, const SystemModel& model,
                     const Matrix& Q) {
  const int n = model.state_dim();
  if (s.x_hat.size() != n || s.P.rows() != n || s.P.cols() != n || Q.rows() != n ||
      Q.cols() != n) {
    throw DimensionError("ekf: state, covariance or Q has the wrong dimension");
  }
  const Matrix F = model.dynamics_jacobian(s.x_hat, u);
  EkfState out{model.dynamics(s.x_hat, u), F * s.P * F.transpose() + Q};
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  return out;
}

EkfState ekf_step(const EkfState& s, const Vector& u, const Vector& y, const SystemModel& model,
                  const Matrix& Q, const Matrix& R, const EkfOptions& opts) {
  const int n = model.state_dim();
  const int p = model.obs_dim();
  if (y.size() != p || R.rows() != p || R.cols() != p) {
    throw DimensionError("ekf: observation or R has the wrong dimension");
  }
  EkfState prior = ekf_predict(s, u, model, Q);

  const Matrix Hj = model.observation_jacobian(prior.x_hat);
  const Matrix S = Hj * prior.P * Hj.transpose() + R;
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("ekf: innovation covariance is singular");
  // K = P- H^T S^{-1}, computed as (S^{-1} H P-)^T.
  const Matrix K = llt.solve(Hj * prior.P).transpose();

  EkfState post;
  post.x_hat = prior.x_hat + K * (y - model.observe(prior.x_hat));
  const Matrix I_KH = Matrix::Identity(n, n) - K * Hj;
  if (opts.joseph_form) {
    post.P = I_KH * prior.P * I_KH.transpose() + K * R * K.transpose();
  } else {
    post.P = I_KH * prior.P;
  }
  post.P = 0.5 * (post.P + post.P.transpose()).eval();
  return post;
}

}  // namespace mhe
