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

#include "mhe/model.hpp"

namespace mhe {

struct EkfState {
  Vector x_hat;
  Matrix P;
};

struct EkfOptions {
  // (I - K H) P (I - K H)^T + K R K^T instead of (I - K H) P.
  bool joseph_form = false;
};

/// Prediction only: x- = f(x, u), P- = J_f P J_f^T + Q.
EkfState ekf_predict(const EkfState& s, const Vector& u, const SystemModel& model, const Matrix& Q);

/// One predict/update cycle; y measures the predicted state. The returned
/// covariance is symmetrized. Throws NumericalError if the innovation
/// covariance cannot be factored.
EkfState ekf_step(const EkfState& s, const Vector& u, const Vector& y, const SystemModel& model,
                  const Matrix& Q, const Matrix& R, const EkfOptions& opts = {});

}  // namespace mhe
