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

#include "mhe/convexity.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mhe {

std::string_view to_string(ConvexityVerdict v) {
  switch (v) {
    case ConvexityVerdict::certified_convex_psd: return "certified_convex_psd";
    case ConvexityVerdict::certified_convex_dominance: return "certified_convex_dominance";
    case ConvexityVerdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

bool check_psd(const Matrix& M, double tol) {
  if (M.rows() != M.cols()) throw std::invalid_argument("check_psd: matrix is not square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("check_psd: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev(0) >= -tol * std::max(1.0, ev(ev.size() - 1));
}

bool check_diag_dominant(const Matrix& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("check_diag_dominant: not square");
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    const double off = M.row(r).cwiseAbs().sum() - std::abs(M(r, r));
    if (std::abs(M(r, r)) < off) return false;
  }
  return true;
}

ConvexityBlock build_block(const MheProblem& p, const PackedState& xi, int i, double tol) {
  if (i < 0 || i >= p.horizon()) {
    throw std::out_of_range("build_block: index " + std::to_string(i) + " outside [0, N-1]");
  }
  if (xi.vector().size() != p.dimension() || xi.state_dim() != p.state_dim()) {
    throw DimensionError("build_block: packed state does not match the problem");
  }
  const SystemModel& model = p.model();
  const int n = p.state_dim();
  const int m = model.input_dim();
  const int q = model.obs_dim();
  const Vector x = xi.state(i);
  const Vector x_next = xi.state(i + 1);
  const Vector u = p.window().input(i, m);
  const auto Qinv = p.q_inverse().asDiagonal();
  const auto Rinv = p.r_inverse().asDiagonal();

  const Matrix Jf = model.dynamics_jacobian(x, u);
  const Matrix Jh = model.observation_jacobian(x);
  const Vector vf = p.q_inverse().cwiseProduct(model.dynamics(x, u) - x_next);
  const Vector vh = p.r_inverse().cwiseProduct(model.observe(x) - p.window().measurement(i, q));
  const HessianTensor Hf = model.dynamics_hessian(x, u);
  const HessianTensor Hh = model.observation_hessian(x);

  Matrix A11 = Jf.transpose() * Qinv * Jf + Jh.transpose() * Rinv * Jh;
  for (int k = 0; k < n; ++k) A11 += vf(k) * Hf[k];
  for (int k = 0; k < q; ++k) A11 += vh(k) * Hh[k];
  if (i == 0) A11 += p.pi_inverse();
  A11 = 0.5 * (A11 + A11.transpose()).eval();

  ConvexityBlock b;
  b.index = i;
  b.matrix.resize(2 * n, 2 * n);
  b.matrix.topLeftCorner(n, n) = A11;
  b.matrix.topRightCorner(n, n) = -Jf.transpose() * Qinv;
  b.matrix.bottomLeftCorner(n, n) = -(Qinv * Jf);
  b.matrix.bottomRightCorner(n, n) = Matrix(Qinv);
  b.min_eigenvalue = min_eigenvalue(b.matrix);
  b.psd = check_psd(b.matrix, tol);
  b.diag_dominant = check_diag_dominant(b.matrix);
  b.a11_diag_nonneg = (A11.diagonal().array() >= 0.0).all();
  return b;
}

ConvexityReport certify(const MheProblem& p, const PackedState& xi, double tol) {
  ConvexityReport r;
  r.all_psd = true;
  r.all_diag_dominant = true;
  r.diag_nonneg = true;
  for (int i = 0; i < p.horizon(); ++i) {
    r.blocks.push_back(build_block(p, xi, i, tol));
    const ConvexityBlock& b = r.blocks.back();
    r.all_psd = r.all_psd && b.psd;
    r.all_diag_dominant = r.all_diag_dominant && b.diag_dominant;
    r.diag_nonneg = r.diag_nonneg && b.a11_diag_nonneg;
  }
  if (r.all_psd) {
    r.verdict = ConvexityVerdict::certified_convex_psd;
  } else if (r.dominance_route()) {
    r.verdict = ConvexityVerdict::certified_convex_dominance;
  } else {
    r.verdict = ConvexityVerdict::inconclusive;
  }
  return r;
}

Matrix embedded_block_sum(const MheProblem& p, const PackedState& xi) {
  const int n = p.state_dim();
  Matrix sum = Matrix::Zero(p.dimension(), p.dimension());
  for (int i = 0; i < p.horizon(); ++i) {
    sum.block(i * n, i * n, 2 * n, 2 * n) += 2.0 * build_block(p, xi, i).matrix;
  }
  return sum;
}

bool hessian_sum_check(const MheProblem& p, const PackedState& xi, double tol) {
  const ConvexityReport r = certify(p, xi, tol);
  if (!r.all_psd) return true;
  const Matrix H = hessian(p, xi).to_dense();
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev(0) >= -tol * std::max(1.0, ev(ev.size() - 1));
}

}  // namespace mhe
