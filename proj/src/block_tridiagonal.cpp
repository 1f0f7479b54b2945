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

#include "mhe/block_tridiagonal.hpp"

#include <cmath>
#include <sstream>

#include <omp.h>

namespace mhe {

BlockTridiagonal::BlockTridiagonal(int num_blocks, int block_size)
    : diag(num_blocks, Matrix::Zero(block_size, block_size)),
      upper(num_blocks > 0 ? num_blocks - 1 : 0, Matrix::Zero(block_size, block_size)) {}

void BlockTridiagonal::validate() const {
  const int n = block_size();
  if (diag.empty()) throw DimensionError("block-tridiagonal: no diagonal blocks");
  if (upper.size() + 1 != diag.size()) {
    throw DimensionError("block-tridiagonal: need exactly one fewer off-diagonal block");
  }
  for (const Matrix& b : diag) {
    if (b.rows() != n || b.cols() != n) throw DimensionError("block-tridiagonal: ragged diag");
  }
  for (const Matrix& b : upper) {
    if (b.rows() != n || b.cols() != n) throw DimensionError("block-tridiagonal: ragged band");
  }
}

Matrix BlockTridiagonal::to_dense() const {
  const int n = block_size();
  Matrix dense = Matrix::Zero(dimension(), dimension());
  for (int i = 0; i < num_blocks(); ++i) dense.block(i * n, i * n, n, n) = diag[i];
  for (int i = 0; i + 1 < num_blocks(); ++i) {
    dense.block(i * n, (i + 1) * n, n, n) = upper[i];
    dense.block((i + 1) * n, i * n, n, n) = upper[i].transpose();
  }
  return dense;
}

Vector BlockTridiagonal::multiply(const Vector& x) const {
  if (x.size() != dimension()) throw DimensionError("block-tridiagonal multiply: size mismatch");
  const int n = block_size();
  const int nb = num_blocks();
  Vector y(x.size());
  for (int i = 0; i < nb; ++i) {
    auto yi = y.segment(i * n, n);
    yi.noalias() = diag[i] * x.segment(i * n, n);
    if (i + 1 < nb) yi.noalias() += upper[i] * x.segment((i + 1) * n, n);
    if (i > 0) yi.noalias() += upper[i - 1].transpose() * x.segment((i - 1) * n, n);
  }
  return y;
}

double BlockTridiagonal::gershgorin_bound() const {
  const int n = block_size();
  const int nb = num_blocks();
  double bound = 0.0;
  for (int i = 0; i < nb; ++i) {
    for (int r = 0; r < n; ++r) {
      double row = diag[i].row(r).cwiseAbs().sum();
      if (i + 1 < nb) row += upper[i].row(r).cwiseAbs().sum();
      if (i > 0) row += upper[i - 1].col(r).cwiseAbs().sum();
      bound = std::max(bound, row);
    }
  }
  return bound;
}

namespace kernels {
namespace {

void shifted_block_row(const BlockTridiagonal& H, double shift, const Matrix& X, Matrix& Y,
                       int i) {
  const int n = H.block_size();
  const int nb = H.num_blocks();
  auto Yi = Y.middleRows(i * n, n);
  Yi.noalias() = H.diag[i] * X.middleRows(i * n, n);
  if (i + 1 < nb) Yi.noalias() += H.upper[i] * X.middleRows((i + 1) * n, n);
  if (i > 0) Yi.noalias() += H.upper[i - 1].transpose() * X.middleRows((i - 1) * n, n);
  Yi += shift * X.middleRows(i * n, n);
}

}  // namespace

void shifted_multiply(const BlockTridiagonal& H, double shift, const Matrix& X, Matrix& Y,
                      Execution exec) {
  if (X.rows() != H.dimension()) throw DimensionError("shifted_multiply: size mismatch");
  Y.resize(X.rows(), X.cols());
  const int nb = H.num_blocks();
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nb; ++i) shifted_block_row(H, shift, X, Y, i);
  } else {
    for (int i = 0; i < nb; ++i) shifted_block_row(H, shift, X, Y, i);
  }
}

void preconditioner_update(const BlockTridiagonal& H, double beta, double alpha, Matrix& K,
                           Execution exec) {
  Matrix residual;
  shifted_multiply(H, beta, K, residual, exec);
  residual.diagonal().array() -= 1.0;
  K.noalias() -= alpha * residual;
}

}  // namespace kernels

double PowerIteration::lambda_max(const BlockTridiagonal& H) {
  const Eigen::Index dim = H.dimension();
  if (v_.size() != dim || !v_.allFinite() || v_.norm() == 0.0) {
    v_ = Vector::Ones(dim).normalized();
  }
  double lambda = 0.0;
  last_converged_ = false;
  for (last_iterations_ = 1; last_iterations_ <= max_iter_; ++last_iterations_) {
    Vector w = H.multiply(v_);
    const double wn = w.norm();
    if (wn == 0.0) {
      last_converged_ = true;
      return 0.0;
    }
    const double next = v_.dot(w);
    v_ = w / wn;
    if (std::abs(next - lambda) <= tol_ * std::max(1.0, std::abs(next))) {
      lambda = next;
      last_converged_ = true;
      break;
    }
    lambda = next;
  }
  // A dominant negative eigenvalue (indefinite H) says nothing useful about
  // the top of the spectrum; fall back to the disc bound.
  if (!last_converged_ || lambda < 0.0) return H.gershgorin_bound();
  return lambda;
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solver failed");
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solver failed");
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

}  // namespace mhe
