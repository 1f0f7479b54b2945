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

#include <vector>

#include "mhe/common.hpp"

namespace mhe {

/// Symmetric block-tridiagonal matrix with N+1 diagonal blocks of size n.
/// Only the upper band is stored; block (i+1, i) is upper[i] transposed.
struct BlockTridiagonal {
  std::vector<Matrix> diag;   // N + 1 blocks
  std::vector<Matrix> upper;  // N blocks, (i, i+1)

  BlockTridiagonal() = default;
  BlockTridiagonal(int num_blocks, int block_size);

  int num_blocks() const { return static_cast<int>(diag.size()); }
  int block_size() const { return diag.empty() ? 0 : static_cast<int>(diag.front().rows()); }
  Eigen::Index dimension() const {
    return static_cast<Eigen::Index>(num_blocks()) * block_size();
  }

  Matrix to_dense() const;
  Vector multiply(const Vector& x) const;
  // Upper bound on the spectral radius from Gershgorin discs.
  double gershgorin_bound() const;
  // Throws DimensionError unless every block has the advertised shape.
  void validate() const;
};

namespace kernels {

/// Y = (H + shift * I) X for a dense right-hand side X. Block rows are
/// independent, so the parallel form splits them across OpenMP threads and
/// produces bitwise the same result as the serial form.
void shifted_multiply(const BlockTridiagonal& H, double shift, const Matrix& X, Matrix& Y,
                      Execution exec = Execution::serial);

/// K <- K - alpha * ((H + beta * I) K - I), in place.
void preconditioner_update(const BlockTridiagonal& H, double beta, double alpha, Matrix& K,
                           Execution exec = Execution::serial);

}  // namespace kernels

/// Largest eigenvalue of a symmetric block-tridiagonal matrix by power
/// iteration. The iterate vector is kept between calls so successive, slowly
/// changing matrices converge in a handful of matvecs.
class PowerIteration {
 public:
  explicit PowerIteration(double tol = 1e-6, int max_iter = 500) : tol_(tol), max_iter_(max_iter) {}

  double lambda_max(const BlockTridiagonal& H);
  // Matvecs spent in the last call.
  int last_iterations() const { return last_iterations_; }
  // False when the last call hit max_iter and fell back to the Gershgorin bound.
  bool last_converged() const { return last_converged_; }

 private:
  double tol_;
  int max_iter_;
  Vector v_;
  int last_iterations_ = 0;
  bool last_converged_ = true;
};

// Dense symmetric eigenvalue extremes, for diagnostics and tests.
double min_eigenvalue(const Matrix& symmetric);
double max_eigenvalue(const Matrix& symmetric);

}  // namespace mhe
