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

#include <string_view>
#include <vector>

#include "mhe/problem.hpp"

namespace mhe {

/// 2n x 2n block
///   [ A11              -J_f^T Q^{-1} ]
///   [ -Q^{-1} J_f       Q^{-1}       ]
/// evaluated at window state i, where A11 collects the Gauss-Newton terms,
/// the residual-weighted curvature of f and h, and Pi^{-1} when i = 0.
struct ConvexityBlock {
  int index = 0;
  Matrix matrix;
  double min_eigenvalue = 0.0;
  bool psd = false;
  bool diag_dominant = false;
  bool a11_diag_nonneg = false;
};

enum class ConvexityVerdict { certified_convex_psd, certified_convex_dominance, inconclusive };
std::string_view to_string(ConvexityVerdict v);

struct ConvexityReport {
  std::vector<ConvexityBlock> blocks;
  bool all_psd = false;
  bool all_diag_dominant = false;
  bool diag_nonneg = false;
  ConvexityVerdict verdict = ConvexityVerdict::inconclusive;

  // True when the dominance route certifies, whatever the headline verdict.
  bool dominance_route() const { return all_diag_dominant && diag_nonneg; }
};

ConvexityBlock build_block(const MheProblem& p, const PackedState& xi, int i, double tol = 1e-8);

/// lambda_min(M) >= -tol * max(1, lambda_max(M)). Throws std::invalid_argument
/// if M is not symmetric to 1e-12 (relative to its largest entry).
bool check_psd(const Matrix& M, double tol = 1e-8);

/// |M_ii| >= sum_{j != i} |M_ij| for every row.
bool check_diag_dominant(const Matrix& M);

/// Sufficient test only: an inconclusive verdict is not a non-convexity claim.
ConvexityReport certify(const MheProblem& p, const PackedState& xi, double tol = 1e-8);

/// If every block is PSD, the assembled Hessian must satisfy
/// lambda_min(H) >= -tol * max(1, lambda_max(H)). Returns false only when that
/// implication is violated.
bool hessian_sum_check(const MheProblem& p, const PackedState& xi, double tol = 1e-8);

/// 2 * sum_i embed(block_i) at rows/cols i..i+1, which reproduces the
/// assembled Hessian exactly.
Matrix embedded_block_sum(const MheProblem& p, const PackedState& xi);

}  // namespace mhe
