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


#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>
#include <stdexcept>

#include "mhe/convexity.hpp"
#include "test_util.hpp"

namespace mhe {
namespace {

using testing::random_unicycle_problem;
using testing::random_vector;

double lambda_min(const Matrix& M) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(M, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

Matrix m22(double a, double b, double c, double d) {
  Matrix M(2, 2);
  M << a, b, c, d;
  return M;
}

MheProblem scalar_instance(int N) {
  return testing::scalar_linear_problem(N, 1.0, 1.0, 1.0, 1.0, 1.0, Vector::Zero(N), 0.0);
}

TEST(CheckPsd, Examples) {
  EXPECT_TRUE(check_psd(m22(2, -1, -1, 1)));
  EXPECT_FALSE(check_psd(m22(0, 1, 1, 0)));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    Matrix A(4, 6);
    for (int i = 0; i < 24; ++i) A(i / 6, i % 6) = std::normal_distribution<double>()(rng);
    EXPECT_TRUE(check_psd(A.transpose() * A));
  }
  EXPECT_THROW(check_psd(m22(1, 0, 1e-3, 1)), std::invalid_argument);
}

TEST(CheckDiagDominant, Examples) {
  EXPECT_TRUE(check_diag_dominant(m22(2, -1, -1, 1)));
  EXPECT_FALSE(check_diag_dominant(m22(1, 2, 0, 1)));
  EXPECT_TRUE(check_diag_dominant(Matrix::Identity(5, 5)));
}

TEST(BuildBlock, ScalarLinear) {
  const MheProblem p = scalar_instance(3);
  const PackedState xi(Vector::Zero(4), 1);
  EXPECT_TRUE(build_block(p, xi, 1).matrix.isApprox(m22(2, -1, -1, 1), 1e-15));
  // Block 0 also carries the arrival weight.
  EXPECT_TRUE(build_block(p, xi, 0).matrix.isApprox(m22(3, -1, -1, 1), 1e-15));
  EXPECT_THROW(build_block(p, xi, 3), std::out_of_range);
  EXPECT_THROW(build_block(p, xi, -1), std::out_of_range);
}

TEST(BuildBlock, LinearClosedForm) {
  Matrix A(2, 2), C(1, 2);
  A << 0.9, 0.3, -0.2, 1.1;
  C << 1.0, -0.5;
  auto model = std::make_shared<LinearModel>(A, Matrix::Zero(2, 1), C);
  std::mt19937_64 rng(2);
  Window w{3, 3, random_vector(3, rng), Vector::Zero(3)};
  Vector q(2), r(1);
  q << 0.4, 2.0;
  r << 0.7;
  const MheProblem p(model, w, ArrivalCost{Vector::Zero(2), Matrix::Identity(2, 2), 0.0},
                     Weights{q, r});
  const PackedState xi(random_vector(8, rng), 2);
  const Matrix Qi = q.cwiseInverse().asDiagonal(), Ri = r.cwiseInverse().asDiagonal();
  Matrix expected(4, 4);
  expected << A.transpose() * Qi * A + C.transpose() * Ri * C, -A.transpose() * Qi, -Qi * A, Qi;
  for (int i = 1; i < 3; ++i) {
    EXPECT_TRUE(build_block(p, xi, i).matrix.isApprox(expected, 1e-14)) << "block " << i;
  }
}

TEST(BuildBlock, ResidualFreeUnicycle) {
  const auto model = std::make_shared<UnicycleModel>(0.2);
  const Trajectory tr = simulate(*model, Vector::Zero(3), spiral_inputs(20),
                                 NoiseSpec{Vector::Zero(3), Vector::Zero(2), 1.5, 0}, 0.2);
  const MheProblem p(model, Window::from_trajectory(tr.observations, tr.inputs, 10, 4),
                     ArrivalCost{tr.states[6], Matrix::Identity(3, 3), 0.0},
                     Weights{Vector::Constant(3, 0.01), Vector::Constant(2, 0.16)});
  const PackedState xi = PackedState::pack(std::span<const Vector>(tr.states).subspan(6, 5));
  for (int i = 0; i < 4; ++i) {
    const Matrix Jf = model->dynamics_jacobian(xi.state(i), tr.inputs[6 + i]);
    const Matrix Jh = model->observation_jacobian(xi.state(i));
    Matrix A11 = Jf.transpose() * p.q_inverse().asDiagonal() * Jf +
                 Jh.transpose() * p.r_inverse().asDiagonal() * Jh;
    if (i == 0) A11 += p.pi_inverse();
    EXPECT_TRUE(build_block(p, xi, i).matrix.topLeftCorner(3, 3).isApprox(A11, 1e-12));
  }
}

TEST(Certify, ScalarLinearBothRoutes) {
  const MheProblem p = scalar_instance(4);
  const ConvexityReport r = certify(p, PackedState(Vector::Zero(5), 1));
  EXPECT_EQ(r.verdict, ConvexityVerdict::certified_convex_psd);
  EXPECT_TRUE(r.all_psd);
  EXPECT_TRUE(r.dominance_route());
}

TEST(Certify, NoiseFreeUnicycleWindows) {
  const auto model = std::make_shared<UnicycleModel>(0.2);
  const Trajectory tr = simulate(*model, Vector::Zero(3), spiral_inputs(200),
                                 NoiseSpec{Vector::Zero(3), Vector::Zero(2), 1.5, 0}, 0.2);
  for (int N : {5, 20}) {
    for (int t = N; t <= 200; t += 15) {
      const MheProblem p(model, Window::from_trajectory(tr.observations, tr.inputs, t, N),
                         ArrivalCost{tr.states[t - N], Matrix::Identity(3, 3), 0.0},
                         Weights{Vector::Constant(3, 0.01), Vector::Constant(2, 0.16)});
      const PackedState xi = PackedState::pack(std::span<const Vector>(tr.states).subspan(t - N, N + 1));
      EXPECT_EQ(certify(p, xi).verdict, ConvexityVerdict::certified_convex_psd) << "t=" << t;
    }
  }
}

TEST(Certify, FabricatedIndefiniteBlockIsInconclusive) {
  // A large dynamics residual along the heading direction makes the
  // curvature term of block 0 dominate with the wrong sign.
  const auto model = std::make_shared<UnicycleModel>(0.2);
  Window w{2, 2, Vector::Zero(4), (Vector(4) << 3, 0, 3, 0).finished()};
  const MheProblem p(model, w, ArrivalCost{Vector::Zero(3), Matrix::Identity(3, 3), 0.0},
                     Weights{Vector::Constant(3, 0.01), Vector::Constant(2, 0.16)});
  Vector xi = Vector::Zero(9);
  xi(3) = -50.0;  // x_1 far behind f(x_0) = (0.6, 0, 0)
  const ConvexityReport r = certify(p, PackedState(xi, 3));
  const Matrix& B0 = r.blocks[0].matrix;
  EXPECT_LT(lambda_min(B0), 0.0);
  EXPECT_NEAR(r.blocks[0].min_eigenvalue, lambda_min(B0), 1e-9 * B0.norm());
  EXPECT_EQ(r.verdict, ConvexityVerdict::inconclusive);
  EXPECT_FALSE(r.all_psd);
}

TEST(BlockSum, ReproducesHessian) {
  std::mt19937_64 rng(3);
  for (int N : {1, 2, 6}) {
    const MheProblem p = random_unicycle_problem(rng, N);
    const PackedState xi(random_vector(p.dimension(), rng), 3);
    EXPECT_TRUE(embedded_block_sum(p, xi).isApprox(hessian(p, xi).to_dense(), 1e-12));
  }
}

TEST(BlockSum, SingleWindowHasNoExtraTerms) {
  std::mt19937_64 rng(4);
  const MheProblem p = random_unicycle_problem(rng, 1);
  const PackedState xi(random_vector(6, rng), 3);
  const Matrix H = hessian(p, xi).to_dense();
  EXPECT_TRUE(H.isApprox(2.0 * build_block(p, xi, 0).matrix, 1e-12));
}

TEST(BlockSum, ImplicationOnRandomPoints) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const MheProblem p = random_unicycle_problem(rng, 1 + k % 5);
    const PackedState xi(random_vector(p.dimension(), rng, 0.3), 3);
    EXPECT_TRUE(hessian_sum_check(p, xi));
  }
  const MheProblem lin = scalar_instance(5);
  EXPECT_TRUE(hessian_sum_check(lin, PackedState(Vector::Zero(6), 1)));
  EXPECT_GE(lambda_min(hessian(lin, PackedState(Vector::Zero(6), 1)).to_dense()), 0.0);
}

TEST(Certify, BlocksAreSymmetric) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const MheProblem p = random_unicycle_problem(rng, 3);
    const ConvexityReport r = certify(p, PackedState(random_vector(12, rng), 3));
    for (const ConvexityBlock& b : r.blocks) {
      EXPECT_LE((b.matrix - b.matrix.transpose()).cwiseAbs().maxCoeff(),
                1e-12 * b.matrix.cwiseAbs().maxCoeff());
      // Dominance with a nonnegative diagonal must agree with the PSD route.
      if (b.diag_dominant && (b.matrix.diagonal().array() >= 0).all()) EXPECT_TRUE(b.psd);
    }
    if (r.verdict == ConvexityVerdict::certified_convex_psd) EXPECT_TRUE(r.all_psd);
  }
}

}  // namespace
}  // namespace mhe
