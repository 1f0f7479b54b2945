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

#include "mhe/block_tridiagonal.hpp"
#include "mhe/common.hpp"

namespace mhe {

/// Twice-differentiable cost whose Hessian has block-tridiagonal structure.
/// The solvers only see this interface, which lets the tests drive them with
/// hand-built quadratics as well as MHE windows.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Vector& xi) const = 0;
  virtual Vector gradient(const Vector& xi) const = 0;
  virtual BlockTridiagonal hessian(const Vector& xi) const = 0;
};

/// F(xi) = 1/2 (xi - center)^T A (xi - center) with A block-tridiagonal.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(BlockTridiagonal A, Vector center);

  Eigen::Index dimension() const override { return center_.size(); }
  double value(const Vector& xi) const override;
  Vector gradient(const Vector& xi) const override;
  BlockTridiagonal hessian(const Vector&) const override { return A_; }

  const Vector& center() const { return center_; }

 private:
  BlockTridiagonal A_;
  Vector center_;
};

}  // namespace mhe
