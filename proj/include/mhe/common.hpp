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

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mhe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Inconsistent sizes between models, windows, weights or iterates.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// A factorization or eigen-decomposition met a singular or indefinite matrix
// where a positive definite one was required.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid user-supplied parameters (solver settings, noise, run config).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Kernels come in a serial reference form and an OpenMP form. The serial
// path is what the tests compare against.
enum class Execution { serial, parallel };

}  // namespace mhe
