// Copyright 2026 The mobrisk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace mobrisk {

// Weighted Poisson regression with exposure:
//   maximize  sum_j  a_j * x_j'theta - b_j * exp(clamp(x_j'theta))
// where a_j is the target mass and b_j >= 0 the exposure of row j.
struct PoissonProblem {
  Eigen::MatrixXd x;  // rows = observations
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

struct PoissonOptions {
  double grad_tol = 1e-8;
  int max_iters = 100;
  double ridge = 1e-6;
  double eta_clamp = 30.0;
};

struct PoissonFit {
  Eigen::VectorXd theta;
  int iterations = 0;
  bool converged = false;
  // Set when every target is zero: the optimum sits at the clamp floor.
  bool degenerate = false;
  double objective = 0.0;
};

double poisson_objective(const PoissonProblem& p, const Eigen::VectorXd& theta,
                         double eta_clamp = 30.0);
Eigen::VectorXd poisson_gradient(const PoissonProblem& p, const Eigen::VectorXd& theta,
                                 double eta_clamp = 30.0);
Eigen::MatrixXd poisson_hessian(const PoissonProblem& p, const Eigen::VectorXd& theta,
                                double eta_clamp = 30.0);

// Newton's method with step halving, started from `theta0` (zero if empty).
// Throws StageError when the iterates stop being finite.
PoissonFit fit_poisson(const PoissonProblem& p, const PoissonOptions& opt = {},
                       const Eigen::VectorXd& theta0 = {});

}  // namespace mobrisk
