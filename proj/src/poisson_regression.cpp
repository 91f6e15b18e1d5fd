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

#include "mobrisk/poisson_regression.hpp"

#include <algorithm>
#include <cmath>

#include "mobrisk/errors.hpp"

namespace mobrisk {

namespace {

double clamp_eta(double eta, double lim) { return std::clamp(eta, -lim, lim); }

}  // namespace

double poisson_objective(const PoissonProblem& p, const Eigen::VectorXd& theta, double eta_clamp) {
  const Eigen::VectorXd eta = p.x * theta;
  double f = 0.0;
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    f += p.a[j] * eta[j] - p.b[j] * std::exp(clamp_eta(eta[j], eta_clamp));
  }
  return f;
}

Eigen::VectorXd poisson_gradient(const PoissonProblem& p, const Eigen::VectorXd& theta,
                                 double eta_clamp) {
  const Eigen::VectorXd eta = p.x * theta;
  Eigen::VectorXd r(eta.size());
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    const bool inside = std::abs(eta[j]) < eta_clamp;
    r[j] = p.a[j] - (inside ? p.b[j] * std::exp(eta[j]) : 0.0);
  }
  return p.x.transpose() * r;
}

Eigen::MatrixXd poisson_hessian(const PoissonProblem& p, const Eigen::VectorXd& theta,
                                double eta_clamp) {
  const Eigen::VectorXd eta = p.x * theta;
  Eigen::VectorXd w(eta.size());
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    w[j] = std::abs(eta[j]) < eta_clamp ? p.b[j] * std::exp(eta[j]) : 0.0;
  }
  return -(p.x.transpose() * w.asDiagonal() * p.x);
}

PoissonFit fit_poisson(const PoissonProblem& p, const PoissonOptions& opt,
                       const Eigen::VectorXd& theta0) {
  const Eigen::Index dim = p.x.cols();
  if (p.x.rows() < 1) throw StageError("poisson regression needs at least one observation");
  if (p.a.size() != p.x.rows() || p.b.size() != p.x.rows()) {
    throw StageError("poisson regression: target/exposure length mismatch");
  }
  if (!p.x.allFinite() || !p.a.allFinite() || !p.b.allFinite()) {
    throw StageError("poisson regression: non-finite input");
  }
  PoissonFit fit;
  fit.theta = theta0.size() == dim ? theta0 : Eigen::VectorXd::Zero(dim);

  if (p.a.cwiseAbs().maxCoeff() == 0.0) {
    // Every target is zero: drive the predictor to the clamp floor along the
    // intercept-like direction (the column with the largest mean).
    fit.degenerate = true;
    Eigen::Index col = 0;
    p.x.colwise().mean().maxCoeff(&col);
    fit.theta.setZero();
    const double scale = p.x.col(col).maxCoeff();
    fit.theta[col] = scale > 0.0 ? -opt.eta_clamp / scale : 0.0;
    fit.objective = poisson_objective(p, fit.theta, opt.eta_clamp);
    fit.converged = true;
    return fit;
  }

  double f = poisson_objective(p, fit.theta, opt.eta_clamp);
  for (int it = 0; it < opt.max_iters; ++it) {
    const Eigen::VectorXd g = poisson_gradient(p, fit.theta, opt.eta_clamp);
    if (!g.allFinite()) throw StageError("poisson regression diverged");
    if (g.norm() < opt.grad_tol) {
      fit.converged = true;
      break;
    }
    // Newton direction on the negated (convex) objective.
    Eigen::MatrixXd h = -poisson_hessian(p, fit.theta, opt.eta_clamp);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, h.diagonal().maxCoeff())) {
      h.diagonal().array() += opt.ridge;
      ldlt.compute(h);
    }
    const Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) throw StageError("poisson regression: singular system");
    if (g.dot(step) <= 1e-10 * std::max(1.0, std::abs(f))) {
      // Inside the quadratic region the objective change is below rounding;
      // take the plain Newton step and let the gradient test decide.
      fit.theta += step;
      f = poisson_objective(p, fit.theta, opt.eta_clamp);
      fit.iterations = it + 1;
      continue;
    }
    double t = 1.0;
    bool improved = false;
    for (int half = 0; half < 60; ++half) {
      const Eigen::VectorXd cand = fit.theta + t * step;
      const double fc = poisson_objective(p, cand, opt.eta_clamp);
      if (std::isfinite(fc) && fc >= f) {
        fit.theta = cand;
        f = fc;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    fit.iterations = it + 1;
    if (!improved) {
      // Only rounding noise is left in the objective.
      fit.converged = g.norm() < 1e-6 * std::max(1.0, std::abs(f));
      break;
    }
  }
  if (!fit.theta.allFinite()) throw StageError("poisson regression diverged");
  fit.objective = f;
  return fit;
}

}  // namespace mobrisk
