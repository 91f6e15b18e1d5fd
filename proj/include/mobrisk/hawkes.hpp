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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobrisk/features.hpp"
#include "mobrisk/poisson_regression.hpp"
#include "mobrisk/series.hpp"

namespace mobrisk {

// Weibull density with shape alpha and scale beta; 0 for t <= 0.
double weibull_pdf(double t, double alpha, double beta);

inline constexpr double kIntensityFloor = 1e-10;
inline constexpr double kEtaClamp = 30.0;

// Self-exciting model over daily counts:
//   lambda_c(t) = mu_c + sum_{j<t} n_c(j) R_c(j) wbl(t - j)
//   R_c(j)      = exp(theta' x_c(j)),  x_c(j) = [1, m_c(max(j - delta, 0))]
// The leading 1 is present only when `intercept` is set.
struct HawkesModel {
  Variant variant = Variant::kDen;
  bool intercept = true;
  std::vector<double> mu;
  std::vector<double> theta;
  double alpha = 2.0;
  double beta = 2.0;
  int delta = 0;
  std::vector<double> feature_mean;  // standardization used for the features
  std::vector<double> feature_std;
  bool converged = false;
  bool degenerate = false;
  int iterations = 0;
  double log_likelihood = 0.0;

  int n_clusters() const { return static_cast<int>(mu.size()); }
  std::size_t dim() const;
  int feature_day(int j) const { return j - delta > 0 ? j - delta : 0; }
  // theta' x_c(j), clamped to [-kEtaClamp, kEtaClamp].
  double linear_predictor(const FeatureTensor& f, int c, int j) const;
  double reproduction(const FeatureTensor& f, int c, int j) const;
  void validate() const;
};

// Kernel values wbl(d) for d = 0..n-1.
std::vector<double> kernel_table(double alpha, double beta, int n);

double intensity(const HawkesModel& m, const ClusterDayMatrix& counts, const FeatureTensor& f,
                 int c, int t);
// lambda_c(t) for every cluster and t in [0, counts.n_days()).
ClusterDayMatrix intensity_matrix(const HawkesModel& m, const ClusterDayMatrix& counts,
                                  const FeatureTensor& f);

struct EStepResult {
  ClusterDayMatrix offspring;      // P_c(j) = sum_{i>j} n_c(i) p_c(i, j)
  std::vector<double> background;  // sum_i n_c(i) p_c(i, i)
  double log_likelihood = 0.0;     // sum n log lambda - compensator
};

// Uses days [0, counts.n_days()) as the fitting window.
EStepResult e_step(const HawkesModel& m, const ClusterDayMatrix& counts, const FeatureTensor& f);
EStepResult e_step_serial(const HawkesModel& m, const ClusterDayMatrix& counts,
                          const FeatureTensor& f);

// Row i of the responsibility matrix for cluster c: entries j < i hold
// p_c(i, j), the final entry holds p_c(i, i).
std::vector<double> responsibilities(const HawkesModel& m, const ClusterDayMatrix& counts,
                                     const FeatureTensor& f, int c, int i);

// Expected complete-data log-likelihood of `m` under the responsibilities
// in `e`, up to terms that do not depend on (mu, theta).
double expected_complete_loglik(const HawkesModel& m, const ClusterDayMatrix& counts,
                                const FeatureTensor& f, const EStepResult& e);

// The M-step regression for theta given responsibilities.
PoissonProblem theta_problem(const HawkesModel& m, const ClusterDayMatrix& counts,
                             const FeatureTensor& f, const EStepResult& e);

struct EMOptions {
  double tol = 1e-4;
  int max_iters = 500;
  double mu_init = 0.5;
  bool intercept = true;
  bool record_trace = false;
  PoissonOptions newton;
};

struct EMTraceEntry {
  int iteration = 0;
  double q_before = 0.0;   // Q(old | old)
  double q_after = 0.0;    // Q(new | old)
  double log_likelihood = 0.0;  // at the old parameters
  double max_change = 0.0;
};

struct EMResult {
  HawkesModel model;
  std::vector<EMTraceEntry> trace;
};

// Fits mu and theta on all days of `counts`; `f` must cover those days.
EMResult em_fit(const ClusterDayMatrix& counts, const FeatureTensor& f, double alpha, double beta,
                int delta, const EMOptions& opt = {});

struct GridTriple {
  double alpha = 2.0;
  double beta = 2.0;
  int delta = 0;
  bool operator==(const GridTriple&) const = default;
};

// Index of the smallest score; ties go to smallest delta, then beta, then alpha.
std::size_t grid_argmin(std::span<const GridTriple> grid, std::span<const double> scores);

nlohmann::json to_json(const HawkesModel& m);
HawkesModel hawkes_model_from_json(const nlohmann::json& j);

}  // namespace mobrisk
