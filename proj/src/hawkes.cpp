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

#include "mobrisk/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "mobrisk/errors.hpp"
#include "mobrisk/parallel.hpp"

namespace mobrisk {

double weibull_pdf(double t, double alpha, double beta) {
  if (t <= 0.0) return 0.0;
  const double z = t / beta;
  return (alpha / beta) * std::pow(z, alpha - 1.0) * std::exp(-std::pow(z, alpha));
}

std::size_t HawkesModel::dim() const {
  return static_cast<std::size_t>(feature_count(variant)) + (intercept ? 1 : 0);
}

double HawkesModel::linear_predictor(const FeatureTensor& f, int c, int j) const {
  const auto row = f.row(c, feature_day(j));
  std::size_t q = 0;
  double eta = 0.0;
  if (intercept) eta += theta[q++];
  for (double v : row) eta += theta[q++] * v;
  return std::clamp(eta, -kEtaClamp, kEtaClamp);
}

double HawkesModel::reproduction(const FeatureTensor& f, int c, int j) const {
  return std::exp(linear_predictor(f, c, j));
}

void HawkesModel::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("weibull shape and scale must be > 0");
  if (delta < 0) throw ConfigError("delay must be >= 0");
  if (theta.size() != dim()) throw ConfigError("coefficient vector does not match the variant");
  for (double m : mu) {
    if (!(m >= 0.0)) throw ConfigError("background rates must be >= 0");
  }
}

std::vector<double> kernel_table(double alpha, double beta, int n) {
  std::vector<double> w(static_cast<std::size_t>(std::max(n, 0)));
  for (int d = 0; d < n; ++d) w[static_cast<std::size_t>(d)] = weibull_pdf(d, alpha, beta);
  return w;
}

namespace {

void check_shapes(const HawkesModel& m, const ClusterDayMatrix& counts, const FeatureTensor& f) {
  if (counts.n_clusters() != m.n_clusters() || f.n_clusters != m.n_clusters()) {
    throw StageError("cluster count mismatch between model, counts and features");
  }
  if (f.n_features != feature_count(m.variant)) {
    throw StageError("feature tensor does not match the model variant");
  }
  if (f.n_days < std::min(counts.n_days(), 1)) throw StageError("features do not cover the series");
}

// Excitation terms e_j = n(j) R(j) for one cluster.
std::vector<double> excitation(const HawkesModel& m, const ClusterDayMatrix& counts,
                               const FeatureTensor& f, int c, int n_days) {
  std::vector<double> e(static_cast<std::size_t>(n_days), 0.0);
  for (int j = 0; j < n_days; ++j) {
    const double n = counts.at(c, j);
    if (n != 0.0) e[static_cast<std::size_t>(j)] = n * m.reproduction(f, c, j);
  }
  return e;
}

struct ClusterEStep {
  std::vector<double> offspring;
  double background = 0.0;
  double loglik = 0.0;
};

ClusterEStep e_step_cluster(const HawkesModel& m, const ClusterDayMatrix& counts,
                            const FeatureTensor& f, const std::vector<double>& w, int c) {
  const int T = counts.n_days();
  const auto e = excitation(m, counts, f, c, T);
  const double mu = m.mu[static_cast<std::size_t>(c)];
  ClusterEStep out;
  out.offspring.assign(static_cast<std::size_t>(T), 0.0);
  double compensator = mu * T;
  for (int j = 0; j < T; ++j) compensator += e[static_cast<std::size_t>(j)];
  for (int i = 0; i < T; ++i) {
    const double n = counts.at(c, i);
    if (n == 0.0) continue;
    double lam = mu;
    for (int j = 0; j < i; ++j) lam += e[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(i - j)];
    const double lam_safe = std::max(lam, kIntensityFloor);
    out.loglik += n * std::log(lam_safe);
    out.background += n * mu / lam_safe;
    for (int j = 0; j < i; ++j) {
      out.offspring[static_cast<std::size_t>(j)] +=
          n * e[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(i - j)] / lam_safe;
    }
  }
  out.loglik -= compensator;
  return out;
}

EStepResult assemble(std::vector<ClusterEStep>& parts, int T) {
  EStepResult r;
  const int C = static_cast<int>(parts.size());
  r.offspring = ClusterDayMatrix(C, T);
  r.background.resize(parts.size());
  for (int c = 0; c < C; ++c) {
    auto& p = parts[static_cast<std::size_t>(c)];
    for (int j = 0; j < T; ++j) r.offspring.at(c, j) = p.offspring[static_cast<std::size_t>(j)];
    r.background[static_cast<std::size_t>(c)] = p.background;
    r.log_likelihood += p.loglik;  // fixed cluster order keeps the sum reproducible
  }
  return r;
}

}  // namespace

double intensity(const HawkesModel& m, const ClusterDayMatrix& counts, const FeatureTensor& f,
                 int c, int t) {
  double lam = m.mu[static_cast<std::size_t>(c)];
  const int upto = std::min(t, counts.n_days());
  for (int j = 0; j < upto; ++j) {
    const double n = counts.at(c, j);
    if (n == 0.0) continue;
    lam += n * m.reproduction(f, c, j) * weibull_pdf(t - j, m.alpha, m.beta);
  }
  return lam;
}

ClusterDayMatrix intensity_matrix(const HawkesModel& m, const ClusterDayMatrix& counts,
                                  const FeatureTensor& f) {
  check_shapes(m, counts, f);
  const int T = counts.n_days();
  const auto w = kernel_table(m.alpha, m.beta, T + 1);
  ClusterDayMatrix out(m.n_clusters(), T);
  for (int c = 0; c < m.n_clusters(); ++c) {
    const auto e = excitation(m, counts, f, c, T);
    for (int t = 0; t < T; ++t) {
      double lam = m.mu[static_cast<std::size_t>(c)];
      for (int j = 0; j < t; ++j) lam += e[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(t - j)];
      out.at(c, t) = lam;
    }
  }
  return out;
}

EStepResult e_step_serial(const HawkesModel& m, const ClusterDayMatrix& counts,
                          const FeatureTensor& f) {
  check_shapes(m, counts, f);
  const int T = counts.n_days();
  const auto w = kernel_table(m.alpha, m.beta, T + 1);
  std::vector<ClusterEStep> parts(static_cast<std::size_t>(m.n_clusters()));
  for (int c = 0; c < m.n_clusters(); ++c) {
    parts[static_cast<std::size_t>(c)] = e_step_cluster(m, counts, f, w, c);
  }
  return assemble(parts, T);
}

EStepResult e_step(const HawkesModel& m, const ClusterDayMatrix& counts, const FeatureTensor& f) {
  check_shapes(m, counts, f);
  const int T = counts.n_days();
  const auto w = kernel_table(m.alpha, m.beta, T + 1);
  std::vector<ClusterEStep> parts(static_cast<std::size_t>(m.n_clusters()));
  parallel_for(m.n_clusters(), [&](std::ptrdiff_t c) {
    parts[static_cast<std::size_t>(c)] = e_step_cluster(m, counts, f, w, static_cast<int>(c));
  });
  return assemble(parts, T);
}

std::vector<double> responsibilities(const HawkesModel& m, const ClusterDayMatrix& counts,
                                     const FeatureTensor& f, int c, int i) {
  const auto w = kernel_table(m.alpha, m.beta, i + 1);
  const auto e = excitation(m, counts, f, c, i);
  const double mu = m.mu[static_cast<std::size_t>(c)];
  double lam = mu;
  for (int j = 0; j < i; ++j) lam += e[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(i - j)];
  lam = std::max(lam, kIntensityFloor);
  std::vector<double> p(static_cast<std::size_t>(i) + 1);
  for (int j = 0; j < i; ++j) {
    p[static_cast<std::size_t>(j)] = e[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(i - j)] / lam;
  }
  p.back() = mu / lam;
  return p;
}

PoissonProblem theta_problem(const HawkesModel& m, const ClusterDayMatrix& counts,
                             const FeatureTensor& f, const EStepResult& e) {
  const int C = m.n_clusters();
  const int T = counts.n_days();
  const auto dim = static_cast<Eigen::Index>(m.dim());
  // Days without events carry neither target mass nor exposure.
  std::vector<std::pair<int, int>> rows;
  for (int c = 0; c < C; ++c)
    for (int j = 0; j < T; ++j)
      if (counts.at(c, j) > 0.0) rows.emplace_back(c, j);
  PoissonProblem p;
  p.x.resize(static_cast<Eigen::Index>(rows.size()), dim);
  p.a.resize(static_cast<Eigen::Index>(rows.size()));
  p.b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto [c, j] = rows[r];
    const auto ri = static_cast<Eigen::Index>(r);
    Eigen::Index q = 0;
    if (m.intercept) p.x(ri, q++) = 1.0;
    for (double v : f.row(c, m.feature_day(j))) p.x(ri, q++) = v;
    p.a[ri] = e.offspring.at(c, j);
    p.b[ri] = counts.at(c, j);
  }
  return p;
}

double expected_complete_loglik(const HawkesModel& m, const ClusterDayMatrix& counts,
                                const FeatureTensor& f, const EStepResult& e) {
  const int T = counts.n_days();
  double q = 0.0;
  for (int c = 0; c < m.n_clusters(); ++c) {
    const double mu = m.mu[static_cast<std::size_t>(c)];
    const double b = e.background[static_cast<std::size_t>(c)];
    if (b > 0.0) q += b * std::log(std::max(mu, kIntensityFloor));
    q -= mu * T;
  }
  const PoissonProblem p = theta_problem(m, counts, f, e);
  if (p.x.rows() > 0) {
    q += poisson_objective(p, Eigen::Map<const Eigen::VectorXd>(m.theta.data(),
                                                                 static_cast<Eigen::Index>(m.theta.size())),
                           kEtaClamp);
  }
  return q;
}

EMResult em_fit(const ClusterDayMatrix& counts, const FeatureTensor& f, double alpha, double beta,
                int delta, const EMOptions& opt) {
  const int C = counts.n_clusters();
  const int T = counts.n_days();
  if (T < 2) throw StageError("fitting needs at least two days");
  if (f.n_days < T) throw StageError("features do not cover the fitting window");
  EMResult res;
  HawkesModel& m = res.model;
  m.variant = f.variant;
  m.intercept = opt.intercept;
  m.alpha = alpha;
  m.beta = beta;
  m.delta = delta;
  m.feature_mean = f.mean;
  m.feature_std = f.stddev;
  m.mu.assign(static_cast<std::size_t>(C), opt.mu_init);
  m.theta.assign(m.dim(), 0.0);
  m.validate();
  for (double v : counts.data()) {
    if (!(v >= 0.0)) throw StageError("event counts must be non-negative");
  }
  if (counts.total() == 0.0) {
    std::fill(m.mu.begin(), m.mu.end(), 0.0);
    m.degenerate = true;
    m.converged = true;
    return res;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.dim()));
  for (int it = 0; it < opt.max_iters; ++it) {
    const EStepResult e = e_step(m, counts, f);
    EMTraceEntry entry;
    entry.iteration = it;
    entry.log_likelihood = e.log_likelihood;
    if (opt.record_trace) entry.q_before = expected_complete_loglik(m, counts, f, e);

    const PoissonFit pf = fit_poisson(theta_problem(m, counts, f, e), opt.newton, theta);
    m.degenerate = pf.degenerate;
    double change = 0.0;
    for (std::size_t q = 0; q < m.theta.size(); ++q) {
      change = std::max(change, std::abs(pf.theta[static_cast<Eigen::Index>(q)] - m.theta[q]));
      m.theta[q] = pf.theta[static_cast<Eigen::Index>(q)];
    }
    theta = pf.theta;
    for (int c = 0; c < C; ++c) {
      const double mu = e.background[static_cast<std::size_t>(c)] / T;
      change = std::max(change, std::abs(mu - m.mu[static_cast<std::size_t>(c)]));
      m.mu[static_cast<std::size_t>(c)] = mu;
    }
    entry.max_change = change;
    if (opt.record_trace) {
      entry.q_after = expected_complete_loglik(m, counts, f, e);
      res.trace.push_back(entry);
    }
    m.iterations = it + 1;
    if (change < opt.tol) {
      m.converged = true;
      break;
    }
  }
  m.log_likelihood = e_step(m, counts, f).log_likelihood;
  return res;
}

std::size_t grid_argmin(std::span<const GridTriple> grid, std::span<const double> scores) {
  if (grid.empty() || grid.size() != scores.size()) {
    throw ConfigError("grid search needs a non-empty grid with one score per triple");
  }
  std::size_t best = 0;
  auto key = [&](std::size_t i) {
    return std::make_tuple(scores[i], grid[i].delta, grid[i].beta, grid[i].alpha);
  };
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::isnan(scores[best]) || key(i) < key(best)) best = i;
  }
  return best;
}

nlohmann::json to_json(const HawkesModel& m) {
  return {{"variant", std::string(to_string(m.variant))},
          {"intercept", m.intercept},
          {"mu", m.mu},
          {"theta", m.theta},
          {"alpha", m.alpha},
          {"beta", m.beta},
          {"delta", m.delta},
          {"feature_mean", m.feature_mean},
          {"feature_std", m.feature_std},
          {"converged", m.converged},
          {"degenerate", m.degenerate},
          {"iterations", m.iterations},
          {"log_likelihood", m.log_likelihood}};
}

HawkesModel hawkes_model_from_json(const nlohmann::json& j) {
  HawkesModel m;
  try {
    m.variant = parse_variant(j.at("variant").get<std::string>());
    m.intercept = j.at("intercept").get<bool>();
    m.mu = j.at("mu").get<std::vector<double>>();
    m.theta = j.at("theta").get<std::vector<double>>();
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
    m.delta = j.at("delta").get<int>();
    m.feature_mean = j.value("feature_mean", std::vector<double>{});
    m.feature_std = j.value("feature_std", std::vector<double>{});
    m.converged = j.value("converged", false);
    m.degenerate = j.value("degenerate", false);
    m.iterations = j.value("iterations", 0);
    m.log_likelihood = j.value("log_likelihood", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
  m.validate();
  return m;
}

}  // namespace mobrisk
