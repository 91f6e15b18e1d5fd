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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mobrisk/errors.hpp"
#include "oracle/hawkes_sim.hpp"

namespace mobrisk {
namespace {

FeatureTensor zero_features(Variant v, int clusters, int days) {
  FeatureTensor f;
  f.variant = v;
  f.n_clusters = clusters;
  f.n_days = days;
  f.n_features = feature_count(v);
  f.values.assign(static_cast<std::size_t>(clusters) * days * f.n_features, 0.0);
  return f;
}

HawkesModel base_model(Variant v, int clusters, double mu) {
  HawkesModel m;
  m.variant = v;
  m.mu.assign(static_cast<std::size_t>(clusters), mu);
  m.theta.assign(m.dim(), 0.0);
  return m;
}

testing::BranchingFixture fixture(std::uint64_t seed, int clusters = 4, int days = 40) {
  Rng rng(seed);
  return testing::simulate_branching(rng, clusters, days, Variant::kMob,
                                     std::vector<double>(clusters, 0.6), {-0.4, 0.3, -0.2, 0.1},
                                     2.0, 3.0, 2);
}

TEST(WeibullTest, Values) {
  EXPECT_EQ(weibull_pdf(0.0, 2.0, 2.0), 0.0);
  EXPECT_EQ(weibull_pdf(-1.0, 2.0, 2.0), 0.0);
  EXPECT_NEAR(weibull_pdf(2.0, 2.0, 2.0), std::exp(-1.0), 1e-12);
  // alpha = 1 is the exponential density.
  EXPECT_NEAR(weibull_pdf(1.5, 1.0, 3.0), std::exp(-0.5) / 3.0, 1e-15);
}

TEST(WeibullTest, IntegratesToOne) {
  // Midpoint rule on a fine grid.
  double s = 0.0;
  const double h = 1e-3;
  for (int k = 0; k < 1000000; ++k) s += weibull_pdf((k + 0.5) * h, 2.0, 2.0) * h;
  EXPECT_NEAR(s, 1.0, 1e-3);
  // Unit-step sum misses the mass near the origin: about 1 - f'(0)/12.
  const auto w = kernel_table(2.0, 2.0, 1001);
  const double unit = std::accumulate(w.begin(), w.end(), 0.0);
  EXPECT_NEAR(unit, 0.957224, 1e-6);
  EXPECT_EQ(w[0], 0.0);
}

TEST(IntensityTest, HandExample) {
  auto m = base_model(Variant::kDen, 1, 0.3);
  ClusterDayMatrix counts(1, 5);
  const auto f = zero_features(Variant::kDen, 1, 5);
  EXPECT_EQ(intensity(m, counts, f, 0, 3), 0.3);  // no history
  counts.at(0, 1) = 1;
  EXPECT_NEAR(intensity(m, counts, f, 0, 3), 0.3 + std::exp(-1.0), 1e-12);
  EXPECT_EQ(m.reproduction(f, 0, 2), 1.0);
  const auto lam = intensity_matrix(m, counts, f);
  EXPECT_NEAR(lam.at(0, 3), 0.3 + std::exp(-1.0), 1e-12);
  EXPECT_EQ(lam.at(0, 1), 0.3);
}

TEST(IntensityTest, LaggedFeatures) {
  auto m = base_model(Variant::kDen, 1, 0.0);
  m.delta = 2;
  m.theta = {0.0, 1.0};
  auto f = zero_features(Variant::kDen, 1, 6);
  for (int t = 0; t < 6; ++t) f.at(0, t, 0) = t;
  EXPECT_EQ(m.feature_day(1), 0);
  EXPECT_EQ(m.feature_day(5), 3);
  EXPECT_DOUBLE_EQ(m.reproduction(f, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.reproduction(f, 0, 4), std::exp(2.0));
  m.theta = {100.0, 0.0};
  EXPECT_EQ(m.linear_predictor(f, 0, 0), kEtaClamp);
}

TEST(EStepTest, RowsSumToOne) {
  const auto fx = fixture(3);
  auto m = base_model(Variant::kMob, 4, 0.4);
  m.theta = {0.2, -0.3, 0.5, 0.1};
  m.beta = 3.0;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < fx.counts.n_days(); ++i) {
      if (fx.counts.at(c, i) == 0) continue;
      const auto p = responsibilities(m, fx.counts, fx.features, c, i);
      ASSERT_EQ(p.size(), static_cast<std::size_t>(i + 1));
      double s = 0.0;
      for (double v : p) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(EStepTest, ParallelMatchesSerial) {
  const auto fx = fixture(4, 9, 50);
  auto m = base_model(Variant::kMob, 9, 0.5);
  m.theta = {0.1, 0.2, 0.0, -0.1};
  const auto a = e_step(m, fx.counts, fx.features);
  const auto b = e_step_serial(m, fx.counts, fx.features);
  EXPECT_EQ(a.offspring, b.offspring);
  EXPECT_EQ(a.background, b.background);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  // Mass balance: background + offspring mass = total events.
  double mass = a.offspring.total();
  for (double v : a.background) mass += v;
  EXPECT_NEAR(mass, fx.counts.total(), 1e-9 * fx.counts.total());
}

TEST(EStepTest, ShapeMismatchThrows) {
  const auto fx = fixture(5);
  auto m = base_model(Variant::kDen, 4, 0.5);
  EXPECT_THROW(e_step(m, fx.counts, fx.features), StageError);
}

TEST(EmTest, SurrogateAndLikelihoodMonotone) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto fx = fixture(seed);
    EMOptions opt;
    opt.record_trace = true;
    const auto res = em_fit(fx.counts, fx.features, 2.0, 3.0, 2, opt);
    EXPECT_TRUE(res.model.converged);
    ASSERT_FALSE(res.trace.empty());
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
      EXPECT_GE(res.trace[k].q_after, res.trace[k].q_before - 1e-9);
      if (k > 0) EXPECT_GE(res.trace[k].log_likelihood, res.trace[k - 1].log_likelihood - 1e-9);
    }
    EXPECT_GE(res.model.log_likelihood, res.trace.back().log_likelihood - 1e-9);
  }
}

TEST(EmTest, DayZeroOnly) {
  ClusterDayMatrix counts(1, 10);
  counts.at(0, 0) = 5;
  const auto res = em_fit(counts, zero_features(Variant::kDen, 1, 10), 2.0, 2.0, 0);
  EXPECT_TRUE(res.model.converged);
  EXPECT_NEAR(res.model.mu[0], 5.0 / 10.0, 1e-12);
  EXPECT_TRUE(res.model.degenerate);  // no offspring mass anywhere
}

TEST(EmTest, AllZeroSeries) {
  const ClusterDayMatrix counts(3, 10);
  const auto res = em_fit(counts, zero_features(Variant::kMob, 3, 10), 2.0, 2.0, 0);
  EXPECT_TRUE(res.model.degenerate);
  for (double mu : res.model.mu) EXPECT_EQ(mu, 0.0);
}

TEST(EmTest, RejectsBadInput) {
  EXPECT_THROW(em_fit(ClusterDayMatrix(1, 1), zero_features(Variant::kDen, 1, 1), 2, 2, 0),
               StageError);
  ClusterDayMatrix neg(1, 4);
  neg.at(0, 1) = -1;
  EXPECT_THROW(em_fit(neg, zero_features(Variant::kDen, 1, 4), 2, 2, 0), StageError);
  EXPECT_THROW(em_fit(ClusterDayMatrix(1, 4, 1.0), zero_features(Variant::kDen, 1, 4), 0, 2, 0),
               ConfigError);
}

// Plain Weibull-kernel Hawkes EM for the background rate, written out directly.
std::vector<double> plain_hawkes_mu(const ClusterDayMatrix& n, double alpha, double beta,
                                    double mu0, int iters) {
  const int C = n.n_clusters(), T = n.n_days();
  std::vector<double> mu(static_cast<std::size_t>(C), mu0);
  for (int it = 0; it < iters; ++it) {
    for (int c = 0; c < C; ++c) {
      double b = 0.0;
      for (int i = 0; i < T; ++i) {
        if (n.at(c, i) == 0) continue;
        double lam = mu[c];
        for (int j = 0; j < i; ++j) {
          const double z = (i - j) / beta;
          lam += n.at(c, j) * alpha / beta * std::pow(z, alpha - 1) * std::exp(-std::pow(z, alpha));
        }
        b += n.at(c, i) * mu[c] / lam;
      }
      mu[c] = b / T;
    }
  }
  return mu;
}

TEST(EmTest, ZeroThetaIsPlainHawkes) {
  const auto fx = fixture(8);
  auto m = base_model(Variant::kMob, 4, 0.5);
  m.beta = 3.0;
  for (int it = 0; it < 25; ++it) {
    const auto e = e_step(m, fx.counts, fx.features);
    for (int c = 0; c < 4; ++c) m.mu[c] = e.background[c] / fx.counts.n_days();
  }
  const auto ref = plain_hawkes_mu(fx.counts, 2.0, 3.0, 0.5, 25);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(m.mu[c], ref[c], 1e-12 * std::max(1.0, ref[c]));

  // The first EM iteration runs its E-step at theta = 0 as well.
  EMOptions opt;
  opt.max_iters = 1;
  const auto one = em_fit(fx.counts, fx.features, 2.0, 3.0, 0, opt);
  const auto ref1 = plain_hawkes_mu(fx.counts, 2.0, 3.0, 0.5, 1);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(one.model.mu[c], ref1[c], 1e-12);
  EXPECT_FALSE(one.model.converged);
}

TEST(EmTest, BranchingFitBeatsTruthAndKeepsSlope) {
  // The surrogate charges every parent a full unit of kernel mass, so the
  // background comes out high and the intercept low on finite windows. The
  // slope survives, and the fit must not be less likely than the truth.
  Rng rng(2024);
  const std::vector<double> theta{-0.3, 0.4};
  const auto fx = testing::simulate_branching(rng, 15, 60, Variant::kDen,
                                              std::vector<double>(15, 0.5), theta, 2.0, 2.0, 0);
  const auto res = em_fit(fx.counts, fx.features, 2.0, 2.0, 0);
  EXPECT_TRUE(res.model.converged);
  EXPECT_NEAR(res.model.theta[1], theta[1], 0.15);
  double mu_mean = 0.0;
  for (double mu : res.model.mu) mu_mean += mu / 15.0;
  EXPECT_GT(mu_mean, 0.5);
  EXPECT_LT(res.model.theta[0], theta[0]);

  HawkesModel truth = res.model;
  truth.mu.assign(15, 0.5);
  truth.theta = theta;
  const double ll_true = e_step(truth, fx.counts, fx.features).log_likelihood;
  const double ll_fit = e_step(res.model, fx.counts, fx.features).log_likelihood;
  EXPECT_GE(ll_fit, ll_true);
}

TEST(GridTest, ArgminAndTies) {
  const std::vector<GridTriple> one{{2, 2, 3}};
  const double s1[] = {0.3};
  EXPECT_EQ(grid_argmin(one, s1), 0u);
  const std::vector<GridTriple> g{{2, 3, 5}, {2, 2, 5}, {2, 2, 3}, {3, 2, 3}, {2, 2, 9}};
  const double s[] = {0.2, 0.1, 0.1, 0.1, 0.05};
  EXPECT_EQ(grid_argmin(g, s), 4u);
  const double tie[] = {0.1, 0.1, 0.1, 0.1, 0.1};
  EXPECT_EQ(grid_argmin(g, tie), 2u);  // smallest delta, then beta, then alpha
  const double nan_first[] = {std::nan(""), 0.4, 0.5, 0.6, 0.7};
  EXPECT_EQ(grid_argmin(g, nan_first), 1u);
  EXPECT_THROW(grid_argmin(g, std::span<const double>(s, 2)), ConfigError);
}

TEST(HawkesModelTest, JsonRoundTripAndValidation) {
  auto m = base_model(Variant::kMobPlus, 3, 0.25);
  m.theta = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  m.delta = 7;
  m.beta = 3.0;
  m.feature_mean = {1, 2, 3, 4, 5};
  m.feature_std = {1, 1, 1, 1, 0};
  const auto back = hawkes_model_from_json(to_json(m));
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(back.mu, m.mu);
  EXPECT_EQ(back.delta, 7);
  EXPECT_EQ(back.variant, Variant::kMobPlus);
  EXPECT_EQ(back.feature_std, m.feature_std);

  auto j = to_json(m);
  j["theta"] = std::vector<double>{1.0};
  EXPECT_THROW(hawkes_model_from_json(j), ConfigError);
  j = to_json(m);
  j.erase("mu");
  EXPECT_THROW(hawkes_model_from_json(j), ConfigError);
  m.mu[0] = -1;
  EXPECT_THROW(m.validate(), ConfigError);
}

}  // namespace
}  // namespace mobrisk
