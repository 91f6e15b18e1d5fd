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

#include "mobrisk/clustering.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "mobrisk/errors.hpp"
#include "mobrisk/rng.hpp"

namespace mobrisk {
namespace {

std::vector<PointXY> blobs(Rng& rng, std::initializer_list<PointXY> centers, int n_each,
                           double sd) {
  std::vector<PointXY> pts;
  for (const PointXY& c : centers)
    for (int i = 0; i < n_each; ++i) pts.push_back({c.x + rng.normal(0, sd), c.y + rng.normal(0, sd)});
  return pts;
}

PointXY centroid(std::span<const PointXY> pts) {
  PointXY c{0, 0};
  for (auto p : pts) {
    c.x += p.x;
    c.y += p.y;
  }
  return {c.x / pts.size(), c.y / pts.size()};
}

TEST(KMeansTest, SeparatedBlobs) {
  Rng rng(3);
  const auto pts = blobs(rng, {{0, 0}, {5000, 3000}}, 200, 20.0);
  const auto model = fit_kmeans(pts, 2, 1, 100);
  ASSERT_EQ(model.k(), 2u);
  EXPECT_TRUE(model.converged);
  const PointXY c0 = centroid(std::span(pts).first(200));
  const PointXY c1 = centroid(std::span(pts).last(200));
  const bool flip = model.centers[0].x > 2500;
  const PointXY m0 = model.centers[flip ? 1 : 0], m1 = model.centers[flip ? 0 : 1];
  EXPECT_LT(std::sqrt(squared_distance(m0, c0)), 1.0);
  EXPECT_LT(std::sqrt(squared_distance(m1, c1)), 1.0);
}

TEST(KMeansTest, BeatsRandomRestartBaseline) {
  Rng rng(17);
  std::vector<PointXY> pts(1000);
  for (auto& p : pts) p = {rng.uniform() * 1000.0, rng.uniform() * 1000.0};
  const auto model = fit_kmeans(pts, 5, 42, 300);
  const double ours = within_cluster_ss(pts, model.centers);

  // Baseline: k random points as centers, one Lloyd update, score.
  Rng brng(99);
  double best_baseline = std::numeric_limits<double>::infinity();
  for (int r = 0; r < 20; ++r) {
    ClusterModel m;
    for (int c = 0; c < 5; ++c) m.centers.push_back(pts[brng.below(pts.size())]);
    const auto labels = assign_all_serial(m, pts);
    std::vector<PointXY> sum(5, {0, 0});
    std::vector<int> cnt(5, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sum[labels[i]].x += pts[i].x;
      sum[labels[i]].y += pts[i].y;
      ++cnt[labels[i]];
    }
    for (int c = 0; c < 5; ++c)
      if (cnt[c]) m.centers[c] = {sum[c].x / cnt[c], sum[c].y / cnt[c]};
    best_baseline = std::min(best_baseline, within_cluster_ss(pts, m.centers));
  }
  EXPECT_LE(ours, best_baseline);
}

TEST(KMeansTest, WcssNeverIncreases) {
  Rng rng(5);
  std::vector<PointXY> pts(3000);
  for (auto& p : pts) p = {rng.normal(0, 300), rng.normal(0, 100)};
  const auto model = fit_kmeans(pts, 9, 7, 300);
  ASSERT_GE(model.wcss_history.size(), 2u);
  for (std::size_t i = 1; i < model.wcss_history.size(); ++i)
    EXPECT_LE(model.wcss_history[i], model.wcss_history[i - 1] * (1 + 1e-12));
}

TEST(KMeansTest, DeterministicAndValidated) {
  Rng rng(8);
  const auto pts = blobs(rng, {{0, 0}, {100, 0}, {0, 100}}, 50, 10.0);
  const auto a = fit_kmeans(pts, 3, 11, 100);
  const auto b = fit_kmeans(pts, 3, 11, 100);
  ASSERT_EQ(a.k(), b.k());
  for (std::size_t i = 0; i < a.k(); ++i) {
    EXPECT_EQ(a.centers[i].x, b.centers[i].x);
    EXPECT_EQ(a.centers[i].y, b.centers[i].y);
  }
  EXPECT_THROW(fit_kmeans(std::span(pts).first(2), 3, 1, 10), ConfigError);
  EXPECT_THROW(fit_kmeans(pts, 0, 1, 10), ConfigError);
}

TEST(KMeansTest, DuplicatePointsStillGiveKCenters) {
  std::vector<PointXY> pts(20, PointXY{1, 1});
  pts.push_back({50, 50});
  pts.push_back({-50, 50});
  const auto model = fit_kmeans(pts, 3, 2, 50);
  EXPECT_EQ(model.k(), 3u);
  EXPECT_NEAR(within_cluster_ss(pts, model.centers), 0.0, 1e-9);
}

TEST(AssignTest, CentersAndTies) {
  ClusterModel m;
  m.centers = {{100, 100}, {-100, 0}, {0, 10}, {300, 300}, {50, 50}, {0, -10}};
  for (std::size_t i = 0; i < m.k(); ++i) EXPECT_EQ(m.assign(m.centers[i]), i);
  EXPECT_EQ(m.assign(PointXY{0, 0}), 2u);  // equidistant from 2 and 5
  EXPECT_EQ(m.assign(PointXY{1e9, 1e9}), 3u);
}

TEST(AssignTest, MatchesLinearScan) {
  Rng rng(13);
  ClusterModel m;
  for (int i = 0; i < 15; ++i) m.centers.push_back({rng.uniform() * 100, rng.uniform() * 100});
  std::vector<PointXY> pts(100);
  for (auto& p : pts) p = {rng.uniform() * 120 - 10, rng.uniform() * 120 - 10};
  const auto par = assign_all(m, pts);
  EXPECT_EQ(par, assign_all_serial(m, pts));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.k(); ++c)
      if (squared_distance(pts[i], m.centers[c]) < squared_distance(pts[i], m.centers[best])) best = c;
    EXPECT_EQ(par[i], best);
  }
}

TEST(ClusterModelTest, LatLonAssignAndJson) {
  const Projection proj(37.76, -122.44);
  Rng rng(6);
  std::vector<PointXY> pts(200);
  for (auto& p : pts) p = {rng.normal(0, 2000), rng.normal(0, 2000)};
  const auto model = fit_kmeans(pts, 4, 3, 100, proj);
  const auto back = cluster_model_from_json(to_json(model));
  ASSERT_EQ(back.k(), model.k());
  for (std::size_t c = 0; c < model.k(); ++c) {
    EXPECT_NEAR(back.centers[c].x, model.centers[c].x, 1e-6);
    EXPECT_NEAR(back.centers[c].y, model.centers[c].y, 1e-6);
    const LatLon ll = proj.unproject(model.centers[c]);
    EXPECT_EQ(back.assign(ll.lat, ll.lon), c);
  }
}

TEST(SampleCoordinatesTest, CapAndWindow) {
  std::vector<AgentTrajectory> trajs(3);
  for (int a = 0; a < 3; ++a) {
    trajs[a].agent_id = a + 1;
    for (int i = 0; i < 100; ++i) trajs[a].signals.push_back({trajs[a].agent_id, 37.0, -122.0, i, 5});
  }
  const Projection proj(37.0, -122.0);
  EXPECT_EQ(sample_coordinates(trajs, proj, 1000, 1, 0, 50).size(), 150u);
  EXPECT_EQ(sample_coordinates(trajs, proj, 40, 1, 0, 100).size(), 40u);
}

TEST(SparseWarningsTest, OnePercentRule) {
  const std::size_t counts[] = {500, 4, 496};
  const auto w = sparse_cluster_warnings(counts);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].rfind("cluster 1 ", 0), 0u);
}

}  // namespace
}  // namespace mobrisk
