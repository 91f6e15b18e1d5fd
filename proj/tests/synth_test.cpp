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

#include "mobrisk/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mobrisk/clustering.hpp"
#include "mobrisk/errors.hpp"
#include "mobrisk/features.hpp"

namespace mobrisk {
namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.n_agents = 60;
  c.n_days = 4;
  c.n_anchor_sites = 12;
  return c;
}

std::string dump(const std::vector<AgentTrajectory>& trajs) {
  std::ostringstream out;
  write_signals(out, trajs);
  return out.str();
}

TEST(SynthTest, Deterministic) {
  const auto c = small_config();
  EXPECT_EQ(dump(generate_synthetic(c, 42)), dump(generate_synthetic(c, 42)));
  EXPECT_NE(dump(generate_synthetic(c, 42)), dump(generate_synthetic(c, 43)));
}

TEST(SynthTest, SignalsInsideWindowAndSorted) {
  const auto c = small_config();
  const auto trajs = generate_synthetic(c, 7);
  ASSERT_EQ(trajs.size(), c.n_agents);
  const RegionWindow w = c.window();
  std::size_t inside = 0, total = 0;
  for (const auto& t : trajs) {
    ASSERT_FALSE(t.signals.empty());
    for (std::size_t i = 0; i < t.signals.size(); ++i) {
      EXPECT_EQ(t.signals[i].agent_id, t.agent_id);
      if (i > 0) EXPECT_LE(t.signals[i - 1].t, t.signals[i].t);
      ++total;
      if (w.contains(t.signals[i])) ++inside;
    }
  }
  EXPECT_EQ(inside, total);
  // 15 minute mean gap: about 96 signals per agent per day.
  const double per_agent_day = static_cast<double>(total) / (c.n_agents * c.n_days);
  EXPECT_NEAR(per_agent_day, 96.0, 8.0);
}

TEST(SynthTest, ZeroMultiplierKeepsAgentsHome) {
  auto c = small_config();
  c.jitter_m = 1.0;
  c.mobility_multiplier = {1.0, 0.0, 1.0};
  const auto trajs = generate_synthetic(c, 3);
  const Projection proj = Projection::centered_on(c.bbox);
  std::size_t moved_day0 = 0;
  for (const auto& t : trajs) {
    // Before 06:00 every agent is at home.
    const auto& first = t.signals.front();
    ASSERT_LT(first.t - c.t_start, 6 * 3600);
    const PointXY home = proj.project(first.lat, first.lon);
    bool away0 = false;
    for (const auto& s : t.signals) {
      const int day = static_cast<int>((s.t - c.t_start) / kSecondsPerDay);
      const double d = std::sqrt(squared_distance(home, proj.project(s.lat, s.lon)));
      if (day == 1) EXPECT_LT(d, 20.0) << "agent " << t.agent_id;
      if (day == 0 && d > 50.0) away0 = true;
    }
    if (away0) ++moved_day0;
  }
  EXPECT_GT(moved_day0, c.n_agents / 2);
}

TEST(SynthTest, LockdownLowersOdVolume) {
  SynthConfig c;
  c.n_agents = 300;
  c.n_days = 20;
  c.n_anchor_sites = 40;
  c.mobility_multiplier.assign(10, 1.0);
  c.mobility_multiplier.resize(20, 0.3);
  const auto trajs = generate_synthetic(c, 11);
  const Projection proj = Projection::centered_on(c.bbox);
  const auto pts = sample_coordinates(trajs, proj, 20000, 1, c.t_start,
                                      c.t_start + c.n_days * kSecondsPerDay);
  const auto model = fit_kmeans(pts, 8, 5, 100, proj);
  const auto od = build_od(trajs, model, DayClock{c.t_start, c.n_days});
  auto inter = [&](int d0, int d1) {
    std::int64_t n = 0;
    for (int d = d0; d < d1; ++d)
      for (int i = 0; i < od.n_clusters(); ++i)
        for (int j = 0; j < od.n_clusters(); ++j)
          if (i != j) n += od.at(d, i, j);
    return n;
  };
  EXPECT_LT(inter(10, 20), inter(0, 10));
}

TEST(SynthTest, InvalidConfigThrows) {
  auto c = small_config();
  c.n_agents = 0;
  EXPECT_THROW(generate_synthetic(c, 1), ConfigError);
  c = small_config();
  c.bbox = {38.0, 37.0, -122.0, -123.0};
  EXPECT_THROW(generate_synthetic(c, 1), ConfigError);
}

TEST(SynthTest, JsonRoundTrip) {
  auto c = small_config();
  c.mobility_multiplier = {1.0, 0.5};
  nlohmann::json j = c;
  const SynthConfig back = j.get<SynthConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

}  // namespace
}  // namespace mobrisk
