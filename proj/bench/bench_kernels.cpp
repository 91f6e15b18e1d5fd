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


// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <vector>

#include "mobrisk/clustering.hpp"
#include "mobrisk/features.hpp"
#include "mobrisk/hawkes.hpp"
#include "mobrisk/rng.hpp"
#include "mobrisk/synth.hpp"

namespace mobrisk {
namespace {

struct OdFixture {
  std::vector<AgentTrajectory> trajs;
  ClusterModel model;
  DayClock clock;
};

const OdFixture& od_fixture() {
  static const OdFixture fx = [] {
    SynthConfig cfg;
    cfg.n_agents = 2000;
    cfg.n_days = 7;
    OdFixture f;
    f.trajs = generate_synthetic(cfg, 3);
    const Projection proj = Projection::centered_on(cfg.bbox);
    const auto pts = sample_coordinates(f.trajs, proj, 50000, 3, cfg.t_start,
                                        cfg.t_start + 7 * kSecondsPerDay);
    f.model = fit_kmeans(pts, 15, 3, 100, proj);
    f.clock = {cfg.t_start, cfg.n_days};
    return f;
  }();
  return fx;
}

void BM_BuildOd(benchmark::State& state) {
  const auto& fx = od_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(build_od(fx.trajs, fx.model, fx.clock));
}
BENCHMARK(BM_BuildOd)->Unit(benchmark::kMillisecond);

void BM_BuildOdSerial(benchmark::State& state) {
  const auto& fx = od_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(build_od_serial(fx.trajs, fx.model, fx.clock));
}
BENCHMARK(BM_BuildOdSerial)->Unit(benchmark::kMillisecond);

std::vector<PointXY> random_points(std::size_t n) {
  Rng rng(11);
  std::vector<PointXY> pts(n);
  for (auto& p : pts) p = {rng.uniform() * 10000.0, rng.uniform() * 10000.0};
  return pts;
}

void BM_AssignAll(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)));
  const ClusterModel model = fit_kmeans(pts, 15, 1, 20);
  for (auto _ : state) benchmark::DoNotOptimize(assign_all(model, pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AssignAll)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

void BM_AssignAllSerial(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)));
  const ClusterModel model = fit_kmeans(pts, 15, 1, 20);
  for (auto _ : state) benchmark::DoNotOptimize(assign_all_serial(model, pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AssignAllSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);

struct EStepFixture {
  HawkesModel model;
  ClusterDayMatrix counts;
  FeatureTensor features;
};

EStepFixture estep_fixture(int clusters, int days) {
  Rng rng(5);
  EStepFixture fx;
  fx.counts = ClusterDayMatrix(clusters, days);
  fx.features.variant = Variant::kMobPlus;
  fx.features.n_clusters = clusters;
  fx.features.n_days = days;
  fx.features.n_features = feature_count(Variant::kMobPlus);
  fx.features.values.resize(static_cast<std::size_t>(clusters) * days * fx.features.n_features);
  for (int c = 0; c < clusters; ++c) {
    for (int t = 0; t < days; ++t) {
      fx.counts.at(c, t) = static_cast<double>(rng.below(20));
      for (int q = 0; q < fx.features.n_features; ++q) fx.features.at(c, t, q) = rng.normal(0.0, 1.0);
    }
  }
  fx.model.variant = Variant::kMobPlus;
  fx.model.mu.assign(static_cast<std::size_t>(clusters), 0.5);
  fx.model.theta.assign(fx.model.dim(), -0.1);
  return fx;
}

void BM_EStep(benchmark::State& state) {
  const auto fx = estep_fixture(static_cast<int>(state.range(0)), 60);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(fx.model, fx.counts, fx.features));
}
BENCHMARK(BM_EStep)->Arg(15)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_EStepSerial(benchmark::State& state) {
  const auto fx = estep_fixture(static_cast<int>(state.range(0)), 60);
  for (auto _ : state) benchmark::DoNotOptimize(e_step_serial(fx.model, fx.counts, fx.features));
}
BENCHMARK(BM_EStepSerial)->Arg(15)->Arg(200)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace mobrisk

BENCHMARK_MAIN();
