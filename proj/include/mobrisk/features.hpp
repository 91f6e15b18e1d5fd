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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobrisk/clustering.hpp"
#include "mobrisk/series.hpp"
#include "mobrisk/spreadsim.hpp"
#include "mobrisk/trajectory.hpp"

namespace mobrisk {

// Den: self-mobility only. Mob: adds net traffic to and from the cluster.
// MobPlus: adds the two infection-mobility covariates.
enum class Variant { kDen, kMob, kMobPlus };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);  // "den", "mob", "mob+"
int feature_count(Variant v);

// Daily origin-destination counts, w(t)[i][j] = transitions from i to j whose
// later signal falls on day t.
class ODMatrixSeries {
 public:
  ODMatrixSeries() = default;
  ODMatrixSeries(int n_clusters, int n_days)
      : n_clusters_(n_clusters),
        n_days_(n_days),
        counts_(static_cast<std::size_t>(n_days) * n_clusters * n_clusters, 0) {}

  int n_clusters() const { return n_clusters_; }
  int n_days() const { return n_days_; }
  std::int64_t& at(int day, int i, int j) { return counts_[index(day, i, j)]; }
  std::int64_t at(int day, int i, int j) const { return counts_[index(day, i, j)]; }
  std::int64_t day_total(int day) const;
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::vector<std::int64_t>& counts() { return counts_; }

  bool operator==(const ODMatrixSeries&) const = default;

 private:
  std::size_t index(int day, int i, int j) const {
    return (static_cast<std::size_t>(day) * n_clusters_ + i) * n_clusters_ + j;
  }
  int n_clusters_ = 0;
  int n_days_ = 0;
  std::vector<std::int64_t> counts_;
};

// Each consecutive signal pair of an agent adds one to w[cluster(c)][cluster(c')]
// on the day of c'. Pairs whose first signal precedes the clock are dropped.
ODMatrixSeries build_od(std::span<const AgentTrajectory> trajs, const ClusterModel& model,
                        const DayClock& clock);
ODMatrixSeries build_od_serial(std::span<const AgentTrajectory> trajs, const ClusterModel& model,
                               const DayClock& clock);

struct InfectionSeries {
  ClusterDayMatrix counts;
  std::size_t skipped = 0;  // events outside the clock
};

InfectionSeries count_infections(std::span<const InfectionEvent> events, const ClusterModel& model,
                                 const DayClock& clock);

// Signals per cluster over the clock's range.
std::vector<std::size_t> signals_per_cluster(std::span<const AgentTrajectory> trajs,
                                             const ClusterModel& model, const DayClock& clock);

// Trailing median over the last `window` values (fewer at the start); an
// even-sized window takes the mean of the two middle values.
std::vector<double> moving_median(std::span<const double> series, int window);
ClusterDayMatrix moving_median(const ClusterDayMatrix& m, int window);

struct FeatureTensor {
  Variant variant = Variant::kDen;
  int n_clusters = 0;
  int n_days = 0;
  int n_features = 0;
  std::vector<double> values;  // [(c * n_days + t) * n_features + f]
  std::vector<double> mean;    // standardization applied, empty if raw
  std::vector<double> stddev;

  double at(int c, int t, int f) const { return values[index(c, t, f)]; }
  double& at(int c, int t, int f) { return values[index(c, t, f)]; }
  std::span<const double> row(int c, int t) const {
    return {values.data() + index(c, t, 0), static_cast<std::size_t>(n_features)};
  }

 private:
  std::size_t index(int c, int t, int f) const {
    return (static_cast<std::size_t>(c) * n_days + t) * n_features + f;
  }
};

// Raw per-cluster mobility traces: [w_cc, w_to, w_from] per (cluster, day).
struct MobilityTraces {
  ClusterDayMatrix self, to, from;
};
MobilityTraces mobility_traces(const ODMatrixSeries& od);

// Feature vectors with no smoothing. Zero denominators in the infection
// mobility terms give 0.
FeatureTensor make_features(const ODMatrixSeries& od, const ClusterDayMatrix& infections,
                            Variant variant);
// Same, with each mobility trace median-smoothed per cluster first. The
// infection input is used as given.
FeatureTensor make_features(const ODMatrixSeries& od, const ClusterDayMatrix& infections,
                            Variant variant, int smoothing_window);
FeatureTensor make_features(const MobilityTraces& traces, const ClusterDayMatrix& infections,
                            Variant variant);

// z-scores with population statistics taken over all clusters and days
// [train_begin, train_end) only. Zero-variance features map to 0.
FeatureTensor standardize(const FeatureTensor& raw, int train_begin, int train_end);
FeatureTensor apply_standardization(const FeatureTensor& raw, std::span<const double> mean,
                                    std::span<const double> stddev);

inline constexpr const char* kOdCsvHeader = "day,i,j,count";

void write_od(std::ostream& out, const ODMatrixSeries& od);
ODMatrixSeries read_od(const std::filesystem::path& path);
void write_features(std::ostream& out, const FeatureTensor& f);
FeatureTensor read_features(const std::filesystem::path& path, Variant variant);

}  // namespace mobrisk
