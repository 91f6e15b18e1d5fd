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
#include <vector>

#include "mobrisk/geo.hpp"

namespace mobrisk {

// Dense cluster x day table of reals (counts, intensities, scores).
class ClusterDayMatrix {
 public:
  ClusterDayMatrix() = default;
  ClusterDayMatrix(int n_clusters, int n_days, double fill = 0.0)
      : n_clusters_(n_clusters),
        n_days_(n_days),
        data_(static_cast<std::size_t>(n_clusters) * static_cast<std::size_t>(n_days), fill) {}

  int n_clusters() const { return n_clusters_; }
  int n_days() const { return n_days_; }

  double& at(int c, int t) { return data_[index(c, t)]; }
  double at(int c, int t) const { return data_[index(c, t)]; }

  const std::vector<double>& data() const { return data_; }
  double total() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
  }

  // Copy restricted to days [0, n_days).
  ClusterDayMatrix prefix(int n_days) const {
    ClusterDayMatrix out(n_clusters_, n_days);
    for (int c = 0; c < n_clusters_; ++c)
      for (int t = 0; t < n_days; ++t) out.at(c, t) = at(c, t);
    return out;
  }

  bool operator==(const ClusterDayMatrix&) const = default;

 private:
  std::size_t index(int c, int t) const {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(n_days_) +
           static_cast<std::size_t>(t);
  }
  int n_clusters_ = 0;
  int n_days_ = 0;
  std::vector<double> data_;
};

// Day d covers [t_start + d*86400, t_start + (d+1)*86400).
struct DayClock {
  std::int64_t t_start = 0;
  int n_days = 0;

  // -1 when t falls outside the clock's range.
  int day_of(std::int64_t t) const {
    if (t < t_start) return -1;
    const std::int64_t d = (t - t_start) / kSecondsPerDay;
    return d < n_days ? static_cast<int>(d) : -1;
  }
};

}  // namespace mobrisk
