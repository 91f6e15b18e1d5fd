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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobrisk/geo.hpp"
#include "mobrisk/trajectory.hpp"

namespace mobrisk {

// k spatial clusters; centers live in the projection's metric plane.
struct ClusterModel {
  Projection projection;
  std::vector<PointXY> centers;
  int iterations = 0;
  bool converged = false;
  std::vector<double> wcss_history;  // after each assignment step

  std::size_t k() const { return centers.size(); }
  // Nearest center; ties go to the lowest index.
  std::size_t assign(PointXY p) const;
  std::size_t assign(double lat, double lon) const {
    return assign(projection.project(lat, lon));
  }
};

// k-means++ seeding followed by Lloyd iterations until the assignment stops
// changing or max_iters is reached. An emptied cluster is re-seeded at the
// point farthest from its current center.
ClusterModel fit_kmeans(std::span<const PointXY> points, std::size_t k, std::uint64_t seed,
                        int max_iters, const Projection& projection = {});

// Uniform subsample of at most max_points signal positions with
// t_lo <= t < t_hi, projected.
std::vector<PointXY> sample_coordinates(std::span<const AgentTrajectory> trajs,
                                        const Projection& projection, std::size_t max_points,
                                        std::uint64_t seed, std::int64_t t_lo, std::int64_t t_hi);

double within_cluster_ss(std::span<const PointXY> points, std::span<const PointXY> centers);

std::vector<std::uint32_t> assign_all(const ClusterModel& model, std::span<const PointXY> points);
std::vector<std::uint32_t> assign_all_serial(const ClusterModel& model,
                                             std::span<const PointXY> points);

// Clusters holding less than `min_share` of the signals, as warning strings.
std::vector<std::string> sparse_cluster_warnings(std::span<const std::size_t> signals_per_cluster,
                                                 double min_share = 0.01);

nlohmann::json to_json(const ClusterModel& model);
ClusterModel cluster_model_from_json(const nlohmann::json& j);

}  // namespace mobrisk
