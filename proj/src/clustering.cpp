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

#include <algorithm>
#include <limits>
#include <numeric>

#include "mobrisk/errors.hpp"
#include "mobrisk/parallel.hpp"
#include "mobrisk/rng.hpp"

namespace mobrisk {

std::size_t ClusterModel::assign(PointXY p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = squared_distance(p, centers[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double within_cluster_ss(std::span<const PointXY> points, std::span<const PointXY> centers) {
  ClusterModel m;
  m.centers.assign(centers.begin(), centers.end());
  double s = 0.0;
  for (const auto& p : points) s += squared_distance(p, m.centers[m.assign(p)]);
  return s;
}

std::vector<std::uint32_t> assign_all_serial(const ClusterModel& model,
                                             std::span<const PointXY> points) {
  std::vector<std::uint32_t> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i] = static_cast<std::uint32_t>(model.assign(points[i]));
  }
  return out;
}

std::vector<std::uint32_t> assign_all(const ClusterModel& model, std::span<const PointXY> points) {
  std::vector<std::uint32_t> out(points.size());
  parallel_for(static_cast<std::ptrdiff_t>(points.size()), [&](std::ptrdiff_t i) {
    out[static_cast<std::size_t>(i)] =
        static_cast<std::uint32_t>(model.assign(points[static_cast<std::size_t>(i)]));
  });
  return out;
}

namespace {

std::vector<PointXY> kmeans_pp(std::span<const PointXY> points, std::size_t k, Rng& rng) {
  std::vector<PointXY> centers;
  centers.reserve(k);
  centers.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centers[0]);
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(points.size());
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
    }
  }
  return centers;
}

}  // namespace

ClusterModel fit_kmeans(std::span<const PointXY> points, std::size_t k, std::uint64_t seed,
                        int max_iters, const Projection& projection) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (points.size() < k) {
    throw ConfigError("k-means needs at least k=" + std::to_string(k) + " points, got " +
                      std::to_string(points.size()));
  }
  Rng rng(seed);
  ClusterModel model;
  model.projection = projection;
  model.centers = kmeans_pp(points, k, rng);

  std::vector<std::uint32_t> labels(points.size(), std::numeric_limits<std::uint32_t>::max());
  for (int iter = 0; iter < max_iters; ++iter) {
    std::vector<std::uint32_t> next = assign_all(model, points);
    double wcss = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      wcss += squared_distance(points[i], model.centers[next[i]]);
    }
    model.wcss_history.push_back(wcss);
    model.iterations = iter + 1;
    if (next == labels) {
      model.converged = true;
      break;
    }
    labels = std::move(next);

    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sx[labels[i]] += points[i].x;
      sy[labels[i]] += points[i].y;
      ++cnt[labels[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] > 0) {
        model.centers[c] = {sx[c] / static_cast<double>(cnt[c]), sy[c] / static_cast<double>(cnt[c])};
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = squared_distance(points[i], model.centers[labels[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      model.centers[c] = points[far];
      --cnt[labels[far]];
      labels[far] = static_cast<std::uint32_t>(c);
      cnt[c] = 1;
    }
  }
  return model;
}

std::vector<PointXY> sample_coordinates(std::span<const AgentTrajectory> trajs,
                                        const Projection& projection, std::size_t max_points,
                                        std::uint64_t seed, std::int64_t t_lo, std::int64_t t_hi) {
  std::vector<PointXY> all;
  for (const auto& traj : trajs) {
    for (const auto& s : traj.signals) {
      if (s.t >= t_lo && s.t < t_hi) all.push_back(projection.project(s.lat, s.lon));
    }
  }
  if (all.size() <= max_points) return all;
  // Partial Fisher-Yates, then restore input order for reproducible fits.
  Rng rng(seed);
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < max_points; ++i) {
    std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  }
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  std::vector<PointXY> out;
  out.reserve(max_points);
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

std::vector<std::string> sparse_cluster_warnings(std::span<const std::size_t> signals_per_cluster,
                                                 double min_share) {
  const double total = static_cast<double>(
      std::accumulate(signals_per_cluster.begin(), signals_per_cluster.end(), std::size_t{0}));
  std::vector<std::string> out;
  for (std::size_t c = 0; c < signals_per_cluster.size(); ++c) {
    const double share = total > 0 ? static_cast<double>(signals_per_cluster[c]) / total : 0.0;
    if (share < min_share) {
      out.push_back("cluster " + std::to_string(c) + " holds " + std::to_string(100.0 * share) +
                    "% of signals");
    }
  }
  return out;
}

nlohmann::json to_json(const ClusterModel& model) {
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& c : model.centers) {
    const LatLon ll = model.projection.unproject(c);
    centers.push_back({{"lat", ll.lat}, {"lon", ll.lon}, {"x", c.x}, {"y", c.y}});
  }
  return {{"k", model.k()},
          {"projection", {{"lat0", model.projection.lat0()}, {"lon0", model.projection.lon0()}}},
          {"centers", centers},
          {"iterations", model.iterations},
          {"converged", model.converged}};
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
  ClusterModel m;
  const auto& p = j.at("projection");
  m.projection = Projection(p.at("lat0").get<double>(), p.at("lon0").get<double>());
  for (const auto& c : j.at("centers")) {
    m.centers.push_back({c.at("x").get<double>(), c.at("y").get<double>()});
  }
  m.iterations = j.value("iterations", 0);
  m.converged = j.value("converged", false);
  if (m.centers.empty()) throw ConfigError("cluster model has no centers");
  return m;
}

}  // namespace mobrisk
