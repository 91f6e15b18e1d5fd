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

#include <cmath>
#include <cstdint>

namespace mobrisk {

inline constexpr double kEarthRadiusMeters = 6371008.8;
inline constexpr std::int64_t kSecondsPerDay = 86400;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

struct PointXY {
  double x = 0.0;
  double y = 0.0;
};

inline double squared_distance(PointXY a, PointXY b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct BoundingBox {
  double lat_min = -90.0;
  double lat_max = 90.0;
  double lon_min = -180.0;
  double lon_max = 180.0;

  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min &&
           lon <= lon_max;
  }
  LatLon center() const {
    return {0.5 * (lat_min + lat_max), 0.5 * (lon_min + lon_max)};
  }
  bool valid() const { return lat_min < lat_max && lon_min < lon_max; }
};

// Equirectangular projection to meters around a fixed anchor.
class Projection {
 public:
  Projection() = default;
  Projection(double lat0, double lon0)
      : lat0_(lat0),
        lon0_(lon0),
        kx_(kEarthRadiusMeters * std::cos(lat0 * kDegToRad) * kDegToRad),
        ky_(kEarthRadiusMeters * kDegToRad) {}

  static Projection centered_on(const BoundingBox& box) {
    const LatLon c = box.center();
    return Projection(c.lat, c.lon);
  }

  PointXY project(double lat, double lon) const {
    return {(lon - lon0_) * kx_, (lat - lat0_) * ky_};
  }
  LatLon unproject(PointXY p) const {
    return {lat0_ + p.y / ky_, lon0_ + p.x / kx_};
  }

  double lat0() const { return lat0_; }
  double lon0() const { return lon0_; }

 private:
  static constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  double lat0_ = 0.0;
  double lon0_ = 0.0;
  double kx_ = kEarthRadiusMeters * kDegToRad;
  double ky_ = kEarthRadiusMeters * kDegToRad;
};

// Floor division for day bucketing of possibly negative offsets.
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace mobrisk
