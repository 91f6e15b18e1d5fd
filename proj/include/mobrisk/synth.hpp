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

#include "json.hpp"
#include "mobrisk/geo.hpp"
#include "mobrisk/trajectory.hpp"

namespace mobrisk {

// Synthetic stand-in for real location-signal data. Agents live in shared
// homes and visit a work site plus leisure sites each day; the chance of
// leaving home and the number of leisure stops scale with the day's mobility
// multiplier. This is a test-data generator with no claim of fidelity to any
// real population.
struct SynthConfig {
  std::size_t n_agents = 2000;
  int n_days = 30;
  std::int64_t t_start = 1575158400;  // 2019-12-01T00:00:00Z
  BoundingBox bbox{37.70, 37.82, -122.52, -122.36};
  std::size_t n_anchor_sites = 120;
  std::size_t household_size = 3;
  double site_radius_m = 25.0;         // spots inside a site are spread over this disk
  double signal_interval_minutes = 15.0;
  double jitter_m = 3.0;
  double out_of_home_prob = 0.9;
  double leisure_stops = 1.0;          // mean extra stops per day at multiplier 1
  double bad_accuracy_fraction = 0.0;  // share of signals with accuracy worse than 25 m
  std::vector<double> mobility_multiplier;  // per day; days past the end use 1.0

  double multiplier(int day) const {
    return day < static_cast<int>(mobility_multiplier.size())
               ? mobility_multiplier[static_cast<std::size_t>(day)]
               : 1.0;
  }
  RegionWindow window() const {
    return {bbox, t_start, t_start + static_cast<std::int64_t>(n_days) * kSecondsPerDay};
  }
  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

std::vector<AgentTrajectory> generate_synthetic(const SynthConfig& config,
                                                std::uint64_t seed);

}  // namespace mobrisk
