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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mobrisk/geo.hpp"
#include "json.hpp"

namespace mobrisk {

using AgentId = std::uint64_t;

struct LocationSignal {
  AgentId agent_id = 0;
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t t = 0;       // seconds since epoch, UTC
  double accuracy = 0.0;    // horizontal accuracy in meters

  bool operator==(const LocationSignal&) const = default;
};

// Empty string when valid, otherwise a description of the violated bound.
std::string validate_signal(const LocationSignal& s);

// All signals share agent_id and are sorted by t (ties keep input order).
struct AgentTrajectory {
  AgentId agent_id = 0;
  std::vector<LocationSignal> signals;

  std::int64_t first_time() const { return signals.front().t; }
  std::int64_t last_time() const { return signals.back().t; }
};

struct RegionWindow {
  BoundingBox bbox;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;

  // Throws ConfigError on an empty box or time range.
  void validate() const;
  bool contains(const LocationSignal& s) const {
    return bbox.contains(s.lat, s.lon) && s.t >= t_start && s.t <= t_end;
  }
  int n_days() const {
    return static_cast<int>((t_end - t_start + kSecondsPerDay - 1) / kSecondsPerDay);
  }
};

enum class RowPolicy { kSkipAndCount, kFailFast };

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<AgentTrajectory> trajectories;
  std::size_t rows_read = 0;
  std::size_t rows_outside = 0;
  std::vector<RowError> errors;  // skipped malformed rows
};

inline constexpr const char* kSignalCsvHeader = "agent_id,lat,lon,timestamp,accuracy";

// Reads `agent_id,lat,lon,timestamp,accuracy` CSV and keeps the signals that
// fall inside `window`. Malformed rows are skipped and reported, or raise
// ParseError under kFailFast.
LoadResult load_signals(std::istream& in, const RegionWindow& window,
                        RowPolicy policy = RowPolicy::kSkipAndCount);
LoadResult load_signals(const std::filesystem::path& path,
                        const RegionWindow& window,
                        RowPolicy policy = RowPolicy::kSkipAndCount);

void write_signals(std::ostream& out, std::span<const AgentTrajectory> trajs);
void write_signals(const std::filesystem::path& path,
                   std::span<const AgentTrajectory> trajs);

// Groups loose signals by agent (ascending id), time-sorting each agent.
std::vector<AgentTrajectory> group_signals(std::vector<LocationSignal> signals);

// Drops signals with accuracy worse than `max_accuracy`, then agents left with
// fewer than `min_signals` signals.
std::vector<AgentTrajectory> filter_quality(std::span<const AgentTrajectory> trajs,
                                            double max_accuracy = 25.0,
                                            std::size_t min_signals = 100);

// Piecewise-constant position: the last signal with timestamp <= t, for
// first_time() <= t <= last_time(); absent outside that span.
std::optional<LatLon> position_at(const AgentTrajectory& traj, std::int64_t t);

struct DatasetStats {
  std::map<std::int64_t, std::size_t> signals_per_day;  // epoch day -> count
  // (percentile, y): percentile% of agents have at least y signals.
  std::vector<std::pair<int, std::size_t>> signals_per_agent_ccdf;
  std::size_t n_agents = 0;
  std::size_t n_signals = 0;
};

DatasetStats dataset_stats(std::span<const AgentTrajectory> trajs);
nlohmann::json to_json(const DatasetStats& stats);

std::size_t total_signals(std::span<const AgentTrajectory> trajs);

}  // namespace mobrisk
