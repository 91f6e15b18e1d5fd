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

#include "mobrisk/trajectory.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "mobrisk/errors.hpp"
#include "mobrisk/io.hpp"

namespace mobrisk {

std::string validate_signal(const LocationSignal& s) {
  if (!(s.lat >= -90.0 && s.lat <= 90.0)) {
    return "latitude " + io::format_double(s.lat) + " outside [-90, 90]";
  }
  if (!(s.lon >= -180.0 && s.lon <= 180.0)) {
    return "longitude " + io::format_double(s.lon) + " outside [-180, 180]";
  }
  if (!(s.accuracy >= 0.0)) {
    return "accuracy " + io::format_double(s.accuracy) + " is negative";
  }
  return {};
}

void RegionWindow::validate() const {
  if (!bbox.valid()) throw ConfigError("region bbox is empty");
  if (!(t_start < t_end)) throw ConfigError("region time window is empty");
}

namespace {

std::optional<LocationSignal> parse_row(std::string_view line, std::string& err) {
  const auto fields = io::split_csv_line(line);
  if (fields.size() != 5) {
    err = "expected 5 fields, got " + std::to_string(fields.size());
    return std::nullopt;
  }
  auto id = io::parse_number<AgentId>(fields[0]);
  auto lat = io::parse_number<double>(fields[1]);
  auto lon = io::parse_number<double>(fields[2]);
  auto t = io::parse_number<std::int64_t>(fields[3]);
  auto acc = io::parse_number<double>(fields[4]);
  if (!id) { err = "bad agent_id"; return std::nullopt; }
  if (!lat || !lon) { err = "bad coordinate"; return std::nullopt; }
  if (!t) { err = "bad timestamp"; return std::nullopt; }
  if (!acc) { err = "bad accuracy"; return std::nullopt; }
  LocationSignal s{*id, *lat, *lon, *t, *acc};
  err = validate_signal(s);
  if (!err.empty()) return std::nullopt;
  return s;
}

}  // namespace

LoadResult load_signals(std::istream& in, const RegionWindow& window,
                        RowPolicy policy) {
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return result;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSignalCsvHeader) {
    throw ParseError(1, "expected header '" + std::string(kSignalCsvHeader) + "'");
  }
  std::vector<LocationSignal> kept;
  std::string err;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++result.rows_read;
    auto s = parse_row(line, err);
    if (!s) {
      if (policy == RowPolicy::kFailFast) throw ParseError(line_no, err);
      result.errors.push_back({line_no, err});
      continue;
    }
    if (!window.contains(*s)) {
      ++result.rows_outside;
      continue;
    }
    kept.push_back(*s);
  }
  result.trajectories = group_signals(std::move(kept));
  return result;
}

LoadResult load_signals(const std::filesystem::path& path,
                        const RegionWindow& window, RowPolicy policy) {
  std::ifstream in(path);
  if (!in) throw StageError("cannot open signal file " + path.string());
  return load_signals(in, window, policy);
}

void write_signals(std::ostream& out, std::span<const AgentTrajectory> trajs) {
  out << kSignalCsvHeader << '\n';
  for (const auto& traj : trajs) {
    for (const auto& s : traj.signals) {
      out << s.agent_id << ',' << io::format_double(s.lat) << ','
          << io::format_double(s.lon) << ',' << s.t << ','
          << io::format_double(s.accuracy) << '\n';
    }
  }
}

void write_signals(const std::filesystem::path& path,
                   std::span<const AgentTrajectory> trajs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError("cannot write " + path.string());
  write_signals(out, trajs);
}

std::vector<AgentTrajectory> group_signals(std::vector<LocationSignal> signals) {
  std::stable_sort(signals.begin(), signals.end(),
                   [](const LocationSignal& a, const LocationSignal& b) {
                     if (a.agent_id != b.agent_id) return a.agent_id < b.agent_id;
                     return a.t < b.t;
                   });
  std::vector<AgentTrajectory> out;
  for (const auto& s : signals) {
    if (out.empty() || out.back().agent_id != s.agent_id) {
      out.push_back({s.agent_id, {}});
    }
    out.back().signals.push_back(s);
  }
  return out;
}

std::vector<AgentTrajectory> filter_quality(std::span<const AgentTrajectory> trajs,
                                            double max_accuracy,
                                            std::size_t min_signals) {
  if (!(max_accuracy > 0.0)) throw ConfigError("max_accuracy must be positive");
  std::vector<AgentTrajectory> out;
  for (const auto& traj : trajs) {
    AgentTrajectory kept{traj.agent_id, {}};
    for (const auto& s : traj.signals) {
      if (s.accuracy <= max_accuracy) kept.signals.push_back(s);
    }
    if (!kept.signals.empty() && kept.signals.size() >= min_signals) {
      out.push_back(std::move(kept));
    }
  }
  return out;
}

std::optional<LatLon> position_at(const AgentTrajectory& traj, std::int64_t t) {
  const auto& sig = traj.signals;
  if (sig.empty() || t < sig.front().t || t > sig.back().t) return std::nullopt;
  auto it = std::upper_bound(sig.begin(), sig.end(), t,
                             [](std::int64_t v, const LocationSignal& s) { return v < s.t; });
  const LocationSignal& s = *std::prev(it);
  return LatLon{s.lat, s.lon};
}

std::size_t total_signals(std::span<const AgentTrajectory> trajs) {
  std::size_t n = 0;
  for (const auto& t : trajs) n += t.signals.size();
  return n;
}

DatasetStats dataset_stats(std::span<const AgentTrajectory> trajs) {
  DatasetStats stats;
  std::vector<std::size_t> per_agent;
  per_agent.reserve(trajs.size());
  for (const auto& traj : trajs) {
    for (const auto& s : traj.signals) {
      ++stats.signals_per_day[floor_div(s.t, kSecondsPerDay)];
    }
    per_agent.push_back(traj.signals.size());
    stats.n_signals += traj.signals.size();
  }
  stats.n_agents = trajs.size();
  std::sort(per_agent.begin(), per_agent.end(), std::greater<>());
  const std::size_t n = per_agent.size();
  for (int pct = 0; pct <= 100; ++pct) {
    std::size_t y = 0;
    if (n > 0) {
      // Smallest agent count covering pct percent, rounded up.
      std::size_t m = (static_cast<std::size_t>(pct) * n + 99) / 100;
      if (m == 0) m = 1;
      y = per_agent[m - 1];
    }
    stats.signals_per_agent_ccdf.emplace_back(pct, y);
  }
  return stats;
}

nlohmann::json to_json(const DatasetStats& stats) {
  using namespace std::chrono;
  nlohmann::json days = nlohmann::json::array();
  for (const auto& [day, count] : stats.signals_per_day) {
    const year_month_day ymd{sys_days{std::chrono::days(day)}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    days.push_back({{"epoch_day", day}, {"date", buf}, {"signals", count}});
  }
  nlohmann::json ccdf = nlohmann::json::array();
  for (const auto& [pct, y] : stats.signals_per_agent_ccdf) {
    ccdf.push_back({{"percentile", pct}, {"min_signals", y}});
  }
  return {{"n_agents", stats.n_agents},
          {"n_signals", stats.n_signals},
          {"signals_per_day", days},
          {"signals_per_agent_ccdf", ccdf}};
}

}  // namespace mobrisk
