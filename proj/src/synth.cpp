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

#include <algorithm>
#include <cmath>

#include "mobrisk/errors.hpp"
#include "mobrisk/rng.hpp"

namespace mobrisk {

void SynthConfig::validate() const {
  if (n_agents == 0) throw ConfigError("synthetic config: n_agents must be > 0");
  if (n_days <= 0) throw ConfigError("synthetic config: n_days must be > 0");
  if (!bbox.valid()) throw ConfigError("synthetic config: bbox is empty");
  if (n_anchor_sites == 0) throw ConfigError("synthetic config: n_anchor_sites must be > 0");
  if (household_size == 0) throw ConfigError("synthetic config: household_size must be > 0");
  if (!(signal_interval_minutes > 0.0))
    throw ConfigError("synthetic config: signal_interval_minutes must be > 0");
  if (!(jitter_m >= 0.0) || !(site_radius_m >= 0.0))
    throw ConfigError("synthetic config: jitter and site radius must be >= 0");
  for (double m : mobility_multiplier) {
    if (!(m >= 0.0)) throw ConfigError("synthetic config: negative mobility multiplier");
  }
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = {{"n_agents", c.n_agents},
       {"n_days", c.n_days},
       {"t_start", c.t_start},
       {"bbox", {c.bbox.lat_min, c.bbox.lat_max, c.bbox.lon_min, c.bbox.lon_max}},
       {"n_anchor_sites", c.n_anchor_sites},
       {"household_size", c.household_size},
       {"site_radius_m", c.site_radius_m},
       {"signal_interval_minutes", c.signal_interval_minutes},
       {"jitter_m", c.jitter_m},
       {"out_of_home_prob", c.out_of_home_prob},
       {"leisure_stops", c.leisure_stops},
       {"bad_accuracy_fraction", c.bad_accuracy_fraction},
       {"mobility_multiplier", c.mobility_multiplier}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  c = SynthConfig{};
  c.n_agents = j.value("n_agents", c.n_agents);
  c.n_days = j.value("n_days", c.n_days);
  c.t_start = j.value("t_start", c.t_start);
  if (j.contains("bbox")) {
    const auto& b = j.at("bbox");
    if (!b.is_array() || b.size() != 4)
      throw ConfigError("synthetic config: bbox must be [lat_min, lat_max, lon_min, lon_max]");
    c.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
  }
  c.n_anchor_sites = j.value("n_anchor_sites", c.n_anchor_sites);
  c.household_size = j.value("household_size", c.household_size);
  c.site_radius_m = j.value("site_radius_m", c.site_radius_m);
  c.signal_interval_minutes = j.value("signal_interval_minutes", c.signal_interval_minutes);
  c.jitter_m = j.value("jitter_m", c.jitter_m);
  c.out_of_home_prob = j.value("out_of_home_prob", c.out_of_home_prob);
  c.leisure_stops = j.value("leisure_stops", c.leisure_stops);
  c.bad_accuracy_fraction = j.value("bad_accuracy_fraction", c.bad_accuracy_fraction);
  c.mobility_multiplier = j.value("mobility_multiplier", c.mobility_multiplier);
}

namespace {

struct Stop {
  double start_h;  // hours since local midnight
  PointXY where;
};

PointXY uniform_in_box(Rng& rng, PointXY lo, PointXY hi) {
  return {lo.x + (hi.x - lo.x) * rng.uniform(), lo.y + (hi.y - lo.y) * rng.uniform()};
}

PointXY spot_in_site(Rng& rng, PointXY center, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = 2.0 * 3.14159265358979323846 * rng.uniform();
  return {center.x + r * std::cos(a), center.y + r * std::sin(a)};
}

}  // namespace

std::vector<AgentTrajectory> generate_synthetic(const SynthConfig& config,
                                                std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const Projection proj = Projection::centered_on(config.bbox);
  // Keep anchors 100 m inside the box so jittered signals rarely leave it.
  PointXY lo = proj.project(config.bbox.lat_min, config.bbox.lon_min);
  PointXY hi = proj.project(config.bbox.lat_max, config.bbox.lon_max);
  const double margin = std::min({100.0, 0.1 * (hi.x - lo.x), 0.1 * (hi.y - lo.y)});
  lo = {lo.x + margin, lo.y + margin};
  hi = {hi.x - margin, hi.y - margin};

  std::vector<PointXY> sites(config.n_anchor_sites);
  for (auto& s : sites) s = uniform_in_box(rng, lo, hi);
  const std::size_t n_homes =
      (config.n_agents + config.household_size - 1) / config.household_size;
  std::vector<PointXY> homes(n_homes);
  for (auto& h : homes) h = uniform_in_box(rng, lo, hi);

  struct Profile {
    std::size_t home;
    std::size_t work;
    std::size_t favorites[3];
  };
  std::vector<Profile> profiles(config.n_agents);
  for (std::size_t a = 0; a < config.n_agents; ++a) {
    auto& p = profiles[a];
    p.home = a / config.household_size;
    p.work = rng.below(sites.size());
    for (auto& f : p.favorites) f = rng.below(sites.size());
  }

  const double mean_gap_s = config.signal_interval_minutes * 60.0;
  std::vector<AgentTrajectory> out(config.n_agents);
  for (std::size_t a = 0; a < config.n_agents; ++a) {
    const auto& prof = profiles[a];
    AgentTrajectory& traj = out[a];
    traj.agent_id = static_cast<AgentId>(a + 1);
    const PointXY home = homes[prof.home];
    for (int day = 0; day < config.n_days; ++day) {
      const double m = config.multiplier(day);
      std::vector<Stop> stops{{0.0, home}};
      if (rng.uniform() < std::min(1.0, m * config.out_of_home_prob)) {
        double h = std::clamp(rng.normal(8.0, 0.75), 6.0, 10.0);
        stops.push_back({h, spot_in_site(rng, sites[prof.work], config.site_radius_m)});
        h += std::clamp(rng.normal(8.0, 1.0), 5.0, 10.0);
        const std::int64_t n_leisure = rng.poisson(m * config.leisure_stops);
        for (std::int64_t k = 0; k < n_leisure && h < 22.0; ++k) {
          const std::size_t site = prof.favorites[rng.below(3)];
          stops.push_back({h, spot_in_site(rng, sites[site], config.site_radius_m)});
          h += 1.0 + rng.uniform();
        }
        stops.push_back({std::min(h, 23.5), home});
      }
      const double day_start = static_cast<double>(config.t_start) +
                               static_cast<double>(day) * kSecondsPerDay;
      double t = rng.exponential(1.0 / mean_gap_s);
      std::size_t stop = 0;
      while (t < kSecondsPerDay) {
        while (stop + 1 < stops.size() && stops[stop + 1].start_h * 3600.0 <= t) ++stop;
        const PointXY c = stops[stop].where;
        const PointXY p{c.x + rng.normal(0.0, config.jitter_m),
                        c.y + rng.normal(0.0, config.jitter_m)};
        const LatLon ll = proj.unproject(p);
        double acc = 3.0 + 17.0 * rng.uniform();
        if (rng.uniform() < config.bad_accuracy_fraction) acc = 26.0 + 40.0 * rng.uniform();
        traj.signals.push_back({traj.agent_id, ll.lat, ll.lon,
                                static_cast<std::int64_t>(std::floor(day_start + t)), acc});
        t += rng.exponential(1.0 / mean_gap_s);
      }
    }
  }
  return out;
}

}  // namespace mobrisk
