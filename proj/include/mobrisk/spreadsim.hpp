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
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mobrisk/geo.hpp"
#include "mobrisk/rng.hpp"
#include "mobrisk/trajectory.hpp"

namespace mobrisk {

// Transmission model parameters; defaults are the reference setting.
struct SimParams {
  double d_max_m = 11.0;
  std::int64_t t_min_s = 3600;
  double p = 1.0;
  std::size_t n_init = 1000;
  double mu_is_days = 5.0;
  double sigma_is_days = 1.0;
  double mu_r_days = 12.0;
  double sigma_r_days = 2.4;
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const SimParams& p);
void from_json(const nlohmann::json& j, SimParams& p);

enum class Compartment : std::uint8_t { kS, kINS, kIS, kR };

std::string_view to_string(Compartment c);

struct CompartmentState {
  Compartment status = Compartment::kS;
  std::optional<std::int64_t> t_infected;
  std::optional<std::int64_t> t_is;  // absent when the agent never spreads
  std::optional<std::int64_t> t_r;
};

inline constexpr AgentId kInitInfector = std::numeric_limits<AgentId>::max();

struct InfectionEvent {
  AgentId infected = 0;
  AgentId infector = kInitInfector;
  std::int64_t t = 0;
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const InfectionEvent&) const = default;
};

struct DailyCensus {
  int day = 0;
  std::size_t s = 0, ins = 0, is = 0, r = 0;

  bool operator==(const DailyCensus&) const = default;
};

struct StatusChange {
  AgentId agent = 0;
  std::int64_t t = 0;
  Compartment from = Compartment::kS;
  Compartment to = Compartment::kS;
};

// Simulation clock: day d spans [t_start + d*86400, t_start + (d+1)*86400).
struct SimWindow {
  std::int64_t t_start = 0;
  int n_days = 1;

  std::int64_t t_end() const { return t_start + n_days * kSecondsPerDay; }
  // Midnight-aligned window covering every signal.
  static SimWindow covering(std::span<const AgentTrajectory> trajs);
};

struct SimResult {
  std::vector<InfectionEvent> events;    // seeds first, then in occurrence order
  std::vector<DailyCensus> census;       // end-of-day snapshots, one per day
  std::vector<StatusChange> transitions; // every compartment change, in order
  std::vector<AgentId> agents;           // ascending
  std::vector<CompartmentState> states;  // final state, parallel to `agents`
  std::size_t trials = 0;
};

// Half-open co-location interval [start, end) between two agents.
struct Episode {
  AgentId u = 0;
  AgentId v = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - start; }
  bool operator==(const Episode&) const = default;
};

// Positive draw from N(mu, sigma): non-positive samples are redrawn.
double sample_truncated_normal(double mu, double sigma, Rng& rng);

// Uniform sample of n_init agent indices without replacement, ascending.
std::vector<std::size_t> seed_initial(std::size_t n_agents, std::size_t n_init, Rng& rng);

struct TrialOutcome {
  bool infected = false;
  std::int64_t t_infection = 0;
  std::int64_t t_is = 0;  // absolute
  std::int64_t t_r = 0;   // absolute; t_r <= t_is means the agent never spreads
};

// One Bernoulli(p) draw for an eligible episode; on success the infection
// happens at episode start + t_min and the compartment durations are sampled
// (t_IS first, then t_R).
TrialOutcome transmission_trial(const Episode& episode, const SimParams& params, Rng& rng);

// Samples absolute t_IS, t_R for an agent infected at `t`.
void sample_durations(std::int64_t t, const SimParams& params, Rng& rng,
                      std::int64_t& t_is, std::int64_t& t_r);

// Maximal intervals during which both agents are present and within d_max
// under piecewise-constant positions, split at every time in `split_times`.
// An agent is present on [first signal, last signal).
std::vector<Episode> detect_episodes(const AgentTrajectory& u, const AgentTrajectory& v,
                                     const Projection& proj, double d_max_m,
                                     std::span<const std::int64_t> split_times = {});

// Replays all signals in (time, agent id) order, maintaining a grid index of
// present agents and the set of eligible (IS infector, S target) co-location
// episodes. At each timestamp:
//   1. trials whose deadline (episode start + t_min) is now fire, ordered by
//      (target id, infector id);
//   2. scheduled compartment transitions apply;
//   3. signals at this time move agents;
//   4. episodes of changed agents are re-evaluated and new ones opened;
//   5. with t_min == 0, trials opened at this instant fire.
SimResult run_simulation(std::span<const AgentTrajectory> trajs, const SimParams& params,
                         const SimWindow& window, const Projection& proj);
SimResult run_simulation(std::span<const AgentTrajectory> trajs, const SimParams& params);

inline constexpr const char* kInfectionCsvHeader = "infected_id,infector_id,t,lat,lon";
inline constexpr const char* kCensusCsvHeader = "day,S,INS,IS,R";

void write_infections(std::ostream& out, std::span<const InfectionEvent> events);
void write_census(std::ostream& out, std::span<const DailyCensus> census);
std::vector<InfectionEvent> read_infections(const std::filesystem::path& path);

}  // namespace mobrisk
