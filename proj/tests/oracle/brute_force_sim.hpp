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

#include <cstdint>
#include <span>
#include <vector>

#include "mobrisk/geo.hpp"
#include "mobrisk/rng.hpp"
#include "mobrisk/spreadsim.hpp"
#include "mobrisk/trajectory.hpp"

namespace mobrisk::testing {

// Reference engine: at every critical time (signal, transition or trial
// deadline) it looks up every agent's position directly from its trajectory
// and re-tests all (infector, target) pairs. No spatial index, no
// incremental episode bookkeeping. Shares only the RNG draw contract with
// the production engine.
SimResult brute_force_simulation(std::span<const AgentTrajectory> trajs, const SimParams& params,
                                 const SimWindow& window, const Projection& proj);

// Random small fixture: agents hop between a few shared spots so co-locations
// are frequent.
std::vector<AgentTrajectory> random_fixture(Rng& rng, std::size_t n_agents, int n_days,
                                            std::int64_t t_start, int n_spots,
                                            double spot_spread_m, double mean_gap_min);

}  // namespace mobrisk::testing
