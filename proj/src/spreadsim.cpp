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

#include "mobrisk/spreadsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "mobrisk/errors.hpp"
#include "mobrisk/grid_index.hpp"
#include "mobrisk/io.hpp"

namespace mobrisk {

void SimParams::validate() const {
  if (!(d_max_m > 0.0)) throw ConfigError("d_max must be > 0");
  if (t_min_s < 0) throw ConfigError("t_min must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
  if (n_init < 1) throw ConfigError("n_init must be >= 1");
  if (!(sigma_is_days > 0.0) || !(sigma_r_days > 0.0))
    throw ConfigError("compartment duration sigmas must be > 0");
}

void to_json(nlohmann::json& j, const SimParams& p) {
  j = {{"d_max_m", p.d_max_m},       {"t_min_s", p.t_min_s},
       {"p", p.p},                   {"n_init", p.n_init},
       {"mu_is_days", p.mu_is_days}, {"sigma_is_days", p.sigma_is_days},
       {"mu_r_days", p.mu_r_days},   {"sigma_r_days", p.sigma_r_days},
       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, SimParams& p) {
  p = SimParams{};
  p.d_max_m = j.value("d_max_m", p.d_max_m);
  p.t_min_s = j.value("t_min_s", p.t_min_s);
  p.p = j.value("p", p.p);
  p.n_init = j.value("n_init", p.n_init);
  p.mu_is_days = j.value("mu_is_days", p.mu_is_days);
  p.sigma_is_days = j.value("sigma_is_days", p.sigma_is_days);
  p.mu_r_days = j.value("mu_r_days", p.mu_r_days);
  p.sigma_r_days = j.value("sigma_r_days", p.sigma_r_days);
  p.seed = j.value("seed", p.seed);
}

std::string_view to_string(Compartment c) {
  switch (c) {
    case Compartment::kS: return "S";
    case Compartment::kINS: return "INS";
    case Compartment::kIS: return "IS";
    case Compartment::kR: return "R";
  }
  return "?";
}

SimWindow SimWindow::covering(std::span<const AgentTrajectory> trajs) {
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& t : trajs) {
    if (t.signals.empty()) continue;
    lo = std::min(lo, t.first_time());
    hi = std::max(hi, t.last_time());
  }
  if (lo > hi) return {};
  SimWindow w;
  w.t_start = floor_div(lo, kSecondsPerDay) * kSecondsPerDay;
  w.n_days = static_cast<int>(floor_div(hi - w.t_start, kSecondsPerDay) + 1);
  return w;
}

double sample_truncated_normal(double mu, double sigma, Rng& rng) {
  double x;
  do {
    x = rng.normal(mu, sigma);
  } while (x <= 0.0);
  return x;
}

std::vector<std::size_t> seed_initial(std::size_t n_agents, std::size_t n_init, Rng& rng) {
  if (n_init > n_agents) {
    throw ConfigError("n_init (" + std::to_string(n_init) + ") exceeds the number of agents (" +
                      std::to_string(n_agents) + ")");
  }
  std::vector<std::size_t> idx(n_agents);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < n_init; ++i) {
    const std::size_t j = i + rng.below(n_agents - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n_init);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

std::int64_t days_to_seconds(double days) {
  return std::max<std::int64_t>(1, std::llround(days * static_cast<double>(kSecondsPerDay)));
}

}  // namespace

void sample_durations(std::int64_t t, const SimParams& params, Rng& rng, std::int64_t& t_is,
                      std::int64_t& t_r) {
  t_is = t + days_to_seconds(sample_truncated_normal(params.mu_is_days, params.sigma_is_days, rng));
  t_r = t + days_to_seconds(sample_truncated_normal(params.mu_r_days, params.sigma_r_days, rng));
}

TrialOutcome transmission_trial(const Episode& episode, const SimParams& params, Rng& rng) {
  TrialOutcome out;
  out.t_infection = episode.start + params.t_min_s;
  out.infected = rng.bernoulli(params.p);
  if (out.infected) sample_durations(out.t_infection, params, rng, out.t_is, out.t_r);
  return out;
}

std::vector<Episode> detect_episodes(const AgentTrajectory& u, const AgentTrajectory& v,
                                     const Projection& proj, double d_max_m,
                                     std::span<const std::int64_t> split_times) {
  std::vector<Episode> out;
  if (u.signals.size() < 2 || v.signals.size() < 2) return out;
  const std::int64_t lo = std::max(u.first_time(), v.first_time());
  const std::int64_t hi = std::min(u.last_time(), v.last_time());
  if (lo >= hi) return out;

  // Breakpoints are every signal or split time inside the common span.
  std::vector<std::int64_t> cuts{lo, hi};
  for (const auto* traj : {&u, &v}) {
    for (const auto& s : traj->signals) {
      if (s.t > lo && s.t < hi) cuts.push_back(s.t);
    }
  }
  for (std::int64_t t : split_times) {
    if (t > lo && t < hi) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<std::int64_t> splits(split_times.begin(), split_times.end());
  std::sort(splits.begin(), splits.end());

  const double r2 = d_max_m * d_max_m;
  std::size_t iu = 0, iv = 0;
  bool open = false;
  std::int64_t open_at = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const std::int64_t t = cuts[k];
    while (iu + 1 < u.signals.size() && u.signals[iu + 1].t <= t) ++iu;
    while (iv + 1 < v.signals.size() && v.signals[iv + 1].t <= t) ++iv;
    const auto& su = u.signals[iu];
    const auto& sv = v.signals[iv];
    const bool close = squared_distance(proj.project(su.lat, su.lon),
                                        proj.project(sv.lat, sv.lon)) <= r2;
    const bool split_here = std::binary_search(splits.begin(), splits.end(), t);
    if (open && (!close || split_here)) {
      out.push_back({u.agent_id, v.agent_id, open_at, t});
      open = false;
    }
    if (close && !open) {
      open = true;
      open_at = t;
    }
  }
  if (open) out.push_back({u.agent_id, v.agent_id, open_at, hi});
  return out;
}

namespace {

using Index = std::uint32_t;

class Engine {
 public:
  Engine(std::span<const AgentTrajectory> trajs, const SimParams& params, const SimWindow& window,
         const Projection& proj)
      : trajs_(trajs),
        params_(params),
        window_(window),
        proj_(proj),
        rng_(params.seed),
        grid_(params.d_max_m),
        r2_(params.d_max_m * params.d_max_m) {
    const std::size_t n = trajs.size();
    agents_.resize(n);
    partners_.resize(n);
    next_signal_.assign(n, 0);
    result_.agents.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      result_.agents.push_back(trajs[i].agent_id);
      if (i > 0 && trajs[i].agent_id <= trajs[i - 1].agent_id) {
        throw ConfigError("trajectories must be sorted by unique agent id");
      }
      if (!trajs[i].signals.empty()) signal_queue_.push({trajs[i].signals[0].t, static_cast<Index>(i)});
    }
    counts_[0] = n;
  }

  SimResult run() {
    seed();
    const std::int64_t t_end = window_.t_end();
    int next_census = 0;
    while (true) {
      const std::int64_t t = next_time();
      if (t == kNever || t >= t_end) break;
      while (next_census < window_.n_days &&
             window_.t_start + (next_census + 1) * kSecondsPerDay <= t) {
        emit_census(next_census++);
      }
      fire_due(t);
      apply_transitions(t);
      apply_signals(t);
      refresh_changed(t);
      if (params_.t_min_s == 0) fire_due(t);
    }
    while (next_census < window_.n_days) emit_census(next_census++);
    result_.states.reserve(agents_.size());
    for (const auto& a : agents_) result_.states.push_back(a.state);
    return std::move(result_);
  }

 private:
  static constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

  struct Agent {
    CompartmentState state;
    bool present = false;
    PointXY pos;
    LatLon ll;
  };
  struct EpisodeState {
    std::int64_t start;
    bool fired;
  };
  using Timed = std::pair<std::int64_t, Index>;                       // (t, agent)
  using Deadline = std::tuple<std::int64_t, Index, Index, std::int64_t>;  // (t, target, infector, start)
  using Transition = std::tuple<std::int64_t, Index, Compartment>;

  template <typename T>
  using MinHeap = std::priority_queue<T, std::vector<T>, std::greater<T>>;

  static std::uint64_t pair_key(Index infector, Index target) {
    return (static_cast<std::uint64_t>(infector) << 32) | target;
  }

  std::int64_t next_time() const {
    std::int64_t t = kNever;
    if (!signal_queue_.empty()) t = std::min(t, signal_queue_.top().first);
    if (!transitions_.empty()) t = std::min(t, std::get<0>(transitions_.top()));
    if (!deadlines_.empty()) t = std::min(t, std::get<0>(deadlines_.top()));
    return t;
  }

  void set_status(Index a, std::int64_t t, Compartment to) {
    Agent& ag = agents_[a];
    const Compartment from = ag.state.status;
    --counts_[static_cast<int>(from)];
    ++counts_[static_cast<int>(to)];
    ag.state.status = to;
    result_.transitions.push_back({trajs_[a].agent_id, t, from, to});
  }

  void infect(Index a, std::int64_t t, AgentId infector, std::int64_t t_is, std::int64_t t_r,
              LatLon where) {
    Agent& ag = agents_[a];
    set_status(a, t, Compartment::kINS);
    ag.state.t_infected = t;
    ag.state.t_r = t_r;
    const std::int64_t t_end = window_.t_end();
    if (t_r > t_is) {
      ag.state.t_is = t_is;
      if (t_is < t_end) transitions_.push({t_is, a, Compartment::kIS});
    }
    if (t_r < t_end) transitions_.push({t_r, a, Compartment::kR});
    result_.events.push_back({trajs_[a].agent_id, infector, t, where.lat, where.lon});
  }

  void seed() {
    const auto seeds = seed_initial(agents_.size(), params_.n_init, rng_);
    for (std::size_t i : seeds) {
      std::int64_t t_is, t_r;
      sample_durations(window_.t_start, params_, rng_, t_is, t_r);
      const auto& traj = trajs_[i];
      LatLon where{traj.signals.front().lat, traj.signals.front().lon};
      if (auto p = position_at(traj, window_.t_start)) where = *p;
      infect(static_cast<Index>(i), window_.t_start, kInitInfector, t_is, t_r, where);
    }
  }

  void drop_episode(Index infector, Index target) {
    episodes_.erase(pair_key(infector, target));
    auto unlink = [](std::vector<Index>& v, Index x) {
      auto it = std::find(v.begin(), v.end(), x);
      if (it != v.end()) {
        *it = v.back();
        v.pop_back();
      }
    };
    unlink(partners_[infector], target);
    unlink(partners_[target], infector);
  }

  void drop_all_episodes(Index a) {
    const auto partners = partners_[a];
    for (Index b : partners) {
      if (episodes_.count(pair_key(a, b))) drop_episode(a, b);
      if (episodes_.count(pair_key(b, a))) drop_episode(b, a);
    }
  }

  void fire_due(std::int64_t t) {
    while (!deadlines_.empty() && std::get<0>(deadlines_.top()) <= t) {
      const auto [due, target, infector, start] = deadlines_.top();
      deadlines_.pop();
      auto it = episodes_.find(pair_key(infector, target));
      if (it == episodes_.end() || it->second.start != start || it->second.fired) continue;
      it->second.fired = true;
      ++result_.trials;
      const Episode ep{trajs_[infector].agent_id, trajs_[target].agent_id, start, due};
      const TrialOutcome out = transmission_trial(ep, params_, rng_);
      if (!out.infected) continue;
      const LatLon where = agents_[target].ll;
      drop_all_episodes(target);
      infect(target, due, trajs_[infector].agent_id, out.t_is, out.t_r, where);
    }
  }

  void apply_transitions(std::int64_t t) {
    while (!transitions_.empty() && std::get<0>(transitions_.top()) == t) {
      const auto [when, a, to] = transitions_.top();
      transitions_.pop();
      const Compartment from = agents_[a].state.status;
      if (to == Compartment::kIS && from != Compartment::kINS) continue;
      if (to == Compartment::kR && from == Compartment::kR) continue;
      if (to == Compartment::kR) drop_all_episodes(a);
      set_status(a, when, to);
      changed_.push_back(a);
    }
  }

  void apply_signals(std::int64_t t) {
    while (!signal_queue_.empty() && signal_queue_.top().first == t) {
      const Index a = signal_queue_.top().second;
      signal_queue_.pop();
      const auto& sig = trajs_[a].signals;
      const std::size_t k = next_signal_[a]++;
      Agent& ag = agents_[a];
      const PointXY p = proj_.project(sig[k].lat, sig[k].lon);
      const bool now_present = sig[k].t < sig.back().t;
      if (ag.present && now_present) {
        grid_.move(a, ag.pos, p);
      } else if (ag.present) {
        grid_.remove(a, ag.pos);
      } else if (now_present) {
        grid_.insert(a, p);
      }
      ag.present = now_present;
      ag.pos = p;
      ag.ll = {sig[k].lat, sig[k].lon};
      if (k + 1 < sig.size()) signal_queue_.push({sig[k + 1].t, a});
      changed_.push_back(a);
    }
  }

  bool eligible(Index infector, Index target) const {
    const Agent& u = agents_[infector];
    const Agent& v = agents_[target];
    return u.present && v.present && u.state.status == Compartment::kIS &&
           v.state.status == Compartment::kS && squared_distance(u.pos, v.pos) <= r2_;
  }

  void open_episode(Index infector, Index target, std::int64_t t) {
    const std::uint64_t key = pair_key(infector, target);
    if (episodes_.count(key)) return;
    episodes_.emplace(key, EpisodeState{t, false});
    partners_[infector].push_back(target);
    partners_[target].push_back(infector);
    deadlines_.push({t + params_.t_min_s, target, infector, t});
  }

  void refresh_changed(std::int64_t t) {
    std::sort(changed_.begin(), changed_.end());
    changed_.erase(std::unique(changed_.begin(), changed_.end()), changed_.end());
    for (Index a : changed_) {
      const auto partners = partners_[a];
      for (Index b : partners) {
        if (episodes_.count(pair_key(a, b)) && !eligible(a, b)) drop_episode(a, b);
        if (episodes_.count(pair_key(b, a)) && !eligible(b, a)) drop_episode(b, a);
      }
      const Agent& ag = agents_[a];
      if (!ag.present) continue;
      const Compartment st = ag.state.status;
      if (st != Compartment::kIS && st != Compartment::kS) continue;
      grid_.for_each_near(ag.pos, [&](Index b) {
        if (b == a) return;
        if (st == Compartment::kIS) {
          if (eligible(a, b)) open_episode(a, b, t);
        } else if (eligible(b, a)) {
          open_episode(b, a, t);
        }
      });
    }
    changed_.clear();
  }

  void emit_census(int day) {
    result_.census.push_back({day, counts_[0], counts_[1], counts_[2], counts_[3]});
  }

  std::span<const AgentTrajectory> trajs_;
  const SimParams& params_;
  SimWindow window_;
  Projection proj_;
  Rng rng_;
  GridIndex grid_;
  double r2_;

  std::vector<Agent> agents_;
  std::vector<std::vector<Index>> partners_;
  std::vector<std::size_t> next_signal_;
  std::unordered_map<std::uint64_t, EpisodeState> episodes_;
  MinHeap<Timed> signal_queue_;
  MinHeap<Deadline> deadlines_;
  MinHeap<Transition> transitions_;
  std::vector<Index> changed_;
  std::size_t counts_[4] = {0, 0, 0, 0};
  SimResult result_;
};

}  // namespace

SimResult run_simulation(std::span<const AgentTrajectory> trajs, const SimParams& params,
                         const SimWindow& window, const Projection& proj) {
  params.validate();
  if (trajs.size() < params.n_init) {
    throw ConfigError("n_init (" + std::to_string(params.n_init) +
                      ") exceeds the number of agents (" + std::to_string(trajs.size()) + ")");
  }
  for (const auto& t : trajs) {
    if (t.signals.empty()) throw ConfigError("trajectory without signals");
  }
  return Engine(trajs, params, window, proj).run();
}

SimResult run_simulation(std::span<const AgentTrajectory> trajs, const SimParams& params) {
  BoundingBox box{90.0, -90.0, 180.0, -180.0};
  for (const auto& t : trajs) {
    for (const auto& s : t.signals) {
      box.lat_min = std::min(box.lat_min, s.lat);
      box.lat_max = std::max(box.lat_max, s.lat);
      box.lon_min = std::min(box.lon_min, s.lon);
      box.lon_max = std::max(box.lon_max, s.lon);
    }
  }
  const Projection proj = trajs.empty() ? Projection() : Projection::centered_on(box);
  return run_simulation(trajs, params, SimWindow::covering(trajs), proj);
}

void write_infections(std::ostream& out, std::span<const InfectionEvent> events) {
  out << kInfectionCsvHeader << '\n';
  for (const auto& e : events) {
    out << e.infected << ',';
    if (e.infector == kInitInfector) {
      out << "INIT";
    } else {
      out << e.infector;
    }
    out << ',' << e.t << ',' << io::format_double(e.lat) << ',' << io::format_double(e.lon) << '\n';
  }
}

void write_census(std::ostream& out, std::span<const DailyCensus> census) {
  out << kCensusCsvHeader << '\n';
  for (const auto& c : census) {
    out << c.day << ',' << c.s << ',' << c.ins << ',' << c.is << ',' << c.r << '\n';
  }
}

std::vector<InfectionEvent> read_infections(const std::filesystem::path& path) {
  const auto rows = io::read_csv(path, kInfectionCsvHeader);
  std::vector<InfectionEvent> out;
  out.reserve(rows.size());
  std::size_t line = 1;
  for (const auto& r : rows) {
    ++line;
    if (r.size() != 5) throw ParseError(line, "expected 5 fields");
    InfectionEvent e;
    auto id = io::parse_number<AgentId>(r[0]);
    auto t = io::parse_number<std::int64_t>(r[2]);
    auto lat = io::parse_number<double>(r[3]);
    auto lon = io::parse_number<double>(r[4]);
    if (!id || !t || !lat || !lon) throw ParseError(line, "malformed infection row");
    e.infected = *id;
    if (r[1] == "INIT") {
      e.infector = kInitInfector;
    } else {
      auto inf = io::parse_number<AgentId>(r[1]);
      if (!inf) throw ParseError(line, "malformed infector id");
      e.infector = *inf;
    }
    e.t = *t;
    e.lat = *lat;
    e.lon = *lon;
    out.push_back(e);
  }
  return out;
}

}  // namespace mobrisk
