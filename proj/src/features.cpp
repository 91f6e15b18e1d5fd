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

#include "mobrisk/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mobrisk/errors.hpp"
#include "mobrisk/io.hpp"
#include "mobrisk/parallel.hpp"

namespace mobrisk {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kDen: return "den";
    case Variant::kMob: return "mob";
    case Variant::kMobPlus: return "mob+";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "den") return Variant::kDen;
  if (s == "mob") return Variant::kMob;
  if (s == "mob+" || s == "mobplus") return Variant::kMobPlus;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected den, mob or mob+)");
}

int feature_count(Variant v) {
  switch (v) {
    case Variant::kDen: return 1;
    case Variant::kMob: return 3;
    case Variant::kMobPlus: return 5;
  }
  return 0;
}

std::int64_t ODMatrixSeries::day_total(int day) const {
  std::int64_t s = 0;
  for (int i = 0; i < n_clusters_; ++i)
    for (int j = 0; j < n_clusters_; ++j) s += at(day, i, j);
  return s;
}

namespace {

void accumulate_agent(const AgentTrajectory& traj, const ClusterModel& model,
                      const DayClock& clock, ODMatrixSeries& od) {
  const auto& sig = traj.signals;
  if (sig.size() < 2) return;
  std::size_t prev = model.assign(sig[0].lat, sig[0].lon);
  for (std::size_t k = 1; k < sig.size(); ++k) {
    const std::size_t cur = model.assign(sig[k].lat, sig[k].lon);
    const int day = clock.day_of(sig[k].t);
    if (day >= 0 && sig[k - 1].t >= clock.t_start) {
      ++od.at(day, static_cast<int>(prev), static_cast<int>(cur));
    }
    prev = cur;
  }
}

}  // namespace

ODMatrixSeries build_od_serial(std::span<const AgentTrajectory> trajs, const ClusterModel& model,
                               const DayClock& clock) {
  ODMatrixSeries od(static_cast<int>(model.k()), clock.n_days);
  for (const auto& traj : trajs) accumulate_agent(traj, model, clock, od);
  return od;
}

ODMatrixSeries build_od(std::span<const AgentTrajectory> trajs, const ClusterModel& model,
                        const DayClock& clock) {
  const int k = static_cast<int>(model.k());
  ODMatrixSeries od(k, clock.n_days);
#if defined(_OPENMP)
  const auto n = static_cast<std::ptrdiff_t>(trajs.size());
#pragma omp parallel
  {
    ODMatrixSeries local(k, clock.n_days);
#pragma omp for schedule(dynamic, 16) nowait
    for (std::ptrdiff_t a = 0; a < n; ++a) {
      accumulate_agent(trajs[static_cast<std::size_t>(a)], model, clock, local);
    }
    // Integer counts: the reduction order does not affect the result.
#pragma omp critical
    {
      auto& dst = od.counts();
      const auto& src = local.counts();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
#else
  for (const auto& traj : trajs) accumulate_agent(traj, model, clock, od);
#endif
  return od;
}

InfectionSeries count_infections(std::span<const InfectionEvent> events, const ClusterModel& model,
                                 const DayClock& clock) {
  InfectionSeries out{ClusterDayMatrix(static_cast<int>(model.k()), clock.n_days), 0};
  for (const auto& e : events) {
    const int day = clock.day_of(e.t);
    if (day < 0) {
      ++out.skipped;
      continue;
    }
    out.counts.at(static_cast<int>(model.assign(e.lat, e.lon)), day) += 1.0;
  }
  return out;
}

std::vector<std::size_t> signals_per_cluster(std::span<const AgentTrajectory> trajs,
                                             const ClusterModel& model, const DayClock& clock) {
  std::vector<std::size_t> out(model.k(), 0);
  for (const auto& traj : trajs) {
    for (const auto& s : traj.signals) {
      if (clock.day_of(s.t) >= 0) ++out[model.assign(s.lat, s.lon)];
    }
  }
  return out;
}

std::vector<double> moving_median(std::span<const double> series, int window) {
  if (window < 1) throw ConfigError("median window must be >= 1");
  std::vector<double> out(series.size());
  std::vector<double> buf;
  for (std::size_t t = 0; t < series.size(); ++t) {
    const std::size_t lo = t + 1 >= static_cast<std::size_t>(window) ? t + 1 - window : 0;
    buf.assign(series.begin() + static_cast<std::ptrdiff_t>(lo),
               series.begin() + static_cast<std::ptrdiff_t>(t + 1));
    std::sort(buf.begin(), buf.end());
    const std::size_t n = buf.size();
    out[t] = n % 2 == 1 ? buf[n / 2] : 0.5 * (buf[n / 2 - 1] + buf[n / 2]);
  }
  return out;
}

ClusterDayMatrix moving_median(const ClusterDayMatrix& m, int window) {
  ClusterDayMatrix out(m.n_clusters(), m.n_days());
  std::vector<double> row(static_cast<std::size_t>(m.n_days()));
  for (int c = 0; c < m.n_clusters(); ++c) {
    for (int t = 0; t < m.n_days(); ++t) row[static_cast<std::size_t>(t)] = m.at(c, t);
    const auto sm = moving_median(row, window);
    for (int t = 0; t < m.n_days(); ++t) out.at(c, t) = sm[static_cast<std::size_t>(t)];
  }
  return out;
}

MobilityTraces mobility_traces(const ODMatrixSeries& od) {
  const int k = od.n_clusters();
  const int days = od.n_days();
  MobilityTraces tr{ClusterDayMatrix(k, days), ClusterDayMatrix(k, days), ClusterDayMatrix(k, days)};
  for (int t = 0; t < days; ++t) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const auto w = static_cast<double>(od.at(t, i, j));
        if (i == j) {
          tr.self.at(i, t) += w;
        } else {
          tr.from.at(i, t) += w;
          tr.to.at(j, t) += w;
        }
      }
    }
  }
  return tr;
}

FeatureTensor make_features(const MobilityTraces& tr, const ClusterDayMatrix& infections,
                            Variant variant) {
  const int k = tr.self.n_clusters();
  const int days = tr.self.n_days();
  if (infections.n_clusters() != k || infections.n_days() < days) {
    throw ConfigError("infection series does not match the OD series shape");
  }
  FeatureTensor f;
  f.variant = variant;
  f.n_clusters = k;
  f.n_days = days;
  f.n_features = feature_count(variant);
  f.values.assign(static_cast<std::size_t>(k) * days * f.n_features, 0.0);
  for (int t = 0; t < days; ++t) {
    double volume = 0.0, infected = 0.0;
    for (int c = 0; c < k; ++c) {
      volume += tr.to.at(c, t) + tr.from.at(c, t);
      infected += infections.at(c, t);
    }
    for (int c = 0; c < k; ++c) {
      f.at(c, t, 0) = tr.self.at(c, t);
      if (variant == Variant::kDen) continue;
      f.at(c, t, 1) = tr.to.at(c, t);
      f.at(c, t, 2) = tr.from.at(c, t);
      if (variant == Variant::kMob) continue;
      const double others_volume = volume - tr.to.at(c, t) - tr.from.at(c, t);
      const double others_infected = infected - infections.at(c, t);
      f.at(c, t, 3) = others_volume > 0.0 ? tr.to.at(c, t) / others_volume * others_infected : 0.0;
      f.at(c, t, 4) =
          tr.to.at(c, t) > 0.0 ? tr.self.at(c, t) / tr.to.at(c, t) * infections.at(c, t) : 0.0;
    }
  }
  return f;
}

FeatureTensor make_features(const ODMatrixSeries& od, const ClusterDayMatrix& infections,
                            Variant variant) {
  return make_features(mobility_traces(od), infections, variant);
}

FeatureTensor make_features(const ODMatrixSeries& od, const ClusterDayMatrix& infections,
                            Variant variant, int smoothing_window) {
  MobilityTraces tr = mobility_traces(od);
  if (smoothing_window > 1) {
    tr.self = moving_median(tr.self, smoothing_window);
    tr.to = moving_median(tr.to, smoothing_window);
    tr.from = moving_median(tr.from, smoothing_window);
  }
  return make_features(tr, infections, variant);
}

FeatureTensor apply_standardization(const FeatureTensor& raw, std::span<const double> mean,
                                    std::span<const double> stddev) {
  FeatureTensor out = raw;
  out.mean.assign(mean.begin(), mean.end());
  out.stddev.assign(stddev.begin(), stddev.end());
  for (int c = 0; c < raw.n_clusters; ++c) {
    for (int t = 0; t < raw.n_days; ++t) {
      for (int q = 0; q < raw.n_features; ++q) {
        const auto qi = static_cast<std::size_t>(q);
        out.at(c, t, q) = stddev[qi] > 0.0 ? (raw.at(c, t, q) - mean[qi]) / stddev[qi] : 0.0;
      }
    }
  }
  return out;
}

FeatureTensor standardize(const FeatureTensor& raw, int train_begin, int train_end) {
  if (!(train_begin < train_end) || train_begin < 0 || train_end > raw.n_days) {
    throw ConfigError("standardization needs a non-empty training range");
  }
  const auto nf = static_cast<std::size_t>(raw.n_features);
  std::vector<double> mean(nf, 0.0), sd(nf, 0.0);
  const double n = static_cast<double>(raw.n_clusters) * (train_end - train_begin);
  for (std::size_t q = 0; q < nf; ++q) {
    double s = 0.0;
    for (int c = 0; c < raw.n_clusters; ++c)
      for (int t = train_begin; t < train_end; ++t) s += raw.at(c, t, static_cast<int>(q));
    mean[q] = s / n;
    double ss = 0.0;
    for (int c = 0; c < raw.n_clusters; ++c) {
      for (int t = train_begin; t < train_end; ++t) {
        const double d = raw.at(c, t, static_cast<int>(q)) - mean[q];
        ss += d * d;
      }
    }
    sd[q] = std::sqrt(ss / n);
    // Constant traces leave only rounding noise in the variance.
    if (sd[q] <= 1e-12 * std::max(1.0, std::abs(mean[q]))) sd[q] = 0.0;
  }
  return apply_standardization(raw, mean, sd);
}

void write_od(std::ostream& out, const ODMatrixSeries& od) {
  out << kOdCsvHeader << '\n';
  for (int t = 0; t < od.n_days(); ++t)
    for (int i = 0; i < od.n_clusters(); ++i)
      for (int j = 0; j < od.n_clusters(); ++j)
        out << t << ',' << i << ',' << j << ',' << od.at(t, i, j) << '\n';
}

ODMatrixSeries read_od(const std::filesystem::path& path) {
  const auto rows = io::read_csv(path, kOdCsvHeader);
  int max_day = -1, max_c = -1;
  struct Row { int t, i, j; std::int64_t n; };
  std::vector<Row> parsed;
  std::size_t line = 1;
  for (const auto& r : rows) {
    ++line;
    if (r.size() != 4) throw ParseError(line, "expected 4 fields");
    auto t = io::parse_number<int>(r[0]);
    auto i = io::parse_number<int>(r[1]);
    auto j = io::parse_number<int>(r[2]);
    auto n = io::parse_number<std::int64_t>(r[3]);
    if (!t || !i || !j || !n || *t < 0 || *i < 0 || *j < 0 || *n < 0)
      throw ParseError(line, "malformed OD row");
    parsed.push_back({*t, *i, *j, *n});
    max_day = std::max(max_day, *t);
    max_c = std::max({max_c, *i, *j});
  }
  ODMatrixSeries od(max_c + 1, max_day + 1);
  for (const auto& r : parsed) od.at(r.t, r.i, r.j) = r.n;
  return od;
}

void write_features(std::ostream& out, const FeatureTensor& f) {
  out << "day,cluster";
  for (int q = 0; q < f.n_features; ++q) out << ",f" << (q + 1);
  out << '\n';
  for (int t = 0; t < f.n_days; ++t) {
    for (int c = 0; c < f.n_clusters; ++c) {
      out << t << ',' << c;
      for (int q = 0; q < f.n_features; ++q) out << ',' << io::format_double(f.at(c, t, q));
      out << '\n';
    }
  }
}

FeatureTensor read_features(const std::filesystem::path& path, Variant variant) {
  std::string header = "day,cluster";
  for (int q = 0; q < feature_count(variant); ++q) header += ",f" + std::to_string(q + 1);
  const auto rows = io::read_csv(path, header);
  FeatureTensor f;
  f.variant = variant;
  f.n_features = feature_count(variant);
  int max_day = -1, max_c = -1;
  for (const auto& r : rows) {
    max_day = std::max(max_day, io::parse_number<int>(r.at(0)).value_or(-1));
    max_c = std::max(max_c, io::parse_number<int>(r.at(1)).value_or(-1));
  }
  f.n_days = max_day + 1;
  f.n_clusters = max_c + 1;
  f.values.assign(static_cast<std::size_t>(f.n_days) * f.n_clusters * f.n_features, 0.0);
  std::size_t line = 1;
  for (const auto& r : rows) {
    ++line;
    if (r.size() != static_cast<std::size_t>(2 + f.n_features))
      throw ParseError(line, "wrong number of feature columns");
    const int t = *io::parse_number<int>(r[0]);
    const int c = *io::parse_number<int>(r[1]);
    for (int q = 0; q < f.n_features; ++q) {
      auto v = io::parse_number<double>(r[static_cast<std::size_t>(2 + q)]);
      if (!v) throw ParseError(line, "malformed feature value");
      f.at(c, t, q) = *v;
    }
  }
  return f;
}

}  // namespace mobrisk
