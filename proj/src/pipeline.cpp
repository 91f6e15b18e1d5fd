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

#include "mobrisk/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "mobrisk/errors.hpp"
#include "mobrisk/io.hpp"

namespace mobrisk {

using nlohmann::json;

std::vector<GridTriple> default_grid() {
  std::vector<GridTriple> g;
  for (double beta : {2.0, 3.0})
    for (int delta : {3, 5, 7, 9, 11, 13}) g.push_back({2.0, beta, delta});
  return g;
}

PipelineConfig::PipelineConfig() : grid(default_grid()) {}

RegionWindow PipelineConfig::window() const {
  return signals_path.empty() ? synth.window() : region;
}

void PipelineConfig::validate() const {
  if (signals_path.empty()) {
    synth.validate();
  } else {
    region.validate();
  }
  sim.validate();
  if (!(max_accuracy_m > 0.0)) throw ConfigError("max_accuracy_m must be > 0");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (kmeans_max_iters < 1) throw ConfigError("kmeans_max_iters must be >= 1");
  if (kmeans_sample < static_cast<std::size_t>(k)) throw ConfigError("kmeans_sample must be >= k");
  if (variants.empty()) throw ConfigError("at least one variant is required");
  if (grid.empty()) throw ConfigError("the (alpha, beta, delta) grid is empty");
  for (const auto& g : grid) {
    if (!(g.alpha > 0.0) || !(g.beta > 0.0) || g.delta < 0) {
      throw ConfigError("grid entries need alpha > 0, beta > 0 and delta >= 0");
    }
  }
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (smoothing_window < 1) throw ConfigError("smoothing_window must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (!(em_tol > 0.0) || em_max_iters < 1) throw ConfigError("EM tolerance and iteration cap must be positive");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

void PipelineConfig::validate_split() const {
  if (train_days() - horizon < 2) {
    throw ConfigError("window of " + std::to_string(n_days()) + " days is too short for a " +
                      std::to_string(horizon) + "-day test and validation split");
  }
}

namespace {

json bbox_json(const BoundingBox& b) {
  return {{"lat_min", b.lat_min}, {"lat_max", b.lat_max}, {"lon_min", b.lon_min},
          {"lon_max", b.lon_max}};
}

BoundingBox bbox_from(const json& j) {
  return {j.at("lat_min").get<double>(), j.at("lat_max").get<double>(),
          j.at("lon_min").get<double>(), j.at("lon_max").get<double>()};
}

std::string rmae_name(RmaeMode m) {
  return m == RmaeMode::kRatioOfSums ? "ratio_of_sums" : "mean_of_ratios";
}

}  // namespace

json to_json(const PipelineConfig& c) {
  json variants = json::array();
  for (Variant v : c.variants) variants.push_back(std::string(to_string(v)));
  json grid = json::array();
  for (const auto& g : c.grid) grid.push_back({g.alpha, g.beta, g.delta});
  json synth;
  to_json(synth, c.synth);
  json sim;
  to_json(sim, c.sim);
  return {{"signals_path", c.signals_path},
          {"region",
           {{"bbox", bbox_json(c.region.bbox)}, {"t_start", c.region.t_start},
            {"t_end", c.region.t_end}}},
          {"synth", synth},
          {"synth_seed", c.synth_seed},
          {"max_accuracy_m", c.max_accuracy_m},
          {"min_signals", c.min_signals},
          {"strict", c.strict},
          {"sim", sim},
          {"k", c.k},
          {"kmeans_max_iters", c.kmeans_max_iters},
          {"kmeans_sample", c.kmeans_sample},
          {"cluster_seed", c.cluster_seed},
          {"variants", variants},
          {"grid", grid},
          {"horizon", c.horizon},
          {"smoothing_window", c.smoothing_window},
          {"top_k", c.top_k},
          {"intercept", c.intercept},
          {"em_tol", c.em_tol},
          {"em_max_iters", c.em_max_iters},
          {"rmae_mode", rmae_name(c.rmae_mode)},
          {"out_dir", c.out_dir}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  const json defaults = to_json(c);
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    c.signals_path = j.value("signals_path", c.signals_path);
    if (j.contains("region")) {
      const auto& r = j.at("region");
      if (r.contains("bbox")) c.region.bbox = bbox_from(r.at("bbox"));
      c.region.t_start = r.value("t_start", c.region.t_start);
      c.region.t_end = r.value("t_end", c.region.t_end);
    }
    if (j.contains("synth")) {
      json merged;
      to_json(merged, c.synth);
      merged.update(j.at("synth"));
      from_json(merged, c.synth);
    }
    c.synth_seed = j.value("synth_seed", c.synth_seed);
    c.max_accuracy_m = j.value("max_accuracy_m", c.max_accuracy_m);
    c.min_signals = j.value("min_signals", c.min_signals);
    c.strict = j.value("strict", c.strict);
    if (j.contains("sim")) {
      json merged;
      to_json(merged, c.sim);
      merged.update(j.at("sim"));
      from_json(merged, c.sim);
    }
    c.k = j.value("k", c.k);
    c.kmeans_max_iters = j.value("kmeans_max_iters", c.kmeans_max_iters);
    c.kmeans_sample = j.value("kmeans_sample", c.kmeans_sample);
    c.cluster_seed = j.value("cluster_seed", c.cluster_seed);
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
    }
    if (j.contains("grid")) {
      c.grid.clear();
      for (const auto& g : j.at("grid")) {
        if (!g.is_array() || g.size() != 3) throw ConfigError("grid entries are [alpha, beta, delta]");
        c.grid.push_back({g[0].get<double>(), g[1].get<double>(), g[2].get<int>()});
      }
    }
    c.horizon = j.value("horizon", c.horizon);
    c.smoothing_window = j.value("smoothing_window", c.smoothing_window);
    c.top_k = j.value("top_k", c.top_k);
    c.intercept = j.value("intercept", c.intercept);
    c.em_tol = j.value("em_tol", c.em_tol);
    c.em_max_iters = j.value("em_max_iters", c.em_max_iters);
    if (j.contains("rmae_mode")) {
      const auto m = j.at("rmae_mode").get<std::string>();
      if (m == "ratio_of_sums") {
        c.rmae_mode = RmaeMode::kRatioOfSums;
      } else if (m == "mean_of_ratios") {
        c.rmae_mode = RmaeMode::kMeanOfRatios;
      } else {
        throw ConfigError("rmae_mode must be ratio_of_sums or mean_of_ratios");
      }
    }
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return pipeline_config_from_json(j);
}

LoadedData load_data(const PipelineConfig& cfg) {
  LoadedData out;
  std::vector<AgentTrajectory> raw;
  if (cfg.signals_path.empty()) {
    raw = generate_synthetic(cfg.synth, cfg.synth_seed);
    out.rows_read = total_signals(raw);
  } else {
    if (!std::filesystem::exists(cfg.signals_path)) {
      throw ConfigError("signal file not found: " + cfg.signals_path);
    }
    LoadResult lr = load_signals(std::filesystem::path(cfg.signals_path), cfg.region,
                                 cfg.strict ? RowPolicy::kFailFast : RowPolicy::kSkipAndCount);
    out.rows_read = lr.rows_read;
    out.rows_outside = lr.rows_outside;
    out.rows_malformed = lr.errors.size();
    raw = std::move(lr.trajectories);
  }
  out.agents_before_filter = raw.size();
  out.trajectories = filter_quality(raw, cfg.max_accuracy_m, cfg.min_signals);
  if (out.trajectories.empty()) throw StageError("no agents survive the quality filter");
  return out;
}

SimResult simulate(const PipelineConfig& cfg, std::span<const AgentTrajectory> trajs) {
  const RegionWindow w = cfg.window();
  return run_simulation(trajs, cfg.sim, SimWindow{w.t_start, w.n_days()},
                        Projection::centered_on(w.bbox));
}

ClusterModel cluster(const PipelineConfig& cfg, std::span<const AgentTrajectory> trajs) {
  const RegionWindow w = cfg.window();
  const Projection proj = Projection::centered_on(w.bbox);
  const auto points =
      sample_coordinates(trajs, proj, cfg.kmeans_sample, cfg.cluster_seed, w.t_start,
                         w.t_start + static_cast<std::int64_t>(cfg.train_days()) * kSecondsPerDay);
  if (points.size() < static_cast<std::size_t>(cfg.k)) {
    throw StageError("only " + std::to_string(points.size()) + " training signals for k = " +
                     std::to_string(cfg.k));
  }
  return fit_kmeans(points, static_cast<std::size_t>(cfg.k), cfg.cluster_seed,
                    cfg.kmeans_max_iters, proj);
}

ModelInputs model_inputs(const PipelineConfig& cfg, const ODMatrixSeries& od,
                         const ClusterDayMatrix& raw_counts, std::vector<std::size_t> signals) {
  if (raw_counts.n_clusters() != od.n_clusters() || raw_counts.n_days() != od.n_days()) {
    throw StageError("OD and infection series disagree on shape");
  }
  ModelInputs in;
  in.traces = mobility_traces(od);
  in.traces.self = moving_median(in.traces.self, cfg.smoothing_window);
  in.traces.to = moving_median(in.traces.to, cfg.smoothing_window);
  in.traces.from = moving_median(in.traces.from, cfg.smoothing_window);
  in.raw_counts = raw_counts;
  in.counts = moving_median(raw_counts, cfg.smoothing_window);
  in.signals = std::move(signals);
  in.horizon = cfg.horizon;
  in.train_days = od.n_days() - cfg.horizon;
  return in;
}

namespace {

ClusterDayMatrix padded(const ClusterDayMatrix& s, int n_days) {
  if (s.n_days() == n_days) return s;
  ClusterDayMatrix out(s.n_clusters(), n_days);
  for (int c = 0; c < s.n_clusters(); ++c)
    for (int t = 0; t < std::min(n_days, s.n_days()); ++t) out.at(c, t) = s.at(c, t);
  return out;
}

double top_k_rmae(const Forecast& fc, const ClusterDayMatrix& actual, int start,
                  std::span<const int> top, RmaeMode mode) {
  double total = 0.0;
  for (int c : top) {
    double err = 0.0, n_sum = 0.0, rel = 0.0;
    for (int k = 0; k < fc.horizon(); ++k) {
      const double n = actual.at(c, start + k);
      const double e = std::abs(fc.lambda.at(c, k) - n);
      err += e;
      n_sum += n;
      rel += e / std::max(n, 1.0);
    }
    total += mode == RmaeMode::kRatioOfSums ? err / std::max(n_sum, 1.0) : rel / fc.horizon();
  }
  return top.empty() ? 0.0 : total / static_cast<double>(top.size());
}

}  // namespace

FeatureTensor fit_features(const ModelInputs& in, Variant v, const ClusterDayMatrix& series,
                           int fit_days) {
  const FeatureTensor raw = make_features(in.traces, padded(series, in.traces.self.n_days()), v);
  return standardize(raw, 0, fit_days);
}

FeatureTensor features_with_stats(const ModelInputs& in, Variant v, const ClusterDayMatrix& series,
                                  std::span<const double> mean, std::span<const double> stddev) {
  const FeatureTensor raw = make_features(in.traces, padded(series, in.traces.self.n_days()), v);
  return apply_standardization(raw, mean, stddev);
}

FitOutcome fit_variant(const PipelineConfig& cfg, const ModelInputs& in, Variant v,
                       const GridTriple& g, int fit_days) {
  FitOutcome out;
  out.features = fit_features(in, v, in.counts, fit_days);
  EMOptions opt;
  opt.tol = cfg.em_tol;
  opt.max_iters = cfg.em_max_iters;
  opt.intercept = cfg.intercept;
  out.model = em_fit(in.counts.prefix(fit_days), out.features, g.alpha, g.beta, g.delta, opt).model;
  return out;
}

Forecast forecast_variant(const ModelInputs& in, const FitOutcome& fit, int fit_days, int horizon) {
  const HawkesModel& m = fit.model;
  return forecast(m, in.counts.prefix(fit_days), horizon, [&](const ClusterDayMatrix& series) {
    return features_with_stats(in, m.variant, series, m.feature_mean, m.feature_std);
  });
}

GridResult grid_search(const PipelineConfig& cfg, const ModelInputs& in,
                       std::span<const Variant> variants) {
  GridResult r;
  r.grid = cfg.grid;
  const int fit_days = in.train_days - in.horizon;
  const auto top = top_clusters(in.signals, cfg.top_k);
  for (const auto& g : r.grid) {
    double score = 0.0;
    for (Variant v : variants) {
      const FitOutcome fit = fit_variant(cfg, in, v, g, fit_days);
      const Forecast fc = forecast_variant(in, fit, fit_days, in.horizon);
      score += top_k_rmae(fc, in.counts, fit_days, top, cfg.rmae_mode);
    }
    r.scores.push_back(score / static_cast<double>(variants.size()));
  }
  r.best = grid_argmin(r.grid, r.scores);
  return r;
}

VariantResult run_variant(const PipelineConfig& cfg, const ModelInputs& in, Variant v,
                          const GridTriple& g) {
  VariantResult r;
  r.fit = fit_variant(cfg, in, v, g, in.train_days);
  r.forecast = forecast_variant(in, r.fit, in.train_days, in.horizon);
  r.surface = risk_scores(
      full_intensity(r.fit.model, in.counts.prefix(in.train_days), r.fit.features, r.forecast));
  r.report = evaluate(v, r.forecast, in.counts, r.surface, in.signals, cfg.top_k, cfg.rmae_mode);
  return r;
}

// ---- artifacts ------------------------------------------------------------

namespace artifact {

namespace {
std::string slug(Variant v) { return v == Variant::kMobPlus ? "mobplus" : std::string(to_string(v)); }
}  // namespace

std::string features(Variant v) { return "features_" + slug(v) + ".csv"; }
std::string model(Variant v) { return "model_" + slug(v) + ".json"; }
std::string risk_csv(Variant v) { return "risk_" + slug(v) + ".csv"; }
std::string risk_geojson(Variant v, std::optional<int> day) {
  return "risk_" + slug(v) + (day ? "_day" + std::to_string(*day) : std::string()) + ".geojson";
}

}  // namespace artifact

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw StageError("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(io::read_file(path)); }

namespace {

template <typename F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json matrix_json(const ClusterDayMatrix& m) {
  json rows = json::array();
  for (int c = 0; c < m.n_clusters(); ++c) {
    std::vector<double> row(static_cast<std::size_t>(m.n_days()));
    for (int t = 0; t < m.n_days(); ++t) row[static_cast<std::size_t>(t)] = m.at(c, t);
    rows.push_back(row);
  }
  return rows;
}

ClusterDayMatrix matrix_from_json(const json& rows, int n_days) {
  ClusterDayMatrix m(static_cast<int>(rows.size()), n_days);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const auto row = rows[c].get<std::vector<double>>();
    if (row.size() != static_cast<std::size_t>(n_days)) throw StageError("series row length mismatch");
    for (int t = 0; t < n_days; ++t) m.at(static_cast<int>(c), t) = row[static_cast<std::size_t>(t)];
  }
  return m;
}

RiskSurface read_risk_csv(const std::filesystem::path& path) {
  const auto rows = io::read_csv(path, "day,cluster,lambda,rho");
  int max_day = -1, max_c = -1;
  for (const auto& r : rows) {
    if (r.size() != 4) throw StageError("malformed risk table " + path.string());
    max_day = std::max(max_day, io::parse_number<int>(r[0]).value_or(-1));
    max_c = std::max(max_c, io::parse_number<int>(r[1]).value_or(-1));
  }
  RiskSurface s;
  s.lambda = ClusterDayMatrix(max_c + 1, max_day + 1);
  s.rho = ClusterDayMatrix(max_c + 1, max_day + 1);
  std::size_t line = 1;
  for (const auto& r : rows) {
    ++line;
    const auto t = io::parse_number<int>(r[0]);
    const auto c = io::parse_number<int>(r[1]);
    const auto lam = io::parse_number<double>(r[2]);
    const auto rho = io::parse_number<double>(r[3]);
    if (!t || !c || !lam || !rho || *t < 0 || *c < 0) throw ParseError(line, "malformed risk row");
    s.lambda.at(*c, *t) = *lam;
    s.rho.at(*c, *t) = *rho;
  }
  return s;
}

}  // namespace

StageRunner::StageRunner(PipelineConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

const std::vector<AgentTrajectory>& StageRunner::trajectories() {
  if (!data_) data_ = load_data(cfg_);
  return data_->trajectories;
}

std::filesystem::path StageRunner::path(const std::string& name) const {
  return std::filesystem::path(cfg_.out_dir) / name;
}

std::filesystem::path StageRunner::require(const std::string& name, const char* producer) const {
  const auto p = path(name);
  if (!std::filesystem::exists(p)) {
    throw StageError("missing " + p.string() + "; run `mobrisk " + producer + "` first");
  }
  return p;
}

std::vector<std::string> StageRunner::generate() {
  const auto trajs = generate_synthetic(cfg_.synth, cfg_.synth_seed);
  write_signals(path(artifact::kSignals), trajs);
  return {artifact::kSignals};
}

std::vector<std::string> StageRunner::simulate() {
  const auto& trajs = trajectories();
  const SimResult sim = mobrisk::simulate(cfg_, trajs);
  json stats = to_json(dataset_stats(trajs));
  stats["rows_read"] = data_->rows_read;
  stats["rows_outside"] = data_->rows_outside;
  stats["rows_malformed"] = data_->rows_malformed;
  stats["agents_before_filter"] = data_->agents_before_filter;
  stats["infections"] = sim.events.size();
  stats["trials"] = sim.trials;
  io::write_file(path(artifact::kStats), dump(stats));
  io::write_file(path(artifact::kInfections), render([&](std::ostream& os) { write_infections(os, sim.events); }));
  io::write_file(path(artifact::kCensus), render([&](std::ostream& os) { write_census(os, sim.census); }));
  return {artifact::kStats, artifact::kInfections, artifact::kCensus};
}

std::vector<std::string> StageRunner::cluster() {
  cfg_.validate_split();
  const ClusterModel model = mobrisk::cluster(cfg_, trajectories());
  io::write_file(path(artifact::kClusters), dump(to_json(model)));
  return {artifact::kClusters};
}

std::vector<std::string> StageRunner::features() {
  cfg_.validate_split();
  const ClusterModel model =
      cluster_model_from_json(json::parse(io::read_file(require(artifact::kClusters, "cluster"))));
  const auto events = read_infections(require(artifact::kInfections, "simulate"));
  const auto& trajs = trajectories();
  const RegionWindow w = cfg_.window();
  const DayClock clock{w.t_start, w.n_days()};
  const ODMatrixSeries od = build_od(trajs, model, clock);
  const InfectionSeries inf = count_infections(events, model, clock);
  const auto signals = signals_per_cluster(trajs, model, clock);

  io::write_file(path(artifact::kOd), render([&](std::ostream& os) { write_od(os, od); }));
  json series = {{"n_days", clock.n_days},
                 {"train_days", cfg_.train_days()},
                 {"horizon", cfg_.horizon},
                 {"signals_per_cluster", signals},
                 {"events_outside_window", inf.skipped},
                 {"warnings", sparse_cluster_warnings(signals)},
                 {"infections", matrix_json(inf.counts)}};
  io::write_file(path(artifact::kSeries), dump(series));

  std::vector<std::string> out{artifact::kOd, artifact::kSeries};
  const ModelInputs in = model_inputs(cfg_, od, inf.counts, signals);
  for (Variant v : cfg_.variants) {
    const FeatureTensor f = fit_features(in, v, in.counts, in.train_days);
    io::write_file(path(artifact::features(v)), render([&](std::ostream& os) { write_features(os, f); }));
    out.push_back(artifact::features(v));
  }
  return out;
}

ModelInputs StageRunner::read_inputs() const {
  const ODMatrixSeries od = read_od(require(artifact::kOd, "features"));
  const json series = json::parse(io::read_file(require(artifact::kSeries, "features")));
  const int n_days = series.at("n_days").get<int>();
  if (n_days != cfg_.n_days() || od.n_days() != n_days) {
    throw StageError("artifacts in " + cfg_.out_dir + " were built for a different window");
  }
  const ClusterDayMatrix counts = matrix_from_json(series.at("infections"), n_days);
  if (counts.n_clusters() != od.n_clusters()) {
    // read_od infers the cluster count from the largest index present.
    throw StageError("OD table and infection series disagree on the cluster count");
  }
  return model_inputs(cfg_, od, counts, series.at("signals_per_cluster").get<std::vector<std::size_t>>());
}

std::vector<std::string> StageRunner::fit(std::span<const Variant> variants) {
  cfg_.validate_split();
  const ModelInputs in = read_inputs();
  const GridResult grid = grid_search(cfg_, in, variants);
  json gj = json::array();
  for (std::size_t i = 0; i < grid.grid.size(); ++i) {
    gj.push_back({{"alpha", grid.grid[i].alpha},
                  {"beta", grid.grid[i].beta},
                  {"delta", grid.grid[i].delta},
                  {"validation_rmae", grid.scores[i]}});
  }
  const GridTriple best = grid.chosen();
  io::write_file(path(artifact::kGrid),
                 dump({{"chosen", {{"alpha", best.alpha}, {"beta", best.beta}, {"delta", best.delta}}},
                       {"scores", gj}}));
  std::vector<std::string> out{artifact::kGrid};
  for (Variant v : variants) {
    const FitOutcome fit = fit_variant(cfg_, in, v, best, in.train_days);
    io::write_file(path(artifact::model(v)), dump(to_json(fit.model)));
    out.push_back(artifact::model(v));
  }
  return out;
}

std::vector<std::string> StageRunner::evaluate(std::span<const Variant> variants) {
  cfg_.validate_split();
  const ModelInputs in = read_inputs();
  EvalReport report;
  report.top_k = cfg_.top_k;
  report.horizon = cfg_.horizon;
  std::vector<std::string> out;
  for (Variant v : variants) {
    FitOutcome fit;
    fit.model = hawkes_model_from_json(json::parse(io::read_file(require(artifact::model(v), "fit"))));
    if (fit.model.variant != v || fit.model.n_clusters() != in.counts.n_clusters()) {
      throw StageError(artifact::model(v) + " does not match the current features; rerun `mobrisk fit`");
    }
    fit.features = features_with_stats(in, v, in.counts, fit.model.feature_mean, fit.model.feature_std);
    const Forecast fc = forecast_variant(in, fit, in.train_days, in.horizon);
    const RiskSurface surface =
        risk_scores(full_intensity(fit.model, in.counts.prefix(in.train_days), fit.features, fc));
    report.variants.push_back(
        mobrisk::evaluate(v, fc, in.counts, surface, in.signals, cfg_.top_k, cfg_.rmae_mode));
    io::write_file(path(artifact::risk_csv(v)), render([&](std::ostream& os) { write_risk_csv(os, surface); }));
    out.push_back(artifact::risk_csv(v));
  }
  io::write_file(path(artifact::kEvalJson), dump(to_json(report)));
  io::write_file(path(artifact::kEvalCsv), render([&](std::ostream& os) { write_eval_csv(os, report); }));
  out.insert(out.begin(), {artifact::kEvalJson, artifact::kEvalCsv});
  return out;
}

std::vector<std::string> StageRunner::riskmap(std::span<const Variant> variants,
                                              std::optional<int> day) {
  const ClusterModel model =
      cluster_model_from_json(json::parse(io::read_file(require(artifact::kClusters, "cluster"))));
  std::vector<std::string> out;
  for (Variant v : variants) {
    const RiskSurface s = read_risk_csv(require(artifact::risk_csv(v), "evaluate"));
    const auto name = artifact::risk_geojson(v, day);
    io::write_file(path(name), dump(risk_geojson(s, model, day)));
    out.push_back(name);
  }
  return out;
}

void run_pipeline(const PipelineConfig& cfg) {
  StageRunner runner(cfg);
  json manifest = {{"config_sha256", sha256_hex(to_json(cfg).dump())},
                   {"seeds",
                    {{"synth", cfg.synth_seed}, {"sim", cfg.sim.seed}, {"cluster", cfg.cluster_seed}}},
                   {"stages", json::array()},
                   {"status", "running"}};
  const auto manifest_path = std::filesystem::path(cfg.out_dir) / artifact::kManifest;
  auto record = [&](const std::string& stage, const std::vector<std::string>& files) {
    json arts = json::array();
    for (const auto& f : files) {
      arts.push_back({{"file", f}, {"sha256", sha256_file(std::filesystem::path(cfg.out_dir) / f)}});
    }
    manifest["stages"].push_back({{"name", stage}, {"status", "ok"}, {"artifacts", arts}});
    io::write_file(manifest_path, dump(manifest));
  };
  const std::vector<std::pair<std::string, std::function<std::vector<std::string>()>>> stages = {
      {"simulate", [&] { return runner.simulate(); }},
      {"cluster", [&] { return runner.cluster(); }},
      {"features", [&] { return runner.features(); }},
      {"fit", [&] { return runner.fit(cfg.variants); }},
      {"evaluate", [&] { return runner.evaluate(cfg.variants); }},
      {"riskmap", [&] { return runner.riskmap(cfg.variants, std::nullopt); }},
  };
  for (const auto& [name, run] : stages) {
    try {
      record(name, run());
    } catch (const std::exception& e) {
      manifest["stages"].push_back({{"name", name}, {"status", "failed"}, {"error", e.what()}});
      manifest["status"] = "failed";
      manifest["failed_stage"] = name;
      io::write_file(manifest_path, dump(manifest));
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      throw StageError(name + " failed: " + e.what());
    }
  }
  manifest["status"] = "ok";
  io::write_file(manifest_path, dump(manifest));
}

}  // namespace mobrisk
