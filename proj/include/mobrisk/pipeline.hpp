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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobrisk/clustering.hpp"
#include "mobrisk/features.hpp"
#include "mobrisk/hawkes.hpp"
#include "mobrisk/risk_eval.hpp"
#include "mobrisk/spreadsim.hpp"
#include "mobrisk/synth.hpp"
#include "mobrisk/trajectory.hpp"

namespace mobrisk {

// Every tunable of a run. Defaults: reference transmission parameters,
// 15 clusters, 6-day median smoothing, 5-day test horizon, top-5 reporting.
struct PipelineConfig {
  // Data source: a signal CSV when set, otherwise the synthetic generator.
  std::string signals_path;
  RegionWindow region;  // required with signals_path; synthetic runs use synth.window()
  SynthConfig synth;
  std::uint64_t synth_seed = 1;
  double max_accuracy_m = 25.0;
  std::size_t min_signals = 100;
  bool strict = false;

  SimParams sim;

  int k = 15;
  int kmeans_max_iters = 300;
  std::size_t kmeans_sample = 1000000;
  std::uint64_t cluster_seed = 1;

  std::vector<Variant> variants{Variant::kDen, Variant::kMob, Variant::kMobPlus};
  std::vector<GridTriple> grid;
  int horizon = 5;
  int smoothing_window = 6;
  int top_k = 5;
  bool intercept = true;
  double em_tol = 1e-4;
  int em_max_iters = 500;
  RmaeMode rmae_mode = RmaeMode::kRatioOfSums;

  std::string out_dir = "out";

  PipelineConfig();
  RegionWindow window() const;
  int n_days() const { return window().n_days(); }
  int train_days() const { return n_days() - horizon; }
  void validate() const;
  // Train/validation/test split; only the modeling stages need it.
  void validate_split() const;
};

std::vector<GridTriple> default_grid();

nlohmann::json to_json(const PipelineConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Trajectories from the configured source, quality-filtered.
struct LoadedData {
  std::vector<AgentTrajectory> trajectories;
  std::size_t rows_read = 0;
  std::size_t rows_outside = 0;
  std::size_t rows_malformed = 0;
  std::size_t agents_before_filter = 0;
};
LoadedData load_data(const PipelineConfig& cfg);

SimResult simulate(const PipelineConfig& cfg, std::span<const AgentTrajectory> trajs);
// k-means on signals from the training days only.
ClusterModel cluster(const PipelineConfig& cfg, std::span<const AgentTrajectory> trajs);

// Everything the model fits consume, over all days of the window.
struct ModelInputs {
  MobilityTraces traces;     // median-smoothed
  ClusterDayMatrix raw_counts;
  ClusterDayMatrix counts;   // median-smoothed infections: the modeling target
  std::vector<std::size_t> signals;
  int train_days = 0;
  int horizon = 0;
};

ModelInputs model_inputs(const PipelineConfig& cfg, const ODMatrixSeries& od,
                         const ClusterDayMatrix& raw_counts, std::vector<std::size_t> signals);

// Standardized features over all days of `series` (padded with zeros to the
// trace length) using statistics from days [0, fit_days).
FeatureTensor fit_features(const ModelInputs& in, Variant v, const ClusterDayMatrix& series,
                           int fit_days);
FeatureTensor features_with_stats(const ModelInputs& in, Variant v, const ClusterDayMatrix& series,
                                  std::span<const double> mean, std::span<const double> stddev);

struct FitOutcome {
  HawkesModel model;
  FeatureTensor features;  // standardized, actual counts on every day
};

// EM fit on days [0, fit_days) for one triple.
FitOutcome fit_variant(const PipelineConfig& cfg, const ModelInputs& in, Variant v,
                       const GridTriple& g, int fit_days);

// Recursive forecast of days [fit_days, fit_days + horizon) for a fitted model.
Forecast forecast_variant(const ModelInputs& in, const FitOutcome& fit, int fit_days, int horizon);

struct GridResult {
  std::vector<GridTriple> grid;
  std::vector<double> scores;  // mean validation R-MAE across variants
  std::size_t best = 0;
  GridTriple chosen() const { return grid[best]; }
};
// Fits on the days before the validation block (the last `horizon` training
// days) and scores every triple by top-k R-MAE averaged over `variants`.
GridResult grid_search(const PipelineConfig& cfg, const ModelInputs& in,
                       std::span<const Variant> variants);

struct VariantResult {
  FitOutcome fit;
  Forecast forecast;
  RiskSurface surface;
  VariantReport report;
};
VariantResult run_variant(const PipelineConfig& cfg, const ModelInputs& in, Variant v,
                          const GridTriple& g);

// ---- on-disk stages -------------------------------------------------------

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kSignals = "signals.csv";
inline constexpr const char* kStats = "stats.json";
inline constexpr const char* kInfections = "infections.csv";
inline constexpr const char* kCensus = "census.csv";
inline constexpr const char* kClusters = "clusters.json";
inline constexpr const char* kOd = "od.csv";
inline constexpr const char* kSeries = "series.json";
inline constexpr const char* kGrid = "grid.json";
inline constexpr const char* kEvalJson = "eval.json";
inline constexpr const char* kEvalCsv = "eval.csv";
inline constexpr const char* kManifest = "manifest.json";
std::string features(Variant v);
std::string model(Variant v);
std::string risk_csv(Variant v);
std::string risk_geojson(Variant v, std::optional<int> day = std::nullopt);
}  // namespace artifact

// Runs stages against an output directory. Each stage reads its inputs from
// files written by earlier stages, so subcommands compose into the pipeline.
class StageRunner {
 public:
  explicit StageRunner(PipelineConfig cfg);

  const PipelineConfig& config() const { return cfg_; }
  std::filesystem::path out_dir() const { return cfg_.out_dir; }

  std::vector<std::string> generate();
  std::vector<std::string> simulate();
  std::vector<std::string> cluster();
  std::vector<std::string> features();
  std::vector<std::string> fit(std::span<const Variant> variants);
  std::vector<std::string> evaluate(std::span<const Variant> variants);
  std::vector<std::string> riskmap(std::span<const Variant> variants, std::optional<int> day);

 private:
  const std::vector<AgentTrajectory>& trajectories();
  std::filesystem::path path(const std::string& name) const;
  std::filesystem::path require(const std::string& name, const char* producer) const;
  ModelInputs read_inputs() const;

  PipelineConfig cfg_;
  std::optional<LoadedData> data_;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Runs every stage in order, updating the manifest after each one. A failing
// stage is recorded in the manifest, earlier artifacts are kept, and the
// error is rethrown (ConfigError as is, anything else as StageError).
void run_pipeline(const PipelineConfig& cfg);

}  // namespace mobrisk
