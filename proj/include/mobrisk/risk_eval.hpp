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
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mobrisk/clustering.hpp"
#include "mobrisk/features.hpp"
#include "mobrisk/hawkes.hpp"
#include "mobrisk/series.hpp"

namespace mobrisk {

struct Forecast {
  int train_days = 0;
  ClusterDayMatrix lambda;  // clusters x horizon
  int horizon() const { return lambda.n_days(); }
};

// Rebuilds features from a count series covering train + horizon days whose
// later days may still be zero. Used for covariates derived from infections.
using FeatureFn = std::function<FeatureTensor(const ClusterDayMatrix& series)>;

// Recursive expectation: day T+k uses actual counts for train days and the
// predicted intensities for earlier forecast days. `features` must cover
// every day whose lagged covariates are needed.
Forecast forecast(const HawkesModel& m, const ClusterDayMatrix& train, const FeatureTensor& features,
                  int horizon);
// Same, re-deriving the features before each forecast day.
Forecast forecast(const HawkesModel& m, const ClusterDayMatrix& train, int horizon,
                  const FeatureFn& features);

// Train counts followed by the forecast.
ClusterDayMatrix extend_series(const ClusterDayMatrix& train, const Forecast& fc);

// Intensity over train + forecast days: in-sample lambda on train days, the
// forecast afterwards.
ClusterDayMatrix full_intensity(const HawkesModel& m, const ClusterDayMatrix& train,
                                const FeatureTensor& features, const Forecast& fc);

struct RiskSurface {
  ClusterDayMatrix lambda;
  ClusterDayMatrix rho;
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;
};

// Global min-max scaling over every (cluster, day) entry; a constant input
// maps to all zeros.
ClusterDayMatrix min_max_scale(const ClusterDayMatrix& m, bool* degenerate = nullptr);
RiskSurface risk_scores(const ClusterDayMatrix& lambda);

enum class RmaeMode { kRatioOfSums, kMeanOfRatios };

struct ClusterMetrics {
  int cluster = -1;  // -1 for the top-k mean
  double rmae = 0.0;
  double sigma = 0.0;
  double mae_rho_test = 0.0;
  double mae_rho_all = 0.0;
};

struct VariantReport {
  Variant variant = Variant::kDen;
  std::vector<ClusterMetrics> clusters;
  std::vector<int> top;
  ClusterMetrics top_mean;
};

// `actual` spans train + test days; the last fc.horizon() days are the test
// window. Top-k clusters are those with the most location signals.
VariantReport evaluate(Variant variant, const Forecast& fc, const ClusterDayMatrix& actual,
                       const RiskSurface& surface, std::span<const std::size_t> signal_counts,
                       int top_k, RmaeMode mode = RmaeMode::kRatioOfSums);

// Top-k cluster indices by signal count, ties to the lower index.
std::vector<int> top_clusters(std::span<const std::size_t> signal_counts, int top_k);

struct EvalReport {
  int top_k = 5;
  int horizon = 5;
  std::vector<VariantReport> variants;
};

nlohmann::json to_json(const EvalReport& r);
// Columns: variant, R-MAE(I), sigma(I), MAE(rho_test), MAE(rho_all) over the top-k.
void write_eval_csv(std::ostream& out, const EvalReport& r);

void write_risk_csv(std::ostream& out, const RiskSurface& s);
// Point features at the cluster centers; all days unless `day` is set.
nlohmann::json risk_geojson(const RiskSurface& s, const ClusterModel& clusters,
                            std::optional<int> day = std::nullopt);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace mobrisk
