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

#include "mobrisk/risk_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "mobrisk/errors.hpp"
#include "mobrisk/io.hpp"

namespace mobrisk {

namespace {

Forecast run_forecast(const HawkesModel& m, const ClusterDayMatrix& train, int horizon,
                      const std::function<const FeatureTensor&(const ClusterDayMatrix&)>& feats) {
  if (horizon < 0) throw ConfigError("forecast horizon must be >= 0");
  const int C = train.n_clusters();
  const int T = train.n_days();
  Forecast fc;
  fc.train_days = T;
  fc.lambda = ClusterDayMatrix(C, horizon);
  ClusterDayMatrix series(C, T + horizon);
  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t) series.at(c, t) = train.at(c, t);
  for (int k = 0; k < horizon; ++k) {
    const FeatureTensor& f = feats(series);
    for (int c = 0; c < C; ++c) {
      const double lam = intensity(m, series, f, c, T + k);
      fc.lambda.at(c, k) = lam;
    }
    for (int c = 0; c < C; ++c) series.at(c, T + k) = fc.lambda.at(c, k);
  }
  return fc;
}

}  // namespace

Forecast forecast(const HawkesModel& m, const ClusterDayMatrix& train, const FeatureTensor& features,
                  int horizon) {
  return run_forecast(m, train, horizon,
                      [&](const ClusterDayMatrix&) -> const FeatureTensor& { return features; });
}

Forecast forecast(const HawkesModel& m, const ClusterDayMatrix& train, int horizon,
                  const FeatureFn& features) {
  FeatureTensor current;
  return run_forecast(m, train, horizon,
                      [&](const ClusterDayMatrix& s) -> const FeatureTensor& {
                        current = features(s);
                        return current;
                      });
}

ClusterDayMatrix extend_series(const ClusterDayMatrix& train, const Forecast& fc) {
  const int T = train.n_days();
  ClusterDayMatrix out(train.n_clusters(), T + fc.horizon());
  for (int c = 0; c < train.n_clusters(); ++c) {
    for (int t = 0; t < T; ++t) out.at(c, t) = train.at(c, t);
    for (int k = 0; k < fc.horizon(); ++k) out.at(c, T + k) = fc.lambda.at(c, k);
  }
  return out;
}

ClusterDayMatrix full_intensity(const HawkesModel& m, const ClusterDayMatrix& train,
                                const FeatureTensor& features, const Forecast& fc) {
  const ClusterDayMatrix in_sample = intensity_matrix(m, train, features);
  const int T = train.n_days();
  ClusterDayMatrix out(train.n_clusters(), T + fc.horizon());
  for (int c = 0; c < train.n_clusters(); ++c) {
    for (int t = 0; t < T; ++t) out.at(c, t) = in_sample.at(c, t);
    for (int k = 0; k < fc.horizon(); ++k) out.at(c, T + k) = fc.lambda.at(c, k);
  }
  return out;
}

ClusterDayMatrix min_max_scale(const ClusterDayMatrix& m, bool* degenerate) {
  ClusterDayMatrix out(m.n_clusters(), m.n_days());
  const auto& d = m.data();
  if (d.empty()) {
    if (degenerate) *degenerate = true;
    return out;
  }
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  const double mn = *lo, mx = *hi;
  const bool flat = !(mx > mn);
  if (degenerate) *degenerate = flat;
  if (flat) return out;
  for (int c = 0; c < m.n_clusters(); ++c) {
    for (int t = 0; t < m.n_days(); ++t) {
      const double v = m.at(c, t);
      // Pin the extremes so min maps to exactly 0 and max to exactly 1.
      out.at(c, t) = v == mn ? 0.0 : v == mx ? 1.0 : (v - mn) / (mx - mn);
    }
  }
  return out;
}

RiskSurface risk_scores(const ClusterDayMatrix& lambda) {
  for (double v : lambda.data()) {
    if (!std::isfinite(v)) throw StageError("risk scores need finite intensities");
  }
  RiskSurface s;
  s.lambda = lambda;
  s.rho = min_max_scale(lambda, &s.degenerate);
  if (!lambda.data().empty()) {
    const auto [lo, hi] = std::minmax_element(lambda.data().begin(), lambda.data().end());
    s.min = *lo;
    s.max = *hi;
  }
  return s;
}

std::vector<int> top_clusters(std::span<const std::size_t> signal_counts, int top_k) {
  std::vector<int> idx(signal_counts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return signal_counts[static_cast<std::size_t>(a)] > signal_counts[static_cast<std::size_t>(b)];
  });
  idx.resize(std::min(idx.size(), static_cast<std::size_t>(std::max(top_k, 0))));
  return idx;
}

VariantReport evaluate(Variant variant, const Forecast& fc, const ClusterDayMatrix& actual,
                       const RiskSurface& surface, std::span<const std::size_t> signal_counts,
                       int top_k, RmaeMode mode) {
  const int C = actual.n_clusters();
  const int D = actual.n_days();
  const int h = fc.horizon();
  const int T = D - h;
  if (fc.lambda.n_clusters() != C || surface.rho.n_clusters() != C || surface.rho.n_days() != D ||
      T < 0 || signal_counts.size() != static_cast<std::size_t>(C)) {
    throw StageError("evaluation inputs are not aligned");
  }
  const ClusterDayMatrix scaled = min_max_scale(actual);
  VariantReport rep;
  rep.variant = variant;
  for (int c = 0; c < C; ++c) {
    ClusterMetrics m;
    m.cluster = c;
    double abs_sum = 0.0, n_sum = 0.0;
    std::vector<double> rel(static_cast<std::size_t>(h));
    for (int k = 0; k < h; ++k) {
      const double n = actual.at(c, T + k);
      const double err = std::abs(fc.lambda.at(c, k) - n);
      abs_sum += err;
      n_sum += n;
      rel[static_cast<std::size_t>(k)] = err / std::max(n, 1.0);
    }
    if (h > 0) {
      const double mean_rel = std::accumulate(rel.begin(), rel.end(), 0.0) / h;
      m.rmae = mode == RmaeMode::kRatioOfSums ? abs_sum / std::max(n_sum, 1.0) : mean_rel;
      double ss = 0.0;
      for (double r : rel) ss += (r - mean_rel) * (r - mean_rel);
      m.sigma = std::sqrt(ss / h);
      double e = 0.0;
      for (int k = 0; k < h; ++k) e += std::abs(surface.rho.at(c, T + k) - scaled.at(c, T + k));
      m.mae_rho_test = e / h;
    }
    if (D > 0) {
      double e = 0.0;
      for (int t = 0; t < D; ++t) e += std::abs(surface.rho.at(c, t) - scaled.at(c, t));
      m.mae_rho_all = e / D;
    }
    rep.clusters.push_back(m);
  }
  rep.top = top_clusters(signal_counts, top_k);
  if (!rep.top.empty()) {
    for (int c : rep.top) {
      const auto& m = rep.clusters[static_cast<std::size_t>(c)];
      rep.top_mean.rmae += m.rmae;
      rep.top_mean.sigma += m.sigma;
      rep.top_mean.mae_rho_test += m.mae_rho_test;
      rep.top_mean.mae_rho_all += m.mae_rho_all;
    }
    const double k = static_cast<double>(rep.top.size());
    rep.top_mean.rmae /= k;
    rep.top_mean.sigma /= k;
    rep.top_mean.mae_rho_test /= k;
    rep.top_mean.mae_rho_all /= k;
  }
  return rep;
}

namespace {

nlohmann::json metrics_json(const ClusterMetrics& m) {
  return {{"cluster", m.cluster},
          {"rmae", m.rmae},
          {"sigma", m.sigma},
          {"mae_rho_test", m.mae_rho_test},
          {"mae_rho_all", m.mae_rho_all}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json variants = nlohmann::json::array();
  for (const auto& v : r.variants) {
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& m : v.clusters) clusters.push_back(metrics_json(m));
    variants.push_back({{"variant", std::string(to_string(v.variant))},
                        {"top_clusters", v.top},
                        {"top_mean", metrics_json(v.top_mean)},
                        {"clusters", clusters}});
  }
  return {{"top_k", r.top_k}, {"horizon", r.horizon}, {"variants", variants}};
}

void write_eval_csv(std::ostream& out, const EvalReport& r) {
  out << "variant,rmae,sigma,mae_rho_test,mae_rho_all\n";
  for (const auto& v : r.variants) {
    out << to_string(v.variant) << ',' << io::format_double(v.top_mean.rmae) << ','
        << io::format_double(v.top_mean.sigma) << ',' << io::format_double(v.top_mean.mae_rho_test)
        << ',' << io::format_double(v.top_mean.mae_rho_all) << '\n';
  }
}

void write_risk_csv(std::ostream& out, const RiskSurface& s) {
  out << "day,cluster,lambda,rho\n";
  for (int t = 0; t < s.lambda.n_days(); ++t) {
    for (int c = 0; c < s.lambda.n_clusters(); ++c) {
      out << t << ',' << c << ',' << io::format_double(s.lambda.at(c, t)) << ','
          << io::format_double(s.rho.at(c, t)) << '\n';
    }
  }
}

nlohmann::json risk_geojson(const RiskSurface& s, const ClusterModel& clusters,
                            std::optional<int> day) {
  if (static_cast<int>(clusters.k()) != s.rho.n_clusters()) {
    throw StageError("cluster model does not match the risk surface");
  }
  if (day && (*day < 0 || *day >= s.rho.n_days())) {
    throw ConfigError("day " + std::to_string(*day) + " is outside the risk surface (0.." +
                      std::to_string(s.rho.n_days() - 1) + ")");
  }
  nlohmann::json features = nlohmann::json::array();
  const int lo = day ? *day : 0;
  const int hi = day ? *day + 1 : s.rho.n_days();
  for (int t = lo; t < hi; ++t) {
    for (int c = 0; c < s.rho.n_clusters(); ++c) {
      const LatLon ll = clusters.projection.unproject(clusters.centers[static_cast<std::size_t>(c)]);
      features.push_back({{"type", "Feature"},
                          {"geometry", {{"type", "Point"}, {"coordinates", {ll.lon, ll.lat}}}},
                          {"properties",
                           {{"cluster", c}, {"day", t}, {"lambda", s.lambda.at(c, t)},
                            {"rho", s.rho.at(c, t)}}}});
    }
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return 0.0;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace mobrisk
