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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mobrisk/errors.hpp"
#include "mobrisk/io.hpp"

namespace mobrisk {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out, err;
};

CliResult cli(const std::string& args, const fs::path& scratch) {
  const fs::path o = scratch / "stdout.txt", e = scratch / "stderr.txt";
  const std::string cmd = std::string(MOBRISK_CLI_PATH) + " " + args + " > " + o.string() +
                          " 2> " + e.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = io::read_file(o);
  r.err = io::read_file(e);
  return r;
}

class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("mobrisk_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& body) {
    io::write_file(dir_ / name, body);
    return dir_ / name;
  }
  fs::path dir_;
};

const char* kTinyConfig = R"({
  "synth": {"n_agents": 50, "n_days": 14, "n_anchor_sites": 10, "household_size": 2},
  "sim": {"n_init": 5, "mu_is_days": 2.0, "sigma_is_days": 0.5},
  "k": 6,
  "top_k": 3,
  "grid": [[2, 2, 1], [2, 3, 3]]
})";

TEST(PipelineConfigTest, JsonRoundTrip) {
  PipelineConfig c;
  c.k = 9;
  c.variants = {Variant::kMobPlus};
  c.grid = {{2, 2, 3}, {2, 3, 5}};
  c.rmae_mode = RmaeMode::kMeanOfRatios;
  c.synth.mobility_multiplier = {1.0, 0.5};
  c.sim.p = 0.25;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(pipeline_config_from_json(j)), j);
}

TEST(PipelineConfigTest, PartialSectionsMergeOverDefaults) {
  const auto c = pipeline_config_from_json(nlohmann::json::parse(R"({"sim": {"n_init": 3}})"));
  EXPECT_EQ(c.sim.n_init, 3u);
  EXPECT_EQ(c.sim.d_max_m, 11.0);
  EXPECT_EQ(c.k, 15);
  EXPECT_EQ(c.horizon, 5);
  EXPECT_EQ(c.smoothing_window, 6);
  EXPECT_EQ(c.variants.size(), 3u);
}

TEST(PipelineConfigTest, Rejections) {
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"kk": 3})")), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"rmae_mode": "x"})")),
               ConfigError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"grid": [[2, 2]]})")),
               ConfigError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"variants": ["den", "zz"]})")),
               ConfigError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"k": "many"})")), ConfigError);
  EXPECT_THROW(load_pipeline_config("/nonexistent/config.json"), ConfigError);
}

TEST(PipelineConfigTest, DefaultGrid) {
  const auto g = default_grid();
  ASSERT_FALSE(g.empty());
  for (const auto& t : g) {
    EXPECT_EQ(t.alpha, 2.0);
    EXPECT_GE(t.delta, 0);
  }
}

TEST(Sha256Test, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(ScratchDir, TinyPipelineProducesArtifacts) {
  const auto cfg = write("config.json", kTinyConfig);
  const auto start = std::chrono::steady_clock::now();
  const CliResult r = cli("pipeline -c " + cfg.string() + " -o " + (dir_ / "a").string(), dir_);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(secs, 60.0);
  for (const char* f : {artifact::kStats, artifact::kInfections, artifact::kCensus,
                        artifact::kClusters, artifact::kOd, artifact::kSeries, artifact::kGrid,
                        artifact::kEvalJson, artifact::kEvalCsv, artifact::kManifest}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
  for (Variant v : {Variant::kDen, Variant::kMob, Variant::kMobPlus}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / artifact::features(v)));
    EXPECT_TRUE(fs::exists(dir_ / "a" / artifact::model(v)));
    EXPECT_TRUE(fs::exists(dir_ / "a" / artifact::risk_csv(v)));
    EXPECT_TRUE(fs::exists(dir_ / "a" / artifact::risk_geojson(v)));
  }
  const auto manifest = nlohmann::json::parse(io::read_file(dir_ / "a" / artifact::kManifest));
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["config_sha256"].get<std::string>().size(), 64u);
  // One comparative report covering every variant.
  const auto eval = nlohmann::json::parse(io::read_file(dir_ / "a" / artifact::kEvalJson));
  EXPECT_EQ(eval["variants"].size(), 3u);
  const auto csv = io::read_file(dir_ / "a" / artifact::kEvalCsv);
  EXPECT_EQ(csv.rfind("variant,rmae,sigma,mae_rho_test,mae_rho_all\n", 0), 0u);

  // Identical config, fresh directory: identical artifact checksums.
  const CliResult again = cli("pipeline -c " + cfg.string() + " -o " + (dir_ / "b").string(), dir_);
  ASSERT_EQ(again.code, 0) << again.err;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    const auto name = e.path().filename();
    if (name == artifact::kManifest) continue;
    EXPECT_EQ(sha256_file(e.path()), sha256_file(dir_ / "b" / name)) << name;
  }
  const auto m2 = nlohmann::json::parse(io::read_file(dir_ / "b" / artifact::kManifest));
  EXPECT_EQ(manifest["stages"], m2["stages"]);
}

TEST_F(ScratchDir, StagesRunStandalone) {
  const auto cfg = write("config.json", kTinyConfig);
  const std::string common = " -c " + cfg.string() + " -o " + (dir_ / "s").string();
  for (const char* stage : {"simulate", "cluster", "features"}) {
    const CliResult r = cli(std::string(stage) + common, dir_);
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
  }
  CliResult r = cli("fit --variant den" + common, dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "s" / artifact::model(Variant::kDen)));
  EXPECT_FALSE(fs::exists(dir_ / "s" / artifact::model(Variant::kMob)));
  EXPECT_FALSE(fs::exists(dir_ / "s" / artifact::model(Variant::kMobPlus)));

  r = cli("evaluate --variant den" + common, dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  r = cli("riskmap --variant den --day 10" + common, dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto gj = nlohmann::json::parse(io::read_file(dir_ / "s" / artifact::risk_geojson(Variant::kDen, 10)));
  ASSERT_EQ(gj["features"].size(), 6u);
  for (const auto& f : gj["features"]) EXPECT_EQ(f["properties"]["day"], 10);

  r = cli("riskmap --variant den --day 99" + common, dir_);
  EXPECT_EQ(r.code, 1);
  r = cli("evaluate --variant mob" + common, dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("fit"), std::string::npos) << r.err;
}

TEST_F(ScratchDir, MissingUpstreamNamesProducer) {
  const CliResult r = cli("features -o " + (dir_ / "empty").string(), dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cluster"), std::string::npos) << r.err;
}

TEST_F(ScratchDir, ExitCodes) {
  EXPECT_EQ(cli("bogus", dir_).code, 1);
  EXPECT_EQ(cli("pipeline --variant nope -o " + dir_.string(), dir_).code, 1);
  const auto bad = write("bad.json", R"({"unknown_key": 1})");
  EXPECT_EQ(cli("pipeline -c " + bad.string(), dir_).code, 1);
  const auto notjson = write("nj.json", "{");
  EXPECT_EQ(cli("config -c " + notjson.string(), dir_).code, 1);
  const CliResult cfg = cli("config --seed 9", dir_);
  ASSERT_EQ(cfg.code, 0);
  EXPECT_EQ(nlohmann::json::parse(cfg.out)["sim"]["seed"], 9);

  // A malformed row is skipped by default and fatal with --strict.
  std::string sig = io::read_file(fs::path(MOBRISK_TEST_DATA) / "oracle_signals.csv");
  sig += "1,95,-74,1575158500,5\n";
  const auto sigfile = write("signals.csv", sig);
  const std::string base = "simulate -c " + (fs::path(MOBRISK_TEST_DATA) / "oracle_config.json").string() +
                           " --signals " + sigfile.string() + " -o " + (dir_ / "x").string();
  EXPECT_EQ(cli(base, dir_).code, 0);
  const auto stats = nlohmann::json::parse(io::read_file(dir_ / "x" / artifact::kStats));
  EXPECT_EQ(stats["rows_malformed"], 1);
  const CliResult strict = cli(base + " --strict", dir_);
  EXPECT_EQ(strict.code, 2);
  EXPECT_NE(strict.err.find("line"), std::string::npos) << strict.err;
}

TEST_F(ScratchDir, SimulateMatchesGolden) {
  const fs::path data = MOBRISK_TEST_DATA;
  const CliResult r = cli("simulate -c " + (data / "oracle_config.json").string() + " --signals " +
                        (data / "oracle_signals.csv").string() + " -o " + dir_.string(),
                    dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(io::read_file(dir_ / artifact::kInfections),
            io::read_file(data / "oracle_infections.csv"));
}

TEST_F(ScratchDir, FailedStageMarksManifest) {
  // k larger than the number of training signals: clustering fails.
  const auto cfg = write("config.json", R"({
    "synth": {"n_agents": 3, "n_days": 14, "signal_interval_minutes": 600},
    "sim": {"n_init": 1}, "min_signals": 1, "k": 500})");
  const CliResult r = cli("pipeline -c " + cfg.string() + " -o " + (dir_ / "f").string(), dir_);
  EXPECT_EQ(r.code, 2);
  const auto m = nlohmann::json::parse(io::read_file(dir_ / "f" / artifact::kManifest));
  EXPECT_EQ(m["status"], "failed");
  EXPECT_EQ(m["failed_stage"], "cluster");
  EXPECT_TRUE(fs::exists(dir_ / "f" / artifact::kInfections));  // partial artifacts kept
}

}  // namespace
}  // namespace mobrisk
