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

// Command-line driver: each subcommand runs one pipeline stage against the
// output directory; `pipeline` runs them all and writes a manifest.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mobrisk/errors.hpp"
#include "mobrisk/io.hpp"
#include "mobrisk/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> variants;
  std::string out;
  std::string signals;
  bool strict = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("-c,--config", f.config, "JSON config file (defaults apply when omitted)");
  sub->add_option("--seed", f.seed, "Override the synthetic, simulation and clustering seeds");
  sub->add_option("--variant", f.variants, "Model variants: den, mob, mob+ (repeatable)")
      ->delimiter(',');
  sub->add_option("-o,--out", f.out, "Output directory");
  sub->add_option("--signals", f.signals, "Signal CSV to use instead of synthetic data");
  sub->add_flag("--strict", f.strict, "Fail on the first malformed input row");
}

mobrisk::PipelineConfig resolve(const CommonFlags& f) {
  mobrisk::PipelineConfig cfg =
      f.config.empty() ? mobrisk::PipelineConfig{} : mobrisk::load_pipeline_config(f.config);
  if (f.seed) {
    cfg.synth_seed = *f.seed;
    cfg.sim.seed = *f.seed;
    cfg.cluster_seed = *f.seed;
  }
  if (!f.variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : f.variants) cfg.variants.push_back(mobrisk::parse_variant(v));
  }
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.signals.empty()) cfg.signals_path = f.signals;
  if (f.strict) cfg.strict = true;
  return cfg;
}

void report(const std::string& stage, const std::vector<std::string>& files,
            const mobrisk::StageRunner& r) {
  for (const auto& f : files) std::cout << stage << ": wrote " << (r.out_dir() / f).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Location risk modeling from mobility traces"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::optional<int> day;

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"generate", "Write a synthetic signal CSV"},
      {"simulate", "Load signals, run the transmission simulation"},
      {"cluster", "Fit spatial clusters on training-day signals"},
      {"features", "Build OD matrices, infection series and features"},
      {"fit", "Grid-search and fit the intensity models"},
      {"evaluate", "Forecast the test days, score risk and metrics"},
      {"riskmap", "Export the risk surface as GeoJSON"},
      {"pipeline", "Run every stage and write a manifest"},
      {"config", "Print the effective config as JSON"},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, flags);
    if (std::string(s.name) == "riskmap") sub->add_option("--day", day, "Export a single day");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const mobrisk::PipelineConfig cfg = resolve(flags);
    if (cmd == "config") {
      std::cout << mobrisk::to_json(cfg).dump(2) << '\n';
      return 0;
    }
    if (cmd == "pipeline") {
      mobrisk::run_pipeline(cfg);
      std::cout << "pipeline: artifacts and manifest in " << cfg.out_dir << '\n';
      return 0;
    }
    mobrisk::StageRunner runner(cfg);
    std::vector<std::string> files;
    if (cmd == "generate") files = runner.generate();
    if (cmd == "simulate") files = runner.simulate();
    if (cmd == "cluster") files = runner.cluster();
    if (cmd == "features") files = runner.features();
    if (cmd == "fit") files = runner.fit(cfg.variants);
    if (cmd == "evaluate") files = runner.evaluate(cfg.variants);
    if (cmd == "riskmap") files = runner.riskmap(cfg.variants, day);
    report(cmd, files, runner);
    return 0;
  } catch (const mobrisk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const mobrisk::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << cmd << " failed: " << e.what() << '\n';
    return 2;
  }
}
