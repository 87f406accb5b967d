/*
 * Copyright 2026 The mgcoal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Command-line front end: run-market, run-coupled, analyze, export-costnet.

#include "mgcoal/reports.hpp"
#include "mgcoal/run.hpp"
#include "mgcoal/scenario.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace mgcoal;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> step_s;
  std::string out_dir;
  std::size_t rounds = 0;
  bool rounds_given = false;
};

fs::path output_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("MGCOAL_OUT_DIR"); env && *env) return env;
  return "mgcoal_out";
}

Scenario load(const Options& o) {
  ScenarioConfig cfg = load_scenario(o.config);
  if (o.seed) cfg.risk.seed = *o.seed;
  if (o.step_s) cfg.timing.step_s = *o.step_s;
  // Re-parse so overrides go through the same validation.
  return Scenario::build(parse_scenario(to_json(cfg)));
}

void report(const Analysis& a) {
  for (const auto& w : a.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : a.failures) std::cerr << "FAILED: " << f << '\n';
}

int run_market_cmd(const Options& o) {
  const Scenario sc = load(o);
  const std::size_t rounds = o.rounds_given ? o.rounds : sc.config.market_rounds;
  const fs::path dir = output_dir(o);
  const ArtifactFiles files = market_artifact(sc, rounds);
  write_artifact(dir, files);
  const auto meta = nlohmann::json::parse(files.at("run.json"));
  std::cout << "rounds: " << rounds << "\nfixed point round: " << meta["fixed_point_round"].dump()
            << "\nartifact: " << dir.string() << '\n';
  return 0;
}

int run_coupled_cmd(const Options& o) {
  const Scenario sc = load(o);
  const fs::path dir = output_dir(o);
  const auto start = std::chrono::steady_clock::now();
  Analysis analysis;
  CoupledRun run;
  const ArtifactFiles files = coupled_artifact(sc, &analysis, &run);
  const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
  write_artifact(dir, files);
  write_json(dir / "timing.json", {{"wall_time_s", wall.count()}});
  std::cout << "market rounds: " << run.market.rounds.size() - 1 << "\nvoltage range: ["
            << format_number(run.v_min) << ", " << format_number(run.v_max) << "] V"
            << "\nartifact: " << dir.string() << '\n';
  report(analysis);
  return analysis.ok() ? 0 : 1;
}

int analyze_cmd(const Options& o) {
  Analysis a;
  if (fs::is_directory(o.config)) {
    a = analyze_artifact(o.config);
  } else {
    const Scenario sc = load(o);
    a = analyze(sc, run_market(sc, sc.config.market_rounds));
  }
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  write_json(dir / "analysis.json", a.consolidated());
  std::cout << a.consolidated().dump(2) << '\n';
  report(a);
  return a.ok() ? 0 : 1;
}

int export_costnet_cmd(const Options& o) {
  const Scenario sc = load(o);
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  std::ostringstream csv;
  write_cost_networks(csv, sc.net, sc.costs);
  write_text(dir / "costnet.csv", csv.str());
  std::cout << (dir / "costnet.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coalitional electricity market on a resistive micro-grid"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  double step = 0.0;
  auto common = [&](CLI::App* sub, const std::string& what) {
    sub->add_option("config", o.config, what)->required();
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--out-dir", o.out_dir, "artifact directory (default $MGCOAL_OUT_DIR or ./mgcoal_out)");
    sub->add_option("--step-s", step, "override the integrator step in seconds")->check(CLI::PositiveNumber);
  };
  auto* market = app.add_subcommand("run-market", "iterate market rounds only");
  common(market, "scenario JSON");
  market->add_option("--rounds", o.rounds, "number of rounds (default from the scenario)");
  auto* coupled = app.add_subcommand("run-coupled", "market rounds coupled to grid dynamics");
  common(coupled, "scenario JSON");
  auto* analyze = app.add_subcommand("analyze", "verifier, stability and risk report");
  common(analyze, "scenario JSON or artifact directory");
  auto* costnet = app.add_subcommand("export-costnet", "write the cost networks as CSV");
  common(costnet, "scenario JSON");

  CLI11_PARSE(app, argc, argv);
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--step-s")) o.step_s = step;
  }
  o.rounds_given = market->count("--rounds") > 0;

  try {
    if (market->parsed()) return run_market_cmd(o);
    if (coupled->parsed()) return run_coupled_cmd(o);
    if (analyze->parsed()) return analyze_cmd(o);
    return export_costnet_cmd(o);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
  } catch (const GridError& e) {
    std::cerr << "grid error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 2;
}
