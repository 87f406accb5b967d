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


/**
 * \file mgcoal/run.hpp
 *
 * \brief Scenario orchestration: market rounds, the coupled market and
 *  grid simulation, consolidated verification, and run artifacts.
 */

#ifndef MGCOAL_RUN_HPP
#define MGCOAL_RUN_HPP

#include "mgcoal/griddyn.hpp"
#include "mgcoal/market.hpp"
#include "mgcoal/scenario.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mgcoal {

inline constexpr const char* version = "0.1.0";

/// A validated config with its derived network, parameters and cost networks.
struct Scenario {
  ScenarioConfig config;
  PowerNetwork net;
  MarketParams market;
  std::vector<CostNetwork> costs;

  /// The risk seed doubles as the seed for sampled imputations.
  static Scenario build(ScenarioConfig config);
};

struct MarketRun {
  std::vector<MarketState> rounds;  ///< rounds[0] is the initial state
  std::optional<std::size_t> fixed_point_round;

  const MarketState& last() const { return rounds.back(); }
  /// The last `window` rounds agree with their predecessors within `tol`.
  bool tail_settled(std::size_t window = 5, double tol = 1e-6) const;
};

MarketRun run_market(const MarketParams& params, std::span<const CostNetwork> networks,
                     std::size_t rounds);
MarketRun run_market(const Scenario& scenario, std::size_t rounds);

GridModel grid_model(const Scenario& scenario);

/// Retailer injection (1 + alpha_loss) times its load, consumer demand.
Eigen::VectorXd grid_inputs(const Scenario& scenario, const MarketState& state);

struct CoupledRun {
  MarketRun market;
  double v_min = 0.0;
  double v_max = 0.0;
  std::size_t samples = 0;
  GridState final_state;
  double tracking_gap_w = 0.0;  ///< largest |consumed - demanded| at the end of a period
};

/// One market round every game period, grid integration in between.
/// Throws GridError when a voltage leaves the band.
CoupledRun run_coupled(const Scenario& scenario, std::ostream* trajectory = nullptr);

struct Analysis {
  nlohmann::json verifier;
  nlohmann::json risk;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;

  bool ok() const { return failures.empty(); }
  nlohmann::json consolidated() const;
};

/// Game, equilibrium and stability checks on the last round, plus risk.
Analysis analyze(const Scenario& scenario, const MarketRun& run);

/// File name to exact bytes.
using ArtifactFiles = std::map<std::string, std::string>;

/// config.json, market_trace.csv and run.json for `rounds` market rounds.
ArtifactFiles market_artifact(const Scenario& scenario, std::size_t rounds);

/// The full coupled-run artifact, including trajectory and reports.
ArtifactFiles coupled_artifact(const Scenario& scenario, Analysis* analysis = nullptr,
                               CoupledRun* result = nullptr);

void write_artifact(const std::filesystem::path& dir, const ArtifactFiles& files);

/// Re-derives an artifact from its config snapshot; failures name the
/// files whose bytes differ.
Analysis analyze_artifact(const std::filesystem::path& dir);

}  // namespace mgcoal

#endif  // MGCOAL_RUN_HPP
