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
 * \file mgcoal/scenario.hpp
 *
 * \brief Scenario files: JSON schema with unit-suffixed fields, validation,
 *  defaults, and conversion into the library's parameter types.
 */

#ifndef MGCOAL_SCENARIO_HPP
#define MGCOAL_SCENARIO_HPP

#include "mgcoal/griddyn.hpp"
#include "mgcoal/market.hpp"
#include "mgcoal/netgraph.hpp"
#include "mgcoal/risk.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgcoal {

/// Schema or validation failure; the message starts with the field path.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeSpec {
  std::string id;
  Role role = Role::consumer;
  double shunt_ohm = 0.0;
};

struct LineSpec {
  std::string from;
  std::string to;
  double resistance_ohm = 0.0;
};

struct RetailerSpec {
  std::string id;
  RetailerParams market;  ///< market.id filled from the node index
  CostParams cost;
};

struct ConsumerSpec {
  std::string id;
  ConsumerParams market;
};

struct CostEdgeSpec {
  std::string from;
  std::string to;
  double weight = 0.0;
};

/// Explicit cost network that replaces the one derived from the physics.
struct CostNetworkSpec {
  std::string retailer;
  std::vector<CostEdgeSpec> edges;
};

struct DynamicsSpec {
  double tau_v_s = 0.1;
  double tau_load_s = 3.0;
  double v_star_v = 220.0;
  double delta_v_v = 11.0;
  std::string k_rule = "paper";       ///< "paper" or "fixed"
  double k_v_per_w = 0.0;             ///< used when k_rule is "fixed"
  std::string c_gain_mode = "paper";  ///< "paper" or "unit"
};

struct TimingSpec {
  double game_period_s = 60.0;
  double horizon_s = 300.0;
  double step_s = 1e-3;
  double sample_every_s = 0.01;
};

struct RiskSpec {
  double sigma = 0.0;
  double q = 0.05;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

struct ScenarioConfig {
  std::string name;
  bool reconstructed = false;
  std::vector<NodeSpec> nodes;
  std::vector<LineSpec> lines;
  std::vector<RetailerSpec> retailers;
  std::vector<ConsumerSpec> consumers;
  std::vector<CostNetworkSpec> cost_networks;
  DynamicsSpec dynamics;
  TimingSpec timing;
  std::size_t market_rounds = 50;
  RiskSpec risk;

  PowerNetwork network() const;
  MarketParams market(std::uint64_t seed) const;
  /// One per retailer in id order; explicit specs replace derived networks.
  std::vector<CostNetwork> cost_network_list(const PowerNetwork& net) const;
  std::vector<NodeDynParams> node_dynamics(const PowerNetwork& net) const;
  DemandModel demand_model() const;
};

ScenarioConfig parse_scenario(const nlohmann::json& doc);
/// Throws ScenarioError on unreadable files as well.
ScenarioConfig load_scenario(const std::filesystem::path& path);
/// Every field including defaults.
nlohmann::json to_json(const ScenarioConfig& config);

}  // namespace mgcoal

#endif  // MGCOAL_SCENARIO_HPP
