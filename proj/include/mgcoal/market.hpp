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
 * \file mgcoal/market.hpp
 *
 * \brief Leader-follower pricing between retailers and consumers and the
 *  round-based coalition formation with capacity-driven rejections.
 */

#ifndef MGCOAL_MARKET_HPP
#define MGCOAL_MARKET_HPP

#include "mgcoal/coalgame.hpp"
#include "mgcoal/netgraph.hpp"

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace mgcoal {

struct RetailerParams {
  NodeId id = 0;
  double alpha = 1e-4;         ///< generation cost curvature
  double kappa = 0.0;          ///< subsidy per cost-network degree
  double lambda_min = 0.01;    ///< currency per W
  double lambda_max = 1.0;
  double p_max_w = 1.0;
  double alpha_loss = 0.0;     ///< in [0, 1]

  void validate() const;
  /// Largest total demand that satisfies the capacity limit.
  double deliverable_w() const { return p_max_w / (1.0 + alpha_loss); }
};

struct ConsumerParams {
  NodeId id = 0;
  double alpha = 1.0;          ///< utility weight
  double zeta_min_w = 0.0;
  double zeta_max_w = 1.0;
  double p_rated_w = 1.0;

  void validate() const;
};

struct MarketParams {
  std::vector<RetailerParams> retailers;  ///< sorted by id
  std::vector<ConsumerParams> consumers;  ///< sorted by id
  ShapleyOptions shapley{10, 20000, 0x5eed};

  const RetailerParams& retailer(NodeId id) const;
  const ConsumerParams& consumer(NodeId id) const;
  /// Sorts, validates and checks the ids against the network roles.
  void validate(const PowerNetwork& net) const;
};

struct MarketState {
  std::size_t round = 0;
  std::map<NodeId, double> prices;
  std::map<NodeId, double> demands;
  std::map<NodeId, NodeId> assignment;
  std::map<std::pair<NodeId, NodeId>, double> subsidies_announced;  ///< (retailer, consumer)
  std::map<NodeId, double> imputations_paid;
  std::map<NodeId, double> coalition_values;  ///< per retailer
  std::map<NodeId, double> profits;
  std::size_t rejections = 0;
  std::vector<NodeId> fallback_assignments;

  std::vector<NodeId> coalition(NodeId retailer) const;
  double load(NodeId retailer) const;
};

/// Round zero: every price at its upper bound, no assignments.
MarketState initial_state(const MarketParams& params);

double retailer_cost(double power_w, std::span<const NodeId> coalition, const RetailerParams& rp,
                     double price, const CostNetwork& cn);

/// lambda * P - C((1 + alpha_loss) P, S_r) with the coalition value given.
double retailer_profit(double price, double power_w, const RetailerParams& rp,
                       double coalition_value);

double announced_subsidy(const RetailerParams& rp, const CostNetwork& cn, NodeId consumer);

double consumer_utility(double zeta_w, const ConsumerParams& cp, const CostNetwork& cn,
                        double subsidy);

/// Objective a consumer maximises when choosing: utility minus payment.
double consumer_decision_profit(double zeta_w, double price, const ConsumerParams& cp,
                                const CostNetwork& cn, double subsidy);

/// Maximiser of alpha * z^(1/6) - price * z over [zeta_min, min(zeta_max, upper)].
/// Throws std::invalid_argument for nonpositive prices or an empty range.
double consumer_best_demand(double price, const ConsumerParams& cp,
                            double upper_w = std::numeric_limits<double>::infinity());

/// Clamp of 1 / (2 alpha (1 + alpha_loss)^2 P); keeps `previous` when P = 0.
double retailer_best_price(double power_w, const RetailerParams& rp, double previous);

bool capacity_ok(const RetailerParams& rp, double total_demand_w);

struct Choice {
  NodeId retailer;
  double demand_w;
  double profit;
};

/**
 * Best retailer and demand for one consumer; ties go to the lowest retailer
 * id. `caps` bounds the demand per retailer; retailers whose cap falls
 * below zeta_min are skipped, like excluded ones.
 */
std::optional<Choice> choose_retailer(const ConsumerParams& cp, const MarketParams& params,
                                      std::span<const CostNetwork> networks,
                                      const std::map<NodeId, double>& prices,
                                      const std::set<NodeId>& excluded = {},
                                      const std::map<NodeId, double>& caps = {});

/// One full round: prices, broadcast, choices, rejections, imputation.
MarketState form_coalitions(const MarketState& state, const MarketParams& params,
                            std::span<const CostNetwork> networks);

/**
 * Realised profits: retailers pay their coalition value out as imputations;
 * consumers receive the imputation in place of the announced subsidy.
 */
std::map<NodeId, double> profits(const MarketState& state, const MarketParams& params,
                                 std::span<const CostNetwork> networks);

CoalitionPartition partition_of(const MarketState& state, const MarketParams& params,
                                std::span<const CostNetwork> networks);

/// Same partition, prices and demands within `tol`.
bool settled(const MarketState& previous, const MarketState& current, double tol = 1e-6);

struct DeviationReport {
  bool consumers_ok = true;
  bool retailers_ok = true;
  double worst_consumer_gain = 0.0;
  double worst_retailer_gain = 0.0;

  bool ok() const { return consumers_ok && retailers_ok; }
};

/**
 * Unilateral deviations at a settled round: each consumer over every
 * retailer it could join within capacity times a demand grid, each retailer
 * over a price grid with its measured coalition demand held fixed.
 */
DeviationReport check_no_profitable_deviation(const MarketState& state, const MarketParams& params,
                                              std::span<const CostNetwork> networks,
                                              std::size_t grid_points = 10000);

}  // namespace mgcoal

#endif  // MGCOAL_MARKET_HPP
