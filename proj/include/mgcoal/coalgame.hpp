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
 * \file mgcoal/coalgame.hpp
 *
 * \brief Retailer-coalition savings games: characteristic function, Shapley
 *  imputation and numerical stability verifiers.
 *
 * A retailer coalition is the retailer plus a consumer subset. Its value is
 * the sum of direct connection weights minus the MST cost of the induced
 * cost subgraph; any node set that does not hold exactly one retailer is
 * worth zero.
 */

#ifndef MGCOAL_COALGAME_HPP
#define MGCOAL_COALGAME_HPP

#include "mgcoal/netgraph.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace mgcoal {

/// Absolute tolerance for payoff comparisons (currency units).
inline constexpr double payoff_tolerance = 1e-9;

/// Bit k set means the k-th player (sorted consumer order) is present.
using ConsumerMask = std::uint64_t;

using Payoff = std::map<NodeId, double>;

/**
 * Characteristic function of one retailer's coalition restricted to the
 * consumer subsets of a fixed player list; the retailer is implicitly a
 * member of every evaluated coalition.
 */
class SavingsGame {
 public:
  using ValueFn = std::function<double(ConsumerMask)>;

  /// Tabulates all 2^k values when k <= tabulation_limit.
  SavingsGame(NodeId retailer, std::vector<NodeId> players, ValueFn value);

  /// Keeps a reference to `cn` when the game is too large to tabulate.
  static SavingsGame from_cost_network(const CostNetwork& cn, std::span<const NodeId> consumers);
  static SavingsGame from_table(NodeId retailer, std::vector<NodeId> players,
                                std::vector<double> table);

  static constexpr std::size_t tabulation_limit = 16;
  static constexpr std::size_t max_players = 62;

  NodeId retailer() const { return retailer_; }
  const std::vector<NodeId>& players() const { return players_; }
  std::size_t size() const { return players_.size(); }
  ConsumerMask grand() const;

  double value(ConsumerMask mask) const;
  ConsumerMask mask_of(std::span<const NodeId> consumers) const;
  std::size_t position(NodeId consumer) const;

 private:
  NodeId retailer_;
  std::vector<NodeId> players_;
  ValueFn value_;
  std::vector<double> table_;
};

bool is_viable(std::span<const NodeId> nodes, const PowerNetwork& net);

/// Zero unless `nodes` is the owner plus consumers of `cn`.
double coalition_value(std::span<const NodeId> nodes, const CostNetwork& cn);

/// Value of an arbitrary node set: dispatches to the cost network of its
/// single retailer, zero when nonviable.
double coalition_value(std::span<const NodeId> nodes, const PowerNetwork& net,
                       std::span<const CostNetwork> networks);

const CostNetwork& network_of(std::span<const CostNetwork> networks, NodeId retailer);

struct ShapleyOptions {
  std::size_t exact_cap = 10;  ///< largest consumer count enumerated exactly
  std::size_t samples = 0;     ///< orderings drawn above the cap; 0 refuses
  std::uint64_t seed = 0x5eed;
};

struct ShapleyValue {
  Payoff values;
  bool sampled = false;
  std::size_t orderings = 0;
  double max_standard_error = 0.0;  ///< zero when exact
};

/// Average marginal vector over consumer orderings, retailer fixed first.
/// Throws std::length_error above the exact cap unless samples > 0.
ShapleyValue shapley(const SavingsGame& game, const ShapleyOptions& options = {});
ShapleyValue shapley(std::span<const NodeId> nodes, const CostNetwork& cn,
                     const ShapleyOptions& options = {});

struct MarginalVector {
  std::vector<NodeId> ordering;
  Payoff marginals;
};

MarginalVector marginal_vector(const SavingsGame& game, std::span<const NodeId> ordering);

/// Consumers of `nodes` in breadth-first order of the coalition MST rooted at
/// the owner (ties by node id); every node appears after its tree parent.
std::vector<NodeId> mst_order(std::span<const NodeId> nodes, const CostNetwork& cn);

/// Permutational convexity of the MST cost game under mst_order.
bool check_pc(std::span<const NodeId> nodes, const CostNetwork& cn);

struct Coalition {
  NodeId retailer;
  std::vector<NodeId> consumers;  ///< sorted
  double value = 0.0;
  double mst_cost = 0.0;
  Payoff imputation;

  std::vector<NodeId> members() const;
};

Coalition make_coalition(NodeId retailer, std::vector<NodeId> consumers, const CostNetwork& cn,
                         const ShapleyOptions& options = {});

struct CoalitionPartition {
  std::vector<Coalition> coalitions;

  /// One coalition per retailer, disjoint, covering every node.
  /// Throws std::invalid_argument.
  void validate(const PowerNetwork& net) const;
};

bool check_subadditive(const CoalitionPartition& partition, const PowerNetwork& net,
                       std::span<const CostNetwork> networks);

bool check_concave_balanced(const CoalitionPartition& partition, const PowerNetwork& net,
                            std::span<const CostNetwork> networks);

struct DhpOptions {
  std::size_t exhaustive_cap = 8;  ///< largest |S_r| whose partitions are enumerated
  std::size_t samples = 20000;
  std::uint64_t seed = 0xd4b;
};

struct DhpReport {
  bool partition_condition = true;  ///< no partition of any S_r is worth more
  bool merge_condition = true;      ///< no union of coalitions is worth more
  std::size_t partitions_checked = 0;
  double coverage = 1.0;            ///< distinct partitions checked / Bell(|S_r|), minimum over S_r

  bool stable() const { return partition_condition && merge_condition; }
};

DhpReport check_dhp(const CoalitionPartition& partition, const PowerNetwork& net,
                    std::span<const CostNetwork> networks, const DhpOptions& options = {});

/// All set partitions of {0..n-1} as restricted growth strings.
void for_each_set_partition(std::size_t n,
                            const std::function<void(std::span<const std::size_t>)>& visit);

double bell_number(std::size_t n);

enum class CoreWitness { none, shapley, ordered_marginal, linear_program };

const char* to_string(CoreWitness source);

struct CoreResult {
  bool nonempty = false;
  std::optional<Payoff> witness;
  CoreWitness source = CoreWitness::none;
};

/// Sum over every sub-coalition >= its value and efficiency on the grand one.
bool in_core(const SavingsGame& game, const Payoff& payoff, double tol = payoff_tolerance);

/**
 * Tries the Shapley value, then the marginal vector along `ordering` (when
 * given), then a linear feasibility search over all sub-coalition
 * constraints.
 */
CoreResult core_nonempty(const SavingsGame& game,
                         std::optional<std::span<const NodeId>> ordering = std::nullopt);
CoreResult core_nonempty(std::span<const NodeId> nodes, const CostNetwork& cn);

/// nu({r,b}) <= nu(S) for every member b when S has two or more consumers.
bool check_savings_assumption(const SavingsGame& game);
bool check_savings_assumption(std::span<const NodeId> nodes, const CostNetwork& cn);

}  // namespace mgcoal

#endif  // MGCOAL_COALGAME_HPP
