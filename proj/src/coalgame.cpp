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

#include "mgcoal/coalgame.hpp"

#include "mgcoal/linear_feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

namespace mgcoal {

namespace {

std::vector<NodeId> sorted_unique(std::span<const NodeId> nodes) {
  std::vector<NodeId> out(nodes.begin(), nodes.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ConsumerMask bit(std::size_t k) { return ConsumerMask{1} << k; }

// Owner plus consumers of `cn`, or nullopt when the set is nonviable for it.
std::optional<std::vector<NodeId>> consumers_if_viable(std::span<const NodeId> nodes,
                                                       const CostNetwork& cn) {
  bool has_owner = false;
  std::vector<NodeId> consumers;
  for (NodeId v : sorted_unique(nodes)) {
    if (v == cn.owner()) {
      has_owner = true;
    } else if (cn.contains(v)) {
      consumers.push_back(v);
    } else {
      return std::nullopt;
    }
  }
  if (!has_owner) return std::nullopt;
  return consumers;
}

}  // namespace

SavingsGame::SavingsGame(NodeId retailer, std::vector<NodeId> players, ValueFn value)
    : retailer_(retailer), players_(std::move(players)), value_(std::move(value)) {
  std::sort(players_.begin(), players_.end());
  if (std::adjacent_find(players_.begin(), players_.end()) != players_.end()) {
    throw std::invalid_argument("savings game lists a player twice");
  }
  if (players_.size() > max_players) throw std::length_error("too many players for a mask");
  if (players_.size() <= tabulation_limit) {
    table_.resize(std::size_t{1} << players_.size());
    for (ConsumerMask mask = 0; mask < table_.size(); ++mask) table_[mask] = value_(mask);
  }
}

SavingsGame SavingsGame::from_cost_network(const CostNetwork& cn,
                                           std::span<const NodeId> consumers) {
  std::vector<NodeId> players = sorted_unique(consumers);
  for (NodeId b : players) {
    if (b == cn.owner() || !cn.contains(b)) {
      throw std::invalid_argument("savings game player is not a consumer of the cost network");
    }
  }
  auto value = [&cn, players](ConsumerMask mask) {
    std::vector<NodeId> nodes{cn.owner()};
    double direct = 0.0;
    for (std::size_t k = 0; k < players.size(); ++k) {
      if (mask & bit(k)) {
        nodes.push_back(players[k]);
        direct += cn.direct(players[k]);
      }
    }
    return direct - mst(cn, nodes).total_weight;
  };
  return SavingsGame(cn.owner(), std::move(players), value);
}

SavingsGame SavingsGame::from_table(NodeId retailer, std::vector<NodeId> players,
                                    std::vector<double> table) {
  std::sort(players.begin(), players.end());
  if (players.size() > tabulation_limit || table.size() != (std::size_t{1} << players.size())) {
    throw std::invalid_argument("value table must hold 2^k entries");
  }
  auto shared = std::make_shared<std::vector<double>>(std::move(table));
  return SavingsGame(retailer, std::move(players),
                     [shared](ConsumerMask mask) { return (*shared)[mask]; });
}

ConsumerMask SavingsGame::grand() const {
  return players_.empty() ? 0 : (~ConsumerMask{0} >> (64 - players_.size()));
}

double SavingsGame::value(ConsumerMask mask) const {
  if (mask & ~grand()) throw std::out_of_range("mask names a non-player");
  return table_.empty() ? value_(mask) : table_[mask];
}

std::size_t SavingsGame::position(NodeId consumer) const {
  auto it = std::lower_bound(players_.begin(), players_.end(), consumer);
  if (it == players_.end() || *it != consumer) {
    throw std::invalid_argument("node " + std::to_string(consumer) + " is not a player");
  }
  return static_cast<std::size_t>(it - players_.begin());
}

ConsumerMask SavingsGame::mask_of(std::span<const NodeId> consumers) const {
  ConsumerMask mask = 0;
  for (NodeId b : consumers) mask |= bit(position(b));
  return mask;
}

bool is_viable(std::span<const NodeId> nodes, const PowerNetwork& net) {
  std::size_t retailers = 0;
  for (NodeId v : sorted_unique(nodes)) {
    if (v >= net.size()) throw NetworkError("unknown node " + std::to_string(v));
    if (net.is_retailer(v)) ++retailers;
  }
  return retailers == 1;
}

double coalition_value(std::span<const NodeId> nodes, const CostNetwork& cn) {
  auto consumers = consumers_if_viable(nodes, cn);
  if (!consumers) return 0.0;
  double direct = 0.0;
  for (NodeId b : *consumers) direct += cn.direct(b);
  std::vector<NodeId> members = *consumers;
  members.push_back(cn.owner());
  return direct - mst(cn, members).total_weight;
}

const CostNetwork& network_of(std::span<const CostNetwork> networks, NodeId retailer) {
  for (const auto& cn : networks) {
    if (cn.owner() == retailer) return cn;
  }
  throw std::invalid_argument("no cost network for retailer " + std::to_string(retailer));
}

double coalition_value(std::span<const NodeId> nodes, const PowerNetwork& net,
                       std::span<const CostNetwork> networks) {
  if (!is_viable(nodes, net)) return 0.0;
  for (NodeId v : nodes) {
    if (net.is_retailer(v)) return coalition_value(nodes, network_of(networks, v));
  }
  return 0.0;
}

ShapleyValue shapley(const SavingsGame& game, const ShapleyOptions& options) {
  const std::size_t k = game.size();
  ShapleyValue result;
  if (k == 0) return result;
  std::vector<double> sums(k, 0.0);
  const double base = game.value(0);

  if (k <= options.exact_cap) {
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t count = 0;
    do {
      ConsumerMask mask = 0;
      double previous = base;
      for (std::size_t p : order) {
        mask |= bit(p);
        const double current = game.value(mask);
        sums[p] += current - previous;
        previous = current;
      }
      ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    for (std::size_t p = 0; p < k; ++p) {
      result.values[game.players()[p]] = sums[p] / static_cast<double>(count);
    }
    result.orderings = count;
    return result;
  }

  if (options.samples < 2) {
    throw std::length_error("coalition exceeds the exact Shapley cap; request sampled mode");
  }
  std::mt19937_64 rng(options.seed);
  std::vector<double> squares(k, 0.0);
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t s = 0; s < options.samples; ++s) {
    std::shuffle(order.begin(), order.end(), rng);
    ConsumerMask mask = 0;
    double previous = base;
    for (std::size_t p : order) {
      mask |= bit(p);
      const double current = game.value(mask);
      const double marginal = current - previous;
      sums[p] += marginal;
      squares[p] += marginal * marginal;
      previous = current;
    }
  }
  const double n = static_cast<double>(options.samples);
  for (std::size_t p = 0; p < k; ++p) {
    const double mean = sums[p] / n;
    const double var = std::max(0.0, (squares[p] - n * mean * mean) / (n - 1.0));
    result.values[game.players()[p]] = mean;
    result.max_standard_error = std::max(result.max_standard_error, std::sqrt(var / n));
  }
  result.sampled = true;
  result.orderings = options.samples;
  return result;
}

ShapleyValue shapley(std::span<const NodeId> nodes, const CostNetwork& cn,
                     const ShapleyOptions& options) {
  auto consumers = consumers_if_viable(nodes, cn);
  if (!consumers) throw std::invalid_argument("Shapley value needs a viable coalition");
  return shapley(SavingsGame::from_cost_network(cn, *consumers), options);
}

MarginalVector marginal_vector(const SavingsGame& game, std::span<const NodeId> ordering) {
  if (ordering.size() != game.size()) {
    throw std::invalid_argument("ordering must list every player once");
  }
  MarginalVector out;
  out.ordering.assign(ordering.begin(), ordering.end());
  ConsumerMask mask = 0;
  double previous = game.value(0);
  for (NodeId b : ordering) {
    const ConsumerMask next = mask | bit(game.position(b));
    if (next == mask) throw std::invalid_argument("ordering repeats a player");
    mask = next;
    const double current = game.value(mask);
    out.marginals[b] = current - previous;
    previous = current;
  }
  return out;
}

std::vector<NodeId> mst_order(std::span<const NodeId> nodes, const CostNetwork& cn) {
  auto consumers = consumers_if_viable(nodes, cn);
  if (!consumers) throw std::invalid_argument("MST order needs a viable coalition");
  std::vector<NodeId> members = *consumers;
  members.push_back(cn.owner());
  const SpanningTree tree = mst(cn, members);

  std::map<NodeId, std::vector<NodeId>> adjacent;
  for (const auto& [a, b] : tree.edges) {
    adjacent[a].push_back(b);
    adjacent[b].push_back(a);
  }
  for (auto& [node, list] : adjacent) std::sort(list.begin(), list.end());

  std::vector<NodeId> order;
  std::set<NodeId> seen{cn.owner()};
  std::queue<NodeId> frontier;
  frontier.push(cn.owner());
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop();
    for (NodeId w : adjacent[v]) {
      if (seen.insert(w).second) {
        order.push_back(w);
        frontier.push(w);
      }
    }
  }
  return order;
}

bool check_pc(std::span<const NodeId> nodes, const CostNetwork& cn) {
  const std::vector<NodeId> order = mst_order(nodes, cn);
  const std::size_t k = order.size();
  if (k > SavingsGame::tabulation_limit) throw std::length_error("PC check is exhaustive");

  // Cost of owner + consumer subset, players indexed by position in `order`.
  std::vector<double> cost(std::size_t{1} << k, std::numeric_limits<double>::quiet_NaN());
  auto cost_of = [&](ConsumerMask mask) {
    double& slot = cost[mask];
    if (std::isnan(slot)) {
      std::vector<NodeId> members{cn.owner()};
      for (std::size_t p = 0; p < k; ++p) {
        if (mask & bit(p)) members.push_back(order[p]);
      }
      slot = mst(cn, members).total_weight;
    }
    return slot;
  };

  // prefix(j) holds the owner and the first j consumers of the order.
  auto prefix = [](std::size_t j) { return j == 0 ? ConsumerMask{0} : (~ConsumerMask{0} >> (64 - j)); };
  const ConsumerMask all = prefix(k);
  for (std::size_t hi = 1; hi <= k; ++hi) {
    const ConsumerMask later = all & ~prefix(hi);
    // Enumerate every subset of the players after position hi.
    for (ConsumerMask extra = later;; extra = (extra - 1) & later) {
      const double gain_hi = cost_of(prefix(hi) | extra) - cost_of(prefix(hi));
      for (std::size_t lo = 0; lo < hi; ++lo) {
        const double gain_lo = cost_of(prefix(lo) | extra) - cost_of(prefix(lo));
        if (gain_hi > gain_lo + payoff_tolerance) return false;
      }
      if (extra == 0) break;
    }
  }
  return true;
}

std::vector<NodeId> Coalition::members() const {
  std::vector<NodeId> out = consumers;
  out.push_back(retailer);
  std::sort(out.begin(), out.end());
  return out;
}

Coalition make_coalition(NodeId retailer, std::vector<NodeId> consumers, const CostNetwork& cn,
                         const ShapleyOptions& options) {
  if (cn.owner() != retailer) throw std::invalid_argument("cost network belongs to another retailer");
  Coalition c{retailer, sorted_unique(consumers), 0.0, 0.0, {}};
  const std::vector<NodeId> members = c.members();
  c.mst_cost = mst(cn, members).total_weight;
  c.value = coalition_value(members, cn);
  c.imputation = shapley(SavingsGame::from_cost_network(cn, c.consumers), options).values;
  return c;
}

void CoalitionPartition::validate(const PowerNetwork& net) const {
  std::vector<int> owner_count(net.size(), 0);
  std::vector<int> consumer_count(net.size(), 0);
  for (const auto& c : coalitions) {
    if (c.retailer >= net.size() || !net.is_retailer(c.retailer)) {
      throw std::invalid_argument("coalition is not headed by a retailer");
    }
    ++owner_count[c.retailer];
    for (NodeId b : c.consumers) {
      if (b >= net.size() || !net.is_consumer(b)) {
        throw std::invalid_argument("coalition member " + std::to_string(b) + " is not a consumer");
      }
      ++consumer_count[b];
    }
  }
  for (NodeId r : net.retailers()) {
    if (owner_count[r] != 1) {
      throw std::invalid_argument("retailer '" + net.name(r) + "' must head exactly one coalition");
    }
  }
  for (NodeId b : net.consumers()) {
    if (consumer_count[b] != 1) {
      throw std::invalid_argument("consumer '" + net.name(b) + "' must belong to exactly one coalition");
    }
  }
}

bool check_subadditive(const CoalitionPartition& partition, const PowerNetwork& net,
                       std::span<const CostNetwork> networks) {
  const auto& cs = partition.coalitions;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double vi = coalition_value(cs[i].members(), net, networks);
    if (vi < -payoff_tolerance) return false;
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      std::vector<NodeId> joined = cs[i].members();
      const auto mj = cs[j].members();
      joined.insert(joined.end(), mj.begin(), mj.end());
      const double vj = coalition_value(mj, net, networks);
      if (coalition_value(joined, net, networks) > vi + vj + payoff_tolerance) return false;
    }
  }
  return true;
}

bool check_concave_balanced(const CoalitionPartition& partition, const PowerNetwork& net,
                            std::span<const CostNetwork> networks) {
  const auto& cs = partition.coalitions;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      const auto mi = cs[i].members();
      const auto mj = cs[j].members();
      std::vector<NodeId> joined;
      std::vector<NodeId> common;
      std::set_union(mi.begin(), mi.end(), mj.begin(), mj.end(), std::back_inserter(joined));
      std::set_intersection(mi.begin(), mi.end(), mj.begin(), mj.end(), std::back_inserter(common));
      const double lhs =
          coalition_value(joined, net, networks) + coalition_value(common, net, networks);
      const double rhs = coalition_value(mi, net, networks) + coalition_value(mj, net, networks);
      if (lhs > rhs + payoff_tolerance) return false;
    }
  }
  return true;
}

void for_each_set_partition(std::size_t n,
                            const std::function<void(std::span<const std::size_t>)>& visit) {
  if (n == 0) {
    visit({});
    return;
  }
  std::vector<std::size_t> labels(n, 0);
  std::vector<std::size_t> block_max(n, 0);  // block_max[i] = max(labels[0..i])
  // Odometer over restricted growth strings.
  for (;;) {
    visit(labels);
    std::size_t i = n - 1;
    while (i > 0 && labels[i] == block_max[i - 1] + 1) --i;
    if (i == 0) return;
    ++labels[i];
    block_max[i] = std::max(block_max[i - 1], labels[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      labels[j] = 0;
      block_max[j] = block_max[i];
    }
  }
}

double bell_number(std::size_t n) {
  std::vector<double> row{1.0};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> next{row.back()};
    for (double x : row) next.push_back(next.back() + x);
    row = std::move(next);
  }
  return row.front();
}

DhpReport check_dhp(const CoalitionPartition& partition, const PowerNetwork& net,
                    std::span<const CostNetwork> networks, const DhpOptions& options) {
  DhpReport report;
  for (const auto& c : partition.coalitions) {
    const std::vector<NodeId> members = c.members();
    const double whole = coalition_value(members, net, networks);
    auto check_labels = [&](std::span<const std::size_t> labels) {
      const std::size_t blocks = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
      std::vector<std::vector<NodeId>> parts(blocks);
      for (std::size_t i = 0; i < labels.size(); ++i) parts[labels[i]].push_back(members[i]);
      double sum = 0.0;
      for (const auto& part : parts) sum += coalition_value(part, net, networks);
      ++report.partitions_checked;
      if (sum > whole + payoff_tolerance) report.partition_condition = false;
    };
    if (members.size() <= options.exhaustive_cap) {
      for_each_set_partition(members.size(), check_labels);
      continue;
    }
    std::mt19937_64 rng(options.seed ^ (0x9e3779b97f4a7c15ULL * (c.retailer + 1)));
    std::set<std::vector<std::size_t>> distinct;
    std::vector<std::size_t> labels(members.size());
    for (std::size_t s = 0; s < options.samples; ++s) {
      const std::size_t blocks = 1 + rng() % members.size();
      for (auto& label : labels) label = rng() % blocks;
      // Canonical restricted-growth relabelling for the coverage count.
      std::map<std::size_t, std::size_t> relabel;
      for (auto& label : labels) {
        auto [it, fresh] = relabel.emplace(label, relabel.size());
        label = it->second;
      }
      if (distinct.insert(labels).second) check_labels(labels);
    }
    report.coverage = std::min(report.coverage,
                               static_cast<double>(distinct.size()) / bell_number(members.size()));
  }

  const std::size_t r = partition.coalitions.size();
  if (r > 20) throw std::length_error("merge condition enumerates retailer subsets; too many retailers");
  for (std::uint64_t subset = 1; subset < (std::uint64_t{1} << r); ++subset) {
    std::vector<NodeId> joined;
    double sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      if (subset & (std::uint64_t{1} << i)) {
        const auto m = partition.coalitions[i].members();
        joined.insert(joined.end(), m.begin(), m.end());
        sum += coalition_value(m, net, networks);
      }
    }
    if (coalition_value(joined, net, networks) > sum + payoff_tolerance) report.merge_condition = false;
  }
  return report;
}

const char* to_string(CoreWitness source) {
  switch (source) {
    case CoreWitness::shapley: return "shapley";
    case CoreWitness::ordered_marginal: return "ordered_marginal";
    case CoreWitness::linear_program: return "linear_program";
    case CoreWitness::none: break;
  }
  return "none";
}

bool in_core(const SavingsGame& game, const Payoff& payoff, double tol) {
  const std::size_t k = game.size();
  if (k > 24) throw std::length_error("core membership is checked exhaustively");
  std::vector<double> amounts(k, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    auto it = payoff.find(game.players()[p]);
    if (it == payoff.end()) return false;
    amounts[p] = it->second;
  }
  if (payoff.size() != k) return false;
  const ConsumerMask grand = game.grand();
  for (ConsumerMask mask = 0;; ++mask) {
    double sum = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      if (mask & bit(p)) sum += amounts[p];
    }
    const double v = game.value(mask);
    if (sum < v - tol) return false;
    if (mask == grand) return std::abs(sum - v) <= tol;
  }
}

CoreResult core_nonempty(const SavingsGame& game, std::optional<std::span<const NodeId>> ordering) {
  CoreResult result;
  ShapleyOptions options;
  options.samples = 20000;
  Payoff candidate = shapley(game, options).values;
  if (game.size() == 0 || in_core(game, candidate)) {
    result.nonempty = true;
    result.witness = std::move(candidate);
    result.source = CoreWitness::shapley;
    return result;
  }
  if (ordering) {
    candidate = marginal_vector(game, *ordering).marginals;
    if (in_core(game, candidate)) {
      result.nonempty = true;
      result.witness = std::move(candidate);
      result.source = CoreWitness::ordered_marginal;
      return result;
    }
  }

  const std::size_t k = game.size();
  const auto rows = static_cast<Eigen::Index>((std::size_t{1} << k) - 2);
  Eigen::MatrixXd ge(rows, static_cast<Eigen::Index>(k));
  Eigen::VectorXd ge_rhs(rows);
  Eigen::Index row = 0;
  for (ConsumerMask mask = 1; mask < game.grand(); ++mask, ++row) {
    for (std::size_t p = 0; p < k; ++p) ge(row, static_cast<Eigen::Index>(p)) = (mask & bit(p)) ? 1.0 : 0.0;
    ge_rhs(row) = game.value(mask);
  }
  Eigen::MatrixXd eq = Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(k));
  Eigen::VectorXd eq_rhs = Eigen::VectorXd::Constant(1, game.value(game.grand()));
  if (auto x = find_feasible_point(ge, ge_rhs, eq, eq_rhs)) {
    candidate.clear();
    for (std::size_t p = 0; p < k; ++p) candidate[game.players()[p]] = (*x)(static_cast<Eigen::Index>(p));
    // Simplex round-off is far below the payoff tolerance on these sizes.
    if (in_core(game, candidate, 1e-7)) {
      result.nonempty = true;
      result.witness = std::move(candidate);
      result.source = CoreWitness::linear_program;
    }
  }
  return result;
}

CoreResult core_nonempty(std::span<const NodeId> nodes, const CostNetwork& cn) {
  auto consumers = consumers_if_viable(nodes, cn);
  if (!consumers) throw std::invalid_argument("core check needs a viable coalition");
  const SavingsGame game = SavingsGame::from_cost_network(cn, *consumers);
  const std::vector<NodeId> order = mst_order(nodes, cn);
  return core_nonempty(game, std::span<const NodeId>(order));
}

bool check_savings_assumption(const SavingsGame& game) {
  if (game.size() < 2) return true;
  const double whole = game.value(game.grand());
  for (std::size_t p = 0; p < game.size(); ++p) {
    if (game.value(bit(p)) > whole + payoff_tolerance) return false;
  }
  return true;
}

bool check_savings_assumption(std::span<const NodeId> nodes, const CostNetwork& cn) {
  auto consumers = consumers_if_viable(nodes, cn);
  if (!consumers) throw std::invalid_argument("savings check needs a viable coalition");
  return check_savings_assumption(SavingsGame::from_cost_network(cn, *consumers));
}

}  // namespace mgcoal
