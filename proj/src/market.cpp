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

#include "mgcoal/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mgcoal {

namespace {

double headroom(const RetailerParams& rp, const MarketState& state) {
  return rp.deliverable_w() - state.load(rp.id);
}

double gain_tolerance(double reference) { return 1e-9 * std::max(1.0, std::abs(reference)); }

}  // namespace

void RetailerParams::validate() const {
  const std::string who = "retailer " + std::to_string(id);
  if (!(alpha > 0.0)) throw std::invalid_argument(who + ": alpha must be positive");
  if (!(kappa >= 0.0)) throw std::invalid_argument(who + ": kappa must be nonnegative");
  if (!(lambda_min > 0.0) || !(lambda_min < lambda_max)) {
    throw std::invalid_argument(who + ": need 0 < lambda_min < lambda_max");
  }
  if (!(p_max_w > 0.0)) throw std::invalid_argument(who + ": p_max must be positive");
  if (!(alpha_loss >= 0.0 && alpha_loss <= 1.0)) {
    throw std::invalid_argument(who + ": alpha_loss must lie in [0, 1]");
  }
}

void ConsumerParams::validate() const {
  const std::string who = "consumer " + std::to_string(id);
  if (!(alpha > 0.0)) throw std::invalid_argument(who + ": alpha must be positive");
  if (!(zeta_min_w >= 0.0) || !(zeta_min_w < zeta_max_w)) {
    throw std::invalid_argument(who + ": need 0 <= zeta_min < zeta_max");
  }
  if (!(p_rated_w > 0.0)) throw std::invalid_argument(who + ": rated power must be positive");
}

const RetailerParams& MarketParams::retailer(NodeId id) const {
  for (const auto& rp : retailers) {
    if (rp.id == id) return rp;
  }
  throw std::invalid_argument("no parameters for retailer " + std::to_string(id));
}

const ConsumerParams& MarketParams::consumer(NodeId id) const {
  for (const auto& cp : consumers) {
    if (cp.id == id) return cp;
  }
  throw std::invalid_argument("no parameters for consumer " + std::to_string(id));
}

void MarketParams::validate(const PowerNetwork& net) const {
  auto ids_match = [](const auto& list, const std::vector<NodeId>& expected) {
    if (list.size() != expected.size()) return false;
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k].id != expected[k]) return false;
    }
    return true;
  };
  if (!ids_match(retailers, net.retailers())) {
    throw std::invalid_argument("retailer parameters must cover every retailer once, in id order");
  }
  if (!ids_match(consumers, net.consumers())) {
    throw std::invalid_argument("consumer parameters must cover every consumer once, in id order");
  }
  for (const auto& rp : retailers) rp.validate();
  for (const auto& cp : consumers) cp.validate();
}

std::vector<NodeId> MarketState::coalition(NodeId retailer) const {
  std::vector<NodeId> out;
  for (const auto& [b, r] : assignment) {
    if (r == retailer) out.push_back(b);
  }
  return out;
}

double MarketState::load(NodeId retailer) const {
  double total = 0.0;
  for (const auto& [b, r] : assignment) {
    if (r == retailer) total += demands.at(b);
  }
  return total;
}

MarketState initial_state(const MarketParams& params) {
  MarketState state;
  for (const auto& rp : params.retailers) {
    state.prices[rp.id] = rp.lambda_max;
    state.coalition_values[rp.id] = 0.0;
    state.profits[rp.id] = 0.0;
  }
  return state;
}

double retailer_cost(double power_w, std::span<const NodeId> coalition, const RetailerParams& rp,
                     double price, const CostNetwork& cn) {
  if (power_w < 0.0) throw std::invalid_argument("power must be nonnegative");
  const double billed = price * power_w;
  return rp.alpha * billed * billed + coalition_value(coalition, cn);
}

double retailer_profit(double price, double power_w, const RetailerParams& rp,
                       double coalition_value) {
  const double generated = price * (1.0 + rp.alpha_loss) * power_w;
  return price * power_w - rp.alpha * generated * generated - coalition_value;
}

double announced_subsidy(const RetailerParams& rp, const CostNetwork& cn, NodeId consumer) {
  return rp.kappa * static_cast<double>(cn.degree(consumer));
}

double consumer_utility(double zeta_w, const ConsumerParams& cp, const CostNetwork& cn,
                        double subsidy) {
  if (zeta_w < 0.0) throw std::invalid_argument("consumption must be nonnegative");
  return cp.alpha * std::pow(zeta_w, 1.0 / 6.0) + subsidy - cn.direct(cp.id);
}

double consumer_decision_profit(double zeta_w, double price, const ConsumerParams& cp,
                                const CostNetwork& cn, double subsidy) {
  return consumer_utility(zeta_w, cp, cn, subsidy) - price * zeta_w;
}

double consumer_best_demand(double price, const ConsumerParams& cp, double upper_w) {
  if (!(price > 0.0)) throw std::invalid_argument("price must be positive");
  const double hi = std::min(cp.zeta_max_w, upper_w);
  if (hi < cp.zeta_min_w) throw std::invalid_argument("empty consumption range");
  const double stationary = std::pow(cp.alpha / (6.0 * price), 6.0 / 5.0);
  return std::clamp(stationary, cp.zeta_min_w, hi);
}

double retailer_best_price(double power_w, const RetailerParams& rp, double previous) {
  if (power_w < 0.0) throw std::invalid_argument("power must be nonnegative");
  if (power_w == 0.0) return previous;
  const double grow = 1.0 + rp.alpha_loss;
  const double stationary = 1.0 / (2.0 * rp.alpha * grow * grow * power_w);
  return std::clamp(stationary, rp.lambda_min, rp.lambda_max);
}

bool capacity_ok(const RetailerParams& rp, double total_demand_w) {
  return (1.0 + rp.alpha_loss) * std::abs(total_demand_w) <= rp.p_max_w + 1e-9;
}

std::optional<Choice> choose_retailer(const ConsumerParams& cp, const MarketParams& params,
                                      std::span<const CostNetwork> networks,
                                      const std::map<NodeId, double>& prices,
                                      const std::set<NodeId>& excluded,
                                      const std::map<NodeId, double>& caps) {
  std::optional<Choice> best;
  for (const auto& rp : params.retailers) {
    if (excluded.count(rp.id)) continue;
    double upper = cp.zeta_max_w;
    if (auto it = caps.find(rp.id); it != caps.end()) upper = std::min(upper, it->second);
    if (upper < cp.zeta_min_w) continue;
    const CostNetwork& cn = network_of(networks, rp.id);
    const double price = prices.at(rp.id);
    const double zeta = consumer_best_demand(price, cp, upper);
    const double value =
        consumer_decision_profit(zeta, price, cp, cn, announced_subsidy(rp, cn, cp.id));
    if (!best || value > best->profit) best = Choice{rp.id, zeta, value};
  }
  return best;
}

MarketState form_coalitions(const MarketState& state, const MarketParams& params,
                            std::span<const CostNetwork> networks) {
  MarketState next;
  next.round = state.round + 1;

  for (const auto& rp : params.retailers) {
    next.prices[rp.id] = retailer_best_price(state.load(rp.id), rp, state.prices.at(rp.id));
  }
  for (const auto& rp : params.retailers) {
    const CostNetwork& cn = network_of(networks, rp.id);
    for (const auto& cp : params.consumers) {
      next.subsidies_announced[{rp.id, cp.id}] = announced_subsidy(rp, cn, cp.id);
    }
  }

  for (const auto& cp : params.consumers) {
    auto choice = choose_retailer(cp, params, networks, next.prices);
    next.assignment[cp.id] = choice->retailer;
    next.demands[cp.id] = choice->demand_w;
  }

  std::map<NodeId, std::set<NodeId>> rejected_by;
  const std::size_t guard = params.consumers.size() * params.retailers.size() + 1;
  for (std::size_t pass = 0;; ++pass) {
    if (pass > guard) throw std::logic_error("rejection loop failed to settle");
    std::vector<NodeId> pending;
    for (const auto& rp : params.retailers) {
      while (!capacity_ok(rp, next.load(rp.id))) {
        // Lowest demand goes first; the highest id loses a tie.
        NodeId victim = 0;
        bool found = false;
        for (const auto& [b, r] : next.assignment) {
          if (r != rp.id) continue;
          if (!found || next.demands[b] <= next.demands[victim]) victim = b;
          found = true;
        }
        next.assignment.erase(victim);
        rejected_by[victim].insert(rp.id);
        pending.push_back(victim);
        ++next.rejections;
      }
    }
    if (pending.empty()) break;
    std::sort(pending.begin(), pending.end());
    for (NodeId b : pending) {
      std::map<NodeId, double> caps;
      for (const auto& rp : params.retailers) caps[rp.id] = std::max(0.0, headroom(rp, next));
      const ConsumerParams& cp = params.consumer(b);
      if (auto choice = choose_retailer(cp, params, networks, next.prices, rejected_by[b], caps)) {
        next.assignment[b] = choice->retailer;
        next.demands[b] = choice->demand_w;
        continue;
      }
      const RetailerParams* roomiest = &params.retailers.front();
      for (const auto& rp : params.retailers) {
        if (caps[rp.id] > caps[roomiest->id]) roomiest = &rp;
      }
      next.assignment[b] = roomiest->id;
      next.demands[b] = std::min(caps[roomiest->id], cp.zeta_min_w);
      next.fallback_assignments.push_back(b);
    }
  }

  for (const auto& rp : params.retailers) {
    const Coalition c =
        make_coalition(rp.id, next.coalition(rp.id), network_of(networks, rp.id), params.shapley);
    next.coalition_values[rp.id] = c.value;
    for (const auto& [b, share] : c.imputation) next.imputations_paid[b] = share;
  }
  next.profits = profits(next, params, networks);
  return next;
}

std::map<NodeId, double> profits(const MarketState& state, const MarketParams& params,
                                 std::span<const CostNetwork> networks) {
  std::map<NodeId, double> out;
  for (const auto& rp : params.retailers) {
    const auto it = state.coalition_values.find(rp.id);
    const double value = it == state.coalition_values.end() ? 0.0 : it->second;
    out[rp.id] = retailer_profit(state.prices.at(rp.id), state.load(rp.id), rp, value);
  }
  for (const auto& [b, r] : state.assignment) {
    const ConsumerParams& cp = params.consumer(b);
    const double zeta = state.demands.at(b);
    const auto paid = state.imputations_paid.find(b);
    out[b] = consumer_decision_profit(zeta, state.prices.at(r), cp, network_of(networks, r), 0.0) +
             (paid == state.imputations_paid.end() ? 0.0 : paid->second);
  }
  return out;
}

CoalitionPartition partition_of(const MarketState& state, const MarketParams& params,
                                std::span<const CostNetwork> networks) {
  CoalitionPartition partition;
  for (const auto& rp : params.retailers) {
    partition.coalitions.push_back(
        make_coalition(rp.id, state.coalition(rp.id), network_of(networks, rp.id), params.shapley));
  }
  return partition;
}

bool settled(const MarketState& previous, const MarketState& current, double tol) {
  if (previous.assignment != current.assignment) return false;
  for (const auto& [r, price] : current.prices) {
    auto it = previous.prices.find(r);
    if (it == previous.prices.end() || std::abs(it->second - price) > tol) return false;
  }
  for (const auto& [b, demand] : current.demands) {
    auto it = previous.demands.find(b);
    if (it == previous.demands.end() || std::abs(it->second - demand) > tol) return false;
  }
  return true;
}

DeviationReport check_no_profitable_deviation(const MarketState& state, const MarketParams& params,
                                              std::span<const CostNetwork> networks,
                                              std::size_t grid_points) {
  if (grid_points < 2) throw std::invalid_argument("deviation grid needs two points");
  DeviationReport report;
  const double steps = static_cast<double>(grid_points - 1);

  for (const auto& [b, current] : state.assignment) {
    const ConsumerParams& cp = params.consumer(b);
    const auto& rc = params.retailer(current);
    const CostNetwork& cn_now = network_of(networks, current);
    const double now = consumer_decision_profit(state.demands.at(b), state.prices.at(current), cp,
                                                cn_now, announced_subsidy(rc, cn_now, b));
    for (const auto& rp : params.retailers) {
      double room = headroom(rp, state) + (rp.id == current ? state.demands.at(b) : 0.0);
      const double hi = std::min(cp.zeta_max_w, room);
      if (hi < cp.zeta_min_w) continue;
      const CostNetwork& cn = network_of(networks, rp.id);
      const double subsidy = announced_subsidy(rp, cn, b);
      for (std::size_t k = 0; k < grid_points; ++k) {
        const double zeta = cp.zeta_min_w + (hi - cp.zeta_min_w) * static_cast<double>(k) / steps;
        const double gain =
            consumer_decision_profit(zeta, state.prices.at(rp.id), cp, cn, subsidy) - now;
        report.worst_consumer_gain = std::max(report.worst_consumer_gain, gain);
        if (gain > gain_tolerance(now)) report.consumers_ok = false;
      }
    }
  }

  for (const auto& rp : params.retailers) {
    const double load = state.load(rp.id);
    const double value = state.coalition_values.count(rp.id) ? state.coalition_values.at(rp.id) : 0.0;
    const double now = retailer_profit(state.prices.at(rp.id), load, rp, value);
    for (std::size_t k = 0; k < grid_points; ++k) {
      const double price =
          rp.lambda_min + (rp.lambda_max - rp.lambda_min) * static_cast<double>(k) / steps;
      const double gain = retailer_profit(price, load, rp, value) - now;
      report.worst_retailer_gain = std::max(report.worst_retailer_gain, gain);
      if (gain > gain_tolerance(now)) report.retailers_ok = false;
    }
  }
  return report;
}

}  // namespace mgcoal
