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

#include "doctest.h"
#include "oracles.hpp"

#include <random>

using namespace mgcoal;

namespace {

// Retailers 0, 1 each wired to consumers 2.. with identical lines, so only
// the prices tell them apart.
struct Twin {
  PowerNetwork net;
  MarketParams params;
  std::vector<CostNetwork> costs;
};

Twin twin_market(std::vector<double> alphas, double p_max_first, double p_max_second,
                 double zeta_min = 0.0) {
  std::vector<std::string> names{"r1", "r2"};
  std::vector<Role> roles{Role::retailer, Role::retailer};
  std::vector<Line> lines;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    names.push_back("b" + std::to_string(k + 1));
    roles.push_back(Role::consumer);
    lines.push_back({0, k + 2, 2.0});
    lines.push_back({1, k + 2, 2.0});
  }
  PowerNetwork net(names, roles, lines, std::vector<double>(names.size(), 5000.0));
  MarketParams params;
  params.retailers.push_back({0, 1e-4, 10.0, 0.01, 1.0, p_max_first, 0.0});
  params.retailers.push_back({1, 1e-4, 10.0, 0.01, 3.0, p_max_second, 0.0});
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    params.consumers.push_back({k + 2, alphas[k], zeta_min, 5000.0, 2000.0});
  }
  params.validate(net);
  std::vector<CostNetwork> costs{build_cost_network(net, 0, {100, 50, 0.5}),
                                 build_cost_network(net, 1, {100, 50, 0.5})};
  return {std::move(net), std::move(params), std::move(costs)};
}

}  // namespace

TEST_CASE("consumer best demand beats a grid search") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> alpha(1.0, 3000.0);
  std::uniform_real_distribution<double> price(0.01, 5.0);
  std::uniform_real_distribution<double> lower(0.0, 50.0);
  std::uniform_real_distribution<double> width(10.0, 8000.0);
  const std::size_t points = 10000;
  for (int draw = 0; draw < 1000; ++draw) {
    ConsumerParams cp{0, alpha(rng), lower(rng), 0.0, 1000.0};
    cp.zeta_max_w = cp.zeta_min_w + width(rng);
    const double lambda = price(rng);
    auto objective = [&](double z) { return cp.alpha * std::pow(z, 1.0 / 6.0) - lambda * z; };
    const double best = consumer_best_demand(lambda, cp);
    const auto [grid_x, grid_value] = oracle::grid_max(objective, cp.zeta_min_w, cp.zeta_max_w, points);
    const double cell = (cp.zeta_max_w - cp.zeta_min_w) / static_cast<double>(points - 1);
    CHECK(objective(best) >= grid_value - 1e-9 * std::max(1.0, std::abs(grid_value)));
    CHECK(std::abs(best - grid_x) <= cell);
  }
}

TEST_CASE("consumer best demand clamps and validates") {
  const ConsumerParams cp{0, 600.0, 10.0, 200.0, 100.0};
  CHECK(consumer_best_demand(1.0, cp) == doctest::Approx(200.0));  // stationary 100^(6/5) ~ 251
  CHECK(consumer_best_demand(1.0, cp, 150.0) == doctest::Approx(150.0));
  CHECK(consumer_best_demand(1000.0, cp) == doctest::Approx(10.0));
  CHECK(consumer_best_demand(2.0, cp) == doctest::Approx(std::pow(50.0, 1.2)));
  CHECK_THROWS_AS(consumer_best_demand(0.0, cp), std::invalid_argument);
  CHECK_THROWS_AS(consumer_best_demand(1.0, cp, 5.0), std::invalid_argument);
}

TEST_CASE("retailer best price beats a grid search") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> alpha(1e-6, 1e-3);
  std::uniform_real_distribution<double> power(1.0, 30000.0);
  std::uniform_real_distribution<double> upper(0.5, 5.0);
  std::uniform_real_distribution<double> loss(0.0, 0.1);
  const std::size_t points = 10000;
  for (int draw = 0; draw < 1000; ++draw) {
    const RetailerParams rp{0, alpha(rng), 0.0, 0.01, upper(rng), 1e6, loss(rng)};
    const double p = power(rng);
    auto profit = [&](double price) { return retailer_profit(price, p, rp, 0.0); };
    const double best = retailer_best_price(p, rp, 0.5);
    const auto [grid_x, grid_value] = oracle::grid_max(profit, rp.lambda_min, rp.lambda_max, points);
    const double cell = (rp.lambda_max - rp.lambda_min) / static_cast<double>(points - 1);
    CHECK(profit(best) >= grid_value - 1e-9 * std::max(1.0, std::abs(grid_value)));
    CHECK(std::abs(best - grid_x) <= cell);
  }
}

TEST_CASE("retailer keeps its price without demand") {
  const RetailerParams rp{0, 1e-4, 0.0, 0.01, 4.0, 30000.0, 0.02};
  CHECK(retailer_best_price(0.0, rp, 2.5) == 2.5);
  CHECK(retailer_best_price(1e9, rp, 2.5) == 0.01);
  CHECK(retailer_best_price(100.0, rp, 2.5) == 4.0);
  CHECK(retailer_best_price(2000.0, rp, 2.5) ==
        doctest::Approx(1.0 / (2.0 * 1e-4 * 1.02 * 1.02 * 2000.0)));
}

TEST_CASE("retailer profit and cost") {
  const RetailerParams rp{0, 1e-4, 0.0, 0.01, 4.0, 30000.0, 0.1};
  // lambda P - alpha (lambda (1 + loss) P)^2 - nu
  CHECK(retailer_profit(2.0, 100.0, rp, 5.0) == doctest::Approx(200.0 - 1e-4 * 220.0 * 220.0 - 5.0));
  const CostNetwork cn(0, {1}, {{0, 1, 9.0, EdgeKind::direct}});
  CHECK(retailer_cost(100.0, std::vector<NodeId>{0, 1}, rp, 2.0, cn) == doctest::Approx(1e-4 * 200.0 * 200.0));
}

TEST_CASE("capacity limit includes losses") {
  const RetailerParams rp{0, 1e-4, 0.0, 0.01, 4.0, 1020.0, 0.02};
  CHECK(capacity_ok(rp, 1000.0));
  CHECK_FALSE(capacity_ok(rp, 1000.001));
  CHECK(rp.deliverable_w() == doctest::Approx(1000.0));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((RetailerParams{0, 0.0, 1.0, 0.01, 1.0, 1.0, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((RetailerParams{0, 1.0, 1.0, 2.0, 1.0, 1.0, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((RetailerParams{0, 1.0, 1.0, 0.01, 1.0, 1.0, 1.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ConsumerParams{0, 1.0, 5.0, 5.0, 1.0}.validate()), std::invalid_argument);
  Twin t = twin_market({600.0}, 1000.0, 1000.0);
  std::swap(t.params.retailers[0], t.params.retailers[1]);
  CHECK_THROWS_AS(t.params.validate(t.net), std::invalid_argument);
}

TEST_CASE("choice prefers the cheaper retailer and breaks ties by id") {
  const Twin t = twin_market({600.0}, 1000.0, 1000.0);
  const ConsumerParams& cp = t.params.consumers[0];
  const auto cheap = choose_retailer(cp, t.params, t.costs, {{0, 1.0}, {1, 3.0}});
  REQUIRE(cheap);
  CHECK(cheap->retailer == 0);
  CHECK(cheap->demand_w == doctest::Approx(std::pow(100.0, 1.2)));
  const auto tie = choose_retailer(cp, t.params, t.costs, {{0, 2.0}, {1, 2.0}});
  CHECK(tie->retailer == 0);
  const auto excluded = choose_retailer(cp, t.params, t.costs, {{0, 1.0}, {1, 3.0}}, {0});
  CHECK(excluded->retailer == 1);
  const auto capped = choose_retailer(cp, t.params, t.costs, {{0, 1.0}, {1, 3.0}}, {0}, {{1, 7.0}});
  CHECK(capped->demand_w == doctest::Approx(7.0));
  CHECK_FALSE(choose_retailer(cp, t.params, t.costs, {{0, 1.0}, {1, 3.0}}, {0, 1}).has_value());
}

TEST_CASE("rejections remove the smallest demands first") {
  // Demands at price 1: 251, 408 and 109 W; the first retailer fits 500 W.
  const Twin t = twin_market({600.0, 900.0, 300.0}, 500.0, 5000.0);
  const MarketState s = form_coalitions(initial_state(t.params), t.params, t.costs);
  CHECK(s.rejections == 2);
  CHECK(s.assignment.at(3) == 0);
  CHECK(s.assignment.at(2) == 1);
  CHECK(s.assignment.at(4) == 1);
  CHECK(capacity_ok(t.params.retailers[0], s.load(0)));
  CHECK(s.fallback_assignments.empty());
  // The rejected consumers now buy at the second retailer's price.
  CHECK(s.demands.at(2) == doctest::Approx(std::pow(100.0 / 3.0, 1.2)));
}

TEST_CASE("consumers rejected everywhere fall back to the roomiest retailer") {
  const Twin t = twin_market({600.0}, 100.0, 80.0, 200.0);
  const MarketState s = form_coalitions(initial_state(t.params), t.params, t.costs);
  REQUIRE(s.fallback_assignments.size() == 1);
  CHECK(s.assignment.at(2) == 0);
  CHECK(s.demands.at(2) == doctest::Approx(100.0));
  CHECK(capacity_ok(t.params.retailers[0], s.load(0)));
}

TEST_CASE("random markets keep capacity and assign everyone") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> alpha(50.0, 2000.0);
  std::uniform_real_distribution<double> cap(100.0, 3000.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> alphas;
    for (int k = 0; k < 5; ++k) alphas.push_back(alpha(rng));
    const Twin t = twin_market(alphas, cap(rng), cap(rng));
    MarketState s = initial_state(t.params);
    for (int round = 0; round < 5; ++round) {
      s = form_coalitions(s, t.params, t.costs);
      CHECK(s.assignment.size() == 5);
      for (const auto& rp : t.params.retailers) CHECK(capacity_ok(rp, s.load(rp.id)));
      double paid = 0.0;
      double value = 0.0;
      for (const auto& [b, share] : s.imputations_paid) paid += share;
      for (const auto& [r, v] : s.coalition_values) value += v;
      CHECK(paid == doctest::Approx(value));
    }
  }
}

TEST_CASE("realised profits use the imputation in place of the subsidy") {
  const Twin t = twin_market({600.0, 900.0}, 5000.0, 5000.0);
  const MarketState s = form_coalitions(initial_state(t.params), t.params, t.costs);
  const CostNetwork& cn = t.costs[0];
  for (NodeId b : {NodeId{2}, NodeId{3}}) {
    const ConsumerParams& cp = t.params.consumer(b);
    const double z = s.demands.at(b);
    CHECK(s.profits.at(b) == doctest::Approx(cp.alpha * std::pow(z, 1.0 / 6.0) - cn.direct(b) -
                                             s.prices.at(0) * z + s.imputations_paid.at(b)));
    CHECK(s.subsidies_announced.at({0, b}) == doctest::Approx(10.0 * static_cast<double>(cn.degree(b))));
  }
}

TEST_CASE("settled rounds admit no profitable deviation") {
  const Twin t = twin_market({600.0, 900.0, 300.0}, 5000.0, 5000.0);
  MarketState prev = initial_state(t.params);
  MarketState s = form_coalitions(prev, t.params, t.costs);
  int rounds = 1;
  while (!settled(prev, s) && rounds < 50) {
    prev = s;
    s = form_coalitions(s, t.params, t.costs);
    ++rounds;
  }
  REQUIRE(settled(prev, s));
  const DeviationReport ok = check_no_profitable_deviation(s, t.params, t.costs);
  CHECK(ok.ok());

  MarketState shifted = s;
  shifted.demands.at(2) *= 0.5;
  CHECK_FALSE(check_no_profitable_deviation(shifted, t.params, t.costs).consumers_ok);
  MarketState repriced = s;
  repriced.prices.at(0) *= 0.5;
  CHECK_FALSE(check_no_profitable_deviation(repriced, t.params, t.costs).retailers_ok);
}
