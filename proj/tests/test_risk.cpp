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


#include "mgcoal/risk.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <numeric>
#include <random>

using namespace mgcoal;

namespace {

DemandModel three_consumers(double sigma) {
  DemandModel m;
  m.consumers = {{1, 600.0, 20.0, 5000.0, 5000.0}, {2, 900.0, 0.0, 5000.0, 5000.0},
                 {3, 300.0, 50.0, 400.0, 5000.0}};
  m.sigma = sigma;
  return m;
}

std::vector<double> uniform_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

const std::vector<NodeId> everyone{1, 2, 3};

}  // namespace

TEST_CASE("normal stream moments") {
  NormalStream stream(7, 3);
  const std::size_t n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = stream.next();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / static_cast<double>(n);
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(sq / static_cast<double>(n) - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("streams depend on seed and consumer only") {
  const DemandModel m = three_consumers(100.0);
  CHECK(draw_alphas(m, 1, 100, 5) == draw_alphas(m, 1, 100, 5));
  CHECK(draw_alphas(m, 1, 100, 5) != draw_alphas(m, 2, 100, 5));
  CHECK(draw_alphas(m, 1, 100, 5) != draw_alphas(m, 1, 100, 6));
  // Prefixes agree, so a member draws the same weights at any sample count.
  const auto longer = draw_alphas(m, 2, 200, 5);
  const auto shorter = draw_alphas(m, 2, 100, 5);
  CHECK(std::equal(shorter.begin(), shorter.end(), longer.begin()));
}

TEST_CASE("utility weights are floored") {
  DemandModel m = three_consumers(1e6);
  const auto alphas = draw_alphas(m, 3, 1000, 1);
  CHECK(*std::min_element(alphas.begin(), alphas.end()) == alpha_floor);
  for (double z : consumer_demand_samples(m, 3, 1.0, 1000, 1)) {
    CHECK(z >= 50.0);
    CHECK(z <= 400.0);
  }
}

TEST_CASE("deterministic demand without noise") {
  const DemandModel m = three_consumers(0.0);
  const EmpiricalDistribution d = sample_coalition_demand(m, everyone, 1.0, 50, 3);
  double expected = 0.0;
  for (const auto& cp : m.consumers) expected += consumer_best_demand(1.0, cp);
  for (double x : d.samples()) CHECK(x == doctest::Approx(expected));
  CHECK(d.cvar_deviation(0.05) == doctest::Approx(0.0));
  CHECK_THROWS_AS(sample_coalition_demand(m, everyone, 1.0, 1, 3), std::invalid_argument);
}

TEST_CASE("coalition demand stays in the support") {
  const DemandModel m = three_consumers(400.0);
  const EmpiricalDistribution d = sample_coalition_demand(m, everyone, 1.0, 20000, 9);
  CHECK(d.samples().front() >= 70.0);
  CHECK(d.samples().back() <= 10400.0);
}

TEST_CASE("aggregate mean matches independent member means") {
  const DemandModel m = three_consumers(150.0);
  const std::size_t n = 100000;
  const EmpiricalDistribution total = sample_coalition_demand(m, everyone, 1.0, n, 21);
  double oracle_mean = 0.0;
  double oracle_var = 0.0;
  for (NodeId b : everyone) {
    const EmpiricalDistribution one(consumer_demand_samples(m, b, 1.0, n, 1234));
    oracle_mean += one.mean();
    oracle_var += one.stddev() * one.stddev() / static_cast<double>(n);
  }
  const double se = std::sqrt(total.stddev() * total.stddev() / static_cast<double>(n) + oracle_var);
  CHECK(std::abs(total.mean() - oracle_mean) < 3.0 * se);
}

TEST_CASE("quantiles of an empirical distribution") {
  std::vector<double> xs(100);
  std::iota(xs.begin(), xs.end(), 1.0);
  std::shuffle(xs.begin(), xs.end(), std::mt19937_64(2));
  const EmpiricalDistribution d(xs);
  CHECK(d.quantile(0.5) == 50.0);
  CHECK(d.quantile(1.0) == 100.0);
  CHECK(d.quantile(0.0) == 1.0);
  CHECK(d.quantile(0.505) == 51.0);
  CHECK(d.cdf(50.0) == 0.5);
  CHECK(d.cdf(0.5) == 0.0);
  CHECK(d.cdf(1000.0) == 1.0);
  for (double p = 0.0; p <= 1.0; p += 0.0137) CHECK(d.cdf(d.quantile(p)) >= p);
  CHECK_THROWS_AS(d.quantile(1.5), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalDistribution({}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalDistribution({1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("quantile round trip on random data") {
  const EmpiricalDistribution d(uniform_samples(997, 4));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double level = p(rng);
    CHECK(d.cdf(d.quantile(level)) >= level);
  }
}

TEST_CASE("lower tail mean counts the fractional sample") {
  const EmpiricalDistribution d({4.0, 2.0, 3.0, 1.0});
  CHECK(d.lower_tail_mean(0.5) == doctest::Approx(1.5));
  CHECK(d.cvar_deviation(0.5) == doctest::Approx(1.0));
  // mass 1.2: all of the smallest sample and a fifth of the next.
  CHECK(d.lower_tail_mean(0.3) == doctest::Approx((1.0 + 0.2 * 2.0) / 1.2));
  CHECK(d.lower_tail_mean(1.0) == doctest::Approx(2.5));
  CHECK_THROWS_AS(d.cvar_deviation(0.0), std::invalid_argument);
  CHECK_THROWS_AS(d.cvar_deviation(1.0), std::invalid_argument);
}

TEST_CASE("cvar deviation of a uniform sample") {
  const EmpiricalDistribution d(uniform_samples(100000, 8));
  CHECK(std::abs(d.cvar_deviation(0.5) - 0.25) <= 0.01);
}

TEST_CASE("cvar deviation properties") {
  std::mt19937_64 rng(17);
  std::lognormal_distribution<double> skewed(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(200 + trial);
    for (auto& x : xs) x = skewed(rng) - 1.0;
    const EmpiricalDistribution d(xs);
    for (double q : {0.01, 0.05, 0.3, 0.77}) {
      const double base = d.cvar_deviation(q);
      CHECK(base >= 0.0);
      std::vector<double> scaled = xs;
      std::vector<double> shifted = xs;
      for (auto& x : scaled) x *= 3.5;
      for (auto& x : shifted) x += 40.0;
      CHECK(EmpiricalDistribution(scaled).cvar_deviation(q) == doctest::Approx(3.5 * base).epsilon(1e-12));
      CHECK(EmpiricalDistribution(shifted).cvar_deviation(q) ==
            doctest::Approx(base).epsilon(1e-12).scale(40.0));
    }
  }
  CHECK(EmpiricalDistribution(std::vector<double>(10, 3.0)).cvar_deviation(0.2) == 0.0);
}

TEST_CASE("dispersion reduction") {
  const DemandModel noisy = three_consumers(150.0);
  const std::vector<NodeId> one{2};
  CHECK(dispersion_reduction(noisy, one, 1.0, 0.05, 1000, 3).value == 0.0);
  CHECK(dispersion_reduction(noisy, std::vector<NodeId>{}, 1.0, 0.05, 1000, 3).value == 0.0);
  CHECK(dispersion_reduction(three_consumers(0.0), everyone, 1.0, 0.05, 1000, 3).value ==
        doctest::Approx(0.0).scale(1.0));
  const Estimate delta = dispersion_reduction(noisy, everyone, 1.0, 0.05, 100000, 3);
  CHECK(delta.value > 0.0);
  CHECK(delta.value >= -3.0 * delta.standard_error);
  CHECK(delta.standard_error > 0.0);
  CHECK_THROWS_AS(dispersion_reduction(noisy, everyone, 1.0, 0.05, 19, 3), std::invalid_argument);
}

TEST_CASE("expected coalition profit") {
  const Payoff none{{1, 0.0}, {2, 0.0}, {3, 0.0}};
  const Payoff fees{{1, 10.0}, {2, 20.0}, {3, 5.0}};
  const DemandModel flat = three_consumers(0.0);
  double exact = 0.0;
  for (const auto& cp : flat.consumers) {
    const double z = consumer_best_demand(1.0, cp);
    exact += cp.alpha * std::pow(z, 1.0 / 6.0) - z;
  }
  const Estimate fixed = expected_coalition_profit(flat, everyone, 1.0, none, fees, 100, 1);
  CHECK(fixed.value == doctest::Approx(exact - 35.0));
  CHECK(fixed.standard_error == doctest::Approx(0.0).scale(1.0));

  const DemandModel noisy = three_consumers(150.0);
  const Payoff paid{{1, 12.0}, {2, 0.0}, {3, 3.0}};
  const Estimate base = expected_coalition_profit(noisy, everyone, 1.0, none, fees, 10000, 2);
  const Estimate more = expected_coalition_profit(noisy, everyone, 1.0, paid, fees, 10000, 2);
  CHECK(more.value == doctest::Approx(base.value + 15.0));

  // Mean of ten independent batches against one long run.
  const Estimate whole = expected_coalition_profit(noisy, everyone, 1.0, none, fees, 50000, 100);
  double batch_sum = 0.0;
  double batch_var = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Estimate part = expected_coalition_profit(noisy, everyone, 1.0, none, fees, 5000, seed);
    batch_sum += part.value;
    batch_var += part.standard_error * part.standard_error;
  }
  const double batch_mean = batch_sum / 10.0;
  const double se = std::sqrt(batch_var / 100.0 + whole.standard_error * whole.standard_error);
  CHECK(std::abs(batch_mean - whole.value) < 3.0 * se);
}

TEST_CASE("risk sharing holds for cost-network games") {
  const DemandModel noisy = three_consumers(150.0);
  const Payoff fees{{1, 100.0}, {2, 80.0}, {3, 90.0}};
  const CostNetwork cn(0, {1, 2, 3},
                       {{0, 1, 100, EdgeKind::direct},
                        {0, 2, 80, EdgeKind::direct},
                        {0, 3, 90, EdgeKind::direct},
                        {1, 2, 30, EdgeKind::aggregate},
                        {1, 3, 40, EdgeKind::aggregate}});
  const RiskSharingReport full =
      check_risk_sharing(noisy, SavingsGame::from_cost_network(cn, everyone), fees, 1.0, 5000, 4);
  CHECK(full.fraction == 1.0);
  CHECK_FALSE(full.flagged());
  const std::vector<NodeId> one{2};
  CHECK(check_risk_sharing(noisy, SavingsGame::from_cost_network(cn, one), fees, 1.0, 100, 4).fraction == 1.0);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const CostNetwork random = oracle::random_cost_network(rng, 3);
    CHECK(check_risk_sharing(noisy, SavingsGame::from_cost_network(random, everyone), fees, 1.0, 500, 4)
              .fraction == 1.0);
  }
}

TEST_CASE("risk sharing flags a game violating the savings assumption") {
  const DemandModel noisy = three_consumers(150.0);
  const Payoff fees{{1, 0.0}, {2, 0.0}};
  // v({1}) = 10 exceeds v({1, 2}) = 5.
  const SavingsGame game = SavingsGame::from_table(0, {1, 2}, {0.0, 10.0, 0.0, 5.0});
  const RiskSharingReport report = check_risk_sharing(noisy, game, fees, 1.0, 1000, 4);
  CHECK(report.fraction < 1.0);
  CHECK_FALSE(report.savings_assumption);
  CHECK(report.flagged());
}
