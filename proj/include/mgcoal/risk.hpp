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
 * \file mgcoal/risk.hpp
 *
 * \brief Monte-Carlo demand model, empirical distributions, CVaR deviation
 *  and coalition risk-sharing checks.
 *
 * Each consumer owns an independent random stream derived from the seed and
 * its node id, so a consumer draws the same utility weights whichever
 * coalition it is evaluated in.
 */

#ifndef MGCOAL_RISK_HPP
#define MGCOAL_RISK_HPP

#include "mgcoal/coalgame.hpp"
#include "mgcoal/market.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mgcoal {

/// Utility weights drawn as N(alpha_b, sigma^2); demand bounds from the consumer params.
struct DemandModel {
  std::vector<ConsumerParams> consumers;
  double sigma = 0.0;

  void validate() const;
  const ConsumerParams& consumer(NodeId id) const;
};

inline constexpr double alpha_floor = 1e-12;

/// Standard normal draws by Box-Muller over 53-bit uniforms.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, NodeId consumer);
  double next();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<double> draw_alphas(const DemandModel& model, NodeId consumer, std::size_t n,
                                std::uint64_t seed);

std::vector<double> consumer_demand_samples(const DemandModel& model, NodeId consumer,
                                            double price, std::size_t n, std::uint64_t seed);

class EmpiricalDistribution {
 public:
  /// Throws std::invalid_argument when empty or non-finite.
  explicit EmpiricalDistribution(std::vector<double> samples);

  const std::vector<double>& samples() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }
  double mean() const;
  double stddev() const;

  double cdf(double x) const;
  /// inf{x : F(x) >= p}; p = 0 gives the minimum.
  double quantile(double p) const;
  /// (1/q) times the integral of the quantile function over [0, q].
  double lower_tail_mean(double q) const;
  /// mean - lower_tail_mean(q), q in (0, 1).
  double cvar_deviation(double q) const;

 private:
  std::vector<double> sorted_;
};

/// Throws std::invalid_argument for fewer than two samples.
EmpiricalDistribution sample_coalition_demand(const DemandModel& model,
                                              std::span<const NodeId> coalition, double price,
                                              std::size_t n, std::uint64_t seed);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Sum of member CVaR deviations minus that of the aggregate; the error is
/// from ten batch means.
Estimate dispersion_reduction(const DemandModel& model, std::span<const NodeId> coalition,
                              double price, double q, std::size_t n, std::uint64_t seed);

/// Mean summed consumer profit; `subsidies` and `fees` are per member.
Estimate expected_coalition_profit(const DemandModel& model, std::span<const NodeId> coalition,
                                   double price, const Payoff& subsidies, const Payoff& fees,
                                   std::size_t n, std::uint64_t seed);

struct RiskSharingReport {
  double fraction = 1.0;
  std::size_t samples = 0;
  bool savings_assumption = true;
  bool flagged() const { return fraction < 1.0 || !savings_assumption; }
};

/**
 * Samplewise comparison of the coalition's total consumer profit under its
 * Shapley imputation against the members standing alone with the retailer.
 */
RiskSharingReport check_risk_sharing(const DemandModel& model, const SavingsGame& game,
                                     const Payoff& fees, double price, std::size_t n,
                                     std::uint64_t seed);

}  // namespace mgcoal

#endif  // MGCOAL_RISK_HPP
