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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgcoal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_open(std::mt19937_64& engine) {
  // (0, 1): never zero, so the logarithm stays finite.
  return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<std::vector<double>> member_demands(const DemandModel& model,
                                                std::span<const NodeId> coalition, double price,
                                                std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  for (NodeId b : coalition) out.push_back(consumer_demand_samples(model, b, price, n, seed));
  return out;
}

double cvar_delta(const std::vector<std::vector<double>>& members, std::size_t begin,
                  std::size_t end, double q) {
  std::vector<double> total(end - begin, 0.0);
  double separate = 0.0;
  for (const auto& xs : members) {
    std::vector<double> part(xs.begin() + static_cast<std::ptrdiff_t>(begin),
                             xs.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t k = 0; k < part.size(); ++k) total[k] += part[k];
    separate += EmpiricalDistribution(std::move(part)).cvar_deviation(q);
  }
  return separate - EmpiricalDistribution(std::move(total)).cvar_deviation(q);
}

}  // namespace

void DemandModel::validate() const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  for (const auto& cp : consumers) cp.validate();
}

const ConsumerParams& DemandModel::consumer(NodeId id) const {
  for (const auto& cp : consumers) {
    if (cp.id == id) return cp;
  }
  throw std::invalid_argument("demand model has no consumer " + std::to_string(id));
}

NormalStream::NormalStream(std::uint64_t seed, NodeId consumer)
    : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(consumer) + 1))) {}

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(unit_open(engine_)));
  const double angle = 2.0 * std::numbers::pi * unit_open(engine_);
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<double> draw_alphas(const DemandModel& model, NodeId consumer, std::size_t n,
                                std::uint64_t seed) {
  const ConsumerParams& cp = model.consumer(consumer);
  NormalStream stream(seed, consumer);
  std::vector<double> out(n);
  for (auto& a : out) a = std::max(alpha_floor, cp.alpha + model.sigma * stream.next());
  return out;
}

std::vector<double> consumer_demand_samples(const DemandModel& model, NodeId consumer,
                                            double price, std::size_t n, std::uint64_t seed) {
  ConsumerParams cp = model.consumer(consumer);
  std::vector<double> out = draw_alphas(model, consumer, n, seed);
  for (auto& a : out) {
    cp.alpha = a;
    a = consumer_best_demand(price, cp);
  }
  return out;
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples)
    : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw std::invalid_argument("empirical distribution needs samples");
  for (double x : sorted_) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite sample");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDistribution::mean() const { return mean_of(sorted_); }

double EmpiricalDistribution::stddev() const { return sample_sd(sorted_); }

double EmpiricalDistribution::cdf(double x) const {
  const auto above = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(above - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
  const double n = static_cast<double>(sorted_.size());
  const auto k = static_cast<std::ptrdiff_t>(std::ceil(p * n)) - 1;
  return sorted_[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, sorted_.size() - 1))];
}

double EmpiricalDistribution::lower_tail_mean(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("tail level outside (0, 1]");
  const double mass = q * static_cast<double>(sorted_.size());
  const auto whole = std::min(static_cast<std::size_t>(std::floor(mass)), sorted_.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < whole; ++k) sum += sorted_[k];
  const double rest = mass - static_cast<double>(whole);
  if (whole < sorted_.size() && rest > 0.0) sum += rest * sorted_[whole];
  return sum / mass;
}

double EmpiricalDistribution::cvar_deviation(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("tail level outside (0, 1)");
  return std::max(0.0, mean() - lower_tail_mean(q));
}

EmpiricalDistribution sample_coalition_demand(const DemandModel& model,
                                              std::span<const NodeId> coalition, double price,
                                              std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two samples");
  std::vector<double> total(n, 0.0);
  for (const auto& xs : member_demands(model, coalition, price, n, seed)) {
    for (std::size_t k = 0; k < n; ++k) total[k] += xs[k];
  }
  return EmpiricalDistribution(std::move(total));
}

Estimate dispersion_reduction(const DemandModel& model, std::span<const NodeId> coalition,
                              double price, double q, std::size_t n, std::uint64_t seed) {
  constexpr std::size_t batches = 10;
  if (n < 2 * batches) throw std::invalid_argument("need at least twenty samples");
  if (coalition.empty()) return {};
  const auto members = member_demands(model, coalition, price, n, seed);
  Estimate out;
  out.value = cvar_delta(members, 0, n, q);
  std::vector<double> per_batch;
  const std::size_t width = n / batches;
  for (std::size_t k = 0; k < batches; ++k) {
    per_batch.push_back(cvar_delta(members, k * width, (k + 1) * width, q));
  }
  out.standard_error = sample_sd(per_batch) / std::sqrt(static_cast<double>(batches));
  return out;
}

Estimate expected_coalition_profit(const DemandModel& model, std::span<const NodeId> coalition,
                                   double price, const Payoff& subsidies, const Payoff& fees,
                                   std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two samples");
  std::vector<double> total(n, 0.0);
  for (NodeId b : coalition) {
    ConsumerParams cp = model.consumer(b);
    const auto alphas = draw_alphas(model, b, n, seed);
    const double fixed = subsidies.at(b) - fees.at(b);
    for (std::size_t k = 0; k < n; ++k) {
      cp.alpha = alphas[k];
      const double zeta = consumer_best_demand(price, cp);
      total[k] += alphas[k] * std::pow(zeta, 1.0 / 6.0) - price * zeta + fixed;
    }
  }
  return {mean_of(total), sample_sd(total) / std::sqrt(static_cast<double>(n))};
}

RiskSharingReport check_risk_sharing(const DemandModel& model, const SavingsGame& game,
                                     const Payoff& fees, double price, std::size_t n,
                                     std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two samples");
  RiskSharingReport report;
  report.samples = n;
  report.savings_assumption = check_savings_assumption(game);
  const auto& players = game.players();
  if (players.empty()) return report;

  const ShapleyValue phi = shapley(game);
  std::vector<double> together(n, 0.0);
  std::vector<double> alone(n, 0.0);
  for (std::size_t k = 0; k < players.size(); ++k) {
    const NodeId b = players[k];
    ConsumerParams cp = model.consumer(b);
    const auto alphas = draw_alphas(model, b, n, seed);
    const double pair = game.value(ConsumerMask{1} << k);
    for (std::size_t s = 0; s < n; ++s) {
      cp.alpha = alphas[s];
      const double zeta = consumer_best_demand(price, cp);
      const double base = alphas[s] * std::pow(zeta, 1.0 / 6.0) - fees.at(b) - price * zeta;
      together[s] += base + phi.values.at(b);
      alone[s] += base + pair;
    }
  }
  std::size_t holds = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const double tol = 1e-9 * std::max({1.0, std::abs(together[s]), std::abs(alone[s])});
    if (together[s] >= alone[s] - tol) ++holds;
  }
  report.fraction = static_cast<double>(holds) / static_cast<double>(n);
  return report;
}

}  // namespace mgcoal
