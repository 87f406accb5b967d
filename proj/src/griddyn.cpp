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


#include "mgcoal/griddyn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

namespace mgcoal {

namespace {

constexpr double band_guard_v = 1e-9;

double band_factor(double v, const NodeDynParams& p) {
  const double d = (v - p.v_star_v) / p.delta_v_v;
  return 1.0 - d * d;
}

}  // namespace

void NodeDynParams::validate() const {
  if (!(tau_v_s > 0.0) || !(tau_load_s > 0.0)) {
    throw std::invalid_argument("time constants must be positive");
  }
  if (!(k_v_per_w >= 0.0)) throw std::invalid_argument("droop coefficient must be nonnegative");
  if (!(c_gain > 0.0)) throw std::invalid_argument("gain must be positive");
  if (!(delta_v_v > 0.0) || !(delta_v_v < v_star_v)) {
    throw std::invalid_argument("need 0 < delta_v < v_star");
  }
}

double paper_droop_k(double v_star_v, double p_rated_w) { return 0.05 * v_star_v / p_rated_w; }

double paper_c_gain(double delta_v_v, double k_v_per_w, double p_rated_w) {
  return std::numbers::pi * delta_v_v / (0.1 * k_v_per_w * p_rated_w);
}

StabilityReport gershgorin_check(const PowerNetwork& net, std::span<const NodeDynParams> params) {
  if (params.size() != net.size()) throw std::invalid_argument("one parameter set per node");
  std::vector<double> incident(net.size(), 0.0);
  for (const Line& line : net.lines()) {
    incident[line.a] += 1.0 / line.resistance_ohm;
    incident[line.b] += 1.0 / line.resistance_ohm;
  }
  StabilityReport report;
  report.overall = true;
  for (NodeId i = 0; i < net.size(); ++i) {
    const NodeDynParams& p = params[i];
    const double shunt = 1.0 / net.shunt_resistance(i);
    NodeStability s;
    s.lhs = p.k_v_per_w * p.delta_v_v * (incident[i] + shunt);
    s.rhs = 0.5 + p.k_v_per_w * p.v_star_v * shunt;
    s.satisfied = s.lhs < s.rhs;
    report.overall = report.overall && s.satisfied;
    report.per_node.push_back(s);
  }
  return report;
}

Eigen::VectorXd injections(const Eigen::MatrixXd& g, const Eigen::VectorXd& voltages) {
  return voltages.cwiseProduct(g * voltages);
}

Eigen::VectorXd droop_rhs(const Eigen::VectorXd& voltages, const Eigen::VectorXd& injection_ref_w,
                          const Eigen::MatrixXd& g, std::span<const NodeDynParams> params) {
  const Eigen::VectorXd p = injections(g, voltages);
  Eigen::VectorXd out(voltages.size());
  for (Eigen::Index i = 0; i < voltages.size(); ++i) {
    const NodeDynParams& q = params[static_cast<std::size_t>(i)];
    const double mismatch =
        q.v_star_v - voltages[i] - q.k_v_per_w * p[i] + q.k_v_per_w * injection_ref_w[i];
    out[i] = q.c_gain / q.tau_v_s * mismatch * band_factor(voltages[i], q);
  }
  return out;
}

Eigen::VectorXd demand_lag_rhs(const Eigen::VectorXd& lags, const Eigen::VectorXd& demands_w,
                               std::span<const double> tau_load_s) {
  Eigen::VectorXd out(lags.size());
  for (Eigen::Index b = 0; b < lags.size(); ++b) {
    out[b] = (demands_w[b] - lags[b]) / tau_load_s[static_cast<std::size_t>(b)];
  }
  return out;
}

GridModel::GridModel(const PowerNetwork& net, std::vector<NodeDynParams> params)
    : params_(std::move(params)), g_(conductance_matrix(net)), consumers_(net.consumers()) {
  if (params_.size() != net.size()) throw std::invalid_argument("one parameter set per node");
  for (const auto& p : params_) p.validate();
  consumer_slot_.assign(net.size(), -1);
  for (std::size_t k = 0; k < consumers_.size(); ++k) {
    consumer_slot_[consumers_[k]] = static_cast<std::ptrdiff_t>(k);
  }
}

Eigen::VectorXd GridModel::pack(const GridState& state) const {
  if (static_cast<std::size_t>(state.voltages.size()) != nodes() ||
      static_cast<std::size_t>(state.lags.size()) != consumers()) {
    throw std::invalid_argument("grid state has the wrong shape");
  }
  Eigen::VectorXd x(dimension());
  x << state.voltages, state.lags;
  return x;
}

GridState GridModel::unpack(const Eigen::VectorXd& x, double time_s) const {
  const auto n = static_cast<Eigen::Index>(nodes());
  return {x.head(n), x.tail(static_cast<Eigen::Index>(consumers())), time_s};
}

GridState GridModel::rated_state() const {
  GridState s;
  s.voltages.resize(static_cast<Eigen::Index>(nodes()));
  for (std::size_t i = 0; i < nodes(); ++i) s.voltages[static_cast<Eigen::Index>(i)] = params_[i].v_star_v;
  s.lags = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(consumers()));
  return s;
}

Eigen::VectorXd GridModel::injection_refs(const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& inputs) const {
  Eigen::VectorXd ref(static_cast<Eigen::Index>(nodes()));
  for (std::size_t i = 0; i < nodes(); ++i) {
    const auto slot = consumer_slot_[i];
    const auto ii = static_cast<Eigen::Index>(i);
    ref[ii] = slot < 0 ? inputs[ii] : -x[static_cast<Eigen::Index>(nodes()) + slot];
  }
  return ref;
}

Eigen::VectorXd GridModel::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& inputs) const {
  const auto n = static_cast<Eigen::Index>(nodes());
  const auto m = static_cast<Eigen::Index>(consumers());
  Eigen::VectorXd out(dimension());
  out.head(n) = droop_rhs(x.head(n), injection_refs(x, inputs), g_, params_);
  for (Eigen::Index b = 0; b < m; ++b) {
    const auto node = consumers_[static_cast<std::size_t>(b)];
    out[n + b] = (inputs[static_cast<Eigen::Index>(node)] - x[n + b]) / params_[node].tau_load_s;
  }
  return out;
}

Eigen::MatrixXd GridModel::jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& inputs) const {
  const auto n = static_cast<Eigen::Index>(nodes());
  const Eigen::VectorXd v = x.head(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = params_[static_cast<std::size_t>(i)];
    if (!(std::abs(v[i] - p.v_star_v) < p.delta_v_v)) {
      throw GridError("jacobian needs every voltage strictly inside the band");
    }
  }
  const Eigen::VectorXd gv = g_ * v;
  const Eigen::VectorXd ref = injection_refs(x, inputs);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(x.size(), x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = params_[static_cast<std::size_t>(i)];
    const double scale = p.c_gain / p.tau_v_s;
    const double k = p.k_v_per_w;
    const double mismatch = p.v_star_v - v[i] - k * v[i] * gv[i] + k * ref[i];
    const double phi = band_factor(v[i], p);
    const double dphi = -2.0 * (v[i] - p.v_star_v) / (p.delta_v_v * p.delta_v_v);
    for (Eigen::Index j = 0; j < n; ++j) {
      double dm = -k * g_(i, j) * v[i];
      if (j == i) dm += -1.0 - k * gv[i];
      jac(i, j) = scale * dm * phi;
    }
    jac(i, i) += scale * mismatch * dphi;
    const auto slot = consumer_slot_[static_cast<std::size_t>(i)];
    if (slot >= 0) jac(i, n + slot) = -scale * phi * k;
  }
  for (std::size_t b = 0; b < consumers(); ++b) {
    const auto row = n + static_cast<Eigen::Index>(b);
    jac(row, row) = -1.0 / params_[consumers_[b]].tau_load_s;
  }
  return jac;
}

bool GridModel::in_band(const Eigen::VectorXd& x) const {
  for (std::size_t i = 0; i < nodes(); ++i) {
    const auto& p = params_[i];
    if (!(std::abs(x[static_cast<Eigen::Index>(i)] - p.v_star_v) <= p.delta_v_v)) return false;
  }
  return true;
}

Eigen::VectorXd GridModel::step_rk4(const Eigen::VectorXd& x, const Eigen::VectorXd& inputs,
                                    double h) const {
  if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
  const Eigen::VectorXd k1 = rhs(x, inputs);
  const Eigen::VectorXd k2 = rhs(x + 0.5 * h * k1, inputs);
  const Eigen::VectorXd k3 = rhs(x + 0.5 * h * k2, inputs);
  const Eigen::VectorXd k4 = rhs(x + h * k3, inputs);
  Eigen::VectorXd next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) throw GridError("non-finite grid state");
  for (std::size_t i = 0; i < nodes(); ++i) {
    const auto& p = params_[i];
    const auto ii = static_cast<Eigen::Index>(i);
    const double lo = p.v_star_v - p.delta_v_v;
    const double hi = p.v_star_v + p.delta_v_v;
    if (next[ii] >= lo && next[ii] <= hi) continue;
    const double excess = next[ii] < lo ? lo - next[ii] : next[ii] - hi;
    if (excess >= band_guard_v) {
      char msg[160];
      std::snprintf(msg, sizeof msg, "node %zu left the voltage band: %.9g V (band [%g, %g])", i,
                    next[ii], lo, hi);
      throw GridError(msg);
    }
    next[ii] = std::clamp(next[ii], lo, hi);
  }
  return next;
}

Eigen::VectorXd GridModel::equilibrium(const Eigen::VectorXd& inputs, double tol,
                                       std::size_t max_iterations) const {
  const auto n = static_cast<Eigen::Index>(nodes());
  Eigen::VectorXd x(dimension());
  x.head(n) = rated_state().voltages;
  for (std::size_t b = 0; b < consumers(); ++b) {
    x[n + static_cast<Eigen::Index>(b)] = inputs[static_cast<Eigen::Index>(consumers_[b])];
  }
  const Eigen::VectorXd ref = injection_refs(x, inputs);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd v = x.head(n);
    const Eigen::VectorXd gv = g_ * v;
    double largest = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = params_[static_cast<std::size_t>(i)];
      const double k = p.k_v_per_w;
      const double mismatch = p.v_star_v - v[i] - k * v[i] * gv[i] + k * ref[i];
      double row = std::abs(1.0 + k * gv[i] + k * g_(i, i) * v[i]);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) row += std::abs(k * g_(i, j) * v[i]);
      }
      const double step = mismatch / std::max(row, 1.0);
      x[i] += step;
      largest = std::max(largest, std::abs(step));
    }
    if (!in_band(x)) throw GridError("equilibrium search left the voltage band");
    if (largest < tol) return x;
  }
  throw GridError("equilibrium search did not converge");
}

GridState simulate(const GridModel& model, const GridState& initial,
                   std::span<const ScheduleEntry> schedule, double t_end_s, double h_s,
                   std::size_t sample_stride, const std::function<void(const GridSample&)>& observer) {
  if (!(h_s > 0.0)) throw std::invalid_argument("step must be positive");
  if (sample_stride == 0) throw std::invalid_argument("sample stride must be positive");
  if (schedule.empty() || schedule.front().start_s > initial.time_s) {
    throw std::invalid_argument("schedule must cover the initial time");
  }
  const double span = t_end_s - initial.time_s;
  const double count = std::round(span / h_s);
  if (span < 0.0 || std::abs(count * h_s - span) > 1e-9 * std::max(1.0, span)) {
    throw std::invalid_argument("horizon must be a nonnegative multiple of the step");
  }
  const auto steps = static_cast<std::size_t>(count);
  Eigen::VectorXd x = model.pack(initial);
  if (!model.in_band(x)) throw GridError("initial voltages outside the band");

  std::size_t entry = 0;
  auto inputs_at = [&](double t) -> const Eigen::VectorXd& {
    while (entry + 1 < schedule.size() && schedule[entry + 1].start_s <= t + 1e-12) ++entry;
    return schedule[entry].inputs;
  };

  if (observer) observer({initial.time_s, x, inputs_at(initial.time_s)});
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = initial.time_s + static_cast<double>(k) * h_s;
    const Eigen::VectorXd& u = inputs_at(t);
    x = model.step_rk4(x, u, h_s);
    if (observer && (k + 1) % sample_stride == 0) {
      const double t_next = initial.time_s + static_cast<double>(k + 1) * h_s;
      observer({t_next, x, inputs_at(t_next)});
    }
  }
  return model.unpack(x, initial.time_s + static_cast<double>(steps) * h_s);
}

}  // namespace mgcoal
