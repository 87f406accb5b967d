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
 * \file mgcoal/griddyn.hpp
 *
 * \brief Bounded droop voltage dynamics with first-order demand lags, RK4
 *  integration, equilibrium and Jacobian analysis, and the Gershgorin
 *  stability certificate.
 *
 * The state vector stacks node voltages (all nodes, id order) and the
 * demand lag of every consumer (consumer id order). Injections are
 * positive: a consumer's injection reference is minus its lag state, a
 * retailer's is a constant set by the market.
 */

#ifndef MGCOAL_GRIDDYN_HPP
#define MGCOAL_GRIDDYN_HPP

#include "mgcoal/netgraph.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mgcoal {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeDynParams {
  double tau_v_s = 0.1;
  double k_v_per_w = 0.0;  ///< droop coefficient
  double c_gain = 1.0;
  double v_star_v = 220.0;
  double delta_v_v = 11.0;
  double tau_load_s = 3.0;  ///< used by consumers only

  void validate() const;
};

/// k = 0.05 V* / P_rated and c = pi dV / (0.1 k P_rated).
double paper_droop_k(double v_star_v, double p_rated_w);
double paper_c_gain(double delta_v_v, double k_v_per_w, double p_rated_w);

struct GridState {
  Eigen::VectorXd voltages;  ///< per node
  Eigen::VectorXd lags;      ///< per consumer, W
  double time_s = 0.0;
};

struct NodeStability {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};

struct StabilityReport {
  std::vector<NodeStability> per_node;
  bool overall = false;
};

StabilityReport gershgorin_check(const PowerNetwork& net, std::span<const NodeDynParams> params);

/// P_i = V_i (G V)_i.
Eigen::VectorXd injections(const Eigen::MatrixXd& g, const Eigen::VectorXd& voltages);

/// Voltage derivatives for the given injection references.
Eigen::VectorXd droop_rhs(const Eigen::VectorXd& voltages, const Eigen::VectorXd& injection_ref_w,
                          const Eigen::MatrixXd& g, std::span<const NodeDynParams> params);

/// (P_d - P_set) / tau_load per consumer.
Eigen::VectorXd demand_lag_rhs(const Eigen::VectorXd& lags, const Eigen::VectorXd& demands_w,
                               std::span<const double> tau_load_s);

/**
 * Coupled voltage and demand-lag system on a fixed network. Inputs are one
 * value per node: the injection reference for retailers and the demand
 * P_d for consumers.
 */
class GridModel {
 public:
  GridModel(const PowerNetwork& net, std::vector<NodeDynParams> params);

  std::size_t nodes() const { return consumer_slot_.size(); }
  std::size_t consumers() const { return consumers_.size(); }
  std::size_t dimension() const { return nodes() + consumers(); }
  const Eigen::MatrixXd& conductance() const { return g_; }
  const std::vector<NodeDynParams>& params() const { return params_; }
  const std::vector<NodeId>& consumer_ids() const { return consumers_; }

  Eigen::VectorXd pack(const GridState& state) const;
  GridState unpack(const Eigen::VectorXd& x, double time_s = 0.0) const;

  /// All voltages at V*, lags at zero.
  GridState rated_state() const;

  Eigen::VectorXd injection_refs(const Eigen::VectorXd& x, const Eigen::VectorXd& inputs) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& inputs) const;

  /// Analytic Jacobian; throws GridError unless every voltage is inside the open band.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& inputs) const;

  /// Classical RK4 step. Voltages overshooting the band by less than 1e-9 V
  /// are clamped; anything larger or non-finite throws GridError.
  Eigen::VectorXd step_rk4(const Eigen::VectorXd& x, const Eigen::VectorXd& inputs, double h) const;

  /// Rest point with lags equal to the demands, by damped fixed-point
  /// iteration from V*. Throws GridError without convergence.
  Eigen::VectorXd equilibrium(const Eigen::VectorXd& inputs, double tol = 1e-10,
                              std::size_t max_iterations = 100000) const;

  bool in_band(const Eigen::VectorXd& x) const;

 private:
  std::vector<NodeDynParams> params_;
  Eigen::MatrixXd g_;
  std::vector<NodeId> consumers_;
  std::vector<std::ptrdiff_t> consumer_slot_;  // -1 for retailers
};

/// Piecewise-constant inputs from `start_s` on.
struct ScheduleEntry {
  double start_s;
  Eigen::VectorXd inputs;
};

struct GridSample {
  double time_s;
  Eigen::VectorXd x;
  Eigen::VectorXd inputs;
};

/**
 * Integrates from `initial` over [initial.time_s, t_end] with step h, taking
 * inputs from the latest schedule entry. `observer` sees the initial state
 * and every `sample_stride`-th step.
 */
GridState simulate(const GridModel& model, const GridState& initial,
                   std::span<const ScheduleEntry> schedule, double t_end_s, double h_s,
                   std::size_t sample_stride,
                   const std::function<void(const GridSample&)>& observer = {});

}  // namespace mgcoal

#endif  // MGCOAL_GRIDDYN_HPP
