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


// Shared builders for the test executables.

#ifndef MGCOAL_TESTS_FIXTURES_HPP
#define MGCOAL_TESTS_FIXTURES_HPP

#include "mgcoal/griddyn.hpp"
#include "mgcoal/run.hpp"
#include "mgcoal/scenario.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(MGCOAL_SCENARIO_DIR) / name;
}

inline mgcoal::Scenario scenario(const std::string& name) {
  return mgcoal::Scenario::build(mgcoal::load_scenario(scenario_path(name)));
}

/// r1 -- b1 over 2 ohm with 5 kOhm shunts and unit gain.
inline mgcoal::GridModel two_node_model(double c_gain = 1.0) {
  const mgcoal::PowerNetwork net({"r1", "b1"}, {mgcoal::Role::retailer, mgcoal::Role::consumer},
                                 {{0, 1, 2.0}}, {5000.0, 5000.0});
  mgcoal::NodeDynParams p;
  p.k_v_per_w = mgcoal::paper_droop_k(220.0, 5000.0);
  p.c_gain = c_gain;
  return mgcoal::GridModel(net, {p, p});
}

inline Eigen::VectorXd two_node_start() { return Eigen::Vector3d(215.0, 224.0, 100.0); }
inline Eigen::VectorXd two_node_inputs() { return Eigen::Vector2d(1000.0, 2000.0); }

inline Eigen::VectorXd integrate(const mgcoal::GridModel& model, Eigen::VectorXd x,
                                 const Eigen::VectorXd& u, double t_end, double h) {
  const auto steps = static_cast<long>(std::lround(t_end / h));
  for (long k = 0; k < steps; ++k) x = model.step_rk4(x, u, h);
  return x;
}

/// Observed order log2(e(h) / e(h/2)) over 1 s of the two-node benchmark,
/// against a reference at h / 64.
inline double rk4_observed_order(double h = 0.02) {
  const mgcoal::GridModel model = two_node_model();
  const Eigen::VectorXd x0 = two_node_start();
  const Eigen::VectorXd u = two_node_inputs();
  const Eigen::VectorXd reference = integrate(model, x0, u, 1.0, h / 64.0);
  const double coarse = (integrate(model, x0, u, 1.0, h) - reference).norm();
  const double fine = (integrate(model, x0, u, 1.0, h / 2.0) - reference).norm();
  return std::log2(coarse / fine);
}

/// Uniform interior point of the voltage band plus lags in [0, 2 P_rated].
template <class Rng>
Eigen::VectorXd random_interior(const mgcoal::GridModel& model, Rng& rng, double fill = 0.95) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> lag(0.0, 10000.0);
  Eigen::VectorXd x(model.dimension());
  for (std::size_t i = 0; i < model.nodes(); ++i) {
    const auto& p = model.params()[i];
    x[static_cast<Eigen::Index>(i)] = p.v_star_v + fill * p.delta_v_v * unit(rng);
  }
  for (std::size_t b = 0; b < model.consumers(); ++b) {
    x[static_cast<Eigen::Index>(model.nodes() + b)] = lag(rng);
  }
  return x;
}

}  // namespace fixture

#endif  // MGCOAL_TESTS_FIXTURES_HPP
