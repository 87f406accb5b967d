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
 * \file mgcoal/linear_feasibility.hpp
 *
 * \brief Dense phase-one simplex for small feasibility problems.
 */

#ifndef MGCOAL_LINEAR_FEASIBILITY_HPP
#define MGCOAL_LINEAR_FEASIBILITY_HPP

#include <Eigen/Dense>

#include <optional>

namespace mgcoal {

/**
 * Finds a free vector x with ge_matrix * x >= ge_rhs and
 * eq_matrix * x == eq_rhs, or nullopt when the system is infeasible.
 * Uses Bland's rule, so it terminates on degenerate systems.
 */
std::optional<Eigen::VectorXd> find_feasible_point(const Eigen::MatrixXd& ge_matrix,
                                                   const Eigen::VectorXd& ge_rhs,
                                                   const Eigen::MatrixXd& eq_matrix,
                                                   const Eigen::VectorXd& eq_rhs,
                                                   double tol = 1e-9);

}  // namespace mgcoal

#endif  // MGCOAL_LINEAR_FEASIBILITY_HPP
