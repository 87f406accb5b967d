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

#include "mgcoal/linear_feasibility.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mgcoal {

std::optional<Eigen::VectorXd> find_feasible_point(const Eigen::MatrixXd& ge_matrix,
                                                   const Eigen::VectorXd& ge_rhs,
                                                   const Eigen::MatrixXd& eq_matrix,
                                                   const Eigen::VectorXd& eq_rhs, double tol) {
  const Eigen::Index n = std::max(ge_matrix.cols(), eq_matrix.cols());
  const Eigen::Index m_ge = ge_matrix.rows();
  const Eigen::Index m_eq = eq_matrix.rows();
  if ((m_ge > 0 && ge_matrix.cols() != n) || (m_eq > 0 && eq_matrix.cols() != n) ||
      ge_rhs.size() != m_ge || eq_rhs.size() != m_eq) {
    throw std::invalid_argument("inconsistent feasibility system dimensions");
  }
  const Eigen::Index m = m_ge + m_eq;
  if (m == 0) return Eigen::VectorXd::Zero(n);

  // Columns: x+ (n), x- (n), surplus (m_ge), artificial (m), rhs.
  const Eigen::Index art0 = 2 * n + m_ge;
  const Eigen::Index cols = art0 + m;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  double scale = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool ge = i < m_ge;
    Eigen::RowVectorXd row = ge ? Eigen::RowVectorXd(ge_matrix.row(i))
                                : Eigen::RowVectorXd(eq_matrix.row(i - m_ge));
    double rhs = ge ? ge_rhs(i) : eq_rhs(i - m_ge);
    const double sign = rhs < 0.0 ? -1.0 : 1.0;
    t.block(i, 0, 1, n) = sign * row;
    t.block(i, n, 1, n) = -sign * row;
    if (ge) t(i, 2 * n + i) = -sign;
    t(i, art0 + i) = 1.0;
    t(i, cols) = sign * rhs;
    scale = std::max(scale, std::abs(rhs));
  }
  for (Eigen::Index j = 0; j < art0; ++j) t(m, j) = -t.col(j).head(m).sum();
  t(m, cols) = -t.col(cols).head(m).sum();

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = art0 + i;

  const double eps = tol * 1e-3;
  for (;;) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (t(m, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (t(i, enter) > eps) {
        const double ratio = t(i, cols) / t(i, enter);
        if (leave < 0 || ratio < best - eps ||
            (std::abs(ratio - best) <= eps &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
    }
    // Phase one is bounded below by zero, so an entering column always has a pivot row.
    if (leave < 0) break;
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }

  if (-t(m, cols) > tol * scale) return std::nullopt;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = basis[static_cast<std::size_t>(i)];
    if (j < n) x(j) += t(i, cols);
    else if (j < 2 * n) x(j - n) -= t(i, cols);
  }
  return x;
}

}  // namespace mgcoal
