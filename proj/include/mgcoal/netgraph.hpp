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
 * \file mgcoal/netgraph.hpp
 *
 * \brief Physical resistive network, its matrix algebra, and the per-retailer
 *  cost networks derived from it.
 */

#ifndef MGCOAL_NETGRAPH_HPP
#define MGCOAL_NETGRAPH_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mgcoal {

/// Index of a node in a PowerNetwork. Ordering of ids is the tie-break order
/// used throughout the library.
using NodeId = std::size_t;

enum class Role { retailer, consumer };

const char* to_string(Role role);

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Line {
  NodeId a;
  NodeId b;
  double resistance_ohm;
};

/**
 * Connected, undirected resistive network. Every node carries a shunt
 * resistance to ground; retailers and consumers partition the node set.
 */
class PowerNetwork {
 public:
  PowerNetwork(std::vector<std::string> names, std::vector<Role> roles,
               std::vector<Line> lines, std::vector<double> shunt_ohm);

  std::size_t size() const { return names_.size(); }
  const std::string& name(NodeId i) const { return names_.at(i); }
  Role role(NodeId i) const { return roles_.at(i); }
  bool is_retailer(NodeId i) const { return role(i) == Role::retailer; }
  bool is_consumer(NodeId i) const { return role(i) == Role::consumer; }

  /// Throws NetworkError when the name is unknown.
  NodeId index_of(const std::string& name) const;

  const std::vector<NodeId>& retailers() const { return retailers_; }
  const std::vector<NodeId>& consumers() const { return consumers_; }
  const std::vector<Line>& lines() const { return lines_; }

  double shunt_resistance(NodeId i) const { return shunt_ohm_.at(i); }
  std::optional<double> line_resistance(NodeId i, NodeId j) const;

 private:
  std::vector<std::string> names_;
  std::vector<Role> roles_;
  std::vector<Line> lines_;
  std::vector<double> shunt_ohm_;
  std::vector<NodeId> retailers_;
  std::vector<NodeId> consumers_;
};

/// Conductance adjacency A (siemens) and its 0/1 pattern B.
struct Adjacency {
  Eigen::MatrixXd conductance;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> pattern;
};

Adjacency adjacency_matrices(const PowerNetwork& net);

/// G = L + diag(1/R_ii), with L the Laplacian of line conductances.
Eigen::MatrixXd conductance_matrix(const PowerNetwork& net);

/// Integer matrix power with saturation at INT64_MAX; walk counts only
/// matter for the first power where an entry turns positive.
Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> walk_counts(
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& pattern, int n);

Eigen::MatrixXd walk_weights(const Eigen::MatrixXd& conductance, int n);

/// Cost-network pricing parameters of one retailer.
struct CostParams {
  double gamma = 1.0;  ///< currency per siemens
  double xi = 1.0;     ///< currency per walk step
  double beta = 2.0;   ///< aggregate-connection multiplier

  /// Positive values, beta != xi. Throws std::invalid_argument.
  void validate() const;
};

/**
 * Retailer-to-consumer connection weight: gamma * ([A^n]_rb / [B^n]_rb)^(1/n)
 * + n * xi at the smallest walk length n reaching b.
 */
double direct_weight(NodeId r, NodeId b, const Adjacency& adj, double gamma, double xi);

/// gamma * A_ij + beta * xi for adjacent consumers, nullopt otherwise.
std::optional<double> aggregate_weight(NodeId bi, NodeId bj, const Adjacency& adj,
                                       double gamma, double xi, double beta);

enum class EdgeKind { direct, aggregate };

const char* to_string(EdgeKind kind);

struct WeightedEdge {
  NodeId a;  ///< a < b
  NodeId b;
  double weight;
  EdgeKind kind;
};

/// Weights are stored rounded to 12 significant digits.
double round_significant(double value, int digits = 12);

/**
 * Weighted graph over {owner} and a consumer set. Every consumer has a
 * strictly positive direct edge to the owner; consumer pairs may carry
 * a nonnegative aggregate edge.
 */
class CostNetwork {
 public:
  CostNetwork(NodeId owner, std::vector<NodeId> consumers, std::vector<WeightedEdge> edges,
              CostParams params = {});

  NodeId owner() const { return owner_; }
  const std::vector<NodeId>& consumers() const { return consumers_; }
  const CostParams& params() const { return params_; }
  bool contains(NodeId node) const;

  std::optional<double> weight(NodeId a, NodeId b) const;
  double direct(NodeId b) const;

  /// Degree of a consumer in the full network, counting its direct edge.
  std::size_t degree(NodeId b) const;

  /// Sorted by (a, b).
  const std::vector<WeightedEdge>& edges() const { return edges_; }

 private:
  std::size_t local(NodeId node) const;

  NodeId owner_;
  std::vector<NodeId> consumers_;
  CostParams params_;
  std::vector<WeightedEdge> edges_;
  std::vector<NodeId> locals_;             // node id -> local slot, npos when absent
  Eigen::MatrixXd dense_;                  // NaN marks a missing edge
};

CostNetwork build_cost_network(const PowerNetwork& net, NodeId retailer, const CostParams& params);

struct SpanningTree {
  std::vector<std::pair<NodeId, NodeId>> edges;
  double total_weight = 0.0;
};

/**
 * Kruskal MST of the subgraph induced by `nodes`, edges ordered by
 * (weight, smaller id, larger id) so equal-weight ties resolve identically
 * regardless of input order. The owner must be in `nodes`.
 */
SpanningTree mst(const CostNetwork& cn, std::span<const NodeId> nodes);

}  // namespace mgcoal

#endif  // MGCOAL_NETGRAPH_HPP
