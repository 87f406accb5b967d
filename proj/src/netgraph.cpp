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

#include "mgcoal/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <tuple>

namespace mgcoal {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntRow = Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic>;

std::int64_t saturating_mul_add(std::int64_t acc, std::int64_t x, std::int64_t y) {
  std::int64_t prod = 0;
  if (__builtin_mul_overflow(x, y, &prod)) return std::numeric_limits<std::int64_t>::max();
  std::int64_t sum = 0;
  if (__builtin_add_overflow(acc, prod, &sum)) return std::numeric_limits<std::int64_t>::max();
  return sum;
}

IntRow saturating_row_product(const IntRow& row, const IntMatrix& m) {
  IntRow out = IntRow::Zero(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    std::int64_t acc = 0;
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      if (row(k) != 0 && m(k, j) != 0) acc = saturating_mul_add(acc, row(k), m(k, j));
    }
    out(j) = acc;
  }
  return out;
}

// Disjoint-set forest over local indices.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

}  // namespace

const char* to_string(Role role) {
  return role == Role::retailer ? "retailer" : "consumer";
}

const char* to_string(EdgeKind kind) {
  return kind == EdgeKind::direct ? "direct" : "aggregate";
}

PowerNetwork::PowerNetwork(std::vector<std::string> names, std::vector<Role> roles,
                           std::vector<Line> lines, std::vector<double> shunt_ohm)
    : names_(std::move(names)),
      roles_(std::move(roles)),
      lines_(std::move(lines)),
      shunt_ohm_(std::move(shunt_ohm)) {
  const std::size_t n = names_.size();
  if (n == 0) throw NetworkError("network has no nodes");
  if (roles_.size() != n || shunt_ohm_.size() != n) {
    throw NetworkError("roles and shunt resistances must match the node count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (names_[i] == names_[j]) throw NetworkError("duplicate node id '" + names_[i] + "'");
    }
    if (!(shunt_ohm_[i] > 0.0) || !std::isfinite(shunt_ohm_[i])) {
      throw NetworkError("shunt resistance of '" + names_[i] + "' must be positive");
    }
    (roles_[i] == Role::retailer ? retailers_ : consumers_).push_back(i);
  }
  if (retailers_.empty()) throw NetworkError("network needs at least one retailer");

  DisjointSets components(n);
  for (auto& line : lines_) {
    if (line.a >= n || line.b >= n) throw NetworkError("line references an unknown node");
    if (line.a == line.b) throw NetworkError("self-loop at '" + names_[line.a] + "'");
    if (!(line.resistance_ohm > 0.0) || !std::isfinite(line.resistance_ohm)) {
      throw NetworkError("line " + names_[line.a] + "-" + names_[line.b] +
                         " must have positive resistance");
    }
    if (line.a > line.b) std::swap(line.a, line.b);
    components.unite(line.a, line.b);
  }
  std::sort(lines_.begin(), lines_.end(),
            [](const Line& x, const Line& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
  for (std::size_t k = 1; k < lines_.size(); ++k) {
    if (lines_[k].a == lines_[k - 1].a && lines_[k].b == lines_[k - 1].b) {
      throw NetworkError("duplicate line " + names_[lines_[k].a] + "-" + names_[lines_[k].b]);
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (components.find(i) != components.find(0)) {
      throw NetworkError("network is disconnected: '" + names_[i] + "' is unreachable");
    }
  }
}

NodeId PowerNetwork::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw NetworkError("unknown node '" + name + "'");
  return static_cast<NodeId>(it - names_.begin());
}

std::optional<double> PowerNetwork::line_resistance(NodeId i, NodeId j) const {
  if (i > j) std::swap(i, j);
  for (const auto& line : lines_) {
    if (line.a == i && line.b == j) return line.resistance_ohm;
  }
  return std::nullopt;
}

Adjacency adjacency_matrices(const PowerNetwork& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  Adjacency adj{Eigen::MatrixXd::Zero(n, n), IntMatrix::Zero(n, n)};
  for (const auto& line : net.lines()) {
    const double g = 1.0 / line.resistance_ohm;
    const auto a = static_cast<Eigen::Index>(line.a);
    const auto b = static_cast<Eigen::Index>(line.b);
    adj.conductance(a, b) = adj.conductance(b, a) = g;
    adj.pattern(a, b) = adj.pattern(b, a) = 1;
  }
  return adj;
}

Eigen::MatrixXd conductance_matrix(const PowerNetwork& net) {
  const Eigen::MatrixXd a = adjacency_matrices(net).conductance;
  Eigen::MatrixXd g = -a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    g(i, i) = a.row(i).sum() + 1.0 / net.shunt_resistance(static_cast<NodeId>(i));
  }
  return g;
}

IntMatrix walk_counts(const IntMatrix& pattern, int n) {
  if (n < 0) throw std::invalid_argument("walk length must be nonnegative");
  IntMatrix result = IntMatrix::Identity(pattern.rows(), pattern.cols());
  for (int step = 0; step < n; ++step) {
    IntMatrix next(result.rows(), result.cols());
    for (Eigen::Index i = 0; i < result.rows(); ++i) {
      next.row(i) = saturating_row_product(result.row(i), pattern);
    }
    result = std::move(next);
  }
  return result;
}

Eigen::MatrixXd walk_weights(const Eigen::MatrixXd& conductance, int n) {
  if (n < 0) throw std::invalid_argument("walk length must be nonnegative");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(conductance.rows(), conductance.cols());
  for (int step = 0; step < n; ++step) result = result * conductance;
  return result;
}

void CostParams::validate() const {
  if (!(gamma > 0.0) || !(xi > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("cost parameters gamma, xi, beta must be positive");
  }
  if (beta == xi) throw std::invalid_argument("cost parameter beta must differ from xi");
}

double direct_weight(NodeId r, NodeId b, const Adjacency& adj, double gamma, double xi) {
  const auto n = adj.conductance.rows();
  if (static_cast<Eigen::Index>(r) >= n || static_cast<Eigen::Index>(b) >= n || r == b) {
    throw NetworkError("direct weight needs two distinct nodes of the network");
  }
  const auto ri = static_cast<Eigen::Index>(r);
  const auto bi = static_cast<Eigen::Index>(b);
  Eigen::RowVectorXd weights = adj.conductance.row(ri);
  IntRow counts = adj.pattern.row(ri);
  // A shortest walk between distinct nodes has at most |N| - 1 edges.
  for (Eigen::Index len = 1; len < n; ++len) {
    if (counts(bi) > 0) {
      const double mean = weights(bi) / static_cast<double>(counts(bi));
      const double steps = static_cast<double>(len);
      return gamma * std::pow(mean, 1.0 / steps) + steps * xi;
    }
    weights = weights * adj.conductance;
    counts = saturating_row_product(counts, adj.pattern);
  }
  throw NetworkError("node " + std::to_string(b) + " is unreachable from " + std::to_string(r));
}

std::optional<double> aggregate_weight(NodeId bi, NodeId bj, const Adjacency& adj, double gamma,
                                       double xi, double beta) {
  const double a = adj.conductance(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj));
  if (!(a > 0.0)) return std::nullopt;
  return gamma * a + beta * xi;
}

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, value);
  return std::strtod(buf, nullptr);
}

CostNetwork::CostNetwork(NodeId owner, std::vector<NodeId> consumers,
                         std::vector<WeightedEdge> edges, CostParams params)
    : owner_(owner), consumers_(std::move(consumers)), params_(params) {
  std::sort(consumers_.begin(), consumers_.end());
  if (std::adjacent_find(consumers_.begin(), consumers_.end()) != consumers_.end()) {
    throw NetworkError("cost network lists a consumer twice");
  }
  if (std::binary_search(consumers_.begin(), consumers_.end(), owner_)) {
    throw NetworkError("cost network owner cannot be a consumer");
  }
  NodeId max_id = owner_;
  if (!consumers_.empty()) max_id = std::max(max_id, consumers_.back());
  locals_.assign(max_id + 1, npos);
  locals_[owner_] = 0;
  for (std::size_t k = 0; k < consumers_.size(); ++k) locals_[consumers_[k]] = k + 1;

  const auto m = static_cast<Eigen::Index>(consumers_.size() + 1);
  dense_ = Eigen::MatrixXd::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
  for (auto& e : edges) {
    if (e.a > e.b) std::swap(e.a, e.b);
    if (e.a == e.b || !contains(e.a) || !contains(e.b)) {
      throw NetworkError("cost network edge references a node outside the network");
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw NetworkError("cost network weights must be finite and nonnegative");
    }
    const bool touches_owner = e.a == owner_ || e.b == owner_;
    if (touches_owner != (e.kind == EdgeKind::direct)) {
      throw NetworkError("edge kind does not match its endpoints");
    }
    e.weight = round_significant(e.weight);
    const auto la = static_cast<Eigen::Index>(local(e.a));
    const auto lb = static_cast<Eigen::Index>(local(e.b));
    if (!std::isnan(dense_(la, lb))) throw NetworkError("duplicate cost network edge");
    dense_(la, lb) = dense_(lb, la) = e.weight;
  }
  for (NodeId b : consumers_) {
    const auto lb = static_cast<Eigen::Index>(local(b));
    if (std::isnan(dense_(0, lb)) || !(dense_(0, lb) > 0.0)) {
      throw NetworkError("consumer " + std::to_string(b) + " lacks a positive direct weight");
    }
  }
  edges_ = std::move(edges);
  std::sort(edges_.begin(), edges_.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
}

bool CostNetwork::contains(NodeId node) const {
  return node < locals_.size() && locals_[node] != npos;
}

std::size_t CostNetwork::local(NodeId node) const {
  if (!contains(node)) throw NetworkError("node " + std::to_string(node) + " not in cost network");
  return locals_[node];
}

std::optional<double> CostNetwork::weight(NodeId a, NodeId b) const {
  const double w = dense_(static_cast<Eigen::Index>(local(a)), static_cast<Eigen::Index>(local(b)));
  if (std::isnan(w)) return std::nullopt;
  return w;
}

double CostNetwork::direct(NodeId b) const { return *weight(owner_, b); }

std::size_t CostNetwork::degree(NodeId b) const {
  const auto lb = static_cast<Eigen::Index>(local(b));
  std::size_t d = 0;
  for (Eigen::Index k = 0; k < dense_.cols(); ++k) {
    if (k != lb && !std::isnan(dense_(lb, k))) ++d;
  }
  return d;
}

CostNetwork build_cost_network(const PowerNetwork& net, NodeId retailer, const CostParams& params) {
  params.validate();
  if (!net.is_retailer(retailer)) throw NetworkError("cost network owner must be a retailer");
  const Adjacency adj = adjacency_matrices(net);
  const auto& consumers = net.consumers();
  std::vector<WeightedEdge> edges;
  for (NodeId b : consumers) {
    edges.push_back({std::min(retailer, b), std::max(retailer, b),
                     direct_weight(retailer, b, adj, params.gamma, params.xi), EdgeKind::direct});
  }
  for (std::size_t i = 0; i < consumers.size(); ++i) {
    for (std::size_t j = i + 1; j < consumers.size(); ++j) {
      if (auto w = aggregate_weight(consumers[i], consumers[j], adj, params.gamma, params.xi,
                                    params.beta)) {
        edges.push_back({consumers[i], consumers[j], *w, EdgeKind::aggregate});
      }
    }
  }
  return CostNetwork(retailer, consumers, std::move(edges), params);
}

SpanningTree mst(const CostNetwork& cn, std::span<const NodeId> nodes) {
  std::vector<NodeId> members(nodes.begin(), nodes.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (!std::binary_search(members.begin(), members.end(), cn.owner())) {
    throw NetworkError("MST cost is only defined for node sets containing the owner");
  }
  for (NodeId v : members) {
    if (!cn.contains(v)) throw NetworkError("node " + std::to_string(v) + " not in cost network");
  }

  struct Candidate {
    double weight;
    NodeId a;
    NodeId b;
    std::size_t la;
    std::size_t lb;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (auto w = cn.weight(members[i], members[j])) {
        candidates.push_back({*w, members[i], members[j], i, j});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
  });

  SpanningTree tree;
  DisjointSets sets(members.size());
  for (const auto& c : candidates) {
    if (tree.edges.size() + 1 == members.size()) break;
    if (sets.unite(c.la, c.lb)) {
      tree.edges.emplace_back(c.a, c.b);
      tree.total_weight += c.weight;
    }
  }
  if (tree.edges.size() + 1 != members.size()) {
    throw NetworkError("induced cost subgraph is disconnected");
  }
  return tree;
}

}  // namespace mgcoal
