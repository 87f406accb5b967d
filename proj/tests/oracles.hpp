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


// Independent reference implementations used by the tests. Everything here
// is brute force on purpose: walk enumeration, exhaustive spanning trees,
// the subset form of the Shapley value, recursive set partitions, grid
// search and central differences.

#ifndef MGCOAL_TESTS_ORACLES_HPP
#define MGCOAL_TESTS_ORACLES_HPP

#include "mgcoal/coalgame.hpp"
#include "mgcoal/netgraph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using mgcoal::NodeId;

/// Number and conductance-product sum of all length-n walks i -> j.
inline std::pair<std::int64_t, double> walks(const mgcoal::PowerNetwork& net, NodeId i, NodeId j,
                                             int n) {
  std::vector<std::vector<std::pair<NodeId, double>>> adj(net.size());
  for (const auto& l : net.lines()) {
    adj[l.a].push_back({l.b, 1.0 / l.resistance_ohm});
    adj[l.b].push_back({l.a, 1.0 / l.resistance_ohm});
  }
  std::int64_t count = 0;
  double weight = 0.0;
  std::function<void(NodeId, int, double)> go = [&](NodeId at, int left, double w) {
    if (left == 0) {
      if (at == j) {
        ++count;
        weight += w;
      }
      return;
    }
    for (const auto& [next, g] : adj[at]) go(next, left - 1, w * g);
  };
  go(i, n, 1.0);
  return {count, weight};
}

inline double direct_weight(const mgcoal::PowerNetwork& net, NodeId r, NodeId b, double gamma,
                            double xi) {
  for (int n = 1; n <= static_cast<int>(net.size()); ++n) {
    const auto [count, weight] = walks(net, r, b, n);
    if (count > 0) return gamma * std::pow(weight / static_cast<double>(count), 1.0 / n) + n * xi;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct Edge {
  NodeId a;
  NodeId b;
  double w;
};

inline bool spans(const std::vector<NodeId>& nodes, const std::vector<Edge>& edges) {
  std::map<NodeId, NodeId> parent;
  for (NodeId v : nodes) parent[v] = v;
  std::function<NodeId(NodeId)> find = [&](NodeId v) {
    return parent[v] == v ? v : parent[v] = find(parent[v]);
  };
  std::size_t joins = 0;
  for (const auto& e : edges) {
    const NodeId x = find(e.a);
    const NodeId y = find(e.b);
    if (x == y) return false;
    parent[x] = y;
    ++joins;
  }
  return joins + 1 == nodes.size();
}

struct TreeCensus {
  std::size_t trees = 0;
  double min_cost = std::numeric_limits<double>::infinity();
};

/// Every (|V|-1)-subset of the induced edges that forms a tree.
inline TreeCensus spanning_trees(const mgcoal::CostNetwork& cn, std::vector<NodeId> nodes) {
  std::sort(nodes.begin(), nodes.end());
  std::vector<Edge> induced;
  for (std::size_t x = 0; x < nodes.size(); ++x) {
    for (std::size_t y = x + 1; y < nodes.size(); ++y) {
      if (auto w = cn.weight(nodes[x], nodes[y])) induced.push_back({nodes[x], nodes[y], *w});
    }
  }
  TreeCensus census;
  if (nodes.size() == 1) {
    census.trees = 1;
    census.min_cost = 0.0;
    return census;
  }
  const std::size_t m = induced.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) + 1 != nodes.size()) continue;
    std::vector<Edge> pick;
    for (std::size_t k = 0; k < m; ++k) {
      if (mask >> k & 1) pick.push_back(induced[k]);
    }
    if (!spans(nodes, pick)) continue;
    ++census.trees;
    double cost = 0.0;
    for (const auto& e : pick) cost += e.w;
    census.min_cost = std::min(census.min_cost, cost);
  }
  return census;
}

/// Savings of owner + consumers, from the exhaustive MST.
inline double savings(const mgcoal::CostNetwork& cn, const std::vector<NodeId>& consumers) {
  std::vector<NodeId> nodes = consumers;
  nodes.push_back(cn.owner());
  double direct = 0.0;
  for (NodeId b : consumers) direct += cn.direct(b);
  return direct - spanning_trees(cn, nodes).min_cost;
}

inline double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

/// Phi_i = sum over S not containing i of |S|!(n-|S|-1)!/n! (v(S+i) - v(S)).
inline std::vector<double> shapley_subsets(std::size_t n,
                                           const std::function<double(std::uint64_t)>& v) {
  std::vector<double> phi(n, 0.0);
  const double nf = factorial(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
      if (s >> i & 1) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcountll(s));
      const double weight = factorial(size) * factorial(n - size - 1) / nf;
      phi[i] += weight * (v(s | (std::uint64_t{1} << i)) - v(s));
    }
  }
  return phi;
}

/// Set partitions of {0..n-1} built by inserting each element into an
/// existing block or a new one.
inline std::vector<std::vector<std::vector<std::size_t>>> set_partitions(std::size_t n) {
  std::vector<std::vector<std::vector<std::size_t>>> out{{}};
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<std::vector<std::vector<std::size_t>>> next;
    for (const auto& p : out) {
      for (std::size_t blk = 0; blk <= p.size(); ++blk) {
        auto q = p;
        if (blk == q.size()) q.push_back({});
        q[blk].push_back(e);
        next.push_back(q);
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Argmax of f over an evenly spaced grid on [lo, hi].
inline std::pair<double, double> grid_max(const std::function<double(double)>& f, double lo,
                                          double hi, std::size_t points) {
  double best_x = lo;
  double best = f(lo);
  for (std::size_t k = 1; k < points; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    const double y = f(x);
    if (y > best) {
      best = y;
      best_x = x;
    }
  }
  return {best_x, best};
}

inline Eigen::MatrixXd central_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double rel_step = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up[j] += h;
    down[j] -= h;
    jac.col(j) = (f(up) - f(down)) / (2.0 * h);
  }
  return jac;
}

/// Owner 0 plus consumers 1..k with random direct weights and a random set
/// of aggregate edges.
inline mgcoal::CostNetwork random_cost_network(std::mt19937_64& rng, std::size_t k,
                                               double edge_probability = 0.6) {
  std::uniform_real_distribution<double> direct(50.0, 400.0);
  std::uniform_real_distribution<double> aggregate(5.0, 200.0);
  std::bernoulli_distribution present(edge_probability);
  std::vector<NodeId> consumers;
  std::vector<mgcoal::WeightedEdge> edges;
  for (NodeId b = 1; b <= k; ++b) {
    consumers.push_back(b);
    edges.push_back({0, b, direct(rng), mgcoal::EdgeKind::direct});
  }
  for (NodeId a = 1; a <= k; ++a) {
    for (NodeId b = a + 1; b <= k; ++b) {
      if (present(rng)) edges.push_back({a, b, aggregate(rng), mgcoal::EdgeKind::aggregate});
    }
  }
  return mgcoal::CostNetwork(0, consumers, edges);
}

}  // namespace oracle

#endif  // MGCOAL_TESTS_ORACLES_HPP
