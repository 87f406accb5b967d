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


#include "mgcoal/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mgcoal {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

/// Reads one JSON object, remembering which keys were consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) fail(at(key), "missing");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(at(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  double positive(const std::string& key) {
    const double x = number(key);
    if (!(x > 0.0)) fail(at(key), "must be positive");
    return x;
  }
  double positive(const std::string& key, double fallback) {
    return has(key) ? positive(key) : fallback;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(at(key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }

  const json& array(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) fail(at(key), "expected an array");
    return v;
  }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(at(key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string item(const std::string& path, std::size_t k) {
  return path + "[" + std::to_string(k) + "]";
}

void parse_network(Fields& top, ScenarioConfig& cfg) {
  Fields net(top.raw("network"), "network");
  const json& nodes = net.array("nodes");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    Fields f(nodes[k], item("network.nodes", k));
    NodeSpec n;
    n.id = f.text("id");
    const std::string role = f.text("role");
    if (role == "retailer") {
      n.role = Role::retailer;
    } else if (role == "consumer") {
      n.role = Role::consumer;
    } else {
      fail(f.at("role"), "expected \"retailer\" or \"consumer\"");
    }
    n.shunt_ohm = f.positive("shunt_ohm");
    f.done();
    cfg.nodes.push_back(n);
  }
  const json& lines = net.array("lines");
  for (std::size_t k = 0; k < lines.size(); ++k) {
    Fields f(lines[k], item("network.lines", k));
    LineSpec l;
    l.from = f.text("from");
    l.to = f.text("to");
    l.resistance_ohm = f.positive("resistance_ohm");
    f.done();
    cfg.lines.push_back(l);
  }
  net.done();
}

void parse_agents(Fields& top, ScenarioConfig& cfg) {
  const json& retailers = top.array("retailers");
  for (std::size_t k = 0; k < retailers.size(); ++k) {
    Fields f(retailers[k], item("retailers", k));
    RetailerSpec r;
    r.id = f.text("id");
    r.market.alpha = f.positive("alpha");
    r.market.kappa = f.number("kappa");
    r.market.lambda_min = f.positive("lambda_min_per_w");
    r.market.lambda_max = f.positive("lambda_max_per_w");
    r.market.p_max_w = f.positive("p_max_w");
    r.market.alpha_loss = f.number("alpha_loss", 0.0);
    r.cost.gamma = f.positive("gamma_per_siemens");
    r.cost.xi = f.positive("xi");
    r.cost.beta = f.positive("beta");
    f.done();
    if (r.cost.beta == r.cost.xi) fail(f.at("beta"), "must differ from xi");
    try {
      r.market.validate();
    } catch (const std::invalid_argument& e) {
      fail(item("retailers", k), e.what());
    }
    cfg.retailers.push_back(r);
  }
  const json& consumers = top.array("consumers");
  for (std::size_t k = 0; k < consumers.size(); ++k) {
    Fields f(consumers[k], item("consumers", k));
    ConsumerSpec c;
    c.id = f.text("id");
    c.market.alpha = f.positive("alpha");
    c.market.zeta_min_w = f.number("zeta_min_w", 0.0);
    c.market.zeta_max_w = f.positive("zeta_max_w");
    c.market.p_rated_w = f.positive("p_rated_w");
    f.done();
    try {
      c.market.validate();
    } catch (const std::invalid_argument& e) {
      fail(item("consumers", k), e.what());
    }
    cfg.consumers.push_back(c);
  }
}

void parse_cost_networks(Fields& top, ScenarioConfig& cfg) {
  if (!top.has("cost_networks")) return;
  const json& list = top.array("cost_networks");
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string path = item("cost_networks", k);
    Fields f(list[k], path);
    CostNetworkSpec spec;
    spec.retailer = f.text("retailer");
    const json& edges = f.array("edges");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      Fields g(edges[e], item(path + ".edges", e));
      CostEdgeSpec edge;
      edge.from = g.text("from");
      edge.to = g.text("to");
      edge.weight = g.number("weight");
      g.done();
      spec.edges.push_back(edge);
    }
    f.done();
    cfg.cost_networks.push_back(spec);
  }
}

void parse_sections(Fields& top, ScenarioConfig& cfg) {
  if (top.has("dynamics")) {
    Fields f(top.raw("dynamics"), "dynamics");
    auto& d = cfg.dynamics;
    d.tau_v_s = f.positive("tau_v_s", d.tau_v_s);
    d.tau_load_s = f.positive("tau_load_s", d.tau_load_s);
    d.v_star_v = f.positive("v_star_v", d.v_star_v);
    d.delta_v_v = f.positive("delta_v_v", d.delta_v_v);
    d.k_rule = f.text("k_rule", d.k_rule);
    if (d.k_rule != "paper" && d.k_rule != "fixed") fail(f.at("k_rule"), "expected \"paper\" or \"fixed\"");
    d.k_v_per_w = f.number("k_v_per_w", d.k_v_per_w);
    if (d.k_v_per_w < 0.0) fail(f.at("k_v_per_w"), "must be nonnegative");
    d.c_gain_mode = f.text("c_gain_mode", d.c_gain_mode);
    if (d.c_gain_mode != "paper" && d.c_gain_mode != "unit") {
      fail(f.at("c_gain_mode"), "expected \"paper\" or \"unit\"");
    }
    if (d.delta_v_v >= d.v_star_v) fail(f.at("delta_v_v"), "must be below v_star_v");
    if (d.c_gain_mode == "paper" && d.k_rule == "fixed" && d.k_v_per_w == 0.0) {
      fail(f.at("c_gain_mode"), "paper gain needs a nonzero droop coefficient");
    }
    f.done();
  }
  if (top.has("timing")) {
    Fields f(top.raw("timing"), "timing");
    auto& t = cfg.timing;
    t.game_period_s = f.positive("game_period_s", t.game_period_s);
    t.horizon_s = f.positive("horizon_s", t.horizon_s);
    t.step_s = f.positive("step_s", t.step_s);
    t.sample_every_s = f.positive("sample_every_s", t.sample_every_s);
    f.done();
  }
  if (top.has("market")) {
    Fields f(top.raw("market"), "market");
    cfg.market_rounds = f.count("rounds", cfg.market_rounds);
    f.done();
  }
  if (top.has("risk")) {
    Fields f(top.raw("risk"), "risk");
    auto& r = cfg.risk;
    r.sigma = f.number("sigma", r.sigma);
    if (r.sigma < 0.0) fail(f.at("sigma"), "must be nonnegative");
    r.q = f.number("q", r.q);
    if (!(r.q > 0.0 && r.q < 1.0)) fail(f.at("q"), "must lie in (0, 1)");
    r.samples = f.count("samples", r.samples);
    if (r.samples < 20) fail(f.at("samples"), "need at least 20");
    r.seed = f.count("seed", r.seed);
    f.done();
  }
}

bool is_multiple(double span, double step) {
  const double n = std::round(span / step);
  return n >= 1.0 && std::abs(n * step - span) <= 1e-9 * std::max(1.0, span);
}

void cross_check(const ScenarioConfig& cfg) {
  std::map<std::string, Role> roles;
  for (std::size_t k = 0; k < cfg.nodes.size(); ++k) {
    if (!roles.emplace(cfg.nodes[k].id, cfg.nodes[k].role).second) {
      fail(item("network.nodes", k) + ".id", "duplicate node " + cfg.nodes[k].id);
    }
  }
  for (std::size_t k = 0; k < cfg.lines.size(); ++k) {
    for (const auto* end : {&cfg.lines[k].from, &cfg.lines[k].to}) {
      if (!roles.count(*end)) fail(item("network.lines", k), "unknown node " + *end);
    }
  }
  auto match = [&](const auto& specs, Role role, const std::string& path) {
    std::set<std::string> named;
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const std::string& id = specs[k].id;
      auto it = roles.find(id);
      if (it == roles.end() || it->second != role) {
        fail(item(path, k) + ".id", id + " is not a " + to_string(role) + " node");
      }
      if (!named.insert(id).second) fail(item(path, k) + ".id", "duplicate entry " + id);
    }
    for (const auto& [id, r] : roles) {
      if (r == role && !named.count(id)) fail(path, "no entry for node " + id);
    }
  };
  match(cfg.retailers, Role::retailer, "retailers");
  match(cfg.consumers, Role::consumer, "consumers");
  for (std::size_t k = 0; k < cfg.cost_networks.size(); ++k) {
    const auto& spec = cfg.cost_networks[k];
    auto it = roles.find(spec.retailer);
    if (it == roles.end() || it->second != Role::retailer) {
      fail(item("cost_networks", k) + ".retailer", spec.retailer + " is not a retailer node");
    }
  }
  const auto& t = cfg.timing;
  if (!is_multiple(t.game_period_s, t.step_s)) fail("timing.game_period_s", "must be a multiple of step_s");
  if (!is_multiple(t.horizon_s, t.step_s)) fail("timing.horizon_s", "must be a multiple of step_s");
  if (!is_multiple(t.sample_every_s, t.step_s)) fail("timing.sample_every_s", "must be a multiple of step_s");
}

}  // namespace

PowerNetwork ScenarioConfig::network() const {
  std::vector<std::string> names;
  std::vector<Role> roles;
  std::vector<double> shunts;
  std::map<std::string, NodeId> index;
  for (const auto& n : nodes) {
    index[n.id] = names.size();
    names.push_back(n.id);
    roles.push_back(n.role);
    shunts.push_back(n.shunt_ohm);
  }
  std::vector<Line> out;
  for (const auto& l : lines) out.push_back({index.at(l.from), index.at(l.to), l.resistance_ohm});
  return PowerNetwork(std::move(names), std::move(roles), std::move(out), std::move(shunts));
}

MarketParams ScenarioConfig::market(std::uint64_t seed) const {
  const PowerNetwork net = network();
  MarketParams params;
  for (const auto& r : retailers) {
    params.retailers.push_back(r.market);
    params.retailers.back().id = net.index_of(r.id);
  }
  for (const auto& c : consumers) {
    params.consumers.push_back(c.market);
    params.consumers.back().id = net.index_of(c.id);
  }
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::sort(params.retailers.begin(), params.retailers.end(), by_id);
  std::sort(params.consumers.begin(), params.consumers.end(), by_id);
  params.shapley.seed = seed;
  return params;
}

std::vector<CostNetwork> ScenarioConfig::cost_network_list(const PowerNetwork& net) const {
  std::vector<CostNetwork> out;
  for (NodeId r : net.retailers()) {
    const RetailerSpec* spec = nullptr;
    for (const auto& rs : retailers) {
      if (net.index_of(rs.id) == r) spec = &rs;
    }
    const CostNetworkSpec* given = nullptr;
    for (const auto& cs : cost_networks) {
      if (net.index_of(cs.retailer) == r) given = &cs;
    }
    if (!given) {
      out.push_back(build_cost_network(net, r, spec->cost));
      continue;
    }
    std::vector<WeightedEdge> edges;
    for (const auto& e : given->edges) {
      const NodeId a = net.index_of(e.from);
      const NodeId b = net.index_of(e.to);
      const bool direct = a == r || b == r;
      edges.push_back({std::min(a, b), std::max(a, b), e.weight,
                       direct ? EdgeKind::direct : EdgeKind::aggregate});
    }
    out.emplace_back(r, net.consumers(), std::move(edges), spec->cost);
  }
  return out;
}

std::vector<NodeDynParams> ScenarioConfig::node_dynamics(const PowerNetwork& net) const {
  std::vector<NodeDynParams> out(net.size());
  for (NodeId i = 0; i < net.size(); ++i) {
    double rated = 0.0;
    for (const auto& r : retailers) {
      if (r.id == net.name(i)) rated = r.market.p_max_w;
    }
    for (const auto& c : consumers) {
      if (c.id == net.name(i)) rated = c.market.p_rated_w;
    }
    NodeDynParams& p = out[i];
    p.tau_v_s = dynamics.tau_v_s;
    p.tau_load_s = dynamics.tau_load_s;
    p.v_star_v = dynamics.v_star_v;
    p.delta_v_v = dynamics.delta_v_v;
    p.k_v_per_w = dynamics.k_rule == "paper" ? paper_droop_k(p.v_star_v, rated) : dynamics.k_v_per_w;
    p.c_gain = dynamics.c_gain_mode == "paper" ? paper_c_gain(p.delta_v_v, p.k_v_per_w, rated) : 1.0;
  }
  return out;
}

DemandModel ScenarioConfig::demand_model() const {
  DemandModel model;
  model.consumers = market(0).consumers;
  model.sigma = risk.sigma;
  return model;
}

ScenarioConfig parse_scenario(const nlohmann::json& doc) {
  ScenarioConfig cfg;
  Fields top(doc, "");
  cfg.name = top.text("name", "");
  cfg.reconstructed = top.flag("reconstructed", false);
  parse_network(top, cfg);
  parse_agents(top, cfg);
  parse_cost_networks(top, cfg);
  parse_sections(top, cfg);
  top.done();
  cross_check(cfg);

  try {
    const PowerNetwork net = cfg.network();
    cfg.market(0).validate(net);
    cfg.cost_network_list(net);
    for (const auto& p : cfg.node_dynamics(net)) p.validate();
  } catch (const NetworkError& e) {
    fail("network", e.what());
  } catch (const std::invalid_argument& e) {
    fail("scenario", e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string() + ": cannot open");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc);
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
  json nodes = json::array();
  for (const auto& n : cfg.nodes) {
    nodes.push_back({{"id", n.id}, {"role", to_string(n.role)}, {"shunt_ohm", n.shunt_ohm}});
  }
  json lines = json::array();
  for (const auto& l : cfg.lines) {
    lines.push_back({{"from", l.from}, {"to", l.to}, {"resistance_ohm", l.resistance_ohm}});
  }
  json retailers = json::array();
  for (const auto& r : cfg.retailers) {
    retailers.push_back({{"id", r.id},
                         {"alpha", r.market.alpha},
                         {"kappa", r.market.kappa},
                         {"lambda_min_per_w", r.market.lambda_min},
                         {"lambda_max_per_w", r.market.lambda_max},
                         {"p_max_w", r.market.p_max_w},
                         {"alpha_loss", r.market.alpha_loss},
                         {"gamma_per_siemens", r.cost.gamma},
                         {"xi", r.cost.xi},
                         {"beta", r.cost.beta}});
  }
  json consumers = json::array();
  for (const auto& c : cfg.consumers) {
    consumers.push_back({{"id", c.id},
                         {"alpha", c.market.alpha},
                         {"zeta_min_w", c.market.zeta_min_w},
                         {"zeta_max_w", c.market.zeta_max_w},
                         {"p_rated_w", c.market.p_rated_w}});
  }
  json doc = {
      {"name", cfg.name},
      {"reconstructed", cfg.reconstructed},
      {"network", {{"nodes", nodes}, {"lines", lines}}},
      {"retailers", retailers},
      {"consumers", consumers},
      {"dynamics",
       {{"tau_v_s", cfg.dynamics.tau_v_s},
        {"tau_load_s", cfg.dynamics.tau_load_s},
        {"v_star_v", cfg.dynamics.v_star_v},
        {"delta_v_v", cfg.dynamics.delta_v_v},
        {"k_rule", cfg.dynamics.k_rule},
        {"k_v_per_w", cfg.dynamics.k_v_per_w},
        {"c_gain_mode", cfg.dynamics.c_gain_mode}}},
      {"timing",
       {{"game_period_s", cfg.timing.game_period_s},
        {"horizon_s", cfg.timing.horizon_s},
        {"step_s", cfg.timing.step_s},
        {"sample_every_s", cfg.timing.sample_every_s}}},
      {"market", {{"rounds", cfg.market_rounds}}},
      {"risk",
       {{"sigma", cfg.risk.sigma},
        {"q", cfg.risk.q},
        {"samples", cfg.risk.samples},
        {"seed", cfg.risk.seed}}},
  };
  if (!cfg.cost_networks.empty()) {
    json list = json::array();
    for (const auto& spec : cfg.cost_networks) {
      json edges = json::array();
      for (const auto& e : spec.edges) {
        edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
      }
      list.push_back({{"retailer", spec.retailer}, {"edges", edges}});
    }
    doc["cost_networks"] = list;
  }
  return doc;
}

}  // namespace mgcoal
