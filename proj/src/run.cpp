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


#include "mgcoal/run.hpp"

#include "mgcoal/coalgame.hpp"
#include "mgcoal/reports.hpp"
#include "mgcoal/risk.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mgcoal {

namespace {

using nlohmann::json;

json names(const PowerNetwork& net, std::span<const NodeId> ids) {
  json out = json::array();
  for (NodeId v : ids) out.push_back(net.name(v));
  return out;
}

json game_section(const Scenario& sc, const MarketRun& run, Analysis& a) {
  const MarketState& s = run.last();
  json game;
  json coalitions = json::array();
  json idle = json::array();
  CoalitionPartition partition;
  for (const auto& rp : sc.market.retailers) {
    const CostNetwork& cn = network_of(sc.costs, rp.id);
    Coalition c = make_coalition(rp.id, s.coalition(rp.id), cn, sc.market.shapley);
    partition.coalitions.push_back(c);
    if (c.consumers.empty()) {
      idle.push_back(sc.net.name(rp.id));
      continue;
    }
    const std::vector<NodeId> members = c.members();
    const std::string who = sc.net.name(rp.id);
    double paid = 0.0;
    json imputation = json::object();
    for (const auto& [b, share] : c.imputation) {
      imputation[sc.net.name(b)] = share;
      paid += share;
    }
    const bool pc = check_pc(members, cn);
    const CoreResult core = core_nonempty(members, cn);
    const bool savings = check_savings_assumption(members, cn);
    if (!pc) a.failures.push_back("coalition of " + who + " is not permutationally convex");
    if (!core.nonempty) a.failures.push_back("coalition of " + who + " has an empty core");
    if (std::abs(paid - c.value) > payoff_tolerance * std::max(1.0, std::abs(c.value))) {
      a.failures.push_back("imputation of " + who + " is not efficient");
    }
    if (!savings) a.warnings.push_back("coalition of " + who + " violates the savings assumption");
    coalitions.push_back({{"retailer", who},
                          {"consumers", names(sc.net, c.consumers)},
                          {"value", c.value},
                          {"mst_cost", c.mst_cost},
                          {"imputation", imputation},
                          {"pc", pc},
                          {"core", {{"nonempty", core.nonempty}, {"witness", to_string(core.source)}}},
                          {"savings_assumption", savings}});
  }
  game["coalitions"] = coalitions;
  game["empty_retailers"] = idle;

  try {
    partition.validate(sc.net);
    game["partition_valid"] = true;
  } catch (const std::invalid_argument& e) {
    game["partition_valid"] = false;
    a.failures.push_back(std::string("invalid partition: ") + e.what());
  }
  const bool subadditive = check_subadditive(partition, sc.net, sc.costs);
  const bool concave = check_concave_balanced(partition, sc.net, sc.costs);
  const DhpReport dhp = check_dhp(partition, sc.net, sc.costs);
  if (!subadditive) a.failures.push_back("partition is not subadditive");
  if (!concave) a.failures.push_back("partition fails the concave-balanced check");
  if (!dhp.stable()) a.failures.push_back("partition is not D_hp stable");
  game["subadditive"] = subadditive;
  game["concave_balanced"] = concave;
  game["dhp"] = {{"stable", dhp.stable()},
                 {"partition_condition", dhp.partition_condition},
                 {"merge_condition", dhp.merge_condition},
                 {"partitions_checked", dhp.partitions_checked},
                 {"coverage", dhp.coverage}};
  return game;
}

json market_section(const Scenario& sc, const MarketRun& run, Analysis& a) {
  const MarketState& s = run.last();
  json out = {{"rounds", run.rounds.size() - 1},
              {"fixed_point_round", run.fixed_point_round ? json(*run.fixed_point_round) : json()},
              {"rejections", s.rejections},
              {"fallback_assignments", names(sc.net, s.fallback_assignments)}};
  if (!s.fallback_assignments.empty()) a.warnings.push_back("some consumers fell back to a retailer");
  if (!run.fixed_point_round) {
    a.warnings.push_back("market did not reach a fixed point");
    out["deviation"] = {{"checked", false}};
    return out;
  }
  const DeviationReport d = check_no_profitable_deviation(s, sc.market, sc.costs);
  if (!d.consumers_ok) a.failures.push_back("a consumer has a profitable deviation");
  if (!d.retailers_ok) a.failures.push_back("a retailer has a profitable price deviation");
  out["deviation"] = {{"checked", true},
                      {"consumers_ok", d.consumers_ok},
                      {"retailers_ok", d.retailers_ok},
                      {"worst_consumer_gain", d.worst_consumer_gain},
                      {"worst_retailer_gain", d.worst_retailer_gain}};
  return out;
}

json stability_section(const Scenario& sc, const MarketRun& run, Analysis& a) {
  const auto params = sc.config.node_dynamics(sc.net);
  const StabilityReport report = gershgorin_check(sc.net, params);
  json nodes = json::array();
  for (NodeId i = 0; i < sc.net.size(); ++i) {
    const auto& n = report.per_node[i];
    nodes.push_back({{"node", sc.net.name(i)}, {"lhs", n.lhs}, {"rhs", n.rhs}, {"satisfied", n.satisfied}});
  }
  if (!report.overall) a.warnings.push_back("Gershgorin certificate not satisfied");
  json out = {{"gershgorin", {{"overall", report.overall}, {"nodes", nodes}}}};

  const GridModel model = grid_model(sc);
  const Eigen::VectorXd inputs = grid_inputs(sc, run.last());
  try {
    const Eigen::VectorXd x = model.equilibrium(inputs);
    const Eigen::VectorXcd eig = model.jacobian(x, inputs).eigenvalues();
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < eig.size(); ++k) worst = std::max(worst, eig[k].real());
    double lo = x[0];
    double hi = x[0];
    for (std::size_t i = 0; i < model.nodes(); ++i) {
      lo = std::min(lo, x[static_cast<Eigen::Index>(i)]);
      hi = std::max(hi, x[static_cast<Eigen::Index>(i)]);
    }
    if (report.overall && !(worst < 0.0)) {
      a.failures.push_back("certified equilibrium has a nonnegative eigenvalue");
    }
    out["equilibrium"] = {{"found", true},
                          {"voltage_min_v", lo},
                          {"voltage_max_v", hi},
                          {"max_real_eigenvalue", worst}};
  } catch (const GridError& e) {
    a.warnings.push_back(std::string("no equilibrium: ") + e.what());
    out["equilibrium"] = {{"found", false}};
  }
  return out;
}

json risk_section(const Scenario& sc, const MarketState& s, Analysis& a) {
  const RiskSpec& spec = sc.config.risk;
  const DemandModel model = sc.config.demand_model();
  json coalitions = json::array();
  for (const auto& rp : sc.market.retailers) {
    const std::vector<NodeId> members = s.coalition(rp.id);
    if (members.empty()) continue;
    const CostNetwork& cn = network_of(sc.costs, rp.id);
    const std::string who = sc.net.name(rp.id);
    const double price = s.prices.at(rp.id);
    Payoff fees;
    Payoff paid;
    for (NodeId b : members) {
      fees[b] = cn.direct(b);
      paid[b] = s.imputations_paid.at(b);
    }
    const EmpiricalDistribution dist =
        sample_coalition_demand(model, members, price, spec.samples, spec.seed);
    const Estimate delta = dispersion_reduction(model, members, price, spec.q, spec.samples, spec.seed);
    const Estimate profit =
        expected_coalition_profit(model, members, price, paid, fees, spec.samples, spec.seed);
    const RiskSharingReport sharing = check_risk_sharing(
        model, SavingsGame::from_cost_network(cn, members), fees, price, spec.samples, spec.seed);
    if (delta.value < -3.0 * delta.standard_error) {
      a.failures.push_back("negative dispersion reduction for " + who);
    }
    if (sharing.fraction < 1.0) {
      (sharing.savings_assumption ? a.failures : a.warnings)
          .push_back("risk sharing fails in some samples for " + who);
    }
    coalitions.push_back({{"retailer", who},
                          {"consumers", names(sc.net, members)},
                          {"price_per_w", price},
                          {"mean_w", dist.mean()},
                          {"std_w", dist.stddev()},
                          {"cvar_deviation_w", dist.cvar_deviation(spec.q)},
                          {"dispersion_reduction_w", delta.value},
                          {"dispersion_reduction_se_w", delta.standard_error},
                          {"expected_profit", profit.value},
                          {"expected_profit_se", profit.standard_error},
                          {"risk_sharing_fraction", sharing.fraction},
                          {"savings_assumption", sharing.savings_assumption},
                          {"flagged", sharing.flagged()}});
  }
  return {{"seed", spec.seed},
          {"sigma", spec.sigma},
          {"q", spec.q},
          {"samples", spec.samples},
          {"coalitions", coalitions}};
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json verifier_with_outcome(const Analysis& a) {
  json out = a.verifier;
  out["ok"] = a.ok();
  out["failures"] = a.failures;
  out["warnings"] = a.warnings;
  return out;
}

}  // namespace

Scenario Scenario::build(ScenarioConfig config) {
  PowerNetwork net = config.network();
  MarketParams market = config.market(config.risk.seed);
  market.validate(net);
  std::vector<CostNetwork> costs = config.cost_network_list(net);
  return Scenario{std::move(config), std::move(net), std::move(market), std::move(costs)};
}

bool MarketRun::tail_settled(std::size_t window, double tol) const {
  if (window == 0 || rounds.size() < window + 1) return false;
  for (std::size_t i = rounds.size() - window + 1; i < rounds.size(); ++i) {
    if (!settled(rounds[i - 1], rounds[i], tol)) return false;
  }
  return true;
}

MarketRun run_market(const MarketParams& params, std::span<const CostNetwork> networks,
                     std::size_t rounds) {
  MarketRun run;
  run.rounds.push_back(initial_state(params));
  for (std::size_t k = 1; k <= rounds; ++k) {
    run.rounds.push_back(form_coalitions(run.rounds.back(), params, networks));
    if (!run.fixed_point_round && settled(run.rounds[k - 1], run.rounds[k])) {
      run.fixed_point_round = k;
    }
  }
  return run;
}

MarketRun run_market(const Scenario& scenario, std::size_t rounds) {
  return run_market(scenario.market, scenario.costs, rounds);
}

GridModel grid_model(const Scenario& scenario) {
  return GridModel(scenario.net, scenario.config.node_dynamics(scenario.net));
}

Eigen::VectorXd grid_inputs(const Scenario& scenario, const MarketState& state) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scenario.net.size()));
  for (const auto& rp : scenario.market.retailers) {
    u[static_cast<Eigen::Index>(rp.id)] = (1.0 + rp.alpha_loss) * state.load(rp.id);
  }
  for (const auto& [b, r] : state.assignment) u[static_cast<Eigen::Index>(b)] = state.demands.at(b);
  return u;
}

CoupledRun run_coupled(const Scenario& scenario, std::ostream* trajectory) {
  const TimingSpec& t = scenario.config.timing;
  const auto periods = static_cast<std::size_t>(std::ceil(t.horizon_s / t.game_period_s - 1e-9));
  const auto stride = static_cast<std::size_t>(std::llround(t.sample_every_s / t.step_s));
  CoupledRun out;
  out.market = run_market(scenario, periods);
  const GridModel model = grid_model(scenario);
  std::optional<TrajectoryWriter> writer;
  if (trajectory) writer.emplace(*trajectory, scenario.net, model);

  out.v_min = std::numeric_limits<double>::infinity();
  out.v_max = -std::numeric_limits<double>::infinity();
  GridState state = model.rated_state();
  const auto n = static_cast<Eigen::Index>(model.nodes());
  for (std::size_t k = 0; k < periods; ++k) {
    const double start = static_cast<double>(k) * t.game_period_s;
    const double end = std::min(t.horizon_s, start + t.game_period_s);
    const std::vector<ScheduleEntry> schedule{{start, grid_inputs(scenario, out.market.rounds[k + 1])}};
    bool first = true;
    state = simulate(model, state, schedule, end, t.step_s, stride, [&](const GridSample& s) {
      const bool repeat = first && k > 0;
      first = false;
      if (repeat) return;
      out.v_min = std::min(out.v_min, s.x.head(n).minCoeff());
      out.v_max = std::max(out.v_max, s.x.head(n).maxCoeff());
      ++out.samples;
      if (writer) writer->write(s);
    });
    const Eigen::VectorXd p = injections(model.conductance(), state.voltages);
    for (NodeId b : scenario.net.consumers()) {
      const double demand = schedule.front().inputs[static_cast<Eigen::Index>(b)];
      out.tracking_gap_w = std::max(out.tracking_gap_w, std::abs(-p[static_cast<Eigen::Index>(b)] - demand));
    }
  }
  out.final_state = state;
  return out;
}

json Analysis::consolidated() const {
  return {{"ok", ok()},
          {"failures", failures},
          {"warnings", warnings},
          {"verifier", verifier},
          {"risk", risk}};
}

Analysis analyze(const Scenario& scenario, const MarketRun& run) {
  Analysis a;
  a.verifier["scenario"] = scenario.config.name;
  a.verifier["reconstructed"] = scenario.config.reconstructed;
  a.verifier["market"] = market_section(scenario, run, a);
  a.verifier["game"] = game_section(scenario, run, a);
  a.verifier["stability"] = stability_section(scenario, run, a);
  a.risk = risk_section(scenario, run.last(), a);
  return a;
}

ArtifactFiles market_artifact(const Scenario& scenario, std::size_t rounds) {
  const MarketRun run = run_market(scenario, rounds);
  std::ostringstream trace;
  write_market_trace(trace, scenario.net, scenario.market, run.rounds);
  const json meta = {{"tool", "mgcoal"},
                     {"version", version},
                     {"command", "run-market"},
                     {"scenario", scenario.config.name},
                     {"seed", scenario.config.risk.seed},
                     {"rounds", rounds},
                     {"fixed_point_round", run.fixed_point_round ? json(*run.fixed_point_round) : json()},
                     {"tail_settled", run.tail_settled()}};
  return {{"config.json", dump(to_json(scenario.config))},
          {"market_trace.csv", trace.str()},
          {"run.json", dump(meta)}};
}

ArtifactFiles coupled_artifact(const Scenario& scenario, Analysis* analysis, CoupledRun* result) {
  std::ostringstream trajectory;
  CoupledRun run = run_coupled(scenario, &trajectory);
  std::ostringstream trace;
  write_market_trace(trace, scenario.net, scenario.market, run.market.rounds);
  Analysis a = analyze(scenario, run.market);
  const auto& dyn = scenario.config.dynamics;
  const bool in_band = run.v_min >= dyn.v_star_v - dyn.delta_v_v && run.v_max <= dyn.v_star_v + dyn.delta_v_v;
  if (!in_band) a.failures.push_back("voltage sample outside the band");
  a.verifier["physics"] = {{"voltage_min_v", run.v_min},
                           {"voltage_max_v", run.v_max},
                           {"band_v", {dyn.v_star_v - dyn.delta_v_v, dyn.v_star_v + dyn.delta_v_v}},
                           {"in_band", in_band},
                           {"samples", run.samples},
                           {"tracking_gap_w", run.tracking_gap_w}};
  const json meta = {{"tool", "mgcoal"},
                     {"version", version},
                     {"command", "run-coupled"},
                     {"scenario", scenario.config.name},
                     {"seed", scenario.config.risk.seed},
                     {"rounds", run.market.rounds.size() - 1}};
  ArtifactFiles files = {{"config.json", dump(to_json(scenario.config))},
                         {"market_trace.csv", trace.str()},
                         {"trajectory.csv", trajectory.str()},
                         {"verifier_report.json", dump(verifier_with_outcome(a))},
                         {"risk_report.json", dump(a.risk)},
                         {"run.json", dump(meta)},
                         {"plot.gp", plot_script()}};
  if (analysis) *analysis = std::move(a);
  if (result) *result = std::move(run);
  return files;
}

void write_artifact(const std::filesystem::path& dir, const ArtifactFiles& files) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, bytes] : files) write_text(dir / name, bytes);
}

Analysis analyze_artifact(const std::filesystem::path& dir) {
  const json meta = json::parse(read_text(dir / "run.json"));
  const Scenario scenario = Scenario::build(load_scenario(dir / "config.json"));
  const std::string command = meta.at("command").get<std::string>();
  Analysis a;
  ArtifactFiles expected;
  if (command == "run-coupled") {
    expected = coupled_artifact(scenario, &a);
  } else if (command == "run-market") {
    const auto rounds = meta.at("rounds").get<std::size_t>();
    expected = market_artifact(scenario, rounds);
    a = analyze(scenario, run_market(scenario, rounds));
  } else {
    throw std::runtime_error("run.json names an unknown command: " + command);
  }
  json consistency = json::object();
  for (const auto& [name, bytes] : expected) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) {
      consistency[name] = "missing";
      a.failures.push_back(name + " is missing from the artifact");
    } else if (read_text(path) != bytes) {
      consistency[name] = "differs";
      a.failures.push_back(name + " does not match its re-derivation");
    } else {
      consistency[name] = "match";
    }
  }
  a.verifier["artifact"] = consistency;
  return a;
}

}  // namespace mgcoal
