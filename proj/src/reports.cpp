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


#include "mgcoal/reports.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace mgcoal {

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_market_trace(std::ostream& out, const PowerNetwork& net, const MarketParams& params,
                        std::span<const MarketState> rounds) {
  out << "round,node,role,price,demand,assignment,profit,subsidy,imputation\n";
  for (const MarketState& s : rounds) {
    for (const auto& rp : params.retailers) {
      const auto profit = s.profits.find(rp.id);
      out << s.round << ',' << net.name(rp.id) << ",retailer," << format_number(s.prices.at(rp.id))
          << ',' << format_number(s.load(rp.id)) << ',' << net.name(rp.id) << ','
          << format_number(profit == s.profits.end() ? 0.0 : profit->second) << ",,\n";
    }
    for (const auto& cp : params.consumers) {
      out << s.round << ',' << net.name(cp.id) << ",consumer,";
      auto it = s.assignment.find(cp.id);
      if (it == s.assignment.end()) {
        out << ",,,,,\n";
        continue;
      }
      const NodeId r = it->second;
      const auto paid = s.imputations_paid.find(cp.id);
      const auto announced = s.subsidies_announced.find({r, cp.id});
      out << format_number(s.prices.at(r)) << ',' << format_number(s.demands.at(cp.id)) << ','
          << net.name(r) << ',' << format_number(s.profits.at(cp.id)) << ','
          << format_number(announced == s.subsidies_announced.end() ? 0.0 : announced->second)
          << ',' << format_number(paid == s.imputations_paid.end() ? 0.0 : paid->second) << '\n';
    }
  }
}

void write_cost_networks(std::ostream& out, const PowerNetwork& net,
                         std::span<const CostNetwork> networks) {
  out << "retailer,node_a,node_b,weight,kind\n";
  for (const CostNetwork& cn : networks) {
    for (const WeightedEdge& e : cn.edges()) {
      out << net.name(cn.owner()) << ',' << net.name(e.a) << ',' << net.name(e.b) << ','
          << format_number(e.weight) << ',' << to_string(e.kind) << '\n';
    }
  }
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out, const PowerNetwork& net,
                                   const GridModel& model)
    : out_(out), net_(net), model_(model) {
  out_ << "time,node,voltage,injection,set_point\n";
}

void TrajectoryWriter::write(const GridSample& sample) {
  const auto n = static_cast<Eigen::Index>(model_.nodes());
  const Eigen::VectorXd v = sample.x.head(n);
  const Eigen::VectorXd p = injections(model_.conductance(), v);
  const Eigen::VectorXd ref = model_.injection_refs(sample.x, sample.inputs);
  char t[32];
  std::snprintf(t, sizeof t, "%.6f", sample.time_s);
  for (Eigen::Index i = 0; i < n; ++i) {
    out_ << t << ',' << net_.name(static_cast<NodeId>(i)) << ',' << format_number(v[i]) << ','
         << format_number(p[i]) << ',' << format_number(ref[i]) << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string plot_script() {
  return R"(# gnuplot -p plot.gp
set datafile separator ','
set key outside
set multiplot layout 2,1
set title 'Consumer demand per round'
set xlabel 'round'
set ylabel 'W'
plot 'market_trace.csv' using 1:(strcol(3) eq 'consumer' ? $5 : NaN) with points notitle
set title 'Node voltages'
set xlabel 's'
set ylabel 'V'
plot 'trajectory.csv' using 1:3 with dots notitle
unset multiplot
)";
}

}  // namespace mgcoal
