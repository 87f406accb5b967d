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
 * \file mgcoal/reports.hpp
 *
 * \brief CSV and JSON writers for market traces, trajectories, cost
 *  networks and verifier output. Numbers use round-trip precision so
 *  identical runs give identical bytes.
 */

#ifndef MGCOAL_REPORTS_HPP
#define MGCOAL_REPORTS_HPP

#include "mgcoal/griddyn.hpp"
#include "mgcoal/market.hpp"
#include "mgcoal/netgraph.hpp"

#include "json.hpp"

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

namespace mgcoal {

std::string format_number(double value);

/// round,node,role,price,demand,assignment,profit,subsidy,imputation
void write_market_trace(std::ostream& out, const PowerNetwork& net, const MarketParams& params,
                        std::span<const MarketState> rounds);

/// retailer,node_a,node_b,weight,kind
void write_cost_networks(std::ostream& out, const PowerNetwork& net,
                         std::span<const CostNetwork> networks);

/// Streams rows of time,node,voltage,injection,set_point.
class TrajectoryWriter {
 public:
  TrajectoryWriter(std::ostream& out, const PowerNetwork& net, const GridModel& model);
  void write(const GridSample& sample);

 private:
  std::ostream& out_;
  const PowerNetwork& net_;
  const GridModel& model_;
};

/// Two-space indented dump with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// gnuplot script for the trace and trajectory CSVs of one artifact.
std::string plot_script();

}  // namespace mgcoal

#endif  // MGCOAL_REPORTS_HPP
