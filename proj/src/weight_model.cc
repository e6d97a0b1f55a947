// Copyright 2026 The gopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gopt/weight_model.h"

#include <cmath>
#include <sstream>
#include <string>

#include "gopt/error.h"

namespace gopt {

double loop_feature(const LoopNest& nest) {
  double product = 1.0;
  bool any = false;
  for (const auto* loops : {&nest.spatial, &nest.reduction}) {
    for (const auto& loop : *loops) {
      if (loop.extent <= 1) continue;
      product *= std::log2(static_cast<double>(loop.extent));
      any = true;
    }
  }
  return any ? product : 0.0;
}

double observation_feature(const BudgetObservation& obs) {
  double sum = 0.0;
  for (const auto& nest : obs.loop_nests) sum += loop_feature(nest);
  return sum;
}

double op_weight(const LoopNest& nest, const WeightParams& params) {
  return params.slope * loop_feature(nest) + params.bias;
}

double op_weight(const OperatorNode& node, const WeightParams& params) {
  return op_weight(loop_nest(node), params);
}

double subgraph_weight(std::span<const OperatorNode> nodes, const WeightParams& params) {
  if (nodes.empty()) throw ValidationError("subgraph_weight of an empty node set");
  double sum = 0.0;
  for (const auto& node : nodes) sum += op_weight(node, params);
  return sum;
}

WeightParams fit(std::span<const BudgetObservation> observations) {
  if (observations.size() < 2) throw ValidationError("fit needs at least two observations");
  const double n = static_cast<double>(observations.size());
  double mean_x = 0.0, mean_y = 0.0;
  std::vector<double> xs;
  for (const auto& obs : observations) {
    if (obs.loop_nests.empty()) throw ValidationError("observation without loop nests");
    if (!(obs.budget > 0.0)) throw ValidationError("observation budget must be positive");
    xs.push_back(observation_feature(obs));
    mean_x += xs.back();
    mean_y += obs.budget;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t k = 0; k < observations.size(); ++k) {
    const double dx = xs[k] - mean_x;
    sxx += dx * dx;
    sxy += dx * (observations[k].budget - mean_y);
  }
  if (sxx <= 0.0) throw ValidationError("degenerate fit: all observation features are equal");
  WeightParams params;
  params.slope = sxy / sxx;
  params.bias = mean_y - params.slope * mean_x;
  return params;
}

std::vector<BudgetObservation> parse_budget_csv(std::string_view text) {
  std::vector<BudgetObservation> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("feature", 0) == 0) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("line " + std::to_string(line_no) + ": expected 'nests,budget'");
    BudgetObservation obs;
    try {
      size_t used = 0;
      const std::string budget = trim(line.substr(comma + 1));
      obs.budget = std::stod(budget, &used);
      if (used != budget.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad budget value");
    }
    std::istringstream nests(line.substr(0, comma));
    std::string nest_text;
    while (std::getline(nests, nest_text, ';')) {
      nest_text = trim(nest_text);
      if (nest_text.empty()) continue;
      LoopNest nest;
      std::istringstream extents(nest_text);
      std::string extent;
      int k = 0;
      while (std::getline(extents, extent, 'x')) {
        try {
          size_t used = 0;
          const long long value = std::stoll(trim(extent), &used);
          if (value < 1 || used != trim(extent).size()) throw std::invalid_argument("extent");
          nest.spatial.push_back({"l" + std::to_string(k++), value});
        } catch (const std::exception&) {
          throw ParseError("line " + std::to_string(line_no) + ": bad loop extent '" + extent + "'");
        }
      }
      obs.loop_nests.push_back(std::move(nest));
    }
    if (obs.loop_nests.empty()) throw ParseError("line " + std::to_string(line_no) + ": no loop nests");
    out.push_back(std::move(obs));
  }
  return out;
}

}  // namespace gopt
