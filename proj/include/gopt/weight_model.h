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

#pragma once

#include <span>
#include <vector>

#include "gopt/graph.h"

namespace gopt {

// Linear tuning-complexity model: w = slope * prod(log2 s_l) + bias.
struct WeightParams {
  double slope = 1.0;
  double bias = 0.0;
};

struct BudgetObservation {
  std::vector<LoopNest> loop_nests;
  double budget = 0.0;
};

// prod over loops with extent > 1 of log2(extent). A nest made only of
// unit loops has no factor at all and yields 0.
double loop_feature(const LoopNest& nest);
// Sum of loop_feature over an observation's nests.
double observation_feature(const BudgetObservation& obs);

// slope * prod log2(s_l) + bias over the non-unit loops; a nest with no
// non-unit loop weighs exactly `bias`.
double op_weight(const LoopNest& nest, const WeightParams& params);
double op_weight(const OperatorNode& node, const WeightParams& params);

// Sum of member weights; throws ValidationError on an empty set.
double subgraph_weight(std::span<const OperatorNode> nodes, const WeightParams& params);

// Ordinary least squares of budget against feature. Needs at least two
// observations with distinct features (ValidationError otherwise).
WeightParams fit(std::span<const BudgetObservation> observations);

// Parses "1x64x28x28;1x64x28x28,312.5" rows: nests separated by ';', loop
// extents by 'x', then the budget. Blank lines and lines starting with '#'
// are skipped; a first line starting with "feature" is treated as a header.
std::vector<BudgetObservation> parse_budget_csv(std::string_view text);

}  // namespace gopt
