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

#include <cstdint>
#include <string>
#include <vector>

#include "gopt/graph.h"
#include "gopt/schedule.h"
#include "gopt/tuner.h"
#include "gopt/weight_model.h"

namespace gopt {

// A piece of a parent subgraph holding at most one complex operator.
struct MiniSubgraph {
  Subgraph subgraph;
  std::string parent;                       // parent subgraph name
  std::vector<std::string> parent_nodes;    // parent node ids, topological
  double weight = 0.0;
  int complex_count = 0;
};

struct DncConfig {
  double mini_threshold = 500.0;
  int mini_budget = 40;
  int join_budget = 60;
  // Mini tuning stops early once stabilized(history, window, epsilon).
  int stable_window = 10;
  double stable_epsilon = 0.01;
  WeightParams weights;
  TuneOptions tune;

  // Throws ValidationError on budgets < 1, window < 1 or a mini threshold
  // above `parent_threshold`.
  void validate(double parent_threshold) const;
};

// Clusters the parent's induced DAG with the mini threshold and at most one
// complex operator per piece. Minis come out in topological order of their
// first node.
std::vector<MiniSubgraph> split(const Subgraph& parent, const DncConfig& cfg);

struct Joined {
  Subgraph subgraph;
  Schedule schedule;
};

// Rebuilds the parent and composes the mini schedules: tilings and
// intra-mini fusion decisions are copied, cross-mini pairs stay unfused.
// Throws ValidationError when the minis disagree on their parent, do not
// cover it, or the schedule count does not match.
Joined join(const std::vector<MiniSubgraph>& minis, const std::vector<Schedule>& tuned);

struct DncResult {
  std::vector<MiniSubgraph> minis;
  std::vector<TuneResult> mini_results;
  Schedule composed;
  double composed_cost = 0.0;
  TuneResult final;
  int evaluations = 0;  // over every phase; equals mini_budget + join_budget
};

// Split, tune each mini with an even share of mini_budget (stopping early
// once stabilized), join, then tune the parent from the composed schedule
// with join_budget plus whatever the minis left unused. A parent that
// splits into one mini is tuned directly with the whole budget.
DncResult run_divide_and_conquer(const Subgraph& parent, const DncConfig& cfg, uint64_t seed);

}  // namespace gopt
