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

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gopt/graph.h"
#include "gopt/weight_model.h"

namespace gopt {

// Weighted DAG over groups of operators. Each node stands for one or more
// original operators (a hyper node after merging); its id is the
// lexicographically smallest member id.
struct Dag {
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> members;
  std::vector<double> weights;
  std::vector<int> complex_count;
  std::vector<std::set<int>> succs;
  std::vector<std::set<int>> preds;

  int size() const { return static_cast<int>(ids.size()); }
  int add_node(std::string id, double weight, int complex = 0);
  // Parallel edges collapse; self-loops are rejected.
  void add_edge(int src, int dst);
  std::optional<int> find(const std::string& id) const;
};

Dag make_dag(const Graph& graph, const WeightParams& params);
// Induced sub-DAG over the subgraph's nodes.
Dag make_dag(const Subgraph& subgraph, const WeightParams& params);

bool has_cycle(const Dag& dag);

// Longest-path depth from any root; roots are stage 1.
using StageMap = std::vector<int>;
// Throws ValidationError on a cycle.
StageMap topological_stages(const Dag& dag);

// Undirected neighbours u of v with |ts_u - ts_v| == 1, sorted.
std::vector<int> affix_set(const Dag& dag, const StageMap& stages, int v);

// Contracts u and v into one hyper node with no precondition; the result
// may be cyclic. The merged node takes the smaller index slot.
Dag merge_nodes(const Dag& dag, int u, int v);

struct MergeResult {
  Dag dag;
  StageMap stages;
  int merged = -1;  // index of the hyper node in `dag`
};
// Merges an affix pair and recomputes stages. Throws ValidationError when
// u is not in v's affix set.
MergeResult merge_affix(const Dag& dag, const StageMap& stages, int u, int v);

struct Part {
  int id = 0;
  std::vector<std::string> nodes;  // document order
  double weight = 0.0;
  int complex_count = 0;
};

struct Partition {
  std::vector<Part> parts;

  int size() const { return static_cast<int>(parts.size()); }
};

struct ClusterOptions {
  double threshold = 800.0;
  std::optional<int> max_complex;
};

// Greedy affix clustering: repeatedly take the heaviest candidate, merge it
// with its lightest affix neighbour whose combined weight stays below the
// threshold (and complex count within max_complex), else retire it. Ties
// are broken by id. Parts come out ordered by their first member in the
// input DAG's node order.
Partition cluster(const Dag& dag, const ClusterOptions& options);
Partition cluster(const Graph& graph, const WeightParams& params, double threshold,
                  std::optional<int> max_complex = std::nullopt);

// True iff the quotient graph over parts is acyclic. Throws
// ValidationError when the partition does not cover the DAG exactly once.
bool is_acyclic_partition(const Dag& dag, const Partition& partition);
bool is_acyclic_partition(const Graph& graph, const Partition& partition);

// One-complex-operator heuristic in the style of conventional compilers:
// each complex operator opens a chain that absorbs single-consumer simple
// successors until the next complex operator, a branch/join, or a
// reshape/transpose delimiter (which closes the chain it joins).
Partition baseline_partition(const Graph& graph, const WeightParams& params);

struct PartitionStats {
  int count = 0;
  double mean_weight = 0.0;
  double median_weight = 0.0;
  double jain = 0.0;
  // bins[k] counts weights in [2^k, 2^(k+1)); weights below 2 land in bin 0
  // and anything at or above 2^10 in the last bin.
  std::vector<int> histogram;
};

double jain_index(std::span<const double> weights);
PartitionStats partition_stats(const Partition& partition);

}  // namespace gopt
