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
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gopt/fusion_analysis.h"
#include "gopt/graph.h"
#include "gopt/partitioner.h"
#include "gopt/reformer.h"
#include "gopt/schedule.h"
#include "gopt/tuner.h"

namespace gopt {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Graphviz view; complex operators are green, simple ones orange, and each
// part of `partition` becomes a cluster.
std::string emit_dot(const Graph& graph, const Partition* partition = nullptr);

Json stats_json(const PartitionStats& stats);
// {"subgraphs": [{"id", "nodes", "weight", "complex"}], "stats": {...}}
Json partition_json(const Partition& partition);

Json schedule_json(const Schedule& schedule);
// Inverse of schedule_json. Throws ParseError.
Schedule schedule_from_json(const Json& doc);

Json breakdown_json(const CostBreakdown& breakdown);

// Verdict, redundancy and (for unpadded pairs) symbolic counts of one
// complex pair under the downstream tile `tiles`.
Json pair_analysis_json(const OperatorNode& upstream, const OperatorNode& downstream,
                        const std::vector<std::string>& chain, const TileSpec& tiles);

// Every complex pair of the graph, each analyzed under `tiles` (named,
// missing loops stay full) and under the least-redundant tiling its
// category allows (reserved loops whole, every other loop of size 1).
Json fuse_analyze_report(const Graph& graph, const std::map<std::string, int64_t>& tiles);

struct PipelineOptions {
  double threshold = 800.0;
  std::optional<int> max_complex;
  DncConfig dnc;
  uint64_t seed = 0;
};

// Partition, divide-and-conquer tuning per subgraph and aggregate costs.
// Deterministic for a given graph, options and seed.
Json pipeline_report(std::shared_ptr<const Graph> graph, const PipelineOptions& options);

}  // namespace gopt
