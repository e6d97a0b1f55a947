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
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gopt/graph.h"

namespace gopt {

enum class FusionMode { kNone, kConventional, kIntensive };

std::string_view to_string(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);

// Two-level tiling over an operator's spatial loops. `boundary[k]` divides
// the loop extent and `inner[k]` divides `boundary[k]`.
struct OpTiling {
  std::vector<int64_t> boundary;
  std::vector<int64_t> inner;

  friend bool operator==(const OpTiling&, const OpTiling&) = default;
};

struct FusionDecision {
  std::string producer;
  std::string consumer;
  FusionMode mode = FusionMode::kNone;
};

// Tiling factors plus fusion (compute-at) decisions for one subgraph.
// Operators without a tiling entry run untiled; pairs without a decision
// are not fused.
struct Schedule {
  std::map<std::string, OpTiling> tiling;
  std::map<std::pair<std::string, std::string>, FusionMode> fusion;

  FusionMode mode(const std::string& producer, const std::string& consumer) const;
  void set_mode(const std::string& producer, const std::string& consumer, FusionMode mode);
  std::vector<FusionDecision> decisions() const;
  // Tiling for `node`, defaulting to full extents.
  OpTiling tiling_for(const OperatorNode& node) const;

  // Stable textual form; equal digests mean equal schedules.
  std::string digest() const;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

OpTiling full_tiling(const LoopNest& nest);

// A fusable producer/consumer pair inside a subgraph.
//  conventional: consumer is an elementwise op fed only by producer, and
//    producer has no other consumer.
//  intensive: producer and consumer are complex; `chain` lists the
//    elementwise epilogue between them (possibly empty), each link single-
//    consumer, and the pair is in a zero-redundancy category.
struct FusionCandidate {
  std::string producer;
  std::string consumer;
  FusionMode mode = FusionMode::kConventional;
  std::vector<std::string> chain;
};

// Which intensive decisions are admitted. kCertified: zero-redundancy pairs
// only, with their reused loops untiled. kAnyComplexPair: every complex pair
// under any tiling, for measuring redundancy.
enum class IntensivePolicy { kCertified, kAnyComplexPair };

std::vector<FusionCandidate> fusion_candidates(const Subgraph& subgraph,
                                               IntensivePolicy policy = IntensivePolicy::kCertified);
// Complex producer/consumer pairs linked directly or through single-consumer
// elementwise operators, whether or not intensive fusion is legal for them.
std::vector<FusionCandidate> complex_pairs(const Subgraph& subgraph);

// Execution structure implied by a schedule. A group is an anchor operator
// with its conventionally fused epilogue. An intensive decision attaches the
// producer's whole group to the consumer group, where it is recomputed per
// consumer boundary tile.
struct FusionGroup {
  int anchor = -1;
  std::vector<int> epilogue;
  int attached_anchor = -1;
  std::vector<int> attached_epilogue;

  int tail() const { return epilogue.empty() ? anchor : epilogue.back(); }
  int attached_tail() const {
    return attached_epilogue.empty() ? attached_anchor : attached_epilogue.back();
  }
};

struct FusionPlan {
  // Execution order; attached groups are folded into their consumer.
  std::vector<FusionGroup> groups;
};

// Validates the schedule against the subgraph (ScheduleError) and derives
// its group structure.
FusionPlan plan_fusion(const Subgraph& subgraph, const Schedule& schedule,
                       IntensivePolicy policy = IntensivePolicy::kCertified);
void validate_schedule(const Subgraph& subgraph, const Schedule& schedule);

// Drops tiling entries that cannot influence execution (epilogue members,
// attached producers, untiled entries) so equivalent schedules share a
// digest. The input must be valid.
Schedule canonicalize(const Subgraph& subgraph, const Schedule& schedule);

}  // namespace gopt
