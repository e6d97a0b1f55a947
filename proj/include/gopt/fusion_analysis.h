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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gopt/graph.h"
#include "gopt/schedule.h"
#include "gopt/symbolic.h"

namespace gopt {

// Named loops with extents. The set algebra (quotient, difference) works on
// loop names.
struct IterSpace {
  std::vector<Loop> loops;

  int64_t size() const;
  std::set<std::string> names() const;
};

// Per-spatial-loop tile extents, aligned with LoopNest::spatial.
struct TileSpec {
  std::vector<int64_t> extents;

  friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

TileSpec full_tile(const LoopNest& nest);
TileSpec unit_tile(const LoopNest& nest);
// Named tiles ("o" -> 4); loops not named stay full. Unknown names throw.
TileSpec make_tile(const LoopNest& nest, const std::map<std::string, int64_t>& tiles);

struct Decomposition {
  IterSpace global;  // all spatial loops
  IterSpace tile;    // intra-tile loops, extent = tile extent
  IterSpace outer;   // inter-tile loops, extent = extent / tile
};

// Throws FusionError on a tile that does not divide its loop.
Decomposition decompose(const LoopNest& nest, const TileSpec& tiles);

// Region of the downstream operator's input (the upstream output, loops
// n,o,h,w or m,n) that one downstream output tile reads. Spans are clipped to
// the input extents. Requires a complex downstream with stride 1.
IterSpace footprint(const OperatorNode& downstream, const TileSpec& tiles);

// Upstream output elements computed under fuse-after-tile: the sum over
// downstream boundary tiles of each tile's (clipped) footprint. Every such
// element runs the full upstream reduction nest once.
int64_t fused_upstream_trips(const OperatorNode& upstream, const OperatorNode& downstream,
                             const TileSpec& tiles);
// |GS1 spatial|: upstream output elements without fusion.
int64_t unfused_upstream_trips(const OperatorNode& upstream);

// Closed forms of the two counts with the operators' extents as symbols
// (N, O1, H1, W1, O2, H2, W2, R2, C2 for convolutions; M, K2, N2 for matmul).
// Tiled loops contribute their concrete tile sizes. `untiled` names the
// downstream loops written symbolically as whole; by default that is every
// loop whose tile equals its extent (other than unit loops). Needs pad == 0
// on the downstream operator.
SymProduct fused_upstream_trips_symbolic(
    const OperatorNode& upstream, const OperatorNode& downstream, const TileSpec& tiles,
    const std::optional<std::set<std::string>>& untiled = std::nullopt);
SymProduct unfused_upstream_trips_symbolic(const OperatorNode& upstream,
                                           const OperatorNode& downstream);
std::map<std::string, int64_t> symbol_bindings(const OperatorNode& upstream,
                                               const OperatorNode& downstream);

struct Redundancy {
  int64_t fused_trips = 0;
  int64_t unfused_trips = 0;
  double ratio = 1.0;
  // Downstream outer loop outside the upstream's mapped loops
  // (GS2/TS2 - GS1/TS1 != {}), e.g. a tiled output-channel loop.
  bool cond1 = false;
  // Footprints of distinct downstream tiles overlap along a mapped loop, so
  // a halo of the upstream tile is recomputed per tile.
  bool cond2 = false;
  // Literal |TS2| < |TS1| with TS1 the footprint of one downstream tile.
  bool tile_shrinks = false;
  std::vector<std::string> outer_downstream;  // GS2/TS2 loops with extent > 1
  std::vector<std::string> outer_upstream;    // GS1/TS1 under fusion
  std::vector<std::string> cond1_loops;
};

Redundancy redundancy(const OperatorNode& upstream, const OperatorNode& downstream,
                      const TileSpec& tiles);

enum class FusionCategory { kDepthwiseDownstream, kPointwiseDownstream, kNotApplicable };

std::string_view to_string(FusionCategory category);

struct FusionVerdict {
  FusionCategory category = FusionCategory::kNotApplicable;
  std::set<std::string> reused_dims;
  std::set<std::string> required_untiled;
};

// Depthwise downstream must stay untiled on {h,w}; pointwise (and matmul,
// its 2-D equivalent) on the output-channel loop. General convolutions
// reuse their input along o,h,w at once and are not certified.
// Throws FusionError when either side is not complex.
FusionVerdict intensive_fusion_legal(const OperatorNode& upstream, const OperatorNode& downstream);

// Two-operator schedule fusing upstream into downstream intensively with
// boundary tile `tiles` on the downstream. Throws FusionError when the pair
// is NotApplicable or `tiles` splits a reserved loop.
Schedule derive_intensive_schedule(const OperatorNode& upstream, const OperatorNode& downstream,
                                   const TileSpec& tiles);

// Checks that downstream consumes upstream's output shape and that the pair
// is analyzable (complex kinds, stride 1). Throws FusionError.
void check_fusion_pair(const OperatorNode& upstream, const OperatorNode& downstream);

}  // namespace gopt
