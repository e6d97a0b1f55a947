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

#include <initializer_list>
#include <vector>

#include "gopt/fusion_analysis.h"
#include "gopt/rng.h"
#include "test_util.h"

namespace gopt::testing {

enum class PairKind { kConvConv, kConvPointwise, kPointwiseDepthwise, kMatMul };

inline constexpr PairKind kAllPairKinds[] = {PairKind::kConvConv, PairKind::kConvPointwise,
                                             PairKind::kPointwiseDepthwise, PairKind::kMatMul};

// Two complex operators, `up` feeding `down`, plus a valid downstream tile.
struct RandomPair {
  OperatorNode up, down;
  TileSpec tiles;

  std::shared_ptr<const Graph> graph() const { return chain_graph({up, down}); }
};

inline int64_t pick(Rng& rng, std::initializer_list<int64_t> values) {
  return *(values.begin() + rng.below(values.size()));
}

inline int64_t random_divisor(Rng& rng, int64_t n) {
  std::vector<int64_t> divs;
  for (int64_t d = 1; d <= n; ++d) {
    if (n % d == 0) divs.push_back(d);
  }
  return divs[rng.below(divs.size())];
}

inline TileSpec random_tile(Rng& rng, const OperatorNode& node) {
  TileSpec tiles;
  for (int64_t e : loop_nest(node).spatial_extents()) tiles.extents.push_back(random_divisor(rng, e));
  return tiles;
}

// Extents stay at or below 16. Windowed downstream operators get a random
// kernel of 1 or 3 with or without same-padding.
inline RandomPair random_pair(Rng& rng, PairKind kind) {
  RandomPair p;
  if (kind == PairKind::kMatMul) {
    const int64_t m = pick(rng, {2, 4, 6, 8}), n1 = pick(rng, {2, 4, 6});
    p.up = matmul("up", m, pick(rng, {2, 3}), n1);
    p.down = matmul("down", m, n1, pick(rng, {2, 4}));
    p.tiles = random_tile(rng, p.down);
    return p;
  }
  const int64_t o1 = pick(rng, {2, 4}), h = pick(rng, {2, 4, 6, 8}), w = pick(rng, {2, 4, 6, 8, 16});
  if (kind == PairKind::kPointwiseDepthwise) {
    p.up = conv("up", OpKind::kPointwiseConv2d, 1, pick(rng, {1, 2, 3}), o1, h, w, 1, 1);
  } else {
    p.up = conv("up", OpKind::kConv2d, 1, pick(rng, {1, 2}), o1, h, w, 3, 3, 1);
  }
  const int64_t r = pick(rng, {1, 3});
  const int64_t pad = (rng.coin() || std::min(h, w) < r) ? (r - 1) / 2 : 0;
  const int64_t h2 = h - r + 1 + 2 * pad, w2 = w - r + 1 + 2 * pad;
  switch (kind) {
    case PairKind::kConvConv:
      p.down = conv("down", OpKind::kConv2d, 1, o1, pick(rng, {2, 4}), h2, w2, r, r, pad);
      break;
    case PairKind::kPointwiseDepthwise:
      p.down = conv("down", OpKind::kDepthwiseConv2d, 1, 0, o1, h2, w2, r, r, pad);
      break;
    default:
      p.down = conv("down", OpKind::kPointwiseConv2d, 1, o1, pick(rng, {2, 4}), h, w, 1, 1);
      break;
  }
  p.tiles = random_tile(rng, p.down);
  return p;
}

inline RandomPair random_pair(Rng& rng) { return random_pair(rng, kAllPairKinds[rng.below(4)]); }

// Intensive schedule for the pair with the downstream boundary tiled by
// `tiles`; the inner tiling equals the boundary.
inline Schedule fused_schedule(const RandomPair& p, const TileSpec& tiles) {
  Schedule s;
  s.tiling[p.down.id] = {tiles.extents, tiles.extents};
  s.set_mode(p.up.id, p.down.id, FusionMode::kIntensive);
  return s;
}

// Untiles the loops the verdict reserves.
inline TileSpec clear_reserved(const RandomPair& p, TileSpec tiles) {
  const LoopNest nest = loop_nest(p.down);
  for (const auto& dim : intensive_fusion_legal(p.up, p.down).required_untiled) {
    const int k = nest.spatial_index(dim);
    tiles.extents[k] = nest.spatial[k].extent;
  }
  return tiles;
}

}  // namespace gopt::testing
