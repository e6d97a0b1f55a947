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

#include <gtest/gtest.h>

#include <set>

#include "gopt/error.h"
#include "gopt/fusion_analysis.h"
#include "gopt/rng.h"
#include "random_pairs.h"
#include "test_util.h"

namespace gopt {
namespace {

using testing::conv;
using testing::matmul;

// Two 3x3 convolutions: the downstream has O2=8, H2=4, W2=16 and reads a
// 1x4x6x18 upstream output.
struct ConvPair {
  OperatorNode up = conv("conv1", OpKind::kConv2d, 1, 2, 4, 6, 18, 3, 3, 1);
  OperatorNode down = conv("conv2", OpKind::kConv2d, 1, 4, 8, 4, 16, 3, 3);
  TileSpec tiles() const { return make_tile(loop_nest(down), {{"n", 1}, {"o", 1}, {"h", 1}, {"w", 16}}); }
};

// Upstream elements read by downstream output element `out`, as flat
// indices into the upstream output; padding positions are skipped.
std::vector<int64_t> reads(const OperatorNode& down, const std::vector<int64_t>& out) {
  const Shape in = down.operand_shape(0);
  std::vector<int64_t> idx;
  auto flat = [&](const std::vector<int64_t>& p) {
    int64_t f = 0;
    for (size_t k = 0; k < p.size(); ++k) f = f * in[k] + p[k];
    return f;
  };
  if (down.kind == OpKind::kMatMul) {
    for (int64_t k = 0; k < in[1]; ++k) idx.push_back(flat({out[0], k}));
    return idx;
  }
  const int64_t pad = down.attr_or("pad", 0);
  const int64_t R = down.attr_or("R", 1), C = down.attr_or("C", 1);
  const bool all_channels = down.kind != OpKind::kDepthwiseConv2d;
  for (int64_t i = 0; i < (all_channels ? in[1] : 1); ++i) {
    const int64_t ch = all_channels ? i : out[1];
    for (int64_t r = 0; r < R; ++r) {
      for (int64_t c = 0; c < C; ++c) {
        const int64_t h = out[2] + r - pad, w = out[3] + c - pad;
        if (h < 0 || w < 0 || h >= in[2] || w >= in[3]) continue;
        idx.push_back(flat({out[0], ch, h, w}));
      }
    }
  }
  return idx;
}

// Sum over downstream boundary tiles of the distinct upstream elements the
// tile reads, by enumeration.
int64_t brute_fused_trips(const OperatorNode& down, const TileSpec& tiles) {
  const auto ext = loop_nest(down).spatial_extents();
  const size_t rank = ext.size();
  std::vector<int64_t> tile_lo(rank, 0);
  int64_t total = 0;
  while (true) {
    std::set<int64_t> demand;
    std::vector<int64_t> off(rank, 0);
    while (true) {
      std::vector<int64_t> out(rank);
      for (size_t k = 0; k < rank; ++k) out[k] = tile_lo[k] + off[k];
      for (int64_t f : reads(down, out)) demand.insert(f);
      size_t k = rank;
      while (k > 0 && ++off[k - 1] == tiles.extents[k - 1]) off[--k] = 0;
      if (k == 0) break;
    }
    total += static_cast<int64_t>(demand.size());
    size_t k = rank;
    while (k > 0 && (tile_lo[k - 1] += tiles.extents[k - 1]) == ext[k - 1]) tile_lo[--k] = 0;
    if (k == 0) break;
  }
  return total;
}

TEST(DecomposeTest, Examples) {
  const ConvPair p;
  const Decomposition d = decompose(loop_nest(p.down), p.tiles());
  EXPECT_EQ(d.tile.size(), 16);
  EXPECT_EQ(d.outer.size(), 1 * 8 * 4 * 16 / 16);
  EXPECT_EQ(d.outer.size() * d.tile.size(), d.global.size());
  const LoopNest nest = loop_nest(p.down);
  EXPECT_EQ(decompose(nest, full_tile(nest)).outer.size(), 1);
  EXPECT_EQ(decompose(nest, unit_tile(nest)).tile.size(), 1);
  EXPECT_THROW(decompose(nest, TileSpec{{1, 3, 1, 1}}), FusionError);
  EXPECT_THROW(make_tile(nest, {{"x", 1}}), FusionError);
}

TEST(FootprintTest, Examples) {
  const ConvPair p;
  const IterSpace conv_region = footprint(p.down, p.tiles());
  EXPECT_EQ(conv_region.loops[1].extent, 4);   // all of O1
  EXPECT_EQ(conv_region.loops[2].extent, 3);   // 1 + R2 - 1
  EXPECT_EQ(conv_region.loops[3].extent, 18);  // 16 + C2 - 1

  const OperatorNode pw = conv("pw", OpKind::kPointwiseConv2d, 1, 6, 8, 8, 8, 1, 1);
  const IterSpace pw_region = footprint(pw, make_tile(loop_nest(pw), {{"h", 2}, {"w", 4}}));
  EXPECT_EQ(pw_region.loops[1].extent, 6);
  EXPECT_EQ(pw_region.loops[2].extent, 2);
  EXPECT_EQ(pw_region.loops[3].extent, 4);

  const OperatorNode dw = conv("dw", OpKind::kDepthwiseConv2d, 1, 0, 8, 6, 6, 3, 3);
  const IterSpace dw_region = footprint(dw, make_tile(loop_nest(dw), {{"o", 2}}));
  EXPECT_EQ(dw_region.loops[1].extent, 2);
  EXPECT_EQ(dw_region.loops[2].extent, 8);
  EXPECT_EQ(dw_region.loops[3].extent, 8);

  OperatorNode strided = p.down;
  strided.attrs["stride"] = 2;
  EXPECT_THROW(footprint(strided, unit_tile(loop_nest(strided))), FusionError);
}

TEST(RedundancyTest, TwoConvolutions) {
  const ConvPair p;
  EXPECT_EQ(fused_upstream_trips(p.up, p.down, p.tiles()), 6912);
  EXPECT_EQ(unfused_upstream_trips(p.up), 432);
  EXPECT_EQ(brute_fused_trips(p.down, p.tiles()), 6912);
  const Redundancy r = redundancy(p.up, p.down, p.tiles());
  EXPECT_DOUBLE_EQ(r.ratio, 16.0);
  EXPECT_TRUE(r.cond1);
  EXPECT_EQ(r.cond1_loops, std::vector<std::string>{"o"});
  EXPECT_TRUE(r.cond2);
  EXPECT_TRUE(r.tile_shrinks);  // 16 < 4 * 3 * 18
}

TEST(RedundancyTest, Symbolic) {
  const ConvPair p;
  const SymProduct fused = fused_upstream_trips_symbolic(p.up, p.down, p.tiles(), std::set<std::string>{});
  EXPECT_EQ(fused.str(), "N*O2*H2*(W2/16)*O1*R2*(15+C2)");
  const auto env = symbol_bindings(p.up, p.down);
  EXPECT_EQ(fused.evaluate(env), 6912);
  EXPECT_EQ(unfused_upstream_trips_symbolic(p.up, p.down).evaluate(env), 432);
  EXPECT_EQ(fused_upstream_trips_symbolic(p.up, p.down, p.tiles()).evaluate(env), 6912);
}

TEST(RedundancyTest, UntiledIsFree) {
  const ConvPair p;
  const Redundancy r = redundancy(p.up, p.down, full_tile(loop_nest(p.down)));
  EXPECT_DOUBLE_EQ(r.ratio, 1.0);
  EXPECT_FALSE(r.cond1);
  EXPECT_FALSE(r.cond2);
}

TEST(RedundancyTest, PointwiseWithOutputChannelsWhole) {
  const OperatorNode up = conv("c", OpKind::kConv2d, 1, 3, 6, 8, 8, 3, 3, 1);
  const OperatorNode pw = conv("pw", OpKind::kPointwiseConv2d, 1, 6, 12, 8, 8, 1, 1);
  const TileSpec tiles = make_tile(loop_nest(pw), {{"h", 2}, {"w", 4}});
  EXPECT_EQ(fused_upstream_trips(up, pw, tiles), unfused_upstream_trips(up));
  EXPECT_EQ(brute_fused_trips(pw, tiles), 6 * 8 * 8);
  EXPECT_DOUBLE_EQ(redundancy(up, pw, tiles).ratio, 1.0);
}

TEST(RedundancyTest, DepthwiseWithPlaneWhole) {
  const OperatorNode up = conv("pw", OpKind::kPointwiseConv2d, 1, 4, 8, 8, 8, 1, 1);
  const OperatorNode dw = conv("dw", OpKind::kDepthwiseConv2d, 1, 0, 8, 8, 8, 3, 3, 1);
  const TileSpec tiles = make_tile(loop_nest(dw), {{"o", 2}});
  EXPECT_EQ(fused_upstream_trips(up, dw, tiles), unfused_upstream_trips(up));
  const Redundancy r = redundancy(up, dw, tiles);
  EXPECT_DOUBLE_EQ(r.ratio, 1.0);
  EXPECT_FALSE(r.cond1);
  EXPECT_FALSE(r.cond2);
}

TEST(VerdictTest, Categories) {
  const OperatorNode c1 = conv("c1", OpKind::kConv2d, 1, 3, 8, 8, 8, 3, 3, 1);
  const OperatorNode pw = conv("pw", OpKind::kPointwiseConv2d, 1, 8, 16, 8, 8, 1, 1);
  const FusionVerdict a = intensive_fusion_legal(c1, pw);
  EXPECT_EQ(a.category, FusionCategory::kPointwiseDownstream);
  EXPECT_EQ(a.required_untiled, std::set<std::string>{"o"});

  const OperatorNode pw1 = conv("pw1", OpKind::kPointwiseConv2d, 1, 4, 8, 8, 8, 1, 1);
  const OperatorNode dw = conv("dw", OpKind::kDepthwiseConv2d, 1, 0, 8, 8, 8, 3, 3, 1);
  const FusionVerdict b = intensive_fusion_legal(pw1, dw);
  EXPECT_EQ(b.category, FusionCategory::kDepthwiseDownstream);
  EXPECT_EQ(b.required_untiled, (std::set<std::string>{"h", "w"}));

  const OperatorNode c2 = conv("c2", OpKind::kConv2d, 1, 8, 8, 8, 8, 3, 3, 1);
  EXPECT_EQ(intensive_fusion_legal(c1, c2).category, FusionCategory::kNotApplicable);

  const FusionVerdict m = intensive_fusion_legal(matmul("m1", 8, 4, 16), matmul("m2", 8, 16, 4));
  EXPECT_EQ(m.category, FusionCategory::kPointwiseDownstream);
  EXPECT_EQ(m.required_untiled, std::set<std::string>{"n"});

  EXPECT_THROW(intensive_fusion_legal(testing::simple("r", OpKind::kRelu, {1, 8, 8, 8}), pw), FusionError);
}

TEST(DeriveTest, Examples) {
  const OperatorNode pw1 = conv("pw1", OpKind::kPointwiseConv2d, 1, 4, 8, 8, 8, 1, 1);
  const OperatorNode dw = conv("dw", OpKind::kDepthwiseConv2d, 1, 0, 8, 8, 8, 3, 3, 1);
  const TileSpec dw_tiles = make_tile(loop_nest(dw), {{"o", 4}});
  const Schedule s = derive_intensive_schedule(pw1, dw, dw_tiles);
  EXPECT_EQ(s.mode("pw1", "dw"), FusionMode::kIntensive);
  EXPECT_EQ(s.tiling.at("dw").boundary, (std::vector<int64_t>{1, 4, 8, 8}));
  const IterSpace up_tile = footprint(dw, dw_tiles);
  EXPECT_EQ(up_tile.size(), 4 * 8 * 8);  // clipped (H2+R2-1)(W2+C2-1)x4 with pad 1

  const OperatorNode c1 = conv("c1", OpKind::kConv2d, 1, 3, 8, 8, 8, 3, 3, 1);
  const OperatorNode pw = conv("pw", OpKind::kPointwiseConv2d, 1, 8, 16, 8, 8, 1, 1);
  const Schedule t = derive_intensive_schedule(c1, pw, make_tile(loop_nest(pw), {{"h", 4}, {"w", 4}}));
  EXPECT_EQ(t.tiling.at("pw").boundary, (std::vector<int64_t>{1, 16, 4, 4}));

  EXPECT_THROW(derive_intensive_schedule(pw1, dw, make_tile(loop_nest(dw), {{"h", 4}})), FusionError);
  EXPECT_THROW(derive_intensive_schedule(c1, conv("c2", OpKind::kConv2d, 1, 8, 8, 8, 8, 3, 3, 1),
                                         unit_tile(loop_nest(pw))),
               FusionError);
}

TEST(CheckPairTest, ShapeMismatch) {
  const OperatorNode up = conv("a", OpKind::kPointwiseConv2d, 1, 4, 8, 8, 8, 1, 1);
  const OperatorNode down = conv("b", OpKind::kPointwiseConv2d, 1, 6, 8, 8, 8, 1, 1);
  EXPECT_THROW(check_fusion_pair(up, down), FusionError);
}

using testing::random_pair;
using testing::RandomPair;

TEST(FusionPropertyTest, AnalyticMatchesEnumeration) {
  Rng rng(42);
  for (int trial = 0; trial < 400; ++trial) {
    const RandomPair p = random_pair(rng);
    ASSERT_EQ(fused_upstream_trips(p.up, p.down, p.tiles), brute_fused_trips(p.down, p.tiles))
        << p.down.id << " kind " << to_string(p.down.kind) << " trial " << trial;
    if (p.down.attr_or("pad", 0) == 0) {
      EXPECT_EQ(fused_upstream_trips_symbolic(p.up, p.down, p.tiles).evaluate(symbol_bindings(p.up, p.down)),
                fused_upstream_trips(p.up, p.down, p.tiles));
    }
  }
}

TEST(FusionPropertyTest, RatioOneIffNoCondition) {
  Rng rng(43);
  for (int trial = 0; trial < 400; ++trial) {
    const RandomPair p = random_pair(rng);
    const Redundancy r = redundancy(p.up, p.down, p.tiles);
    EXPECT_GE(r.ratio, 1.0);
    EXPECT_EQ(r.ratio == 1.0, !r.cond1 && !r.cond2) << "trial " << trial;
  }
}

TEST(FusionPropertyTest, DerivedScheduleHasNoRedundancy) {
  Rng rng(44);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    RandomPair p = random_pair(rng);
    const FusionVerdict v = intensive_fusion_legal(p.up, p.down);
    if (v.category == FusionCategory::kNotApplicable) continue;
    p.tiles = testing::clear_reserved(p, p.tiles);
    const Schedule s = derive_intensive_schedule(p.up, p.down, p.tiles);
    const TileSpec boundary{s.tiling.at(p.down.id).boundary};
    EXPECT_EQ(brute_fused_trips(p.down, boundary), unfused_upstream_trips(p.up));
    EXPECT_DOUBLE_EQ(redundancy(p.up, p.down, boundary).ratio, 1.0);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(FusionPropertyTest, FootprintMonotone) {
  Rng rng(45);
  for (int trial = 0; trial < 400; ++trial) {
    const RandomPair p = random_pair(rng);
    const auto ext = loop_nest(p.down).spatial_extents();
    TileSpec bigger = p.tiles;
    const size_t k = rng.below(ext.size());
    bigger.extents[k] = ext[k];
    const IterSpace a = footprint(p.down, p.tiles), b = footprint(p.down, bigger);
    for (size_t d = 0; d < a.loops.size(); ++d) EXPECT_LE(a.loops[d].extent, b.loops[d].extent);
  }
}

}  // namespace
}  // namespace gopt
