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
#include "gopt/loop_interp.h"
#include "gopt/partitioner.h"
#include "gopt/reformer.h"
#include "test_util.h"

namespace gopt {
namespace {

using testing::chain_subgraph;
using testing::conv;
using testing::simple;

Subgraph mbv2_pair() { return Subgraph::whole(testing::load_data("mbv2_pair.json"), "S0"); }

Subgraph conv_bias_relu() {
  return chain_subgraph({conv("c", OpKind::kConv2d, 1, 3, 8, 8, 8, 3, 3, 1),
                         simple("b", OpKind::kBiasAdd, {1, 8, 8, 8}), simple("r", OpKind::kRelu, {1, 8, 8, 8})});
}

Partition as_partition(const std::vector<MiniSubgraph>& minis) {
  Partition p;
  for (const auto& m : minis) p.parts.push_back({p.size(), m.subgraph.ids(), m.weight, m.complex_count});
  return p;
}

TEST(SplitTest, InvertedResidualHalves) {
  const Subgraph parent = mbv2_pair();
  const auto minis = split(parent, {});
  ASSERT_EQ(minis.size(), 2u);
  EXPECT_EQ(minis[0].subgraph.ids(), (std::vector<std::string>{"pw1", "bias1", "relu1"}));
  EXPECT_EQ(minis[1].subgraph.ids(), (std::vector<std::string>{"dw", "bias2", "relu2"}));
  for (const auto& m : minis) {
    EXPECT_EQ(m.complex_count, 1);
    EXPECT_EQ(m.parent, "S0");
    EXPECT_EQ(m.parent_nodes, parent.ids());
    EXPECT_EQ(m.subgraph.name(), "S0." + std::to_string(&m - minis.data()));
  }
  EXPECT_TRUE(is_acyclic_partition(make_dag(parent, {}), as_partition(minis)));
}

TEST(SplitTest, NothingToSplit) {
  const Subgraph parent = conv_bias_relu();
  DncConfig cfg;
  cfg.mini_threshold = 1e9;
  const auto minis = split(parent, cfg);
  ASSERT_EQ(minis.size(), 1u);
  EXPECT_EQ(minis[0].subgraph.ids(), parent.ids());
}

TEST(SplitTest, SimpleOnlyRespectsThreshold) {
  std::vector<OperatorNode> nodes;
  for (int k = 0; k < 8; ++k) nodes.push_back(simple("r" + std::to_string(k), OpKind::kRelu, {4, 8, 8}));
  const Subgraph parent = chain_subgraph(nodes);  // each node weighs 8
  DncConfig cfg;
  cfg.mini_threshold = 20;
  const auto minis = split(parent, cfg);
  EXPECT_GT(minis.size(), 1u);
  for (const auto& m : minis) {
    EXPECT_EQ(m.complex_count, 0);
    if (m.subgraph.nodes().size() > 1) EXPECT_LT(m.weight, 20);
  }
}

TEST(SplitTest, CorpusProperties) {
  for (const char* name : {"fig2.json", "mbv2_block.json", "mnsn_block.json", "attention_block.json"}) {
    const Subgraph parent = Subgraph::whole(testing::load_data(name));
    for (double td : {50.0, 200.0, 500.0, 1e6}) {
      DncConfig cfg;
      cfg.mini_threshold = td;
      const auto minis = split(parent, cfg);
      EXPECT_TRUE(is_acyclic_partition(make_dag(parent, {}), as_partition(minis))) << name;
      std::multiset<std::string> covered;
      for (const auto& m : minis) {
        EXPECT_LE(m.complex_count, 1);
        for (const auto& id : m.subgraph.ids()) covered.insert(id);
      }
      const auto ids = parent.ids();
      EXPECT_EQ(covered, std::multiset<std::string>(ids.begin(), ids.end()));
    }
  }
}

TEST(JoinTest, SingleMiniIsIdentity) {
  const Subgraph parent = conv_bias_relu();
  DncConfig cfg;
  cfg.mini_threshold = 1e9;
  auto minis = split(parent, cfg);
  ASSERT_EQ(minis.size(), 1u);
  const Schedule s = sample_schedule(minis[0].subgraph, 3);
  const Joined j = join(minis, {s});
  EXPECT_EQ(j.subgraph.ids(), parent.ids());
  EXPECT_EQ(j.schedule, s);
}

TEST(JoinTest, ComposesParts) {
  const Subgraph parent = mbv2_pair();
  const auto minis = split(parent, {});
  std::vector<Schedule> tuned;
  for (size_t k = 0; k < minis.size(); ++k) tuned.push_back(sample_schedule(minis[k].subgraph, 10 + k));
  const Joined j = join(minis, tuned);
  EXPECT_EQ(j.subgraph.ids(), parent.ids());
  ASSERT_NO_THROW(validate_schedule(j.subgraph, j.schedule));
  EXPECT_EQ(j.schedule.mode("relu1", "dw"), FusionMode::kNone);
  EXPECT_EQ(j.schedule.mode("pw1", "dw"), FusionMode::kNone);
  for (size_t k = 0; k < minis.size(); ++k) {
    for (const auto& [id, t] : tuned[k].tiling) EXPECT_EQ(j.schedule.tiling.at(id), t);
    for (const auto& d : tuned[k].decisions()) EXPECT_EQ(j.schedule.mode(d.producer, d.consumer), d.mode);
  }

  // The composed run is the parts run back to back.
  CostBreakdown sum;
  for (size_t k = 0; k < minis.size(); ++k) {
    const CostBreakdown b = cost_breakdown(minis[k].subgraph, tuned[k]);
    sum.macs += b.macs;
    sum.accesses += b.accesses;
    sum.misses += b.misses;
  }
  const CostBreakdown whole = cost_breakdown(j.subgraph, j.schedule);
  EXPECT_EQ(whole.macs, sum.macs);
  EXPECT_EQ(whole.accesses, sum.accesses);
  EXPECT_LE(whole.misses, sum.misses);
}

TEST(JoinTest, Errors) {
  const Subgraph parent = mbv2_pair();
  const auto minis = split(parent, {});
  const std::vector<Schedule> two(2);
  EXPECT_THROW(join(minis, {Schedule{}}), ValidationError);
  EXPECT_THROW(join({minis[0]}, {Schedule{}}), ValidationError);
  EXPECT_THROW(join({}, {}), ValidationError);
  auto other = minis;
  other[1].parent = "S9";
  EXPECT_THROW(join(other, two), ValidationError);
  EXPECT_NO_THROW(join(minis, two));
}

TEST(DncTest, ExactAccountingAndMonotone) {
  const Subgraph parent = mbv2_pair();
  for (uint64_t seed = 0; seed < 4; ++seed) {
    DncConfig cfg;
    cfg.mini_budget = 30;
    cfg.join_budget = 20;
    const DncResult r = run_divide_and_conquer(parent, cfg, seed);
    ASSERT_EQ(r.minis.size(), 2u);
    size_t used = r.final.history.size();
    for (const auto& m : r.mini_results) {
      EXPECT_LE(m.history.size(), 15u);
      used += m.history.size();
    }
    EXPECT_EQ(used, 50u);
    EXPECT_EQ(r.evaluations, 50);
    EXPECT_DOUBLE_EQ(r.final.history.trials[0].cost, r.composed_cost);
    EXPECT_DOUBLE_EQ(cost(parent, r.composed), r.composed_cost);
    EXPECT_LE(r.final.best_cost, r.composed_cost);
  }
}

TEST(DncTest, DeterministicPerSeed) {
  const Subgraph parent = mbv2_pair();
  const DncResult a = run_divide_and_conquer(parent, {}, 7), b = run_divide_and_conquer(parent, {}, 7);
  EXPECT_EQ(a.final.history.csv(), b.final.history.csv());
  EXPECT_EQ(a.final.best, b.final.best);
}

TEST(DncTest, SingleMiniIsPlainTune) {
  const Subgraph parent = conv_bias_relu();
  DncConfig cfg;
  cfg.mini_threshold = 1e9;
  const DncResult r = run_divide_and_conquer(parent, cfg, 5);
  const TuneResult plain = tune(parent, cfg.mini_budget + cfg.join_budget, 5);
  EXPECT_EQ(r.evaluations, cfg.mini_budget + cfg.join_budget);
  EXPECT_EQ(r.final.history.csv(), plain.history.csv());
  EXPECT_EQ(r.final.best, plain.best);
}

TEST(DncTest, IntensiveJoinHasNoRedundancy) {
  const Subgraph parent = mbv2_pair();
  const Graph& g = parent.graph();
  int intensive = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const DncResult r = run_divide_and_conquer(parent, {}, seed);
    if (r.final.best.mode("pw1", "dw") != FusionMode::kIntensive) continue;
    ++intensive;
    const auto trips = count_trips(parent, r.final.best);
    EXPECT_EQ(trips.at("pw1"), unfused_upstream_trips(g.node(g.index_of("pw1"))));
  }
  RecordProperty("intensive_seeds", intensive);
}

TEST(DncConfigTest, Validation) {
  DncConfig cfg;
  EXPECT_NO_THROW(cfg.validate(800));
  EXPECT_THROW(cfg.validate(100), ValidationError);
  cfg.mini_budget = 0;
  EXPECT_THROW(cfg.validate(800), ValidationError);
  cfg = {};
  cfg.stable_window = 0;
  EXPECT_THROW(cfg.validate(800), ValidationError);
}

}  // namespace
}  // namespace gopt
