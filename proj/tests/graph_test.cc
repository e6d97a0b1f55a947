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

#include <algorithm>
#include <regex>

#include "gopt/error.h"
#include "gopt/graph.h"
#include "gopt/partitioner.h"
#include "gopt/report.h"
#include "test_util.h"

namespace gopt {
namespace {

using testing::conv;
using testing::load_data;
using testing::simple;

const char* kConvRelu = R"({
  "nodes": [
    {"id": "c", "op": "conv2d", "attrs": {"N": 1, "I": 3, "O": 8, "H": 6, "W": 6, "R": 3, "C": 3}},
    {"id": "r", "op": "relu", "attrs": {"d0": 1, "d1": 8, "d2": 6, "d3": 6}}
  ],
  "edges": [{"src": "c", "dst": "r"}]
})";

template <typename E>
std::string error_of(const std::string& text) {
  try {
    load_graph(text);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

TEST(GraphTest, LoadsConvRelu) {
  const Graph g = load_graph(kConvRelu);
  EXPECT_EQ(g.size(), 2);
  EXPECT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.node(0).id, "c");
  EXPECT_EQ(g.succs(0), std::vector<int>{1});
}

TEST(GraphTest, UnknownEdgeEndpointIsNamed) {
  std::string text = kConvRelu;
  text.replace(text.find(R"("dst": "r")"), 10, R"("dst": "x")");
  EXPECT_NE(error_of<ValidationError>(text).find("'x'"), std::string::npos);
}

TEST(GraphTest, CycleIsRejectedWithNodeName) {
  const char* text = R"({"nodes": [
    {"id": "a", "op": "relu", "attrs": {"d0": 4}},
    {"id": "b", "op": "relu", "attrs": {"d0": 4}}],
    "edges": [{"src": "a", "dst": "b"}, {"src": "b", "dst": "a"}]})";
  const std::string msg = error_of<ValidationError>(text);
  EXPECT_NE(msg.find("cycle"), std::string::npos);
  EXPECT_TRUE(msg.find("'a'") != std::string::npos || msg.find("'b'") != std::string::npos);
}

TEST(GraphTest, StructuralErrors) {
  EXPECT_NE(error_of<ParseError>("{not json"), "<no error>");
  EXPECT_NE(error_of<ParseError>(""), "<no error>");
  EXPECT_NE(error_of<ParseError>(R"({"edges": []})"), "<no error>");
  EXPECT_NE(error_of<ValidationError>(R"({"nodes": []})"), "<no error>");
  // Duplicate id, self-loop, duplicate edge.
  EXPECT_NE(error_of<ValidationError>(R"({"nodes": [{"id": "a", "op": "relu", "attrs": {"d0": 2}},
      {"id": "a", "op": "relu", "attrs": {"d0": 2}}]})"),
            "<no error>");
  EXPECT_NE(error_of<ValidationError>(R"({"nodes": [{"id": "a", "op": "add", "attrs": {"d0": 2}}],
      "edges": [{"src": "a", "dst": "a"}]})"),
            "<no error>");
  EXPECT_NE(error_of<ValidationError>(R"({"nodes": [{"id": "a", "op": "relu", "attrs": {"d0": 2}},
      {"id": "b", "op": "add", "attrs": {"d0": 2}}],
      "edges": [{"src": "a", "dst": "b"}, {"src": "a", "dst": "b"}]})"),
            "<no error>");
}

TEST(GraphTest, OperatorInvariants) {
  auto invalid = [](OperatorNode node) {
    EXPECT_THROW(node.validate(), ValidationError) << node.id;
  };
  invalid(conv("pw", OpKind::kPointwiseConv2d, 1, 4, 4, 4, 4, 3, 3));
  OperatorNode dw = conv("dw", OpKind::kDepthwiseConv2d, 1, 0, 4, 4, 4, 3, 3);
  dw.attrs["I"] = 5;
  invalid(dw);
  OperatorNode c = conv("c", OpKind::kConv2d, 1, 4, 4, 4, 4, 3, 3);
  c.attrs["IH"] = 7;  // 7 - 3 + 1 = 5 != 4
  invalid(c);
  c.attrs["IH"] = 6;
  EXPECT_NO_THROW(c.validate());
  OperatorNode zero = conv("z", OpKind::kConv2d, 1, 4, 0, 4, 4, 3, 3);
  invalid(zero);
  OperatorNode t = simple("t", OpKind::kTranspose, {2, 3});
  t.attrs["p0"] = 0;
  t.attrs["p1"] = 0;
  invalid(t);
  OperatorNode extra = simple("e", OpKind::kRelu, {2});
  extra.attrs["foo"] = 1;
  invalid(extra);
}

TEST(GraphTest, ConvOperandShapeFollowsPadAndStride) {
  OperatorNode c = conv("c", OpKind::kConv2d, 1, 2, 4, 5, 5, 3, 3, 1);
  EXPECT_EQ(c.operand_shape(0), (Shape{1, 2, 5, 5}));
  c.attrs["stride"] = 2;
  EXPECT_EQ(c.operand_shape(0), (Shape{1, 2, 9, 9}));
}

TEST(GraphTest, BundledBranchyGraph) {
  const auto g = load_data("fig2.json");
  EXPECT_EQ(g->size(), 7);
  EXPECT_EQ(g->edges().size(), 7u);
  // op1 and op2 read the same external input; op4 feeds both op5 and op6.
  EXPECT_TRUE(g->preds(g->index_of("op1")).empty());
  EXPECT_TRUE(g->preds(g->index_of("op2")).empty());
  EXPECT_EQ(g->succs(g->index_of("op4")).size(), 2u);
  EXPECT_TRUE(g->node(g->index_of("op5")).complex());
  EXPECT_TRUE(g->node(g->index_of("op7")).complex());
  EXPECT_FALSE(g->node(g->index_of("op6")).complex());
}

TEST(GraphTest, LoopNests) {
  const LoopNest c = loop_nest(conv("c", OpKind::kConv2d, 1, 32, 64, 28, 28, 3, 3, 1));
  EXPECT_EQ(c.spatial_extents(), (std::vector<int64_t>{1, 64, 28, 28}));
  EXPECT_EQ(c.reduction_extents(), (std::vector<int64_t>{32, 3, 3}));
  const LoopNest r = loop_nest(simple("r", OpKind::kRelu, {1, 64, 28, 28}));
  EXPECT_EQ(r.spatial_extents(), (std::vector<int64_t>{1, 64, 28, 28}));
  EXPECT_TRUE(r.reduction.empty());
  const LoopNest m = loop_nest(testing::matmul("m", 128, 64, 128));
  EXPECT_EQ(m.spatial_extents(), (std::vector<int64_t>{128, 128}));
  EXPECT_EQ(m.reduction_extents(), (std::vector<int64_t>{64}));
  const LoopNest d = loop_nest(conv("d", OpKind::kDepthwiseConv2d, 1, 0, 8, 6, 6, 3, 3));
  EXPECT_EQ(d.reduction_extents(), (std::vector<int64_t>{3, 3}));
  const LoopNest p = loop_nest(conv("p", OpKind::kPointwiseConv2d, 1, 5, 8, 6, 6, 1, 1));
  EXPECT_EQ(p.reduction_extents(), (std::vector<int64_t>{5}));
}

TEST(GraphTest, ComplexKindsAreExactlyReductionKinds) {
  for (OpKind kind : {OpKind::kConv2d, OpKind::kDepthwiseConv2d, OpKind::kPointwiseConv2d, OpKind::kMatMul}) {
    EXPECT_TRUE(is_complex(kind));
  }
  for (OpKind kind : {OpKind::kAdd, OpKind::kRelu, OpKind::kBiasAdd, OpKind::kMul, OpKind::kPad,
                      OpKind::kReshape, OpKind::kTranspose}) {
    EXPECT_FALSE(is_complex(kind));
  }
}

class BundledGraphs : public ::testing::TestWithParam<const char*> {};

TEST_P(BundledGraphs, RoundTripAndNestSizes) {
  const auto g = load_data(GetParam());
  const std::string text = serialize_graph(*g);
  const Graph again = load_graph(text);
  EXPECT_EQ(serialize_graph(again), text);
  ASSERT_EQ(again.size(), g->size());
  for (int v = 0; v < g->size(); ++v) {
    EXPECT_EQ(again.node(v).id, g->node(v).id);
    EXPECT_EQ(again.node(v).attrs, g->node(v).attrs);
    EXPECT_EQ(loop_nest(g->node(v)).spatial_size(), numel(g->node(v).output_shape()));
    for (int s : g->succs(v)) {
      const auto& order = g->topological_order();
      EXPECT_LT(std::find(order.begin(), order.end(), v), std::find(order.begin(), order.end(), s));
    }
  }
  EXPECT_EQ(again.edges(), g->edges());
}

INSTANTIATE_TEST_SUITE_P(Corpus, BundledGraphs,
                         ::testing::Values("fig2.json", "mbv2_block.json", "mbv2_pair.json",
                                           "mnsn_block.json", "mnsn_pair.json", "attention_block.json"));

int count_matches(const std::string& text, const std::string& pattern) {
  const std::regex re(pattern);
  return static_cast<int>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

TEST(DotTest, PlainGraph) {
  const auto g = load_data("fig2.json");
  const std::string dot = emit_dot(*g);
  EXPECT_EQ(count_matches(dot, R"(\[label=)"), 7);
  EXPECT_EQ(count_matches(dot, R"( -> )"), 7);
  EXPECT_EQ(count_matches(dot, "palegreen"), 4);
  EXPECT_EQ(dot, emit_dot(*g));
}

TEST(DotTest, ClustersFollowPartition) {
  const auto g = load_data("fig2.json");
  Partition two;
  two.parts.push_back({0, {"op1", "op2", "op3"}, 0, 0});
  two.parts.push_back({1, {"op4", "op5", "op6", "op7"}, 0, 0});
  EXPECT_EQ(count_matches(emit_dot(*g, &two), "subgraph cluster_"), 2);

  const Graph one = Graph::build({simple("a", OpKind::kRelu, {4})}, {});
  Partition empty;
  const std::string dot = emit_dot(one, &empty);
  EXPECT_EQ(count_matches(dot, "cluster"), 0);
  EXPECT_EQ(count_matches(emit_dot(one), R"(\[label=)"), 1);
}

TEST(SubgraphTest, TopologicalOrderAndOutputs) {
  const auto g = load_data("mbv2_block.json");
  const Subgraph sub(g, {"relu1", "pw1", "bias1"}, "s");
  EXPECT_EQ(sub.ids(), (std::vector<std::string>{"pw1", "bias1", "relu1"}));
  EXPECT_TRUE(sub.is_output(g->index_of("relu1")));
  EXPECT_FALSE(sub.is_output(g->index_of("pw1")));
  EXPECT_THROW(Subgraph(g, {"nope"}), ValidationError);
}

}  // namespace
}  // namespace gopt
