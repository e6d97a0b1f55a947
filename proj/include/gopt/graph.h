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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gopt {

enum class OpKind {
  kConv2d,
  kDepthwiseConv2d,
  kPointwiseConv2d,
  kMatMul,
  kAdd,
  kRelu,
  kBiasAdd,
  kMul,
  kPad,
  kReshape,
  kTranspose,
};

std::string_view to_string(OpKind kind);
std::optional<OpKind> parse_op_kind(std::string_view name);

// Convolution variants and matrix multiplication carry a reduction nest.
bool is_complex(OpKind kind);
// add / mul / relu / bias_add: same-shape, pointwise operators.
bool is_elementwise(OpKind kind);
// Number of data operands (graph-fed or external), not counting parameters.
int operand_arity(OpKind kind);

using Shape = std::vector<int64_t>;
using Attrs = std::map<std::string, int64_t>;

int64_t numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

struct OperatorNode {
  std::string id;
  OpKind kind = OpKind::kRelu;
  Attrs attrs;

  // Throws ValidationError naming the node when the attribute is missing.
  int64_t attr(std::string_view key) const;
  int64_t attr_or(std::string_view key, int64_t fallback) const;

  bool complex() const { return is_complex(kind); }

  Shape output_shape() const;
  // Shape of data operand `k` as this operator expects it.
  Shape operand_shape(int k) const;
  // Weight / bias tensors owned by the operator, keyed by a suffix
  // ("weight", "bias").
  std::vector<std::pair<std::string, Shape>> param_shapes() const;

  // Checks per-kind attribute completeness and the shape invariants
  // (extents >= 1, conv output consistent with input/window/pad/stride,
  // pointwise R=C=1, depthwise I=O, permutation validity).
  void validate() const;
};

struct Loop {
  std::string name;
  int64_t extent = 1;

  friend bool operator==(const Loop&, const Loop&) = default;
};

struct LoopNest {
  std::vector<Loop> spatial;
  std::vector<Loop> reduction;

  int64_t spatial_size() const;
  int64_t reduction_size() const;
  std::vector<int64_t> spatial_extents() const;
  std::vector<int64_t> reduction_extents() const;
  // Index of a spatial loop by name, or -1.
  int spatial_index(std::string_view name) const;
};

// conv2d: spatial [n,o,h,w], reduction [i,r,c]; depthwise: [n,o,h,w] / [r,c];
// pointwise: [n,o,h,w] / [i]; matmul: [m,n] / [k]; every other kind spans
// its output dims [d0..] with no reduction.
LoopNest loop_nest(const OperatorNode& node);

struct Edge {
  std::string src;
  std::string dst;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Validated computational DAG. Immutable after construction.
class Graph {
 public:
  // Validates and builds; throws ValidationError.
  static Graph build(std::vector<OperatorNode> nodes, std::vector<Edge> edges);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<OperatorNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const OperatorNode& node(int index) const { return nodes_.at(index); }

  std::optional<int> find(std::string_view id) const;
  // Throws ValidationError for unknown ids.
  int index_of(std::string_view id) const;

  // Predecessors in edge-document order; position k feeds data operand k.
  const std::vector<int>& preds(int index) const { return preds_.at(index); }
  const std::vector<int>& succs(int index) const { return succs_.at(index); }

  // Kahn order, ties broken by document position.
  const std::vector<int>& topological_order() const { return topo_; }

 private:
  std::vector<OperatorNode> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, int, std::less<>> index_;
  std::vector<std::vector<int>> preds_;
  std::vector<std::vector<int>> succs_;
  std::vector<int> topo_;
};

Graph load_graph(std::string_view text);
Graph load_graph_file(const std::string& path);
std::string serialize_graph(const Graph& graph);

// A node subset of a shared graph, kept in topological order.
class Subgraph {
 public:
  Subgraph(std::shared_ptr<const Graph> graph, const std::vector<std::string>& ids,
           std::string name = {});
  static Subgraph whole(std::shared_ptr<const Graph> graph, std::string name = "all");

  const Graph& graph() const { return *graph_; }
  const std::shared_ptr<const Graph>& graph_ptr() const { return graph_; }
  const std::vector<int>& nodes() const { return nodes_; }
  bool contains(int index) const;
  const std::string& name() const { return name_; }
  std::vector<std::string> ids() const;

  // Nodes whose value leaves the subgraph or has no consumer at all.
  bool is_output(int index) const;

 private:
  std::shared_ptr<const Graph> graph_;
  std::vector<int> nodes_;
  std::vector<bool> member_;
  std::string name_;
};

}  // namespace gopt
