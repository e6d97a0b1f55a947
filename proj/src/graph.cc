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

#include "gopt/graph.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gopt/error.h"

namespace gopt {

namespace {

struct KindName {
  OpKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {OpKind::kConv2d, "conv2d"},
    {OpKind::kDepthwiseConv2d, "depthwise_conv2d"},
    {OpKind::kPointwiseConv2d, "pointwise_conv2d"},
    {OpKind::kMatMul, "matmul"},
    {OpKind::kAdd, "add"},
    {OpKind::kRelu, "relu"},
    {OpKind::kBiasAdd, "bias_add"},
    {OpKind::kMul, "mul"},
    {OpKind::kPad, "pad"},
    {OpKind::kReshape, "reshape"},
    {OpKind::kTranspose, "transpose"},
};

[[noreturn]] void fail(const OperatorNode& node, const std::string& what) {
  throw ValidationError("node '" + node.id + "': " + what);
}

// d0, d1, ... keys; stops at the first gap.
Shape dims_from_attrs(const OperatorNode& node, char prefix) {
  Shape dims;
  for (int k = 0;; ++k) {
    auto it = node.attrs.find(std::string(1, prefix) + std::to_string(k));
    if (it == node.attrs.end()) break;
    dims.push_back(it->second);
  }
  return dims;
}

std::set<std::string> allowed_keys(const OperatorNode& node) {
  switch (node.kind) {
    case OpKind::kConv2d:
      return {"N", "I", "O", "H", "W", "R", "C", "pad", "stride", "IH", "IW"};
    case OpKind::kDepthwiseConv2d:
      return {"N", "I", "O", "H", "W", "R", "C", "pad", "stride", "IH", "IW"};
    case OpKind::kPointwiseConv2d:
      return {"N", "I", "O", "H", "W", "R", "C", "pad", "stride", "IH", "IW"};
    case OpKind::kMatMul:
      return {"M", "N", "K"};
    default:
      break;
  }
  std::set<std::string> keys;
  Shape d = dims_from_attrs(node, 'd');
  for (size_t k = 0; k < d.size(); ++k) keys.insert("d" + std::to_string(k));
  if (node.kind == OpKind::kPad) keys.insert("pad");
  if (node.kind == OpKind::kTranspose) {
    for (size_t k = 0; k < d.size(); ++k) keys.insert("p" + std::to_string(k));
  }
  return keys;
}

bool is_conv_family(OpKind kind) {
  return kind == OpKind::kConv2d || kind == OpKind::kDepthwiseConv2d ||
         kind == OpKind::kPointwiseConv2d;
}

// Input height/width implied by the output extent, window, pad and stride.
int64_t conv_input_extent(int64_t out, int64_t window, int64_t pad, int64_t stride) {
  return (out - 1) * stride + window - 2 * pad;
}

}  // namespace

std::string_view to_string(OpKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

std::optional<OpKind> parse_op_kind(std::string_view name) {
  for (const auto& entry : kKindNames) {
    if (entry.name == name) return entry.kind;
  }
  return std::nullopt;
}

bool is_complex(OpKind kind) {
  return is_conv_family(kind) || kind == OpKind::kMatMul;
}

bool is_elementwise(OpKind kind) {
  return kind == OpKind::kAdd || kind == OpKind::kMul || kind == OpKind::kRelu ||
         kind == OpKind::kBiasAdd;
}

int operand_arity(OpKind kind) {
  return (kind == OpKind::kAdd || kind == OpKind::kMul) ? 2 : 1;
}

int64_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), int64_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (size_t k = 0; k < shape.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(shape[k]);
  }
  return out + "]";
}

int64_t OperatorNode::attr(std::string_view key) const {
  auto it = attrs.find(std::string(key));
  if (it == attrs.end()) fail(*this, "missing attribute '" + std::string(key) + "'");
  return it->second;
}

int64_t OperatorNode::attr_or(std::string_view key, int64_t fallback) const {
  auto it = attrs.find(std::string(key));
  return it == attrs.end() ? fallback : it->second;
}

Shape OperatorNode::output_shape() const {
  switch (kind) {
    case OpKind::kConv2d:
    case OpKind::kDepthwiseConv2d:
    case OpKind::kPointwiseConv2d:
      return {attr("N"), attr("O"), attr("H"), attr("W")};
    case OpKind::kMatMul:
      return {attr("M"), attr("N")};
    default:
      return dims_from_attrs(*this, 'd');
  }
}

Shape OperatorNode::operand_shape(int k) const {
  if (k < 0 || k >= operand_arity(kind)) fail(*this, "operand index out of range");
  switch (kind) {
    case OpKind::kConv2d:
    case OpKind::kDepthwiseConv2d:
    case OpKind::kPointwiseConv2d: {
      const int64_t pad = attr_or("pad", 0);
      const int64_t stride = attr_or("stride", 1);
      const int64_t window_r = attr_or("R", 1);
      const int64_t window_c = attr_or("C", 1);
      const int64_t channels = kind == OpKind::kDepthwiseConv2d ? attr("O") : attr("I");
      return {attr("N"), channels, conv_input_extent(attr("H"), window_r, pad, stride),
              conv_input_extent(attr("W"), window_c, pad, stride)};
    }
    case OpKind::kMatMul:
      return {attr("M"), attr("K")};
    case OpKind::kPad: {
      Shape in = output_shape();
      const int64_t pad = attr("pad");
      in[in.size() - 1] -= 2 * pad;
      in[in.size() - 2] -= 2 * pad;
      return in;
    }
    case OpKind::kTranspose: {
      Shape out = output_shape();
      Shape perm = dims_from_attrs(*this, 'p');
      Shape in(out.size());
      for (size_t j = 0; j < out.size(); ++j) in[perm[j]] = out[j];
      return in;
    }
    default:
      // Elementwise operands match the output; a graph-fed reshape accepts any
      // shape with equal element count, an external one is read flat.
      return output_shape();
  }
}

std::vector<std::pair<std::string, Shape>> OperatorNode::param_shapes() const {
  switch (kind) {
    case OpKind::kConv2d:
      return {{"weight", {attr("O"), attr("I"), attr("R"), attr("C")}}};
    case OpKind::kDepthwiseConv2d:
      return {{"weight", {attr("O"), attr("R"), attr("C")}}};
    case OpKind::kPointwiseConv2d:
      return {{"weight", {attr("O"), attr("I")}}};
    case OpKind::kMatMul:
      return {{"weight", {attr("K"), attr("N")}}};
    case OpKind::kBiasAdd:
      return {{"bias", {output_shape().at(1)}}};
    default:
      return {};
  }
}

void OperatorNode::validate() const {
  if (id.empty()) throw ValidationError("node with empty id");
  const auto keys = allowed_keys(*this);
  for (const auto& [key, value] : attrs) {
    if (!keys.count(key)) fail(*this, "unexpected attribute '" + key + "'");
  }
  auto positive = [&](std::string_view key) {
    if (attr(key) < 1) fail(*this, "attribute '" + std::string(key) + "' must be >= 1");
  };
  switch (kind) {
    case OpKind::kConv2d:
    case OpKind::kDepthwiseConv2d:
    case OpKind::kPointwiseConv2d: {
      for (auto key : {"N", "O", "H", "W"}) positive(key);
      if (kind == OpKind::kConv2d) {
        for (auto key : {"I", "R", "C"}) positive(key);
      }
      if (kind == OpKind::kDepthwiseConv2d) {
        positive("R");
        positive("C");
        if (attr_or("I", attr("O")) != attr("O")) fail(*this, "depthwise_conv2d requires I == O");
      }
      if (kind == OpKind::kPointwiseConv2d) {
        positive("I");
        if (attr_or("R", 1) != 1 || attr_or("C", 1) != 1) {
          fail(*this, "pointwise_conv2d requires R == C == 1");
        }
      }
      const int64_t pad = attr_or("pad", 0);
      const int64_t stride = attr_or("stride", 1);
      if (pad < 0) fail(*this, "pad must be >= 0");
      if (stride < 1) fail(*this, "stride must be >= 1");
      const Shape in = operand_shape(0);
      if (in[2] < 1 || in[3] < 1) fail(*this, "window larger than padded input");
      for (auto [key, window, out] : {std::tuple{"IH", attr_or("R", 1), attr("H")},
                                      std::tuple{"IW", attr_or("C", 1), attr("W")}}) {
        auto it = attrs.find(key);
        if (it == attrs.end()) continue;
        const int64_t span = it->second + 2 * pad - window;
        if (span < 0 || span % stride != 0 || span / stride + 1 != out) {
          fail(*this, std::string("inconsistent conv dims: ") + key + "=" +
                          std::to_string(it->second) + " does not produce output extent " +
                          std::to_string(out));
        }
      }
      break;
    }
    case OpKind::kMatMul:
      for (auto key : {"M", "N", "K"}) positive(key);
      break;
    default: {
      const Shape out = dims_from_attrs(*this, 'd');
      if (out.empty()) fail(*this, "missing output dims d0..");
      for (int64_t d : out) {
        if (d < 1) fail(*this, "output dims must be >= 1");
      }
      if (kind == OpKind::kBiasAdd && out.size() < 2) fail(*this, "bias_add needs rank >= 2");
      if (kind == OpKind::kPad) {
        if (out.size() < 2) fail(*this, "pad needs rank >= 2");
        if (attr("pad") < 0) fail(*this, "pad must be >= 0");
        const Shape in = operand_shape(0);
        if (in[in.size() - 1] < 1 || in[in.size() - 2] < 1) fail(*this, "pad exceeds output dims");
      }
      if (kind == OpKind::kTranspose) {
        Shape perm = dims_from_attrs(*this, 'p');
        if (perm.size() != out.size()) fail(*this, "permutation rank mismatch");
        Shape sorted = perm;
        std::sort(sorted.begin(), sorted.end());
        for (size_t k = 0; k < sorted.size(); ++k) {
          if (sorted[k] != static_cast<int64_t>(k)) fail(*this, "invalid permutation");
        }
      }
      break;
    }
  }
}

int64_t LoopNest::spatial_size() const {
  int64_t s = 1;
  for (const auto& l : spatial) s *= l.extent;
  return s;
}

int64_t LoopNest::reduction_size() const {
  int64_t s = 1;
  for (const auto& l : reduction) s *= l.extent;
  return s;
}

std::vector<int64_t> LoopNest::spatial_extents() const {
  std::vector<int64_t> out;
  for (const auto& l : spatial) out.push_back(l.extent);
  return out;
}

std::vector<int64_t> LoopNest::reduction_extents() const {
  std::vector<int64_t> out;
  for (const auto& l : reduction) out.push_back(l.extent);
  return out;
}

int LoopNest::spatial_index(std::string_view name) const {
  for (size_t k = 0; k < spatial.size(); ++k) {
    if (spatial[k].name == name) return static_cast<int>(k);
  }
  return -1;
}

LoopNest loop_nest(const OperatorNode& node) {
  LoopNest nest;
  switch (node.kind) {
    case OpKind::kConv2d:
      nest.spatial = {{"n", node.attr("N")}, {"o", node.attr("O")}, {"h", node.attr("H")},
                      {"w", node.attr("W")}};
      nest.reduction = {{"i", node.attr("I")}, {"r", node.attr("R")}, {"c", node.attr("C")}};
      break;
    case OpKind::kDepthwiseConv2d:
      nest.spatial = {{"n", node.attr("N")}, {"o", node.attr("O")}, {"h", node.attr("H")},
                      {"w", node.attr("W")}};
      nest.reduction = {{"r", node.attr("R")}, {"c", node.attr("C")}};
      break;
    case OpKind::kPointwiseConv2d:
      nest.spatial = {{"n", node.attr("N")}, {"o", node.attr("O")}, {"h", node.attr("H")},
                      {"w", node.attr("W")}};
      nest.reduction = {{"i", node.attr("I")}};
      break;
    case OpKind::kMatMul:
      nest.spatial = {{"m", node.attr("M")}, {"n", node.attr("N")}};
      nest.reduction = {{"k", node.attr("K")}};
      break;
    default: {
      const Shape out = node.output_shape();
      for (size_t k = 0; k < out.size(); ++k) nest.spatial.push_back({"d" + std::to_string(k), out[k]});
      break;
    }
  }
  return nest;
}

Graph Graph::build(std::vector<OperatorNode> nodes, std::vector<Edge> edges) {
  Graph g;
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  if (g.nodes_.empty()) throw ValidationError("graph has no nodes");
  for (size_t i = 0; i < g.nodes_.size(); ++i) {
    g.nodes_[i].validate();
    if (!g.index_.emplace(g.nodes_[i].id, static_cast<int>(i)).second) {
      throw ValidationError("duplicate node id '" + g.nodes_[i].id + "'");
    }
  }
  const int n = g.size();
  g.preds_.assign(n, {});
  g.succs_.assign(n, {});
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges_) {
    auto src = g.find(e.src);
    auto dst = g.find(e.dst);
    if (!src) throw ValidationError("edge " + e.src + "->" + e.dst + " references unknown node '" + e.src + "'");
    if (!dst) throw ValidationError("edge " + e.src + "->" + e.dst + " references unknown node '" + e.dst + "'");
    if (*src == *dst) throw ValidationError("self-loop on node '" + e.src + "'");
    if (!seen.emplace(*src, *dst).second) {
      throw ValidationError("duplicate edge " + e.src + "->" + e.dst);
    }
    g.preds_[*dst].push_back(*src);
    g.succs_[*src].push_back(*dst);
  }
  for (int v = 0; v < n; ++v) {
    const auto& node = g.nodes_[v];
    const auto& preds = g.preds_[v];
    if (static_cast<int>(preds.size()) > operand_arity(node.kind)) {
      throw ValidationError("node '" + node.id + "' has " + std::to_string(preds.size()) +
                            " inputs but accepts at most " +
                            std::to_string(operand_arity(node.kind)));
    }
    for (size_t k = 0; k < preds.size(); ++k) {
      const Shape produced = g.nodes_[preds[k]].output_shape();
      if (node.kind == OpKind::kReshape) {
        if (numel(produced) != numel(node.output_shape())) {
          throw ValidationError("edge " + g.nodes_[preds[k]].id + "->" + node.id +
                                ": reshape element count mismatch");
        }
        continue;
      }
      const Shape expected = node.operand_shape(static_cast<int>(k));
      if (produced != expected) {
        throw ValidationError("edge " + g.nodes_[preds[k]].id + "->" + node.id + ": producer shape " +
                              shape_to_string(produced) + " does not match operand shape " +
                              shape_to_string(expected));
      }
    }
  }
  // Kahn with document-order priority.
  std::vector<int> indeg(n);
  for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(g.preds_[v].size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push(v);
  }
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    g.topo_.push_back(v);
    for (int w : g.succs_[v]) {
      if (--indeg[w] == 0) ready.push(w);
    }
  }
  if (static_cast<int>(g.topo_.size()) != n) {
    for (int v = 0; v < n; ++v) {
      if (indeg[v] > 0) throw ValidationError("cycle detected through node '" + g.nodes_[v].id + "'");
    }
  }
  return g;
}

std::optional<int> Graph::find(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Graph::index_of(std::string_view id) const {
  auto idx = find(id);
  if (!idx) throw ValidationError("unknown node '" + std::string(id) + "'");
  return *idx;
}

Graph load_graph(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed graph document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("graph document must be a JSON object");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw ParseError("graph document lacks a 'nodes' array");
  std::vector<OperatorNode> nodes;
  std::vector<Edge> edges;
  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_object() || !jn.contains("id") || !jn["id"].is_string()) {
      throw ParseError("node entry needs a string 'id'");
    }
    OperatorNode node;
    node.id = jn["id"].get<std::string>();
    if (!jn.contains("op") || !jn["op"].is_string()) throw ParseError("node '" + node.id + "' needs a string 'op'");
    auto kind = parse_op_kind(jn["op"].get<std::string>());
    if (!kind) throw ParseError("node '" + node.id + "' has unknown op '" + jn["op"].get<std::string>() + "'");
    node.kind = *kind;
    if (jn.contains("attrs")) {
      if (!jn["attrs"].is_object()) throw ParseError("node '" + node.id + "': 'attrs' must be an object");
      for (const auto& [key, value] : jn["attrs"].items()) {
        if (!value.is_number_integer()) {
          throw ParseError("node '" + node.id + "': attribute '" + key + "' must be an integer");
        }
        node.attrs[key] = value.get<int64_t>();
      }
    }
    nodes.push_back(std::move(node));
  }
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw ParseError("'edges' must be an array");
    for (const auto& je : doc["edges"]) {
      if (!je.is_object() || !je.contains("src") || !je.contains("dst") || !je["src"].is_string() ||
          !je["dst"].is_string()) {
        throw ParseError("edge entry needs string 'src' and 'dst'");
      }
      edges.push_back({je["src"].get<std::string>(), je["dst"].get<std::string>()});
    }
  }
  return Graph::build(std::move(nodes), std::move(edges));
}

Graph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_graph(buffer.str());
}

std::string serialize_graph(const Graph& graph) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto& node : graph.nodes()) {
    nlohmann::ordered_json jn;
    jn["id"] = node.id;
    jn["op"] = std::string(to_string(node.kind));
    jn["attrs"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : node.attrs) jn["attrs"][key] = value;
    doc["nodes"].push_back(jn);
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : graph.edges()) doc["edges"].push_back({{"src", e.src}, {"dst", e.dst}});
  return doc.dump(2) + "\n";
}

Subgraph::Subgraph(std::shared_ptr<const Graph> graph, const std::vector<std::string>& ids,
                   std::string name)
    : graph_(std::move(graph)), name_(std::move(name)) {
  member_.assign(graph_->size(), false);
  for (const auto& id : ids) {
    const int idx = graph_->index_of(id);
    if (member_[idx]) throw ValidationError("node '" + id + "' listed twice in subgraph");
    member_[idx] = true;
  }
  for (int v : graph_->topological_order()) {
    if (member_[v]) nodes_.push_back(v);
  }
}

Subgraph Subgraph::whole(std::shared_ptr<const Graph> graph, std::string name) {
  std::vector<std::string> ids;
  for (const auto& node : graph->nodes()) ids.push_back(node.id);
  return Subgraph(std::move(graph), ids, std::move(name));
}

bool Subgraph::contains(int index) const {
  return index >= 0 && index < static_cast<int>(member_.size()) && member_[index];
}

std::vector<std::string> Subgraph::ids() const {
  std::vector<std::string> out;
  for (int v : nodes_) out.push_back(graph_->node(v).id);
  return out;
}

bool Subgraph::is_output(int index) const {
  const auto& succs = graph_->succs(index);
  if (succs.empty()) return true;
  return std::any_of(succs.begin(), succs.end(), [&](int s) { return !contains(s); });
}

}  // namespace gopt
