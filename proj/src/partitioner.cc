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

#include "gopt/partitioner.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gopt/error.h"

namespace gopt {

int Dag::add_node(std::string id, double weight, int complex) {
  ids.push_back(id);
  members.push_back({std::move(id)});
  weights.push_back(weight);
  complex_count.push_back(complex);
  succs.emplace_back();
  preds.emplace_back();
  return size() - 1;
}

void Dag::add_edge(int src, int dst) {
  if (src == dst) throw ValidationError("self-loop on '" + ids.at(src) + "'");
  succs.at(src).insert(dst);
  preds.at(dst).insert(src);
}

std::optional<int> Dag::find(const std::string& id) const {
  for (int v = 0; v < size(); ++v) {
    if (ids[v] == id) return v;
  }
  return std::nullopt;
}

Dag make_dag(const Graph& graph, const WeightParams& params) {
  Dag dag;
  for (const auto& node : graph.nodes()) {
    dag.add_node(node.id, op_weight(node, params), node.complex() ? 1 : 0);
  }
  for (int v = 0; v < graph.size(); ++v) {
    for (int s : graph.succs(v)) dag.add_edge(v, s);
  }
  return dag;
}

Dag make_dag(const Subgraph& subgraph, const WeightParams& params) {
  const Graph& graph = subgraph.graph();
  Dag dag;
  std::map<int, int> local;
  for (int v : subgraph.nodes()) {
    const auto& node = graph.node(v);
    local[v] = dag.add_node(node.id, op_weight(node, params), node.complex() ? 1 : 0);
  }
  for (int v : subgraph.nodes()) {
    for (int s : graph.succs(v)) {
      if (subgraph.contains(s)) dag.add_edge(local[v], local[s]);
    }
  }
  return dag;
}

namespace {

// Kahn order; empty optional on a cycle.
std::optional<std::vector<int>> kahn(const Dag& dag) {
  const int n = dag.size();
  std::vector<int> indeg(n);
  for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(dag.preds[v].size());
  std::vector<int> order;
  std::vector<int> stack;
  for (int v = n - 1; v >= 0; --v) {
    if (indeg[v] == 0) stack.push_back(v);
  }
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int s : dag.succs[v]) {
      if (--indeg[s] == 0) stack.push_back(s);
    }
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

}  // namespace

bool has_cycle(const Dag& dag) { return !kahn(dag).has_value(); }

StageMap topological_stages(const Dag& dag) {
  auto order = kahn(dag);
  if (!order) throw ValidationError("cycle detected: stages are undefined");
  StageMap stages(dag.size(), 1);
  for (int v : *order) {
    for (int s : dag.succs[v]) stages[s] = std::max(stages[s], stages[v] + 1);
  }
  return stages;
}

std::vector<int> affix_set(const Dag& dag, const StageMap& stages, int v) {
  if (v < 0 || v >= dag.size()) throw ValidationError("affix_set: unknown node index " + std::to_string(v));
  std::set<int> out;
  for (const auto* nbrs : {&dag.succs[v], &dag.preds[v]}) {
    for (int u : *nbrs) {
      if (std::abs(stages[u] - stages[v]) == 1) out.insert(u);
    }
  }
  return {out.begin(), out.end()};
}

Dag merge_nodes(const Dag& dag, int u, int v) {
  if (u == v) throw ValidationError("cannot merge a node with itself");
  const int keep = std::min(u, v);
  const int drop = std::max(u, v);
  // Old index -> new index; `drop` folds into `keep`, later slots shift down.
  auto remap = [&](int x) {
    if (x == drop) return keep;
    return x > drop ? x - 1 : x;
  };
  Dag out;
  for (int x = 0; x < dag.size(); ++x) {
    if (x == drop) continue;
    out.ids.push_back(dag.ids[x]);
    out.members.push_back(dag.members[x]);
    out.weights.push_back(dag.weights[x]);
    out.complex_count.push_back(dag.complex_count[x]);
  }
  auto& members = out.members[keep];
  members.insert(members.end(), dag.members[drop].begin(), dag.members[drop].end());
  std::sort(members.begin(), members.end());
  out.ids[keep] = members.front();
  out.weights[keep] = dag.weights[u] + dag.weights[v];
  out.complex_count[keep] = dag.complex_count[u] + dag.complex_count[v];
  out.succs.assign(out.ids.size(), {});
  out.preds.assign(out.ids.size(), {});
  for (int x = 0; x < dag.size(); ++x) {
    for (int s : dag.succs[x]) {
      const int a = remap(x);
      const int b = remap(s);
      if (a == b) continue;
      out.succs[a].insert(b);
      out.preds[b].insert(a);
    }
  }
  return out;
}

MergeResult merge_affix(const Dag& dag, const StageMap& stages, int u, int v) {
  const auto affix = affix_set(dag, stages, v);
  if (!std::binary_search(affix.begin(), affix.end(), u)) {
    throw ValidationError("merge_affix: '" + dag.ids.at(u) + "' is not in the affix set of '" +
                          dag.ids.at(v) + "'");
  }
  MergeResult result;
  result.dag = merge_nodes(dag, u, v);
  result.stages = topological_stages(result.dag);
  result.merged = std::min(u, v);
  return result;
}

namespace {

Partition to_partition(const Dag& dag, const std::vector<std::string>& order) {
  std::map<std::string, int> position;
  for (size_t k = 0; k < order.size(); ++k) position[order[k]] = static_cast<int>(k);
  Partition partition;
  for (int v = 0; v < dag.size(); ++v) {
    Part part;
    part.nodes = dag.members[v];
    std::sort(part.nodes.begin(), part.nodes.end(), [&](const auto& a, const auto& b) {
      return position.at(a) < position.at(b);
    });
    part.weight = dag.weights[v];
    part.complex_count = dag.complex_count[v];
    partition.parts.push_back(std::move(part));
  }
  std::sort(partition.parts.begin(), partition.parts.end(), [&](const Part& a, const Part& b) {
    return position.at(a.nodes.front()) < position.at(b.nodes.front());
  });
  for (int k = 0; k < partition.size(); ++k) partition.parts[k].id = k;
  return partition;
}

// True when a should be preferred over b as the heaviest candidate.
bool heavier(const Dag& dag, int a, int b) {
  if (dag.weights[a] != dag.weights[b]) return dag.weights[a] > dag.weights[b];
  return dag.ids[a] < dag.ids[b];
}

bool lighter(const Dag& dag, int a, int b) {
  if (dag.weights[a] != dag.weights[b]) return dag.weights[a] < dag.weights[b];
  return dag.ids[a] < dag.ids[b];
}

}  // namespace

Partition cluster(const Dag& input, const ClusterOptions& options) {
  if (!(options.threshold > 0.0)) throw ValidationError("cluster threshold must be positive");
  std::vector<std::string> order;
  for (const auto& m : input.members) order.insert(order.end(), m.begin(), m.end());

  Dag dag = input;
  StageMap stages = topological_stages(dag);
  // Candidates tracked by hyper-node id; ids are stable across merges except
  // for the merged pair, whose new id is the smaller of the two.
  std::set<std::string> cand(dag.ids.begin(), dag.ids.end());
  while (!cand.empty()) {
    int v = -1;
    for (int x = 0; x < dag.size(); ++x) {
      if (!cand.count(dag.ids[x])) continue;
      if (v < 0 || heavier(dag, x, v)) v = x;
    }
    int best = -1;
    for (int u : affix_set(dag, stages, v)) {
      if (!(dag.weights[v] + dag.weights[u] < options.threshold)) continue;
      if (options.max_complex &&
          dag.complex_count[v] + dag.complex_count[u] > *options.max_complex) {
        continue;
      }
      if (best < 0 || lighter(dag, u, best)) best = u;
    }
    if (best < 0) {
      cand.erase(dag.ids[v]);
      continue;
    }
    cand.erase(dag.ids[v]);
    cand.erase(dag.ids[best]);
    MergeResult merged = merge_affix(dag, stages, best, v);
    dag = std::move(merged.dag);
    stages = std::move(merged.stages);
    cand.insert(dag.ids[merged.merged]);
  }
  return to_partition(dag, order);
}

Partition cluster(const Graph& graph, const WeightParams& params, double threshold,
                  std::optional<int> max_complex) {
  return cluster(make_dag(graph, params), ClusterOptions{threshold, max_complex});
}

bool is_acyclic_partition(const Dag& dag, const Partition& partition) {
  std::map<std::string, int> owner;
  for (int p = 0; p < partition.size(); ++p) {
    for (const auto& id : partition.parts[p].nodes) {
      if (!owner.emplace(id, p).second) throw ValidationError("node '" + id + "' appears in two parts");
    }
  }
  std::vector<int> part_of(dag.size());
  for (int v = 0; v < dag.size(); ++v) {
    // Hyper-node members all belong to the same part by construction.
    for (const auto& id : dag.members[v]) {
      auto it = owner.find(id);
      if (it == owner.end()) throw ValidationError("node '" + id + "' is not covered by the partition");
      part_of[v] = it->second;
    }
  }
  size_t members = 0;
  for (const auto& m : dag.members) members += m.size();
  if (owner.size() != members) throw ValidationError("partition names nodes outside the graph");
  Dag quotient;
  for (int p = 0; p < partition.size(); ++p) quotient.add_node(std::to_string(p), 0.0);
  for (int v = 0; v < dag.size(); ++v) {
    for (int s : dag.succs[v]) {
      if (part_of[v] != part_of[s]) quotient.add_edge(part_of[v], part_of[s]);
    }
  }
  return !has_cycle(quotient);
}

bool is_acyclic_partition(const Graph& graph, const Partition& partition) {
  return is_acyclic_partition(make_dag(graph, WeightParams{}), partition);
}

Partition baseline_partition(const Graph& graph, const WeightParams& params) {
  auto is_delimiter = [&](int v) {
    const auto kind = graph.node(v).kind;
    return kind == OpKind::kReshape || kind == OpKind::kTranspose;
  };
  std::vector<bool> assigned(graph.size(), false);
  std::vector<std::vector<int>> chains;
  for (int start : graph.topological_order()) {
    if (assigned[start]) continue;
    std::vector<int> chain{start};
    assigned[start] = true;
    int tail = start;
    while (!is_delimiter(tail) && graph.succs(tail).size() == 1) {
      const int next = graph.succs(tail).front();
      if (assigned[next] || graph.node(next).complex() || graph.preds(next).size() != 1) break;
      chain.push_back(next);
      assigned[next] = true;
      tail = next;
    }
    chains.push_back(std::move(chain));
  }
  Partition partition;
  for (const auto& chain : chains) {
    Part part;
    part.id = partition.size();
    for (int v : chain) {
      part.nodes.push_back(graph.node(v).id);
      part.weight += op_weight(graph.node(v), params);
      part.complex_count += graph.node(v).complex() ? 1 : 0;
    }
    partition.parts.push_back(std::move(part));
  }
  return partition;
}

double jain_index(std::span<const double> weights) {
  if (weights.empty()) return 0.0;
  double sum = 0.0, sum_sq = 0.0;
  for (double w : weights) {
    sum += w;
    sum_sq += w * w;
  }
  if (sum_sq == 0.0) return 1.0;
  return sum * sum / (static_cast<double>(weights.size()) * sum_sq);
}

PartitionStats partition_stats(const Partition& partition) {
  PartitionStats stats;
  std::vector<double> weights;
  for (const auto& part : partition.parts) weights.push_back(part.weight);
  stats.count = static_cast<int>(weights.size());
  stats.histogram.assign(10, 0);
  if (weights.empty()) return stats;
  stats.mean_weight = std::accumulate(weights.begin(), weights.end(), 0.0) / weights.size();
  std::vector<double> sorted = weights;
  std::sort(sorted.begin(), sorted.end());
  const size_t mid = sorted.size() / 2;
  stats.median_weight = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  stats.jain = jain_index(weights);
  for (double w : weights) {
    int bin = w < 2.0 ? 0 : static_cast<int>(std::floor(std::log2(w)));
    stats.histogram[std::clamp(bin, 0, 9)]++;
  }
  return stats;
}

}  // namespace gopt
