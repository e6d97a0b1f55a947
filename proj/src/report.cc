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

#include "gopt/report.h"

#include <map>
#include <sstream>

#include "gopt/error.h"
#include "gopt/loop_interp.h"
#include "gopt/rng.h"

namespace gopt {

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string node_line(const OperatorNode& node) {
  const char* fill = node.complex() ? "palegreen" : "orange";
  return quoted(node.id) + " [label=" + quoted(node.id + "\\n" + std::string(to_string(node.kind))) +
         ", style=filled, fillcolor=" + fill + "];\n";
}

}  // namespace

std::string emit_dot(const Graph& graph, const Partition* partition) {
  std::string out = "digraph G {\n  node [shape=box];\n";
  if (partition) {
    for (const auto& part : partition->parts) {
      out += "  subgraph cluster_" + std::to_string(part.id) + " {\n    label=" +
             quoted("S" + std::to_string(part.id)) + ";\n";
      for (const auto& id : part.nodes) out += "    " + node_line(graph.node(graph.index_of(id)));
      out += "  }\n";
    }
  } else {
    for (const auto& node : graph.nodes()) out += "  " + node_line(node);
  }
  for (const auto& edge : graph.edges()) out += "  " + quoted(edge.src) + " -> " + quoted(edge.dst) + ";\n";
  return out + "}\n";
}

Json stats_json(const PartitionStats& stats) {
  return Json{{"count", stats.count},
              {"mean_weight", stats.mean_weight},
              {"median_weight", stats.median_weight},
              {"jain", stats.jain},
              {"histogram", stats.histogram}};
}

Json partition_json(const Partition& partition) {
  Json subgraphs = Json::array();
  for (const auto& part : partition.parts) {
    subgraphs.push_back({{"id", part.id},
                         {"nodes", part.nodes},
                         {"weight", part.weight},
                         {"complex", part.complex_count}});
  }
  return Json{{"subgraphs", subgraphs}, {"stats", stats_json(partition_stats(partition))}};
}

Json schedule_json(const Schedule& schedule) {
  Json tiling = Json::object();
  for (const auto& [id, t] : schedule.tiling) tiling[id] = {{"boundary", t.boundary}, {"inner", t.inner}};
  Json fusion = Json::array();
  for (const auto& d : schedule.decisions()) {
    fusion.push_back({{"producer", d.producer}, {"consumer", d.consumer}, {"mode", to_string(d.mode)}});
  }
  return Json{{"tiling", tiling}, {"fusion", fusion}};
}

Schedule schedule_from_json(const Json& doc) {
  Schedule s;
  try {
    if (doc.contains("tiling")) {
      for (const auto& [id, t] : doc.at("tiling").items()) {
        s.tiling[id] = {t.at("boundary").get<std::vector<int64_t>>(), t.at("inner").get<std::vector<int64_t>>()};
      }
    }
    if (doc.contains("fusion")) {
      for (const auto& d : doc.at("fusion")) {
        s.set_mode(d.at("producer").get<std::string>(), d.at("consumer").get<std::string>(),
                   parse_fusion_mode(d.at("mode").get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed schedule: ") + e.what());
  }
  return s;
}

Json breakdown_json(const CostBreakdown& b) {
  return Json{{"cost", b.cost}, {"macs", b.macs}, {"accesses", b.accesses}, {"misses", b.misses}};
}

Json pair_analysis_json(const OperatorNode& up, const OperatorNode& down,
                        const std::vector<std::string>& chain, const TileSpec& tiles) {
  Json out{{"producer", up.id}, {"consumer", down.id}, {"chain", chain}};
  try {
    check_fusion_pair(up, down);
  } catch (const FusionError& e) {
    out["analyzable"] = false;
    out["reason"] = e.what();
    return out;
  }
  const FusionVerdict verdict = intensive_fusion_legal(up, down);
  out["analyzable"] = true;
  out["category"] = to_string(verdict.category);
  out["reused_dims"] = verdict.reused_dims;
  out["required_untiled"] = verdict.required_untiled;
  Json tile_doc = Json::object();
  const LoopNest nest = loop_nest(down);
  for (size_t k = 0; k < nest.spatial.size(); ++k) tile_doc[nest.spatial[k].name] = tiles.extents[k];
  out["tiles"] = tile_doc;
  const Redundancy r = redundancy(up, down, tiles);
  out["fused_trips"] = r.fused_trips;
  out["unfused_trips"] = r.unfused_trips;
  out["ratio"] = r.ratio;
  out["cond1"] = r.cond1;
  out["cond2"] = r.cond2;
  out["tile_shrinks"] = r.tile_shrinks;
  out["cond1_loops"] = r.cond1_loops;
  out["outer_downstream"] = r.outer_downstream;
  out["outer_upstream"] = r.outer_upstream;
  if (down.attr_or("pad", 0) == 0) {
    out["fused_symbolic"] = fused_upstream_trips_symbolic(up, down, tiles).str();
    out["unfused_symbolic"] = unfused_upstream_trips_symbolic(up, down).str();
  } else {
    out["fused_symbolic"] = nullptr;
    out["unfused_symbolic"] = nullptr;
  }
  return out;
}

Json fuse_analyze_report(const Graph& graph, const std::map<std::string, int64_t>& tiles) {
  auto shared = std::make_shared<const Graph>(graph);
  const Subgraph all = Subgraph::whole(shared);
  Json pairs = Json::array();
  for (const auto& pair : complex_pairs(all)) {
    const auto& up = graph.node(graph.index_of(pair.producer));
    const auto& down = graph.node(graph.index_of(pair.consumer));
    const LoopNest nest = loop_nest(down);
    Json entry = pair_analysis_json(up, down, pair.chain, make_tile(nest, tiles));
    if (entry.value("analyzable", false)) {
      const FusionVerdict verdict = intensive_fusion_legal(up, down);
      if (verdict.category != FusionCategory::kNotApplicable) {
        TileSpec best = unit_tile(nest);
        for (const auto& dim : verdict.required_untiled) {
          const int k = nest.spatial_index(dim);
          best.extents[k] = nest.spatial[k].extent;
        }
        const Redundancy r = redundancy(up, down, best);
        Json tile_doc = Json::object();
        for (size_t k = 0; k < nest.spatial.size(); ++k) tile_doc[nest.spatial[k].name] = best.extents[k];
        entry["intensive"] = {{"tiles", tile_doc}, {"fused_trips", r.fused_trips}, {"ratio", r.ratio}};
      }
    }
    pairs.push_back(std::move(entry));
  }
  return Json{{"schema_version", kSchemaVersion}, {"pairs", pairs}};
}

namespace {

std::vector<double> costs_of(const TuneHistory& history) {
  std::vector<double> out;
  for (const auto& t : history.trials) out.push_back(t.cost);
  return out;
}

// Verdict and redundancy of every legal intensive pair under the final
// schedule; fused pairs are re-counted by the interpreter.
Json fusion_verdicts(const Subgraph& sub, const Schedule& schedule) {
  const Graph& g = sub.graph();
  Json out = Json::array();
  std::map<std::string, int64_t> trips;
  bool counted = false;
  for (const auto& cand : fusion_candidates(sub)) {
    if (cand.mode != FusionMode::kIntensive) continue;
    const auto& up = g.node(g.index_of(cand.producer));
    const auto& down = g.node(g.index_of(cand.consumer));
    const FusionVerdict verdict = intensive_fusion_legal(up, down);
    const FusionMode mode = schedule.mode(cand.producer, cand.consumer);
    const TileSpec tiles{schedule.tiling_for(down).boundary};
    const Redundancy r = redundancy(up, down, tiles);
    Json entry{{"producer", cand.producer},
               {"consumer", cand.consumer},
               {"category", to_string(verdict.category)},
               {"required_untiled", verdict.required_untiled},
               {"mode", to_string(mode)},
               {"ratio", r.ratio}};
    if (mode == FusionMode::kIntensive) {
      if (!counted) {
        trips = count_trips(sub, schedule);
        counted = true;
      }
      entry["oracle_trips"] = trips.at(up.id);
      entry["oracle_ratio"] =
          static_cast<double>(trips.at(up.id)) / static_cast<double>(unfused_upstream_trips(up));
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace

Json pipeline_report(std::shared_ptr<const Graph> graph, const PipelineOptions& options) {
  options.dnc.validate(options.threshold);
  const Dag dag = make_dag(*graph, options.dnc.weights);
  const Partition partition = cluster(dag, {options.threshold, options.max_complex});
  Json subgraphs = Json::array();
  double total = 0.0;
  int evaluations = 0;
  for (const auto& part : partition.parts) {
    const Subgraph sub(graph, part.nodes, "S" + std::to_string(part.id));
    check_interpretable(sub);
    const DncResult r = run_divide_and_conquer(sub, options.dnc, derive_seed(options.seed, part.id));
    Json minis = Json::array();
    for (size_t k = 0; k < r.minis.size(); ++k) {
      Json mini{{"nodes", r.minis[k].subgraph.ids()},
                {"weight", r.minis[k].weight},
                {"complex", r.minis[k].complex_count}};
      if (k < r.mini_results.size()) {
        const TuneHistory& h = r.mini_results[k].history;
        mini["evaluations"] = h.size();
        mini["best_cost"] = h.size() ? Json(r.mini_results[k].best_cost) : Json(nullptr);
        mini["history"] = costs_of(h);
        mini["schedule"] = schedule_json(r.mini_results[k].best);
      }
      minis.push_back(std::move(mini));
    }
    const CostBreakdown breakdown = cost_breakdown(sub, r.final.best, options.dnc.tune.cost);
    total += r.final.best_cost;
    evaluations += r.evaluations;
    Json entry{{"id", part.id},
               {"nodes", part.nodes},
               {"weight", part.weight},
               {"minis", minis}};
    entry["composed"] = r.minis.size() > 1
                            ? Json{{"schedule", schedule_json(r.composed)}, {"cost", r.composed_cost}}
                            : Json(nullptr);
    entry["join_history"] = costs_of(r.final.history);
    entry["evaluations"] = r.evaluations;
    entry["final_cost"] = r.final.best_cost;
    entry["breakdown"] = breakdown_json(breakdown);
    entry["schedule"] = schedule_json(r.final.best);
    entry["fusion"] = fusion_verdicts(sub, r.final.best);
    subgraphs.push_back(std::move(entry));
  }
  const auto& d = options.dnc;
  Json config{{"threshold", options.threshold},
              {"max_complex", options.max_complex ? Json(*options.max_complex) : Json(nullptr)},
              {"mini_threshold", d.mini_threshold},
              {"mini_budget", d.mini_budget},
              {"join_budget", d.join_budget},
              {"stable_window", d.stable_window},
              {"stable_epsilon", d.stable_epsilon},
              {"weight_slope", d.weights.slope},
              {"weight_bias", d.weights.bias},
              {"cache_lines", d.tune.cost.cache_lines},
              {"line_elems", d.tune.cost.line_elems},
              {"alpha", d.tune.cost.alpha},
              {"beta", d.tune.cost.beta},
              {"allow_intensive", d.tune.allow_intensive},
              {"seed", options.seed}};
  return Json{{"schema_version", kSchemaVersion},
              {"config", config},
              {"partition", partition_json(partition)},
              {"subgraphs", subgraphs},
              {"total_cost", total},
              {"evaluations", evaluations}};
}

}  // namespace gopt
