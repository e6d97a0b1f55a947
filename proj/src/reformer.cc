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

#include "gopt/reformer.h"

#include <algorithm>

#include "gopt/error.h"
#include "gopt/partitioner.h"
#include "gopt/rng.h"

namespace gopt {

void DncConfig::validate(double parent_threshold) const {
  if (mini_budget < 1 || join_budget < 1) throw ValidationError("budgets must be >= 1");
  if (stable_window < 1) throw ValidationError("stabilization window must be >= 1");
  if (!(mini_threshold > 0) || mini_threshold > parent_threshold) {
    throw ValidationError("mini threshold must be positive and not above the parent threshold");
  }
}

std::vector<MiniSubgraph> split(const Subgraph& parent, const DncConfig& cfg) {
  const Dag dag = make_dag(parent, cfg.weights);
  const Partition pieces = cluster(dag, {cfg.mini_threshold, 1});
  const Graph& g = parent.graph();
  const std::vector<std::string> parent_nodes = parent.ids();
  std::vector<MiniSubgraph> minis;
  for (const auto& part : pieces.parts) {
    const std::string name = parent.name() + "." + std::to_string(minis.size());
    minis.push_back({Subgraph(parent.graph_ptr(), part.nodes, name), parent.name(), parent_nodes,
                     part.weight, part.complex_count});
  }
  std::stable_sort(minis.begin(), minis.end(), [&](const MiniSubgraph& a, const MiniSubgraph& b) {
    const auto& order = g.topological_order();
    auto rank = [&](const MiniSubgraph& m) {
      return std::find(order.begin(), order.end(), m.subgraph.nodes().front()) - order.begin();
    };
    return rank(a) < rank(b);
  });
  return minis;
}

Joined join(const std::vector<MiniSubgraph>& minis, const std::vector<Schedule>& tuned) {
  if (minis.empty()) throw ValidationError("nothing to join");
  if (tuned.size() != minis.size()) {
    throw ValidationError("join needs one schedule per mini-subgraph (" +
                          std::to_string(minis.size()) + " minis, " + std::to_string(tuned.size()) +
                          " schedules)");
  }
  const MiniSubgraph& first = minis.front();
  std::vector<std::string> covered;
  for (const auto& mini : minis) {
    if (mini.parent != first.parent || mini.parent_nodes != first.parent_nodes ||
        mini.subgraph.graph_ptr() != first.subgraph.graph_ptr()) {
      throw ValidationError("mini-subgraph '" + mini.subgraph.name() +
                            "' belongs to a different parent");
    }
    for (const auto& id : mini.subgraph.ids()) covered.push_back(id);
  }
  std::vector<std::string> expected = first.parent_nodes;
  std::sort(covered.begin(), covered.end());
  std::sort(expected.begin(), expected.end());
  if (covered != expected) throw ValidationError("mini-subgraphs do not cover their parent exactly");

  Subgraph parent(first.subgraph.graph_ptr(), first.parent_nodes, first.parent);
  Schedule composed;
  for (size_t k = 0; k < minis.size(); ++k) {
    const Schedule local = canonicalize(minis[k].subgraph, tuned[k]);
    for (const auto& [id, t] : local.tiling) composed.tiling[id] = t;
    for (const auto& [key, mode] : local.fusion) composed.fusion[key] = mode;
  }
  composed = canonicalize(parent, composed);
  return {std::move(parent), std::move(composed)};
}

DncResult run_divide_and_conquer(const Subgraph& parent, const DncConfig& cfg, uint64_t seed) {
  DncResult out;
  out.minis = split(parent, cfg);
  const int total = cfg.mini_budget + cfg.join_budget;
  if (out.minis.size() == 1) {
    out.final = tune(parent, total, seed, std::nullopt, cfg.tune);
    out.evaluations = static_cast<int>(out.final.history.size());
    return out;
  }
  const int m = static_cast<int>(out.minis.size());
  TuneOptions mini_options = cfg.tune;
  mini_options.stop_window = cfg.stable_window;
  mini_options.stop_epsilon = cfg.stable_epsilon;
  std::vector<Schedule> tuned;
  int used = 0;
  for (int k = 0; k < m; ++k) {
    const int share = cfg.mini_budget / m + (k < cfg.mini_budget % m ? 1 : 0);
    if (share == 0) {
      out.mini_results.push_back({});
      tuned.emplace_back();
      continue;
    }
    out.mini_results.push_back(
        tune(out.minis[k].subgraph, share, derive_seed(seed, k), std::nullopt, mini_options));
    used += static_cast<int>(out.mini_results.back().history.size());
    tuned.push_back(out.mini_results.back().best);
  }
  Joined joined = join(out.minis, tuned);
  out.composed = joined.schedule;
  const int join_budget = total - used;
  out.final = tune(joined.subgraph, join_budget, derive_seed(seed, m), joined.schedule, cfg.tune);
  out.composed_cost = out.final.history.trials.front().cost;
  out.evaluations = used + static_cast<int>(out.final.history.size());
  return out;
}

}  // namespace gopt
