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

#include "gopt/schedule.h"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "gopt/error.h"
#include "gopt/fusion_analysis.h"

namespace gopt {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kConventional:
      return "conventional";
    case FusionMode::kIntensive:
      return "intensive";
    case FusionMode::kNone:
      break;
  }
  return "none";
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "none") return FusionMode::kNone;
  if (name == "conventional") return FusionMode::kConventional;
  if (name == "intensive") return FusionMode::kIntensive;
  throw ParseError("unknown fusion mode '" + std::string(name) + "'");
}

FusionMode Schedule::mode(const std::string& producer, const std::string& consumer) const {
  auto it = fusion.find({producer, consumer});
  return it == fusion.end() ? FusionMode::kNone : it->second;
}

void Schedule::set_mode(const std::string& producer, const std::string& consumer, FusionMode m) {
  if (m == FusionMode::kNone) {
    fusion.erase({producer, consumer});
  } else {
    fusion[{producer, consumer}] = m;
  }
}

std::vector<FusionDecision> Schedule::decisions() const {
  std::vector<FusionDecision> out;
  for (const auto& [key, m] : fusion) out.push_back({key.first, key.second, m});
  return out;
}

OpTiling full_tiling(const LoopNest& nest) {
  return {nest.spatial_extents(), nest.spatial_extents()};
}

OpTiling Schedule::tiling_for(const OperatorNode& node) const {
  auto it = tiling.find(node.id);
  return it == tiling.end() ? full_tiling(loop_nest(node)) : it->second;
}

std::string Schedule::digest() const {
  std::string out;
  auto join = [](const std::vector<int64_t>& v) {
    std::string s;
    for (size_t k = 0; k < v.size(); ++k) {
      if (k) s += ".";
      s += std::to_string(v[k]);
    }
    return s;
  };
  for (const auto& [id, t] : tiling) out += id + "=" + join(t.boundary) + "/" + join(t.inner) + ";";
  out += "|";
  for (const auto& [key, m] : fusion) {
    out += key.first + ">" + key.second + "=" + std::string(to_string(m)) + ";";
  }
  return out;
}

namespace {

bool single_consumer(const Graph& g, int p, int c) {
  return g.succs(p).size() == 1 && g.succs(p).front() == c;
}

}  // namespace

std::vector<FusionCandidate> complex_pairs(const Subgraph& sub) {
  const Graph& g = sub.graph();
  std::vector<FusionCandidate> out;
  for (int d : sub.nodes()) {
    const auto& down = g.node(d);
    if (!down.complex() || g.preds(d).size() != 1) continue;
    // Walk back through single-consumer elementwise links to complex producers.
    std::vector<int> chain;
    std::function<void(int, int)> walk = [&](int node, int consumer) {
      if (!sub.contains(node) || !single_consumer(g, node, consumer)) return;
      const auto& op = g.node(node);
      if (op.complex()) {
        FusionCandidate cand{op.id, down.id, FusionMode::kIntensive, {}};
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) cand.chain.push_back(g.node(*it).id);
        out.push_back(std::move(cand));
        return;
      }
      if (!is_elementwise(op.kind)) return;
      chain.push_back(node);
      for (int p : g.preds(node)) walk(p, node);
      chain.pop_back();
    };
    walk(g.preds(d).front(), d);
  }
  return out;
}

std::vector<FusionCandidate> fusion_candidates(const Subgraph& sub, IntensivePolicy policy) {
  const Graph& g = sub.graph();
  std::vector<FusionCandidate> out;
  for (int c : sub.nodes()) {
    if (!is_elementwise(g.node(c).kind)) continue;
    for (int p : g.preds(c)) {
      if (sub.contains(p) && single_consumer(g, p, c)) {
        out.push_back({g.node(p).id, g.node(c).id, FusionMode::kConventional, {}});
      }
    }
  }
  for (auto& pair : complex_pairs(sub)) {
    const auto& up = g.node(g.index_of(pair.producer));
    const auto& down = g.node(g.index_of(pair.consumer));
    if (policy == IntensivePolicy::kAnyComplexPair ||
        intensive_fusion_legal(up, down).category != FusionCategory::kNotApplicable) {
      out.push_back(std::move(pair));
    }
  }
  return out;
}

FusionPlan plan_fusion(const Subgraph& sub, const Schedule& schedule, IntensivePolicy policy) {
  const Graph& g = sub.graph();
  auto member = [&](const std::string& id) {
    auto idx = g.find(id);
    if (!idx || !sub.contains(*idx)) throw ScheduleError("schedule names node '" + id + "' outside the subgraph");
    return *idx;
  };
  for (const auto& [id, t] : schedule.tiling) {
    const auto& node = g.node(member(id));
    const LoopNest nest = loop_nest(node);
    if (t.boundary.size() != nest.spatial.size() || t.inner.size() != nest.spatial.size()) {
      throw ScheduleError("tiling of '" + id + "' has the wrong rank");
    }
    for (size_t k = 0; k < nest.spatial.size(); ++k) {
      const int64_t b = t.boundary[k], i = t.inner[k], e = nest.spatial[k].extent;
      if (b < 1 || e % b != 0 || i < 1 || b % i != 0) {
        throw ScheduleError("tiling of '" + id + "' loop '" + nest.spatial[k].name + "': " +
                            std::to_string(i) + "/" + std::to_string(b) + " does not nest in " +
                            std::to_string(e));
      }
    }
  }

  const auto candidates = fusion_candidates(sub, policy);
  auto find_candidate = [&](const std::string& p, const std::string& c,
                            FusionMode m) -> const FusionCandidate* {
    for (const auto& cand : candidates) {
      if (cand.producer == p && cand.consumer == c && cand.mode == m) return &cand;
    }
    return nullptr;
  };

  const int n = g.size();
  std::vector<int> next(n, -1), prev(n, -1);
  std::vector<std::pair<int, const FusionCandidate*>> intensive;
  for (const auto& [key, mode] : schedule.fusion) {
    const int p = member(key.first);
    const int c = member(key.second);
    if (mode == FusionMode::kNone) continue;
    const FusionCandidate* cand = find_candidate(key.first, key.second, mode);
    if (!cand) {
      throw ScheduleError(std::string(to_string(mode)) + " fusion " + key.first + "->" + key.second +
                          " is not legal in this subgraph");
    }
    if (mode == FusionMode::kConventional) {
      if (prev[c] >= 0) {
        throw ScheduleError("node '" + key.second + "' cannot absorb two producers conventionally");
      }
      next[p] = c;
      prev[c] = p;
    } else {
      intensive.emplace_back(p, cand);
    }
  }

  std::vector<FusionGroup> groups;
  std::vector<int> group_of(n, -1);
  for (int v : sub.nodes()) {
    if (prev[v] >= 0) continue;
    FusionGroup group;
    group.anchor = v;
    for (int x = next[v]; x >= 0; x = next[x]) group.epilogue.push_back(x);
    groups.push_back(group);
  }
  for (size_t k = 0; k < groups.size(); ++k) {
    group_of[groups[k].anchor] = static_cast<int>(k);
    for (int x : groups[k].epilogue) group_of[x] = static_cast<int>(k);
  }

  std::vector<int> attached_into(groups.size(), -1);
  std::set<int> consumers;
  for (const auto& [u, cand] : intensive) {
    const int d = g.index_of(cand->consumer);
    const int gu = group_of[u];
    const int gd = group_of[d];
    std::vector<std::string> epilogue;
    for (int x : groups[gu].epilogue) epilogue.push_back(g.node(x).id);
    if (epilogue != cand->chain) {
      throw ScheduleError("intensive fusion " + cand->producer + "->" + cand->consumer +
                          " needs the whole epilogue between them fused conventionally");
    }
    if (!consumers.insert(gd).second) {
      throw ScheduleError("node '" + cand->consumer + "' receives two intensive producers");
    }
    attached_into[gu] = gd;
    if (policy == IntensivePolicy::kAnyComplexPair) continue;
    const FusionVerdict verdict = intensive_fusion_legal(g.node(u), g.node(d));
    const OpTiling tiling = schedule.tiling_for(g.node(d));
    const LoopNest nest = loop_nest(g.node(d));
    for (const auto& dim : verdict.required_untiled) {
      const int k = nest.spatial_index(dim);
      if (tiling.boundary[k] != nest.spatial[k].extent) {
        throw ScheduleError("intensive fusion " + cand->producer + "->" + cand->consumer + ": loop '" +
                            dim + "' of '" + cand->consumer + "' must stay untiled");
      }
    }
  }
  for (size_t k = 0; k < groups.size(); ++k) {
    if (attached_into[k] >= 0 && consumers.count(static_cast<int>(k))) {
      throw ScheduleError("intensive fusion chains deeper than one pair are not supported (at '" +
                          g.node(groups[k].anchor).id + "')");
    }
  }
  for (size_t k = 0; k < groups.size(); ++k) {
    const int into = attached_into[k];
    if (into < 0) continue;
    groups[into].attached_anchor = groups[k].anchor;
    groups[into].attached_epilogue = groups[k].epilogue;
    group_of[groups[k].anchor] = into;
    for (int x : groups[k].epilogue) group_of[x] = into;
  }

  // Topological order over the surviving groups, earliest anchor first.
  std::vector<int> position(n, 0);
  for (int k = 0; k < static_cast<int>(sub.nodes().size()); ++k) position[sub.nodes()[k]] = k;
  std::vector<std::set<int>> succ(groups.size());
  std::vector<int> indeg(groups.size(), 0);
  for (int v : sub.nodes()) {
    for (int s : g.succs(v)) {
      if (!sub.contains(s) || group_of[v] == group_of[s]) continue;
      if (succ[group_of[v]].insert(group_of[s]).second) indeg[group_of[s]]++;
    }
  }
  auto later = [&](int a, int b) {
    const int pa = groups[a].attached_anchor >= 0
                       ? std::min(position[groups[a].anchor], position[groups[a].attached_anchor])
                       : position[groups[a].anchor];
    const int pb = groups[b].attached_anchor >= 0
                       ? std::min(position[groups[b].anchor], position[groups[b].attached_anchor])
                       : position[groups[b].anchor];
    return pa > pb;
  };
  std::priority_queue<int, std::vector<int>, decltype(later)> ready(later);
  size_t live = 0;
  for (size_t k = 0; k < groups.size(); ++k) {
    if (attached_into[k] >= 0) continue;
    ++live;
    if (indeg[k] == 0) ready.push(static_cast<int>(k));
  }
  FusionPlan plan;
  while (!ready.empty()) {
    const int k = ready.top();
    ready.pop();
    plan.groups.push_back(groups[k]);
    for (int s : succ[k]) {
      if (--indeg[s] == 0) ready.push(s);
    }
  }
  if (plan.groups.size() != live) throw ScheduleError("fusion groups form a cycle");
  return plan;
}

void validate_schedule(const Subgraph& subgraph, const Schedule& schedule) {
  (void)plan_fusion(subgraph, schedule);
}

Schedule canonicalize(const Subgraph& sub, const Schedule& schedule) {
  const FusionPlan plan = plan_fusion(sub, schedule);
  const Graph& g = sub.graph();
  Schedule out;
  out.fusion = schedule.fusion;
  for (const auto& group : plan.groups) {
    const auto& node = g.node(group.anchor);
    auto it = schedule.tiling.find(node.id);
    if (it == schedule.tiling.end()) continue;
    if (it->second == full_tiling(loop_nest(node))) continue;
    out.tiling.insert(*it);
  }
  return out;
}

}  // namespace gopt
