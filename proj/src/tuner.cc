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

#include "gopt/tuner.h"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <set>

#include "gopt/cache_sim.h"
#include "gopt/error.h"
#include "gopt/fusion_analysis.h"
#include "gopt/loop_interp.h"

namespace gopt {

void CostConfig::validate() const {
  if (cache_lines < 1 || line_elems < 1 || !(alpha > 0) || !(beta > 0)) {
    throw ValidationError("cost config fields must all be positive");
  }
}

CostBreakdown cost_breakdown(const Subgraph& sub, const Schedule& schedule, const CostConfig& cfg) {
  cfg.validate();
  CacheSimSink sink(cfg.cache_lines, cfg.line_elems);
  const auto trips = stream_memory(sub, schedule, sink);
  CostBreakdown out;
  for (int v : sub.nodes()) {
    const auto& node = sub.graph().node(v);
    out.macs += trips.at(node.id) * (node.complex() ? loop_nest(node).reduction_size() : 1);
  }
  out.accesses = sink.accesses();
  out.misses = sink.misses();
  out.cost = cfg.alpha * static_cast<double>(out.macs) + cfg.beta * static_cast<double>(out.misses);
  return out;
}

double cost(const Subgraph& sub, const Schedule& schedule, const CostConfig& cfg) {
  return cost_breakdown(sub, schedule, cfg).cost;
}

namespace {

std::vector<int64_t> divisors(int64_t n) {
  std::vector<int64_t> out;
  for (int64_t d = 1; d <= n; ++d) {
    if (n % d == 0) out.push_back(d);
  }
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& options, Rng& rng) {
  return options[rng.below(options.size())];
}

// Conventional links an intensive candidate needs.
std::vector<std::pair<std::string, std::string>> chain_links(const FusionCandidate& cand) {
  std::vector<std::pair<std::string, std::string>> links;
  std::string prev = cand.producer;
  for (const auto& c : cand.chain) {
    links.emplace_back(prev, c);
    prev = c;
  }
  return links;
}

const FusionCandidate* find_candidate(const std::vector<FusionCandidate>& candidates,
                                      const std::string& p, const std::string& c, FusionMode mode) {
  for (const auto& cand : candidates) {
    if (cand.producer == p && cand.consumer == c && cand.mode == mode) return &cand;
  }
  return nullptr;
}

bool tiling_nests(const LoopNest& nest, const OpTiling& t) {
  if (t.boundary.size() != nest.spatial.size() || t.inner.size() != nest.spatial.size()) return false;
  for (size_t k = 0; k < nest.spatial.size(); ++k) {
    const int64_t e = nest.spatial[k].extent;
    if (t.boundary[k] < 1 || e % t.boundary[k] != 0) return false;
    if (t.inner[k] < 1 || t.boundary[k] % t.inner[k] != 0) return false;
  }
  return true;
}

// Removes intensive decisions that rely on the conventional link p->c.
void drop_dependent_intensive(Schedule& s, const std::vector<FusionCandidate>& candidates,
                              const std::string& p, const std::string& c) {
  for (const auto& cand : candidates) {
    if (cand.mode != FusionMode::kIntensive) continue;
    if (s.mode(cand.producer, cand.consumer) != FusionMode::kIntensive) continue;
    for (const auto& link : chain_links(cand)) {
      if (link.first == p && link.second == c) s.set_mode(cand.producer, cand.consumer, FusionMode::kNone);
    }
  }
}

void set_conventional(Schedule& s, const std::vector<FusionCandidate>& candidates,
                      const std::string& p, const std::string& c) {
  for (const auto& cand : candidates) {
    if (cand.mode != FusionMode::kConventional || cand.consumer != c || cand.producer == p) continue;
    if (s.mode(cand.producer, c) == FusionMode::kConventional) {
      s.set_mode(cand.producer, c, FusionMode::kNone);
      drop_dependent_intensive(s, candidates, cand.producer, c);
    }
  }
  s.set_mode(p, c, FusionMode::kConventional);
}

}  // namespace

Schedule repair_schedule(const Subgraph& sub, Schedule s, bool allow_intensive) {
  const Graph& g = sub.graph();
  for (auto it = s.tiling.begin(); it != s.tiling.end();) {
    auto idx = g.find(it->first);
    if (!idx || !sub.contains(*idx) || !tiling_nests(loop_nest(g.node(*idx)), it->second)) {
      it = s.tiling.erase(it);
    } else {
      ++it;
    }
  }
  const auto candidates = fusion_candidates(sub);
  Schedule fixed;
  fixed.tiling = std::move(s.tiling);
  std::set<std::string> producers, consumers;
  std::vector<const FusionCandidate*> intensive;
  for (const auto& [key, mode] : s.fusion) {
    if (mode != FusionMode::kIntensive || !allow_intensive) continue;
    const FusionCandidate* cand = find_candidate(candidates, key.first, key.second, mode);
    if (!cand || consumers.count(key.second) || consumers.count(key.first) ||
        producers.count(key.second)) {
      continue;
    }
    producers.insert(key.first);
    consumers.insert(key.second);
    intensive.push_back(cand);
  }
  std::set<std::string> fed;
  for (const auto& [key, mode] : s.fusion) {
    if (mode != FusionMode::kConventional) continue;
    if (!find_candidate(candidates, key.first, key.second, mode) || fed.count(key.second)) continue;
    fed.insert(key.second);
    fixed.set_mode(key.first, key.second, FusionMode::kConventional);
  }
  for (const FusionCandidate* cand : intensive) {
    for (const auto& [p, c] : chain_links(*cand)) set_conventional(fixed, candidates, p, c);
  }
  for (const FusionCandidate* cand : intensive) {
    fixed.set_mode(cand->producer, cand->consumer, FusionMode::kIntensive);
    const auto& down = g.node(g.index_of(cand->consumer));
    auto it = fixed.tiling.find(down.id);
    if (it == fixed.tiling.end()) continue;
    const LoopNest nest = loop_nest(down);
    for (const auto& dim : intensive_fusion_legal(g.node(g.index_of(cand->producer)), down).required_untiled) {
      const int k = nest.spatial_index(dim);
      it->second.boundary[k] = nest.spatial[k].extent;
    }
  }
  return canonicalize(sub, fixed);
}

Schedule random_schedule(const Subgraph& sub, Rng& rng, bool allow_intensive) {
  const Graph& g = sub.graph();
  Schedule s;
  for (int v : sub.nodes()) {
    const LoopNest nest = loop_nest(g.node(v));
    OpTiling t;
    for (const auto& loop : nest.spatial) {
      t.boundary.push_back(pick(divisors(loop.extent), rng));
      t.inner.push_back(pick(divisors(t.boundary.back()), rng));
    }
    if (t != full_tiling(nest)) s.tiling[g.node(v).id] = t;
  }
  for (const auto& cand : fusion_candidates(sub)) {
    if (cand.mode == FusionMode::kIntensive && !allow_intensive) continue;
    if (rng.coin()) s.set_mode(cand.producer, cand.consumer, cand.mode);
  }
  return repair_schedule(sub, std::move(s), allow_intensive);
}

Schedule mutate_schedule(const Subgraph& sub, const Schedule& base, Rng& rng, bool allow_intensive) {
  const Graph& g = sub.graph();
  const FusionPlan plan = plan_fusion(sub, base);
  const auto candidates = fusion_candidates(sub);

  struct Site {
    int node = -1;  // tile site when >= 0
    int loop = 0;
    bool boundary = true;
    const FusionCandidate* cand = nullptr;
  };
  std::vector<Site> sites;
  for (const auto& group : plan.groups) {
    const auto& node = g.node(group.anchor);
    const LoopNest nest = loop_nest(node);
    const OpTiling t = base.tiling_for(node);
    std::set<std::string> reserved;
    if (group.attached_anchor >= 0) {
      reserved = intensive_fusion_legal(g.node(group.attached_anchor), node).required_untiled;
    }
    for (size_t k = 0; k < nest.spatial.size(); ++k) {
      const auto& loop = nest.spatial[k];
      if (!reserved.count(loop.name) && divisors(loop.extent).size() > 1) {
        sites.push_back({group.anchor, static_cast<int>(k), true, nullptr});
      }
      if (t.boundary[k] > 1) sites.push_back({group.anchor, static_cast<int>(k), false, nullptr});
    }
  }
  for (const auto& cand : candidates) {
    if (cand.mode == FusionMode::kIntensive && !allow_intensive) continue;
    sites.push_back({-1, 0, true, &cand});
  }
  if (sites.empty()) return repair_schedule(sub, base, allow_intensive);

  Schedule s = base;
  const Site& site = pick(sites, rng);
  if (site.node >= 0) {
    const auto& node = g.node(site.node);
    const LoopNest nest = loop_nest(node);
    OpTiling t = s.tiling_for(node);
    const size_t k = static_cast<size_t>(site.loop);
    const int64_t current = site.boundary ? t.boundary[k] : t.inner[k];
    std::vector<int64_t> options = divisors(site.boundary ? nest.spatial[k].extent : t.boundary[k]);
    options.erase(std::find(options.begin(), options.end(), current));
    const int64_t chosen = pick(options, rng);
    if (site.boundary) {
      t.boundary[k] = chosen;
      t.inner[k] = std::gcd(t.inner[k], chosen);
    } else {
      t.inner[k] = chosen;
    }
    s.tiling[node.id] = t;
  } else {
    const FusionCandidate& cand = *site.cand;
    const bool on = s.mode(cand.producer, cand.consumer) == cand.mode;
    if (on) {
      s.set_mode(cand.producer, cand.consumer, FusionMode::kNone);
      if (cand.mode == FusionMode::kConventional) {
        drop_dependent_intensive(s, candidates, cand.producer, cand.consumer);
      }
    } else if (cand.mode == FusionMode::kConventional) {
      set_conventional(s, candidates, cand.producer, cand.consumer);
    } else {
      // One intensive producer per consumer, one level deep.
      for (const auto& other : candidates) {
        if (other.mode != FusionMode::kIntensive) continue;
        if (other.consumer == cand.consumer || other.consumer == cand.producer ||
            other.producer == cand.consumer) {
          s.set_mode(other.producer, other.consumer, FusionMode::kNone);
        }
      }
      for (const auto& [p, c] : chain_links(cand)) set_conventional(s, candidates, p, c);
      s.set_mode(cand.producer, cand.consumer, FusionMode::kIntensive);
    }
  }
  return repair_schedule(sub, std::move(s), allow_intensive);
}

Schedule sample_schedule(const Subgraph& sub, uint64_t seed, const std::optional<Schedule>& base,
                         bool allow_intensive) {
  Rng rng(seed);
  return base ? mutate_schedule(sub, *base, rng, allow_intensive)
              : random_schedule(sub, rng, allow_intensive);
}

void TuneHistory::record(std::string digest, double c) {
  trials.push_back({static_cast<int>(trials.size()), std::move(digest), c});
  best.push_back(best.empty() ? c : std::min(best.back(), c));
}

namespace {

std::string format_real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

std::string TuneHistory::csv() const {
  std::string out = "trial,cost,best\n";
  for (size_t k = 0; k < trials.size(); ++k) {
    out += std::to_string(trials[k].index) + "," + format_real(trials[k].cost) + "," +
           format_real(best[k]) + "\n";
  }
  return out;
}

bool stabilized(const TuneHistory& history, int k, double epsilon) {
  if (k < 1) throw ValidationError("stabilization window must be >= 1");
  const size_t n = history.best.size();
  if (n < static_cast<size_t>(k)) return false;
  const double before = history.best[n - k];
  const double after = history.best[n - 1];
  const double scale = std::abs(before) > 0 ? std::abs(before) : 1.0;
  return (before - after) / scale < epsilon;
}

TuneResult tune(const Subgraph& sub, int budget, uint64_t seed, const std::optional<Schedule>& initial,
                const TuneOptions& options) {
  if (budget < 1) throw ValidationError("tuning budget must be >= 1");
  if (options.population < 2) throw ValidationError("population must be >= 2");
  options.cost.validate();
  Rng rng(seed);
  TuneResult result;
  std::map<std::string, double> memo;
  std::vector<std::pair<Schedule, double>> population;

  auto evaluate = [&](const Schedule& s) {
    std::string digest = s.digest();
    auto it = memo.find(digest);
    const double c = it != memo.end() ? it->second : cost(sub, s, options.cost);
    memo.emplace(digest, c);
    if (result.history.size() == 0 || c < result.best_cost) {
      result.best = s;
      result.best_cost = c;
    }
    result.history.record(std::move(digest), c);
    return c;
  };
  auto done = [&] {
    if (static_cast<int>(result.history.size()) >= budget) return true;
    return options.stop_window > 0 &&
           stabilized(result.history, options.stop_window, options.stop_epsilon);
  };
  // Prefers schedules not evaluated yet; small spaces may run out.
  auto fresh = [&](auto make) {
    Schedule s = make();
    for (int attempt = 0; attempt < 32 && memo.count(s.digest()); ++attempt) s = make();
    return s;
  };

  if (initial) {
    Schedule s = canonicalize(sub, *initial);
    if (!options.allow_intensive) {
      for (const auto& d : s.decisions()) {
        if (d.mode == FusionMode::kIntensive) {
          throw ScheduleError("initial schedule uses intensive fusion, which is disabled");
        }
      }
    }
    population.emplace_back(s, evaluate(s));
  }
  while (!done() && static_cast<int>(population.size()) < options.population) {
    Schedule s = fresh([&] { return random_schedule(sub, rng, options.allow_intensive); });
    const double c = evaluate(s);
    population.emplace_back(std::move(s), c);
  }
  while (!done()) {
    const size_t a = rng.below(population.size());
    const size_t b = rng.below(population.size());
    const size_t parent = population[b].second < population[a].second ? b : a;
    Schedule child = fresh(
        [&] { return mutate_schedule(sub, population[parent].first, rng, options.allow_intensive); });
    const double c = evaluate(child);
    size_t worst = 0;
    for (size_t k = 1; k < population.size(); ++k) {
      if (population[k].second > population[worst].second) worst = k;
    }
    if (c < population[worst].second) population[worst] = {std::move(child), c};
  }
  return result;
}

}  // namespace gopt
