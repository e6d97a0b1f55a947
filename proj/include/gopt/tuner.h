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
#include <optional>
#include <string>
#include <vector>

#include "gopt/graph.h"
#include "gopt/rng.h"
#include "gopt/schedule.h"

namespace gopt {

struct CostConfig {
  int64_t cache_lines = 512;
  int64_t line_elems = 8;
  double alpha = 1.0;  // per multiply-accumulate
  double beta = 16.0;  // per cache miss

  // Throws ValidationError unless every field is positive.
  void validate() const;
};

struct CostBreakdown {
  int64_t macs = 0;  // reduction-nest trips times reduction size; 1 per simple element
  int64_t accesses = 0;
  int64_t misses = 0;
  double cost = 0.0;
};

CostBreakdown cost_breakdown(const Subgraph& subgraph, const Schedule& schedule,
                             const CostConfig& cfg = {});
double cost(const Subgraph& subgraph, const Schedule& schedule, const CostConfig& cfg = {});

// Makes any schedule valid: drops unknown or illegal decisions, completes
// the conventional chain under each intensive decision, untiles reserved
// loops and canonicalizes. Tilings that do not nest are reset to full.
Schedule repair_schedule(const Subgraph& subgraph, Schedule schedule, bool allow_intensive = true);

// Uniform random valid schedule, or with `base` a one-step mutation of it
// (one tile factor or one fusion decision).
Schedule sample_schedule(const Subgraph& subgraph, uint64_t seed,
                         const std::optional<Schedule>& base = std::nullopt,
                         bool allow_intensive = true);
Schedule random_schedule(const Subgraph& subgraph, Rng& rng, bool allow_intensive = true);
Schedule mutate_schedule(const Subgraph& subgraph, const Schedule& base, Rng& rng,
                         bool allow_intensive = true);

struct Trial {
  int index = 0;
  std::string digest;
  double cost = 0.0;
};

struct TuneHistory {
  std::vector<Trial> trials;
  std::vector<double> best;  // best cost after each trial

  size_t size() const { return trials.size(); }
  void record(std::string digest, double cost);
  // "trial,cost,best" rows.
  std::string csv() const;
};

struct TuneOptions {
  CostConfig cost;
  bool allow_intensive = true;
  int population = 8;
  // Stop before the budget once stabilized(history, window, epsilon);
  // window 0 disables early stopping.
  int stop_window = 0;
  double stop_epsilon = 0.0;
};

struct TuneResult {
  Schedule best;
  double best_cost = 0.0;
  TuneHistory history;
};

// Evolutionary search: the initial schedule (if any) is evaluated first, the
// population is filled with random samples, then tournament-selected parents
// are mutated one step at a time. Exactly `budget` trials unless stopped
// early. Throws ValidationError for budget < 1, ScheduleError for an invalid
// initial schedule.
TuneResult tune(const Subgraph& subgraph, int budget, uint64_t seed,
                const std::optional<Schedule>& initial = std::nullopt,
                const TuneOptions& options = {});

// Relative best-cost improvement across the last k trials is below epsilon.
// False when the history holds fewer than k trials. Throws for k < 1.
bool stabilized(const TuneHistory& history, int k, double epsilon);

}  // namespace gopt
