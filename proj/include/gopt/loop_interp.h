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
#include <string>
#include <vector>

#include "gopt/graph.h"
#include "gopt/schedule.h"

namespace gopt {

// Every loop extent the interpreter accepts is at most this.
inline constexpr int64_t kMaxExtent = 64;

struct Tensor {
  Shape shape;
  std::vector<double> data;  // row-major

  static Tensor zeros(Shape shape);
};

using TensorMap = std::map<std::string, Tensor>;

enum class AccessKind { kRead, kWrite };

struct Access {
  std::string tensor;
  int64_t index = 0;
  AccessKind kind = AccessKind::kRead;

  friend bool operator==(const Access&, const Access&) = default;
};

struct AccessTrace {
  std::vector<Access> accesses;

  int64_t count(const std::string& tensor, AccessKind kind) const;
};

// Streaming consumer of memory accesses. Tensors are announced once, before
// their first access, with dense slot numbers.
class AccessSink {
 public:
  virtual ~AccessSink() = default;
  virtual void declare(int slot, const std::string& name, int64_t size) = 0;
  virtual void access(int slot, int64_t index, AccessKind kind) = 0;
};

// External tensors a subgraph reads, by name:
//   "<id>.in<k>"      operand k of a node with no producer in the graph
//   "<producer id>"   operand produced outside the subgraph
//   "<id>.weight", "<id>.bias"
std::map<std::string, Shape> required_inputs(const Subgraph& subgraph);
// Uniform values in [-1, 1) for every required input.
TensorMap random_inputs(const Subgraph& subgraph, uint64_t seed);

// Throws ValidationError when any extent of the subgraph exceeds kMaxExtent.
void check_interpretable(const Subgraph& subgraph);

// Runs the subgraph under the schedule and returns its output tensors (nodes
// whose value leaves the subgraph or has no consumer), keyed by node id.
// Throws ValidationError on missing or mis-shaped inputs, ScheduleError on an
// invalid schedule.
TensorMap execute(const Subgraph& subgraph, const Schedule& schedule, const TensorMap& inputs,
                  IntensivePolicy policy = IntensivePolicy::kCertified);

// Output elements computed per operator, counting recomputation, keyed by
// node id. No arithmetic is performed.
std::map<std::string, int64_t> count_trips(const Subgraph& subgraph, const Schedule& schedule,
                                           IntensivePolicy policy = IntensivePolicy::kCertified);

// Complete ordered access trace.
AccessTrace trace_memory(const Subgraph& subgraph, const Schedule& schedule,
                         IntensivePolicy policy = IntensivePolicy::kCertified);
// Streams the same accesses without storing them; returns per-operator trips.
std::map<std::string, int64_t> stream_memory(const Subgraph& subgraph, const Schedule& schedule,
                                             AccessSink& sink,
                                             IntensivePolicy policy = IntensivePolicy::kCertified);

}  // namespace gopt
