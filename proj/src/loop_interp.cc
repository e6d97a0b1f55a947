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

#include "gopt/loop_interp.h"

#include <algorithm>
#include <array>

#include "gopt/error.h"
#include "gopt/rng.h"

namespace gopt {

Tensor Tensor::zeros(Shape shape) {
  Tensor t;
  t.data.assign(static_cast<size_t>(numel(shape)), 0.0);
  t.shape = std::move(shape);
  return t;
}

int64_t AccessTrace::count(const std::string& tensor, AccessKind kind) const {
  return std::count_if(accesses.begin(), accesses.end(), [&](const Access& a) {
    return a.tensor == tensor && a.kind == kind;
  });
}

namespace {

constexpr size_t kMaxRank = 8;
using Index = std::array<int64_t, kMaxRank>;

std::vector<int64_t> strides_of(const Shape& shape) {
  std::vector<int64_t> strides(shape.size(), 1);
  for (size_t k = shape.size(); k-- > 1;) strides[k - 1] = strides[k] * shape[k];
  return strides;
}

std::string input_name(const OperatorNode& node, int k) { return node.id + ".in" + std::to_string(k); }

}  // namespace

std::map<std::string, Shape> required_inputs(const Subgraph& sub) {
  const Graph& g = sub.graph();
  std::map<std::string, Shape> out;
  for (int v : sub.nodes()) {
    const auto& node = g.node(v);
    const auto& preds = g.preds(v);
    for (int k = 0; k < operand_arity(node.kind); ++k) {
      if (k < static_cast<int>(preds.size())) {
        if (!sub.contains(preds[k])) out[g.node(preds[k]).id] = g.node(preds[k]).output_shape();
      } else {
        out[input_name(node, k)] = node.operand_shape(k);
      }
    }
    for (const auto& [suffix, shape] : node.param_shapes()) out[node.id + "." + suffix] = shape;
  }
  return out;
}

TensorMap random_inputs(const Subgraph& sub, uint64_t seed) {
  Rng rng(seed);
  TensorMap out;
  for (const auto& [name, shape] : required_inputs(sub)) {
    Tensor t = Tensor::zeros(shape);
    for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
    out.emplace(name, std::move(t));
  }
  return out;
}

void check_interpretable(const Subgraph& sub) {
  for (int v : sub.nodes()) {
    const auto& node = sub.graph().node(v);
    const LoopNest nest = loop_nest(node);
    if (nest.spatial.size() > kMaxRank) {
      throw ValidationError("node '" + node.id + "': rank above " + std::to_string(kMaxRank));
    }
    for (const auto* loops : {&nest.spatial, &nest.reduction}) {
      for (const auto& loop : *loops) {
        if (loop.extent > kMaxExtent) {
          throw ValidationError("node '" + node.id + "': loop '" + loop.name + "' extent " +
                                std::to_string(loop.extent) + " exceeds the interpreter cap " +
                                std::to_string(kMaxExtent));
        }
      }
    }
  }
}

namespace {

enum class Source { kRegister, kMemory, kTile };

struct Operand {
  Source source = Source::kMemory;
  int slot = -1;
};

struct NodeExec {
  const OperatorNode* op = nullptr;
  OpKind kind = OpKind::kRelu;
  Shape out_shape;
  std::vector<int64_t> out_strides;
  Shape in_shape;
  std::vector<int64_t> in_strides;
  std::vector<Operand> operands;
  int weight_slot = -1;
  int bias_slot = -1;
  int out_slot = -1;
  int64_t pad = 0, stride = 1, in_channels = 1, window_r = 1, window_c = 1, depth = 1;
  std::vector<int64_t> perm;
};

struct Slot {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

class Engine {
 public:
  Engine(const Subgraph& sub, const Schedule& schedule, const TensorMap* inputs, AccessSink* sink,
         IntensivePolicy policy)
      : sub_(sub), g_(sub.graph()), schedule_(schedule), sink_(sink), compute_(inputs != nullptr) {
    check_interpretable(sub);
    plan_ = plan_fusion(sub, schedule, policy);
    trips_.assign(g_.size(), 0);
    setup(inputs);
  }

  void run() {
    for (const auto& group : plan_.groups) run_group(group);
  }

  std::map<std::string, int64_t> trips() const {
    std::map<std::string, int64_t> out;
    for (int v : sub_.nodes()) out[g_.node(v).id] = trips_[v];
    return out;
  }

  TensorMap outputs() const {
    TensorMap out;
    for (int v : sub_.nodes()) {
      if (!sub_.is_output(v)) continue;
      const Slot& slot = slots_.at(exec_[v].out_slot);
      out[g_.node(v).id] = Tensor{slot.shape, slot.data};
    }
    return out;
  }

 private:
  int add_slot(const std::string& name, const Shape& shape, const TensorMap* inputs, bool external) {
    const int id = static_cast<int>(slots_.size());
    Slot slot{name, shape, {}};
    if (compute_) {
      if (external) {
        auto it = inputs->find(name);
        if (it == inputs->end()) throw ValidationError("missing input tensor '" + name + "'");
        if (it->second.shape != shape || it->second.data.size() != static_cast<size_t>(numel(shape))) {
          throw ValidationError("input tensor '" + name + "' has shape " +
                                shape_to_string(it->second.shape) + ", expected " +
                                shape_to_string(shape));
        }
        slot.data = it->second.data;
      } else {
        slot.data.assign(static_cast<size_t>(numel(shape)), 0.0);
      }
    }
    if (sink_) sink_->declare(id, name, numel(shape));
    slots_.push_back(std::move(slot));
    return id;
  }

  void setup(const TensorMap* inputs) {
    std::map<std::string, int> by_name;
    for (const auto& [name, shape] : required_inputs(sub_)) {
      by_name[name] = add_slot(name, shape, inputs, true);
    }
    exec_.resize(g_.size());
    group_of_.assign(g_.size(), -1);
    for (size_t k = 0; k < plan_.groups.size(); ++k) {
      const auto& group = plan_.groups[k];
      group_of_[group.anchor] = static_cast<int>(k);
      for (int x : group.epilogue) group_of_[x] = static_cast<int>(k);
    }
    // Tails of top-level groups are the only materialized node outputs.
    for (int v : sub_.nodes()) {
      if (group_of_[v] >= 0 && plan_.groups[group_of_[v]].tail() == v) {
        exec_[v].out_slot = add_slot(g_.node(v).id, g_.node(v).output_shape(), inputs, false);
      }
    }
    tile_slot_.assign(plan_.groups.size(), -1);
    for (size_t k = 0; k < plan_.groups.size(); ++k) {
      const auto& group = plan_.groups[k];
      if (group.attached_anchor < 0) continue;
      const auto& tail = g_.node(group.attached_tail());
      tile_slot_[k] = add_slot(tail.id + ".tile", tail.output_shape(), inputs, false);
    }
    for (int v : sub_.nodes()) {
      NodeExec& x = exec_[v];
      const auto& node = g_.node(v);
      x.op = &node;
      x.kind = node.kind;
      x.out_shape = node.output_shape();
      x.out_strides = strides_of(x.out_shape);
      x.in_shape = node.operand_shape(0);
      x.in_strides = strides_of(x.in_shape);
      if (node.complex()) {
        x.pad = node.attr_or("pad", 0);
        x.stride = node.attr_or("stride", 1);
        x.window_r = node.attr_or("R", 1);
        x.window_c = node.attr_or("C", 1);
        x.in_channels = node.kind == OpKind::kMatMul ? 1 : x.in_shape[1];
        x.depth = node.kind == OpKind::kMatMul ? node.attr("K") : 1;
      }
      if (node.kind == OpKind::kPad) x.pad = node.attr("pad");
      if (node.kind == OpKind::kTranspose) {
        for (size_t j = 0; j < x.out_shape.size(); ++j) x.perm.push_back(node.attr("p" + std::to_string(j)));
      }
      for (const auto& [suffix, shape] : node.param_shapes()) {
        (suffix == "weight" ? x.weight_slot : x.bias_slot) = by_name.at(node.id + "." + suffix);
      }
      const auto& preds = g_.preds(v);
      for (int k = 0; k < operand_arity(node.kind); ++k) {
        Operand operand;
        if (k >= static_cast<int>(preds.size())) {
          operand.slot = by_name.at(input_name(node, k));
        } else if (!sub_.contains(preds[k])) {
          operand.slot = by_name.at(g_.node(preds[k]).id);
        } else {
          operand = resolve(preds[k], v);
        }
        x.operands.push_back(operand);
      }
    }
  }

  // How node v reads the value of its in-subgraph producer p.
  Operand resolve(int p, int v) {
    for (size_t k = 0; k < plan_.groups.size(); ++k) {
      const auto& group = plan_.groups[k];
      auto chained = [&](int anchor, const std::vector<int>& epilogue) {
        if (anchor == p && !epilogue.empty() && epilogue.front() == v) return true;
        for (size_t j = 1; j < epilogue.size(); ++j) {
          if (epilogue[j - 1] == p && epilogue[j] == v) return true;
        }
        return false;
      };
      if (chained(group.anchor, group.epilogue)) return {Source::kRegister, -1};
      if (group.attached_anchor >= 0) {
        if (chained(group.attached_anchor, group.attached_epilogue)) return {Source::kRegister, -1};
        if (group.attached_tail() == p && group.anchor == v) {
          return {Source::kTile, tile_slot_[k]};
        }
      }
    }
    const int slot = exec_[p].out_slot;
    if (slot < 0) throw ScheduleError("internal: value of '" + g_.node(p).id + "' is not materialized");
    return {Source::kMemory, slot};
  }

  double read(int slot, int64_t index) {
    if (sink_) sink_->access(slot, index, AccessKind::kRead);
    return compute_ ? slots_[slot].data[index] : 0.0;
  }

  void write(int slot, int64_t index, double value) {
    if (sink_) sink_->access(slot, index, AccessKind::kWrite);
    if (compute_) slots_[slot].data[index] = value;
  }

  double read_operand(const Operand& operand, int64_t index, double reg) {
    switch (operand.source) {
      case Source::kRegister:
        return reg;
      case Source::kTile:
        return read(operand.slot, rank_[index]);
      case Source::kMemory:
        break;
    }
    return read(operand.slot, index);
  }

  // Calls f(operand index, weight index) for every in-bounds step of the
  // reduction nest of complex node x at output position s.
  template <typename F>
  static void reduction_steps(const NodeExec& x, const Index& s, F&& f) {
    if (x.kind == OpKind::kMatMul) {
      const int64_t m = s[0], n = s[1], depth = x.depth, cols = x.out_shape[1];
      for (int64_t k = 0; k < depth; ++k) f(m * depth + k, k * cols + n);
      return;
    }
    const int64_t n = s[0], o = s[1], h = s[2], w = s[3];
    const int64_t ih_size = x.in_shape[2], iw_size = x.in_shape[3];
    const bool depthwise = x.kind == OpKind::kDepthwiseConv2d;
    const int64_t channels = depthwise ? 1 : x.in_channels;
    for (int64_t i = 0; i < channels; ++i) {
      const int64_t ch = depthwise ? o : i;
      for (int64_t r = 0; r < x.window_r; ++r) {
        const int64_t ih = h * x.stride + r - x.pad;
        if (ih < 0 || ih >= ih_size) continue;
        for (int64_t c = 0; c < x.window_c; ++c) {
          const int64_t iw = w * x.stride + c - x.pad;
          if (iw < 0 || iw >= iw_size) continue;
          const int64_t in = ((n * x.in_shape[1] + ch) * ih_size + ih) * iw_size + iw;
          const int64_t wt = depthwise ? (o * x.window_r + r) * x.window_c + c
                                       : ((o * x.in_channels + i) * x.window_r + r) * x.window_c + c;
          f(in, wt);
        }
      }
    }
  }

  double eval(const NodeExec& x, const Index& s, int64_t flat, double reg) {
    switch (x.kind) {
      case OpKind::kConv2d:
      case OpKind::kDepthwiseConv2d:
      case OpKind::kPointwiseConv2d:
      case OpKind::kMatMul: {
        if (!compute_ && !sink_) return 0.0;
        double acc = 0.0;
        reduction_steps(x, s, [&](int64_t in, int64_t wt) {
          const double a = read_operand(x.operands[0], in, reg);
          acc += a * read(x.weight_slot, wt);
        });
        return acc;
      }
      case OpKind::kAdd: {
        const double a = read_operand(x.operands[0], flat, reg);
        return a + read_operand(x.operands[1], flat, reg);
      }
      case OpKind::kMul: {
        const double a = read_operand(x.operands[0], flat, reg);
        return a * read_operand(x.operands[1], flat, reg);
      }
      case OpKind::kRelu:
        return std::max(0.0, read_operand(x.operands[0], flat, reg));
      case OpKind::kBiasAdd: {
        const double a = read_operand(x.operands[0], flat, reg);
        return a + read(x.bias_slot, (flat / x.out_strides[1]) % x.out_shape[1]);
      }
      case OpKind::kReshape:
        return read_operand(x.operands[0], flat, reg);
      case OpKind::kPad: {
        const size_t rank = x.out_shape.size();
        int64_t in = 0;
        for (size_t k = 0; k < rank; ++k) {
          int64_t pos = s[k];
          if (k + 2 >= rank) {
            pos -= x.pad;
            if (pos < 0 || pos >= x.in_shape[k]) return 0.0;
          }
          in += pos * x.in_strides[k];
        }
        return read_operand(x.operands[0], in, reg);
      }
      case OpKind::kTranspose: {
        int64_t in = 0;
        for (size_t j = 0; j < x.out_shape.size(); ++j) in += s[j] * x.in_strides[x.perm[j]];
        return read_operand(x.operands[0], in, reg);
      }
    }
    return 0.0;
  }

  Index decode(const NodeExec& x, int64_t flat) const {
    Index s{};
    for (size_t k = 0; k < x.out_shape.size(); ++k) s[k] = (flat / x.out_strides[k]) % x.out_shape[k];
    return s;
  }

  int64_t encode(const NodeExec& x, const Index& s) const {
    int64_t flat = 0;
    for (size_t k = 0; k < x.out_shape.size(); ++k) flat += s[k] * x.out_strides[k];
    return flat;
  }

  // Anchor, then epilogue, one element at a time; writes only the tail.
  void compute_chain(int anchor, const std::vector<int>& epilogue, const Index& s, int64_t flat,
                     int slot, int64_t out_index) {
    double value = eval(exec_[anchor], s, flat, 0.0);
    ++trips_[anchor];
    for (int m : epilogue) {
      value = eval(exec_[m], s, flat, value);
      ++trips_[m];
    }
    write(slot, out_index, value);
  }

  // Odometer over the positions lo + step * t, t < count, per loop.
  template <typename F>
  static void sweep(size_t rank, const Index& lo, const Index& count, const Index& step, F&& f) {
    for (size_t k = 0; k < rank; ++k) {
      if (count[k] == 0) return;
    }
    Index t{};
    Index s = lo;
    while (true) {
      f(s);
      size_t k = rank;
      while (k-- > 0) {
        if (++t[k] < count[k]) {
          s[k] += step[k];
          break;
        }
        t[k] = 0;
        s[k] = lo[k];
      }
      if (k == static_cast<size_t>(-1)) return;
    }
  }

  void run_group(const FusionGroup& group) {
    const int k = group_of_[group.anchor];
    const NodeExec& a = exec_[group.anchor];
    const LoopNest nest = loop_nest(*a.op);
    const OpTiling tiling = schedule_.tiling_for(*a.op);
    const size_t rank = nest.spatial.size();
    Index zero{}, one{}, outer_count{}, outer_step{}, mid_count{}, mid_step{}, inner_count{};
    for (size_t d = 0; d < rank; ++d) {
      one[d] = 1;
      outer_count[d] = nest.spatial[d].extent / tiling.boundary[d];
      outer_step[d] = tiling.boundary[d];
      mid_count[d] = tiling.boundary[d] / tiling.inner[d];
      mid_step[d] = tiling.inner[d];
      inner_count[d] = tiling.inner[d];
    }
    const int tail_slot = exec_[group.tail()].out_slot;
    auto tile_elements = [&](const Index& origin, auto&& f) {
      sweep(rank, origin, mid_count, mid_step, [&](const Index& mid) {
        sweep(rank, mid, inner_count, one, f);
      });
    };
    sweep(rank, zero, outer_count, outer_step, [&](const Index& origin) {
      if (group.attached_anchor >= 0) build_tile(group, k, origin, tile_elements);
      tile_elements(origin, [&](const Index& s) {
        const int64_t flat = encode(a, s);
        compute_chain(group.anchor, group.epilogue, s, flat, tail_slot, flat);
      });
    });
  }

  // Computes exactly the attached producer elements one consumer boundary
  // tile reads, into the compact tile buffer.
  template <typename TileElements>
  void build_tile(const FusionGroup& group, int k, const Index& origin, TileElements& tile_elements) {
    const NodeExec& down = exec_[group.anchor];
    const NodeExec& up = exec_[group.attached_anchor];
    const int64_t size = numel(up.out_shape);
    if (static_cast<int64_t>(marked_.size()) < size) {
      marked_.assign(size, false);
      rank_.assign(size, 0);
    }
    demand_.clear();
    tile_elements(origin, [&](const Index& s) {
      reduction_steps(down, s, [&](int64_t in, int64_t) {
        if (!marked_[in]) {
          marked_[in] = true;
          demand_.push_back(in);
        }
      });
    });
    std::sort(demand_.begin(), demand_.end());
    for (size_t r = 0; r < demand_.size(); ++r) {
      const int64_t flat = demand_[r];
      rank_[flat] = static_cast<int64_t>(r);
      marked_[flat] = false;
      compute_chain(group.attached_anchor, group.attached_epilogue, decode(up, flat), flat,
                    tile_slot_[k], static_cast<int64_t>(r));
    }
  }

  const Subgraph& sub_;
  const Graph& g_;
  const Schedule& schedule_;
  AccessSink* sink_;
  bool compute_;
  FusionPlan plan_;
  std::vector<Slot> slots_;
  std::vector<NodeExec> exec_;
  std::vector<int> group_of_;
  std::vector<int> tile_slot_;
  std::vector<int64_t> trips_;
  std::vector<bool> marked_;
  std::vector<int64_t> rank_;
  std::vector<int64_t> demand_;
};

class TraceRecorder : public AccessSink {
 public:
  explicit TraceRecorder(AccessTrace& trace) : trace_(trace) {}
  void declare(int slot, const std::string& name, int64_t) override {
    if (static_cast<int>(names_.size()) <= slot) names_.resize(slot + 1);
    names_[slot] = name;
  }
  void access(int slot, int64_t index, AccessKind kind) override {
    trace_.accesses.push_back({names_[slot], index, kind});
  }

 private:
  AccessTrace& trace_;
  std::vector<std::string> names_;
};

}  // namespace

TensorMap execute(const Subgraph& sub, const Schedule& schedule, const TensorMap& inputs,
                  IntensivePolicy policy) {
  Engine engine(sub, schedule, &inputs, nullptr, policy);
  engine.run();
  return engine.outputs();
}

std::map<std::string, int64_t> count_trips(const Subgraph& sub, const Schedule& schedule,
                                           IntensivePolicy policy) {
  Engine engine(sub, schedule, nullptr, nullptr, policy);
  engine.run();
  return engine.trips();
}

AccessTrace trace_memory(const Subgraph& sub, const Schedule& schedule, IntensivePolicy policy) {
  AccessTrace trace;
  TraceRecorder recorder(trace);
  Engine engine(sub, schedule, nullptr, &recorder, policy);
  engine.run();
  return trace;
}

std::map<std::string, int64_t> stream_memory(const Subgraph& sub, const Schedule& schedule,
                                             AccessSink& sink, IntensivePolicy policy) {
  Engine engine(sub, schedule, nullptr, &sink, policy);
  engine.run();
  return engine.trips();
}

}  // namespace gopt
