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

#include "gopt/fusion_analysis.h"

#include <algorithm>
#include <optional>

#include "gopt/error.h"

namespace gopt {

namespace {

bool conv_family(OpKind kind) {
  return kind == OpKind::kConv2d || kind == OpKind::kDepthwiseConv2d ||
         kind == OpKind::kPointwiseConv2d;
}

// How one downstream spatial loop indexes the downstream input (= upstream
// output): the input dim it walks, plus the window sliding along it.
struct DimMap {
  std::optional<int> input_dim;
  int64_t window = 1;
  int64_t pad = 0;
};

std::vector<DimMap> dim_maps(const OperatorNode& down) {
  const int64_t pad = down.attr_or("pad", 0);
  switch (down.kind) {
    case OpKind::kConv2d:
    case OpKind::kPointwiseConv2d:
      return {{0, 1, 0}, {std::nullopt, 1, 0}, {2, down.attr_or("R", 1), pad},
              {3, down.attr_or("C", 1), pad}};
    case OpKind::kDepthwiseConv2d:
      return {{0, 1, 0}, {1, 1, 0}, {2, down.attr("R"), pad}, {3, down.attr("C"), pad}};
    case OpKind::kMatMul:
      return {{0, 1, 0}, {std::nullopt, 1, 0}};
    default:
      throw FusionError("node '" + down.id + "': downstream must be a complex operator");
  }
}

const std::vector<std::string>& input_loop_names(const OperatorNode& down) {
  static const std::vector<std::string> conv = {"n", "o", "h", "w"};
  static const std::vector<std::string> mm = {"m", "n"};
  return down.kind == OpKind::kMatMul ? mm : conv;
}

// Input rows touched by output rows [lo, lo + tile).
int64_t clipped_span(int64_t lo, int64_t tile, const DimMap& map, int64_t input_extent) {
  const int64_t first = std::max<int64_t>(lo - map.pad, 0);
  const int64_t last = std::min<int64_t>(lo + tile - 1 - map.pad + map.window - 1, input_extent - 1);
  return std::max<int64_t>(0, last - first + 1);
}

void check_tiles(const LoopNest& nest, const TileSpec& tiles) {
  if (tiles.extents.size() != nest.spatial.size()) {
    throw FusionError("tile rank " + std::to_string(tiles.extents.size()) + " does not match " +
                      std::to_string(nest.spatial.size()) + " spatial loops");
  }
  for (size_t k = 0; k < tiles.extents.size(); ++k) {
    const int64_t t = tiles.extents[k];
    if (t < 1 || nest.spatial[k].extent % t != 0) {
      throw FusionError("tile " + std::to_string(t) + " does not divide loop '" + nest.spatial[k].name +
                        "' of extent " + std::to_string(nest.spatial[k].extent));
    }
  }
}

void check_downstream(const OperatorNode& down) {
  if (!down.complex()) throw FusionError("node '" + down.id + "': downstream must be a complex operator");
  if (down.attr_or("stride", 1) != 1) {
    throw FusionError("node '" + down.id + "': only unit stride is certified for fusion analysis");
  }
}

}  // namespace

int64_t IterSpace::size() const {
  int64_t s = 1;
  for (const auto& l : loops) s *= l.extent;
  return s;
}

std::set<std::string> IterSpace::names() const {
  std::set<std::string> out;
  for (const auto& l : loops) out.insert(l.name);
  return out;
}

TileSpec full_tile(const LoopNest& nest) { return {nest.spatial_extents()}; }

TileSpec unit_tile(const LoopNest& nest) {
  return {std::vector<int64_t>(nest.spatial.size(), 1)};
}

TileSpec make_tile(const LoopNest& nest, const std::map<std::string, int64_t>& tiles) {
  TileSpec spec = full_tile(nest);
  for (const auto& [name, extent] : tiles) {
    const int k = nest.spatial_index(name);
    if (k < 0) throw FusionError("no spatial loop named '" + name + "'");
    spec.extents[k] = extent;
  }
  check_tiles(nest, spec);
  return spec;
}

Decomposition decompose(const LoopNest& nest, const TileSpec& tiles) {
  check_tiles(nest, tiles);
  Decomposition d;
  for (size_t k = 0; k < nest.spatial.size(); ++k) {
    const auto& loop = nest.spatial[k];
    d.global.loops.push_back(loop);
    d.tile.loops.push_back({loop.name, tiles.extents[k]});
    d.outer.loops.push_back({loop.name, loop.extent / tiles.extents[k]});
  }
  return d;
}

void check_fusion_pair(const OperatorNode& up, const OperatorNode& down) {
  if (!up.complex()) throw FusionError("node '" + up.id + "': upstream must be a complex operator");
  check_downstream(down);
  const bool compatible = (conv_family(up.kind) && conv_family(down.kind)) ||
                          (up.kind == OpKind::kMatMul && down.kind == OpKind::kMatMul);
  if (!compatible) {
    throw FusionError("pair " + up.id + "->" + down.id + ": unsupported kind combination");
  }
  if (up.output_shape() != down.operand_shape(0)) {
    throw FusionError("pair " + up.id + "->" + down.id + ": upstream shape " +
                      shape_to_string(up.output_shape()) + " does not feed downstream input " +
                      shape_to_string(down.operand_shape(0)));
  }
}

IterSpace footprint(const OperatorNode& down, const TileSpec& tiles) {
  check_downstream(down);
  const LoopNest nest = loop_nest(down);
  check_tiles(nest, tiles);
  const Shape input = down.operand_shape(0);
  const auto maps = dim_maps(down);
  const auto& names = input_loop_names(down);
  IterSpace region;
  for (size_t u = 0; u < input.size(); ++u) {
    int64_t span = input[u];
    for (size_t d = 0; d < maps.size(); ++d) {
      if (maps[d].input_dim != static_cast<int>(u)) continue;
      span = 0;
      for (int64_t lo = 0; lo < nest.spatial[d].extent; lo += tiles.extents[d]) {
        span = std::max(span, clipped_span(lo, tiles.extents[d], maps[d], input[u]));
      }
    }
    region.loops.push_back({names[u], span});
  }
  return region;
}

int64_t fused_upstream_trips(const OperatorNode& up, const OperatorNode& down, const TileSpec& tiles) {
  check_fusion_pair(up, down);
  const LoopNest nest = loop_nest(down);
  check_tiles(nest, tiles);
  const Shape input = down.operand_shape(0);
  const auto maps = dim_maps(down);
  std::vector<bool> mapped(input.size(), false);
  int64_t total = 1;
  for (size_t d = 0; d < maps.size(); ++d) {
    const int64_t extent = nest.spatial[d].extent;
    const int64_t tile = tiles.extents[d];
    if (!maps[d].input_dim) {
      total *= extent / tile;
      continue;
    }
    const int u = *maps[d].input_dim;
    mapped[u] = true;
    int64_t sum = 0;
    for (int64_t lo = 0; lo < extent; lo += tile) sum += clipped_span(lo, tile, maps[d], input[u]);
    total *= sum;
  }
  for (size_t u = 0; u < input.size(); ++u) {
    if (!mapped[u]) total *= input[u];
  }
  return total;
}

int64_t unfused_upstream_trips(const OperatorNode& up) { return numel(up.output_shape()); }

std::map<std::string, int64_t> symbol_bindings(const OperatorNode& up, const OperatorNode& down) {
  check_fusion_pair(up, down);
  if (down.kind == OpKind::kMatMul) {
    return {{"M", down.attr("M")}, {"K2", down.attr("K")}, {"N2", down.attr("N")}};
  }
  const Shape in = down.operand_shape(0);
  return {{"N", down.attr("N")}, {"O1", in[1]},          {"H1", in[2]},
          {"W1", in[3]},         {"O2", down.attr("O")}, {"H2", down.attr("H")},
          {"W2", down.attr("W")}, {"R2", down.attr_or("R", 1)}, {"C2", down.attr_or("C", 1)}};
}

namespace {

struct SymbolNames {
  std::vector<std::string> down;    // per downstream spatial loop
  std::vector<std::string> input;   // per upstream output dim
  std::vector<std::string> window;  // per downstream loop; empty when no window symbol
};

SymbolNames symbol_names(const OperatorNode& down) {
  if (down.kind == OpKind::kMatMul) return {{"M", "N2"}, {"M", "K2"}, {"", ""}};
  const bool windowed = down.kind != OpKind::kPointwiseConv2d;
  return {{"N", "O2", "H2", "W2"},
          {"N", "O1", "H1", "W1"},
          {"", "", windowed ? "R2" : "", windowed ? "C2" : ""}};
}

}  // namespace

SymProduct fused_upstream_trips_symbolic(const OperatorNode& up, const OperatorNode& down,
                                         const TileSpec& tiles,
                                         const std::optional<std::set<std::string>>& untiled_loops) {
  check_fusion_pair(up, down);
  if (down.attr_or("pad", 0) != 0) {
    throw FusionError("node '" + down.id + "': symbolic counts need pad == 0");
  }
  const LoopNest nest = loop_nest(down);
  check_tiles(nest, tiles);
  const auto maps = dim_maps(down);
  const auto names = symbol_names(down);
  const size_t rank = down.operand_shape(0).size();
  // Untiled loops are written with their extent symbol; a unit tile counts
  // as tiled so the outer factor carries the symbol.
  auto untiled = [&](size_t d) {
    if (untiled_loops) {
      if (!untiled_loops->count(nest.spatial[d].name)) return false;
      if (tiles.extents[d] != nest.spatial[d].extent) {
        throw FusionError("loop '" + nest.spatial[d].name + "' is declared untiled but has a proper tile");
      }
      return true;
    }
    return tiles.extents[d] == nest.spatial[d].extent && tiles.extents[d] != 1;
  };
  SymProduct product;
  for (size_t d = 0; d < maps.size(); ++d) {
    if (untiled(d)) continue;
    SymFactor outer = SymFactor::symbol(names.down[d]);
    outer.divisor = tiles.extents[d];
    product.multiply(outer);
  }
  std::vector<std::optional<size_t>> source(rank);
  for (size_t d = 0; d < maps.size(); ++d) {
    if (maps[d].input_dim) source[*maps[d].input_dim] = d;
  }
  for (size_t u = 0; u < rank; ++u) {
    if (!source[u] || untiled(*source[u])) {
      product.multiply(SymFactor::symbol(names.input[u]));
      continue;
    }
    const size_t d = *source[u];
    SymFactor span;
    span.constant = tiles.extents[d];
    if (!names.window[d].empty()) {
      span.symbols.push_back(names.window[d]);
      span.constant -= 1;
    }
    product.multiply(span);
  }
  return product;
}

SymProduct unfused_upstream_trips_symbolic(const OperatorNode& up, const OperatorNode& down) {
  check_fusion_pair(up, down);
  if (down.attr_or("pad", 0) != 0) {
    throw FusionError("node '" + down.id + "': symbolic counts need pad == 0");
  }
  SymProduct product;
  if (down.kind == OpKind::kMatMul) {
    product.multiply(SymFactor::symbol("M"));
    product.multiply(SymFactor::symbol("K2"));
    return product;
  }
  product.multiply(SymFactor::symbol("N"));
  product.multiply(SymFactor::symbol("O1"));
  if (down.kind == OpKind::kPointwiseConv2d) {
    product.multiply(SymFactor::symbol("H2"));
    product.multiply(SymFactor::symbol("W2"));
  } else {
    product.multiply({{"H2", "R2"}, -1, 1});
    product.multiply({{"W2", "C2"}, -1, 1});
  }
  return product;
}

Redundancy redundancy(const OperatorNode& up, const OperatorNode& down, const TileSpec& tiles) {
  Redundancy r;
  r.fused_trips = fused_upstream_trips(up, down, tiles);
  r.unfused_trips = unfused_upstream_trips(up);
  r.ratio = static_cast<double>(r.fused_trips) / static_cast<double>(r.unfused_trips);
  const LoopNest nest = loop_nest(down);
  const Shape input = down.operand_shape(0);
  const auto maps = dim_maps(down);
  const auto& input_names = input_loop_names(down);
  int64_t ts2 = 1;
  for (size_t d = 0; d < maps.size(); ++d) {
    const int64_t extent = nest.spatial[d].extent;
    const int64_t tile = tiles.extents[d];
    ts2 *= tile;
    if (extent / tile <= 1) continue;
    r.outer_downstream.push_back(nest.spatial[d].name);
    if (!maps[d].input_dim) {
      r.cond1 = true;
      r.cond1_loops.push_back(nest.spatial[d].name);
      continue;
    }
    const int u = *maps[d].input_dim;
    r.outer_upstream.push_back(input_names[u]);
    int64_t sum = 0;
    for (int64_t lo = 0; lo < extent; lo += tile) sum += clipped_span(lo, tile, maps[d], input[u]);
    if (sum > input[u]) r.cond2 = true;
  }
  r.tile_shrinks = ts2 < footprint(down, tiles).size();
  return r;
}

std::string_view to_string(FusionCategory category) {
  switch (category) {
    case FusionCategory::kDepthwiseDownstream:
      return "DepthwiseDownstream";
    case FusionCategory::kPointwiseDownstream:
      return "PointwiseDownstream";
    case FusionCategory::kNotApplicable:
      break;
  }
  return "NotApplicable";
}

FusionVerdict intensive_fusion_legal(const OperatorNode& up, const OperatorNode& down) {
  if (!up.complex()) throw FusionError("node '" + up.id + "' is not a complex operator");
  if (!down.complex()) throw FusionError("node '" + down.id + "' is not a complex operator");
  FusionVerdict verdict;
  try {
    check_fusion_pair(up, down);
  } catch (const FusionError&) {
    return verdict;
  }
  switch (down.kind) {
    case OpKind::kDepthwiseConv2d:
      verdict.category = FusionCategory::kDepthwiseDownstream;
      verdict.reused_dims = {"h", "w"};
      break;
    case OpKind::kPointwiseConv2d:
      verdict.category = FusionCategory::kPointwiseDownstream;
      verdict.reused_dims = {"o"};
      break;
    case OpKind::kMatMul:
      verdict.category = FusionCategory::kPointwiseDownstream;
      verdict.reused_dims = {"n"};
      break;
    default:
      return verdict;
  }
  verdict.required_untiled = verdict.reused_dims;
  return verdict;
}

Schedule derive_intensive_schedule(const OperatorNode& up, const OperatorNode& down,
                                   const TileSpec& tiles) {
  const FusionVerdict verdict = intensive_fusion_legal(up, down);
  if (verdict.category == FusionCategory::kNotApplicable) {
    throw FusionError("pair " + up.id + "->" + down.id + " has no zero-redundancy intensive fusion");
  }
  const LoopNest nest = loop_nest(down);
  check_tiles(nest, tiles);
  for (const auto& dim : verdict.required_untiled) {
    const int k = nest.spatial_index(dim);
    if (tiles.extents[k] != nest.spatial[k].extent) {
      throw FusionError("pair " + up.id + "->" + down.id + ": loop '" + dim +
                        "' is reused and must stay untiled");
    }
  }
  Schedule schedule;
  schedule.tiling[down.id] = OpTiling{tiles.extents, tiles.extents};
  schedule.set_mode(up.id, down.id, FusionMode::kIntensive);
  return schedule;
}

}  // namespace gopt
