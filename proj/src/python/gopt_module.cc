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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "gopt/cli.h"
#include "gopt/error.h"
#include "gopt/loop_interp.h"
#include "gopt/report.h"
#include "gopt/weight_model.h"

namespace py = pybind11;

namespace gopt {
namespace {

using GraphPtr = std::shared_ptr<Graph>;

// Structured results cross the boundary as JSON text; the Python package
// decodes them.
std::string dump(const Json& doc) { return doc.dump(); }

Schedule parse_schedule(const std::string& text) {
  if (text.empty()) return {};
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("schedule: ") + e.what());
  }
  return schedule_from_json(doc);
}

Subgraph whole(const GraphPtr& g) { return Subgraph::whole(g); }

std::string partition_text(const GraphPtr& g, double threshold, std::optional<int> max_complex, double slope,
                           double bias) {
  const Partition p = cluster(*g, {slope, bias}, threshold, max_complex);
  Json doc = partition_json(p);
  doc["acyclic"] = is_acyclic_partition(*g, p);
  return dump(doc);
}

std::string tune_text(const GraphPtr& g, int budget, uint64_t seed, bool allow_intensive) {
  TuneOptions opts;
  opts.allow_intensive = allow_intensive;
  const Subgraph sub = whole(g);
  const TuneResult r = tune(sub, budget, seed, std::nullopt, opts);
  Json doc;
  doc["best_cost"] = r.best_cost;
  doc["best"] = schedule_json(r.best);
  doc["breakdown"] = breakdown_json(cost_breakdown(sub, r.best));
  doc["history"] = r.history.best;
  return dump(doc);
}

std::string pipeline_text(const GraphPtr& g, double threshold, int mini_budget, int join_budget, uint64_t seed) {
  PipelineOptions opts;
  opts.threshold = threshold;
  opts.dnc.mini_budget = mini_budget;
  opts.dnc.join_budget = join_budget;
  opts.seed = seed;
  return dump(pipeline_report(g, opts));
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace
}  // namespace gopt

PYBIND11_MODULE(_gopt, m) {
  using namespace gopt;
  m.doc() = "Graph partitioning, fusion analysis and schedule tuning";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<FusionError>(m, "FusionError", base.ptr());
  py::register_exception<ScheduleError>(m, "ScheduleError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<Graph, std::shared_ptr<Graph>>(m, "Graph")
      .def_static("from_json", [](const std::string& text) { return std::make_shared<Graph>(load_graph(text)); })
      .def_static("from_file",
                  [](const std::string& path) { return std::make_shared<Graph>(load_graph_file(path)); })
      .def("__len__", &Graph::size)
      .def("node_ids",
           [](const Graph& g) {
             std::vector<std::string> ids;
             for (const auto& n : g.nodes()) ids.push_back(n.id);
             return ids;
           })
      .def("op", [](const Graph& g, const std::string& id) { return std::string(to_string(g.node(g.index_of(id)).kind)); })
      .def("to_json", &serialize_graph)
      .def("dot", [](const Graph& g) { return emit_dot(g); });

  py::class_<Tensor>(m, "Tensor")
      .def_readonly("shape", &Tensor::shape)
      .def_readonly("data", &Tensor::data);

  m.def("op_weight", [](const std::vector<int64_t>& extents, double slope, double bias) {
    LoopNest nest;
    for (size_t k = 0; k < extents.size(); ++k) nest.spatial.push_back({"l" + std::to_string(k), extents[k]});
    return op_weight(nest, {slope, bias});
  }, py::arg("extents"), py::arg("slope") = 1.0, py::arg("bias") = 0.0);
  m.def("jain_index", [](const std::vector<double>& w) { return jain_index(w); });
  m.def("fit_csv", [](const std::string& text) {
    const WeightParams p = fit(parse_budget_csv(text));
    return py::make_tuple(p.slope, p.bias);
  });

  m.def("partition", [](const GraphPtr& g, double threshold, std::optional<int> max_complex, double slope,
                        double bias) { return partition_text(g, threshold, max_complex, slope, bias); },
        py::arg("graph"), py::arg("threshold") = 800.0, py::arg("max_complex") = py::none(),
        py::arg("slope") = 1.0, py::arg("bias") = 0.0);
  m.def("baseline", [](const GraphPtr& g, double slope, double bias) {
    return dump(partition_json(baseline_partition(*g, {slope, bias})));
  }, py::arg("graph"), py::arg("slope") = 1.0, py::arg("bias") = 0.0);
  m.def("fuse_analyze", [](const GraphPtr& g, const std::map<std::string, int64_t>& tiles) {
    return dump(fuse_analyze_report(*g, tiles));
  }, py::arg("graph"), py::arg("tiles") = std::map<std::string, int64_t>{});

  m.def("count_trips", [](const GraphPtr& g, const std::string& schedule) {
    return count_trips(whole(g), parse_schedule(schedule));
  }, py::arg("graph"), py::arg("schedule") = "");
  m.def("cost", [](const GraphPtr& g, const std::string& schedule) {
    return dump(breakdown_json(cost_breakdown(whole(g), parse_schedule(schedule))));
  }, py::arg("graph"), py::arg("schedule") = "");
  m.def("execute", [](const GraphPtr& g, const std::string& schedule, uint64_t input_seed) {
    const Subgraph sub = whole(g);
    check_interpretable(sub);
    return execute(sub, parse_schedule(schedule), random_inputs(sub, input_seed));
  }, py::arg("graph"), py::arg("schedule") = "", py::arg("input_seed") = 0);

  m.def("tune", &tune_text, py::arg("graph"), py::arg("budget"), py::arg("seed") = 0,
        py::arg("allow_intensive") = true, py::call_guard<py::gil_scoped_release>());
  m.def("pipeline", &pipeline_text, py::arg("graph"), py::arg("threshold") = 800.0, py::arg("mini_budget") = 40,
        py::arg("join_budget") = 60, py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());
  m.def("run_cli", &cli, py::arg("args"));
}
