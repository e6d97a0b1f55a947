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

#include "gopt/cli.h"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "gopt/error.h"
#include "gopt/fusion_analysis.h"
#include "gopt/partitioner.h"
#include "gopt/reformer.h"
#include "gopt/report.h"
#include "gopt/tuner.h"
#include "gopt/weight_model.h"

namespace gopt {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string input;
  std::string out_dir = ".";
  double threshold = 800.0;
  int max_complex = 0;  // 0: unlimited
  double slope = 1.0;
  double bias = 0.0;
  double mini_threshold = 500.0;
  int budget = 200;
  int mini_budget = 40;
  int join_budget = 60;
  int stable_window = 10;
  double stable_epsilon = 0.01;
  uint64_t seed = 0;
  int64_t cache_lines = 512;
  int64_t line_elems = 8;
  double alpha = 1.0;
  double beta = 16.0;
  bool no_intensive = false;
  std::string tiles;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw IoError("cannot write '" + path.string() + "'");
}

fs::path out_path(const Options& o, const std::string& name) {
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + o.out_dir + "': " + ec.message());
  return fs::path(o.out_dir) / name;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

WeightParams weights(const Options& o) { return {o.slope, o.bias}; }

std::optional<int> max_complex(const Options& o) {
  return o.max_complex > 0 ? std::optional<int>(o.max_complex) : std::nullopt;
}

TuneOptions tune_options(const Options& o) {
  TuneOptions t;
  t.cost = {o.cache_lines, o.line_elems, o.alpha, o.beta};
  t.allow_intensive = !o.no_intensive;
  return t;
}

std::map<std::string, int64_t> parse_tiles(const std::string& text) {
  std::map<std::string, int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("tile entry '" + item + "' is not loop=size");
    try {
      size_t used = 0;
      const int64_t v = std::stoll(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
      out[item.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw ParseError("tile entry '" + item + "' has a non-integer size");
    }
  }
  return out;
}

int cmd_partition(const Options& o, std::ostream& out) {
  const Graph graph = load_graph_file(o.input);
  const Dag dag = make_dag(graph, weights(o));
  const Partition ago = cluster(dag, {o.threshold, max_complex(o)});
  const Partition base = baseline_partition(graph, weights(o));
  Json doc = partition_json(ago);
  doc = Json{{"schema_version", kSchemaVersion},
             {"threshold", o.threshold},
             {"subgraphs", doc["subgraphs"]},
             {"stats", doc["stats"]},
             {"acyclic", is_acyclic_partition(dag, ago)},
             {"baseline", partition_json(base)}};
  write_file(out_path(o, "partition.json"), dump(doc));
  write_file(out_path(o, "partition.dot"), emit_dot(graph, &ago));
  write_file(out_path(o, "baseline.dot"), emit_dot(graph, &base));
  const auto a = partition_stats(ago);
  const auto b = partition_stats(base);
  out << "ago: " << a.count << " subgraphs, jain " << a.jain << "\n";
  out << "baseline: " << b.count << " subgraphs, jain " << b.jain << "\n";
  return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const Graph graph = load_graph_file(o.input);
  const Partition ago = cluster(make_dag(graph, weights(o)), {o.threshold, max_complex(o)});
  const Partition base = baseline_partition(graph, weights(o));
  const Json doc{{"schema_version", kSchemaVersion},
                 {"threshold", o.threshold},
                 {"ago", stats_json(partition_stats(ago))},
                 {"baseline", stats_json(partition_stats(base))}};
  write_file(out_path(o, "stats.json"), dump(doc));
  out << dump(doc);
  return kExitOk;
}

int cmd_fuse_analyze(const Options& o, std::ostream& out) {
  const Graph graph = load_graph_file(o.input);
  const Json doc = fuse_analyze_report(graph, parse_tiles(o.tiles));
  write_file(out_path(o, "fuse_analysis.json"), dump(doc));
  out << dump(doc);
  return kExitOk;
}

int cmd_tune(const Options& o, std::ostream& out) {
  auto graph = std::make_shared<const Graph>(load_graph_file(o.input));
  const Subgraph sub = Subgraph::whole(graph);
  const TuneOptions options = tune_options(o);
  const TuneResult r = tune(sub, o.budget, o.seed, std::nullopt, options);
  const Json doc{{"schema_version", kSchemaVersion},
                 {"budget", o.budget},
                 {"seed", o.seed},
                 {"best_cost", r.best_cost},
                 {"breakdown", breakdown_json(cost_breakdown(sub, r.best, options.cost))},
                 {"unfused", breakdown_json(cost_breakdown(sub, Schedule{}, options.cost))},
                 {"schedule", schedule_json(r.best)}};
  write_file(out_path(o, "tune.json"), dump(doc));
  write_file(out_path(o, "history.csv"), r.history.csv());
  out << "best cost " << r.best_cost << " after " << r.history.size() << " trials\n";
  return kExitOk;
}

int cmd_pipeline(const Options& o, std::ostream& out) {
  auto graph = std::make_shared<const Graph>(load_graph_file(o.input));
  PipelineOptions p;
  p.threshold = o.threshold;
  p.max_complex = max_complex(o);
  p.seed = o.seed;
  p.dnc.mini_threshold = o.mini_threshold;
  p.dnc.mini_budget = o.mini_budget;
  p.dnc.join_budget = o.join_budget;
  p.dnc.stable_window = o.stable_window;
  p.dnc.stable_epsilon = o.stable_epsilon;
  p.dnc.weights = weights(o);
  p.dnc.tune = tune_options(o);
  const Json doc = pipeline_report(graph, p);
  write_file(out_path(o, "pipeline.json"), dump(doc));
  out << "subgraphs " << doc["subgraphs"].size() << ", total cost " << doc["total_cost"].get<double>()
      << ", evaluations " << doc["evaluations"].get<int>() << "\n";
  return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
  std::ifstream f(o.input);
  if (!f) throw IoError("cannot open '" + o.input + "'");
  std::stringstream buffer;
  buffer << f.rdbuf();
  const auto observations = parse_budget_csv(buffer.str());
  const WeightParams fitted = fit(observations);
  const Json doc{{"schema_version", kSchemaVersion},
                 {"observations", observations.size()},
                 {"slope", fitted.slope},
                 {"bias", fitted.bias}};
  write_file(out_path(o, "fit.json"), dump(doc));
  out << dump(doc);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  if (const char* env = std::getenv("AGO_SEED"); env && *env) {
    try {
      size_t used = 0;
      o.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::logic_error&) {
      err << "error: AGO_SEED must be a non-negative integer\n";
      return kExitUsage;
    }
  }

  CLI::App app{"Graph partitioning, fusion analysis and schedule tuning"};
  app.name("gopt");
  app.require_subcommand(1);

  auto add_input = [&](CLI::App* c, const char* what) {
    c->add_option("input", o.input, what)->required();
    c->add_option("--out-dir", o.out_dir, "Directory for output files")->capture_default_str();
  };
  auto add_partition = [&](CLI::App* c) {
    c->add_option("--threshold", o.threshold, "Subgraph weight threshold Td")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--max-complex", o.max_complex, "Complex operators per subgraph (0: no limit)")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--slope", o.slope, "Weight model slope c")->capture_default_str();
    c->add_option("--bias", o.bias, "Weight model bias b")->capture_default_str();
  };
  auto add_tuning = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Random seed (default: AGO_SEED or 0)");
    c->add_option("--cache-lines", o.cache_lines, "Simulated cache lines")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--line-elems", o.line_elems, "Elements per cache line")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--alpha", o.alpha, "Cost per multiply-accumulate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--beta", o.beta, "Cost per cache miss")->check(CLI::PositiveNumber)->capture_default_str();
    c->add_flag("--no-intensive", o.no_intensive, "Disable fusion of two complex operators");
  };

  auto* partition = app.add_subcommand("partition", "Partition a graph and compare with the baseline");
  add_input(partition, "Graph document (JSON)");
  add_partition(partition);

  auto* stats = app.add_subcommand("stats", "Partition statistics only");
  add_input(stats, "Graph document (JSON)");
  add_partition(stats);

  auto* fuse = app.add_subcommand("fuse-analyze", "Redundancy analysis of complex operator pairs");
  add_input(fuse, "Graph document (JSON)");
  fuse->add_option("--tile", o.tiles, "Downstream tile sizes, e.g. o=1,h=1,w=16 (missing loops whole)");

  auto* tune_cmd = app.add_subcommand("tune", "Tune the whole graph as one subgraph");
  add_input(tune_cmd, "Graph document (JSON)");
  tune_cmd->add_option("--budget", o.budget, "Schedules to evaluate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_tuning(tune_cmd);

  auto* pipeline = app.add_subcommand("pipeline", "Partition, split/join tuning and cost report");
  add_input(pipeline, "Graph document (JSON)");
  add_partition(pipeline);
  add_tuning(pipeline);
  pipeline->add_option("--mini-threshold", o.mini_threshold, "Weight threshold for mini-subgraphs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipeline->add_option("--mini-budget", o.mini_budget, "Budget shared by the mini-subgraphs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipeline->add_option("--join-budget", o.join_budget, "Budget of the joined subgraph")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipeline->add_option("--stable-window", o.stable_window, "Trials without progress that end mini tuning")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipeline->add_option("--stable-epsilon", o.stable_epsilon, "Relative progress counted as none")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  auto* fit_cmd = app.add_subcommand("fit", "Fit the weight model to measured budgets (CSV)");
  add_input(fit_cmd, "CSV of extents,budget rows");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << sub->help();
    }
    return kExitUsage;
  }

  try {
    if (partition->parsed()) return cmd_partition(o, out);
    if (stats->parsed()) return cmd_stats(o, out);
    if (fuse->parsed()) return cmd_fuse_analyze(o, out);
    if (tune_cmd->parsed()) return cmd_tune(o, out);
    if (pipeline->parsed()) return cmd_pipeline(o, out);
    if (fit_cmd->parsed()) return cmd_fit(o, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace gopt
