# Copyright 2026 The gopt Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Graph partitioning, fusion analysis and schedule tuning for operator DAGs."""

import json as _json

from . import _gopt
from ._gopt import (
    Error,
    FusionError,
    Graph,
    IoError,
    ParseError,
    ScheduleError,
    Tensor,
    ValidationError,
    jain_index,
    op_weight,
    run_cli,
)

__all__ = [
    "Error", "FusionError", "Graph", "IoError", "ParseError", "ScheduleError", "Tensor",
    "ValidationError", "baseline", "cost", "count_trips", "execute", "fit_csv", "fuse_analyze",
    "jain_index", "load", "loads", "op_weight", "partition", "pipeline", "run_cli", "tune",
]


def load(path):
    return Graph.from_file(str(path))


def loads(text):
    return Graph.from_json(text if isinstance(text, str) else _json.dumps(text))


def _schedule(schedule):
    if schedule is None:
        return ""
    return schedule if isinstance(schedule, str) else _json.dumps(schedule)


def fit_csv(text):
    """(slope, bias) of the least-squares budget fit."""
    return _gopt.fit_csv(text)


def partition(graph, threshold=800.0, max_complex=None, slope=1.0, bias=0.0):
    return _json.loads(_gopt.partition(graph, threshold, max_complex, slope, bias))


def baseline(graph, slope=1.0, bias=0.0):
    return _json.loads(_gopt.baseline(graph, slope, bias))


def fuse_analyze(graph, tiles=None):
    return _json.loads(_gopt.fuse_analyze(graph, dict(tiles or {})))


def count_trips(graph, schedule=None):
    return _gopt.count_trips(graph, _schedule(schedule))


def cost(graph, schedule=None):
    return _json.loads(_gopt.cost(graph, _schedule(schedule)))


def execute(graph, schedule=None, input_seed=0):
    return _gopt.execute(graph, _schedule(schedule), input_seed)


def tune(graph, budget, seed=0, allow_intensive=True):
    return _json.loads(_gopt.tune(graph, budget, seed, allow_intensive))


def pipeline(graph, threshold=800.0, mini_budget=40, join_budget=60, seed=0):
    return _json.loads(_gopt.pipeline(graph, threshold, mini_budget, join_budget, seed))
