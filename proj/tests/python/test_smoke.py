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

import json
import math
import os
from pathlib import Path

import pytest

import gopt

DATA = Path(os.environ.get("GOPT_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))

TWO_CONV = {
    "nodes": [
        {"id": "conv1", "op": "conv2d",
         "attrs": {"N": 1, "I": 2, "O": 4, "H": 6, "W": 18, "R": 3, "C": 3, "pad": 1}},
        {"id": "conv2", "op": "conv2d", "attrs": {"N": 1, "I": 4, "O": 8, "H": 4, "W": 16, "R": 3, "C": 3}},
    ],
    "edges": [{"src": "conv1", "dst": "conv2"}],
}


def test_load_and_round_trip():
    g = gopt.load(DATA / "mbv2_pair.json")
    assert len(g) == len(g.node_ids())
    again = gopt.loads(g.to_json())
    assert again.node_ids() == g.node_ids()
    assert "digraph" in g.dot()


def test_errors_map_to_exceptions():
    with pytest.raises(gopt.ParseError):
        gopt.loads("{")
    with pytest.raises(gopt.IoError):
        gopt.load(DATA / "missing.json")
    cyclic = {
        "nodes": [{"id": "a", "op": "relu", "attrs": {"d0": 4}}, {"id": "b", "op": "relu", "attrs": {"d0": 4}}],
        "edges": [{"src": "a", "dst": "b"}, {"src": "b", "dst": "a"}],
    }
    with pytest.raises(gopt.ValidationError):
        gopt.loads(cyclic)
    assert issubclass(gopt.ValidationError, gopt.Error)


def test_weight_and_fit():
    expected = 2.0 * math.log2(64) * math.log2(28) ** 2 + 1.0
    assert gopt.op_weight([1, 64, 28, 28], slope=2.0, bias=1.0) == pytest.approx(expected)
    slope, bias = gopt.fit_csv("feature,budget\n2,3\n4,5\n8,7\n")
    assert slope == pytest.approx(2.0) and bias == pytest.approx(1.0)
    assert gopt.jain_index([3.0, 3.0, 3.0]) == pytest.approx(1.0)


def test_partition_beats_baseline_on_attention():
    g = gopt.load(DATA / "attention_block.json")
    ago = gopt.partition(g)
    base = gopt.baseline(g)
    assert ago["acyclic"]
    covered = sorted(n for part in ago["subgraphs"] for n in part["nodes"])
    assert covered == sorted(g.node_ids())
    assert len(ago["subgraphs"]) < len(base["subgraphs"])


def test_fuse_analyze_two_convolutions():
    g = gopt.loads(TWO_CONV)
    (pair,) = gopt.fuse_analyze(g, {"o": 1, "h": 1, "w": 16})["pairs"]
    assert pair["fused_trips"] == 6912 and pair["unfused_trips"] == 432
    assert pair["category"] == "NotApplicable"


def test_tune_and_trips():
    g = gopt.load(DATA / "mbv2_pair.json")
    result = gopt.tune(g, budget=15, seed=1)
    assert len(result["history"]) == 15
    assert result["best_cost"] == pytest.approx(gopt.cost(g, result["best"])["cost"])
    assert all(b <= a for a, b in zip(result["history"], result["history"][1:]))
    trips = gopt.count_trips(g, result["best"])
    assert set(trips) == set(g.node_ids())
    assert gopt.count_trips(g)["dw"] <= trips["dw"]


def test_execute_is_schedule_invariant():
    g = gopt.load(DATA / "mbv2_pair.json")
    ref = gopt.execute(g, input_seed=4)
    best = gopt.tune(g, budget=10, seed=2)["best"]
    got = gopt.execute(g, best, input_seed=4)
    assert ref.keys() == got.keys()
    for name, tensor in ref.items():
        assert tensor.shape == got[name].shape
        assert got[name].data == pytest.approx(tensor.data, rel=1e-10, abs=1e-12)


def test_pipeline_is_deterministic():
    g = gopt.load(DATA / "mnsn_pair.json")
    a = gopt.pipeline(g, mini_budget=6, join_budget=6, seed=3)
    b = gopt.pipeline(g, mini_budget=6, join_budget=6, seed=3)
    assert a == b and a["schema_version"] == 1


def test_cli_entry_point(tmp_path):
    code, out, _ = gopt.run_cli(["stats", str(DATA / "fig2.json"), "--out-dir", str(tmp_path)])
    assert code == 0
    assert json.loads(out) == json.loads((tmp_path / "stats.json").read_text())
    assert gopt.run_cli(["bogus"])[0] == 1
