#!/usr/bin/env python3
# -*- coding: utf-8 -*-


import json

import numpy as np
import pytest

from pyrankinfer import errors
from pyrankinfer import io
from pyrankinfer import model
from pyrankinfer.helpers import make_rng
from pyrankinfer.simulate import SimulationConfig, simulate


TRIAL_CSV = (
    "# edge,e1,a;b;c\n"
    "edge_id,trial,winner\n"
    "e1,1,a\n"
    "e1,2,b\n"
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def same_dataset(first, second):
    assert first.graph == second.graph
    assert first.trials == second.trials
    assert np.array_equal(first.wins, second.wins)
    assert first.item_labels() == second.item_labels()
    if first.has_trial_level:
        assert np.array_equal(first.trial_level, second.trial_level)


class TestTrialCsv:
    def test_load(self, tmp_path):
        data = io.load_dataset(write(tmp_path, "data.csv", TRIAL_CSV))
        assert data.trials == 2
        assert data.item_labels() == ["a", "b", "c"]
        assert data.wins.tolist() == [[1, 1, 0]]
        assert data.trial_level.tolist() == [[0, 1]]

    def test_winner_not_member(self, tmp_path):
        text = TRIAL_CSV.replace("e1,2,b", "e1,2,d")
        with pytest.raises(errors.DatasetParseError) as info:
            io.load_dataset(write(tmp_path, "data.csv", text))
        assert info.value.line == 4
        assert info.value.edge_id == "e1"

    def test_trial_gap(self, tmp_path):
        text = TRIAL_CSV.replace("e1,2,b", "e1,3,b")
        with pytest.raises(errors.DatasetParseError):
            io.load_dataset(write(tmp_path, "data.csv", text))

    def test_unequal_trials(self, tmp_path):
        text = TRIAL_CSV.replace("# edge,e1,a;b;c\n", "# edge,e1,a;b;c\n# edge,e2,b;c;d\n")
        text += "e2,1,d\n"
        with pytest.raises(errors.DatasetParseError) as info:
            io.load_dataset(write(tmp_path, "data.csv", text))
        assert info.value.edge_id == "e2"

    def test_merged_duplicate_named(self, tmp_path):
        text = (
            "# edge,e1,a;b;c\n"
            "# edge,e2,c;b;a\n"
            "# edge,e3,b;c;d\n"
            "edge_id,trial,winner\n"
            "e1,1,a\n"
            "e2,1,b\n"
            "e3,1,d\n"
        )
        with pytest.raises(errors.DatasetParseError) as info:
            io.load_dataset(write(tmp_path, "data.csv", text))
        assert info.value.edge_id == "e1"
        assert info.value.line == 1
        assert "e1, e2" in str(info.value)

    def test_bad_header(self, tmp_path):
        text = TRIAL_CSV.replace("edge_id,trial,winner", "edge,trial,winner")
        with pytest.raises(errors.DatasetParseError) as info:
            io.load_dataset(write(tmp_path, "data.csv", text))
        assert info.value.line == 2

    def test_empty_file(self, tmp_path):
        with pytest.raises(errors.DatasetParseError):
            io.load_dataset(write(tmp_path, "data.csv", ""))

    def test_missing_file(self, tmp_path):
        with pytest.raises(errors.ValidationError):
            io.load_dataset(str(tmp_path / "absent.csv"))


class TestAggregateCsv:
    def test_load(self, tmp_path):
        text = (
            "edge_id,item,wins,trials\n"
            "e1,x,3,4\n"
            "e1,y,1,4\n"
        )
        data = io.load_dataset(write(tmp_path, "data.csv", text))
        assert not data.has_trial_level
        assert data.wins.tolist() == [[3, 1]]
        assert data.trials == 4

    def test_wins_must_sum(self, tmp_path):
        text = (
            "edge_id,item,wins,trials\n"
            "e1,x,3,4\n"
            "e1,y,1,4\n"
            "e7,x,2,4\n"
            "e7,z,1,4\n"
        )
        with pytest.raises(errors.DatasetParseError) as info:
            io.load_dataset(write(tmp_path, "data.csv", text))
        assert info.value.edge_id == "e7"

    def test_duplicate_edges_merge(self, tmp_path):
        text = (
            "edge_id,item,wins,trials\n"
            "e1,x,1,2\n"
            "e1,y,1,2\n"
            "e2,y,2,2\n"
            "e2,x,0,2\n"
            "e3,x,1,4\n"
            "e3,z,3,4\n"
        )
        data = io.load_dataset(write(tmp_path, "data.csv", text))
        assert data.graph.num_edges == 2
        assert data.trials == 4
        assert data.wins.tolist() == [[1, 3], [1, 3]]


class TestJson:
    def test_duplicate_edges(self, tmp_path):
        payload = {
            "n": 3, "m_way": 2, "trials": 1,
            "edges": [[0, 1], [1, 0]], "wins": [[1, 0], [0, 1]]
        }
        with pytest.raises(errors.DatasetParseError):
            io.load_dataset(write(tmp_path, "data.json", json.dumps(payload)))

    def test_missing_fields(self, tmp_path):
        with pytest.raises(errors.DatasetParseError):
            io.load_dataset(write(tmp_path, "data.json", '{"n": 3}'))

    def test_bad_json(self, tmp_path):
        with pytest.raises(errors.DatasetParseError):
            io.load_dataset(write(tmp_path, "data.json", "{"))


class TestRoundTrip:
    @pytest.mark.parametrize("format", ["trial-csv", "json"])
    def test_simulated(self, tmp_path, format):
        data = simulate(SimulationConfig(n=12, m_way=3, edge_prob=0.1, trials=6, seed=2)).dataset
        path = str(tmp_path / ("data." + ("json" if format == "json" else "csv")))
        io.save_dataset(data, path, format)
        same_dataset(data, io.load_dataset(path, format))

    def test_aggregate(self, tmp_path):
        data = simulate(SimulationConfig(n=8, m_way=2, edge_prob=0.5, trials=3, seed=1)).dataset
        path = str(tmp_path / "data.csv")
        io.save_dataset(data, path, "aggregate-csv")
        loaded = io.load_dataset(path)
        same_dataset(data.aggregated(), loaded)
        assert not loaded.has_trial_level

    def test_trial_csv_needs_trials(self, tmp_path):
        data = simulate(SimulationConfig(n=5, m_way=2, edge_prob=1.0, trials=2)).dataset
        with pytest.raises(errors.MissingTrialLevelError):
            io.save_dataset(data.aggregated(), str(tmp_path / "data.csv"))


class TestRankings:
    def test_top_choice(self):
        graph = model.ComparisonHypergraph(4, 3, [(0, 1, 2), (1, 2, 3)])
        rankings = [[2, 0, 1, 3], [3, 1, 2, 0]]
        data = io.top_choice_from_rankings(rankings, graph, 2, make_rng(0, 0, "rankings"))
        assert data.trials == 2
        # the first user picks item 2 in both edges, the second picks 1 then 3
        assert data.wins[0].tolist() == [0, 1, 1]
        assert data.wins[1].tolist() == [0, 1, 1]

    def test_not_permutation(self):
        graph = model.ComparisonHypergraph(3, 2, [(0, 1)])
        with pytest.raises(errors.ValidationError):
            io.top_choice_from_rankings([[0, 0, 1]], graph, 1, make_rng(0))


class TestReport:
    def test_round_trip(self, tmp_path):
        report = io.RunReport(
            command="fit",
            config={"alpha": 0.05},
            items=["a", "b"],
            theta_hat=[0.5, -0.5],
            se=[0.1, float("nan")],
            rank_point=[1, 2],
            alpha=0.05,
            seed=0,
            wall_clock=1.5
        )
        path = str(tmp_path / "report.json")
        io.write_report(report, path)
        loaded = io.read_report(path)
        assert loaded.se == [0.1, None]
        assert loaded.wall_clock is None
        assert loaded.theta_hat == [0.5, -0.5]

    def test_timing(self):
        report = io.RunReport("fit", {}, [], [], [], [], 0.05, 0, wall_clock=2.0)
        assert "wall_clock" not in report.to_dict()
        assert report.to_dict(include_timing=True)["wall_clock"] == 2.0

    def test_unknown_field(self):
        with pytest.raises(errors.ConfigError):
            io.RunReport.from_dict({"command": "fit", "bogus": 1})
