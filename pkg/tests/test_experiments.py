#!/usr/bin/env python3
# -*- coding: utf-8 -*-


import math

import numpy as np
import pandas as pd
import pytest

from pyrankinfer import errors
from pyrankinfer import experiments
from pyrankinfer import helpers


def small(name, **changes):
    payload = {
        "n": 8,
        "m_way": 3,
        "trials": 20,
        "p_grid": (0.5,),
        "replications": 2,
        "draws": 100,
        "score_spec": dict(experiments.GRID_SCORES)
    }
    payload.update(changes)
    return experiments.ExperimentSpec(name=name, **payload)


class TestSpec:
    def test_rate_preset(self):
        spec = experiments.ExperimentSpec.preset("rate-vs-p")
        assert len(spec.p_grid) == 8
        rates = [helpers.theoretical_rate(60, 3, p, 20) for p in spec.p_grid]
        assert math.isclose(rates[0], 0.04)
        assert math.isclose(rates[-1], 0.18)

    def test_table_presets(self):
        spec = experiments.ExperimentSpec.preset("ci-table")
        assert spec.item == 10
        assert spec.trials == 80
        assert spec.p_grid == (0.05, 0.10, 0.15)
        power = experiments.ExperimentSpec.preset("power-table")
        assert power.k_values == (10,)
        assert power.m_offsets == (-2, -1, 0, 1, 2, 3, 4, 5)
        screening = experiments.ExperimentSpec.preset("screening-table")
        assert screening.k_values == (5, 10, 15)

    def test_overrides(self):
        spec = experiments.ExperimentSpec.preset("normality", replications=7, n=None)
        assert spec.replications == 7
        assert spec.n == 60
        assert len(spec.cells()) == 9

    def test_validation(self):
        with pytest.raises(errors.ConfigError):
            experiments.ExperimentSpec(name="rate-vs-p")
        with pytest.raises(errors.ConfigError):
            experiments.ExperimentSpec(name="unknown", p_grid=(0.1,))
        with pytest.raises(errors.ConfigError):
            small("ci-table", item=9)

    def test_hash(self, tmp_path):
        spec = small("rate-vs-p")
        assert spec.spec_hash() == small("rate-vs-p", workers=4).spec_hash()
        assert spec.spec_hash() != small("rate-vs-p", seed=1).spec_hash()
        path = str(tmp_path / "spec.json")
        spec.dump(path)
        assert experiments.ExperimentSpec.load(path) == spec

    def test_workload_cap(self):
        spec = small(
            "ci-table", replications=10 ** 6, draws=10 ** 5, trials=10 ** 5
        )
        with pytest.raises(errors.ResourceError):
            experiments.run_experiment(spec)


class TestRuns:
    def test_rate_vs_p(self):
        result = experiments.run_experiment(
            small("rate-vs-p", p_grid=(0.4, 0.8), replications=3)
        )
        assert result.columns == ("p", "rep", "linf_err", "l2_err", "theory_rate")
        assert len(result.rows) == 6
        assert result.column("p") == [0.4] * 3 + [0.8] * 3
        assert all(value >= 0 for value in result.column("linf_err"))

    def test_rate_vs_l(self):
        result = experiments.run_experiment(
            small("rate-vs-L", l_grid=(10, 40), edge_prob=0.5)
        )
        assert result.columns[0] == "L"
        assert sorted(set(result.column("L"))) == [10, 40]

    def test_normality(self):
        result = experiments.run_experiment(
            small("normality", l_grid=(10,), replications=4)
        )
        assert result.columns == ("L", "p", "rep", "z", "delta")
        assert len(result.rows) == 4
        assert (result.table["delta"] >= 0).all()
        summary = experiments.normality_summary(result)
        assert summary[0]["count"] == 4
        assert 0 <= summary[0]["ks"] <= 1
        assert 0 <= summary[0]["delta_share"] <= 1

    def test_pp_plot(self):
        result = experiments.run_experiment(
            small("pp-plot", alphas=(0.1, 0.5, 0.9), replications=3)
        )
        empirical = result.column("empirical")
        assert result.column("alpha") == [0.1, 0.5, 0.9]
        assert all(a <= b for a, b in zip(empirical, empirical[1:]))

    def test_ci_table(self):
        result = experiments.run_experiment(small("ci-table", item=3))
        assert result.columns == (
            "normalizer", "p", "ec_theta", "ec_rank", "length", "within_bonferroni"
        )
        assert result.column("normalizer") == ["sigma-hat", "bonferroni-eta", "bonferroni"]
        for value in result.column("ec_rank"):
            assert 0 <= value <= 1
        share = result.column("within_bonferroni")
        assert all(0 <= value <= 1 for value in share[:2])
        assert math.isnan(share[2])
        assert len(result.records) == 3 * 2
        assert set(result.records["rep"]) == {0, 1}

    def test_power_table(self):
        result = experiments.run_experiment(
            small("power-table", k_values=(3,), m_offsets=(0, 2))
        )
        assert result.column("m") == [3, 5]
        for value in result.column("rank_rejection"):
            assert 0 <= value <= 1

    def test_screening_table(self):
        result = experiments.run_experiment(small("screening-table", k_values=(2, 4)))
        assert result.column("k") == [2, 4]
        sizes = result.column("size")
        assert sizes[0] >= 2 and sizes[1] >= 4
        assert all(d >= k for d, k in zip(result.column("d_hat"), (2, 4)))

    def test_topk_recovery(self):
        result = experiments.run_experiment(small("topk-recovery", k_values=(3,)))
        assert result.columns == ("p", "k", "budget", "recovery")
        assert result.column("budget")[0] > 0

    def test_reproducible(self):
        spec = small("rate-vs-p", replications=2)
        first = experiments.run_experiment(spec)
        second = experiments.run_experiment(spec)
        pd.testing.assert_frame_equal(first.table, second.table)

    def test_workers(self):
        spec = small("rate-vs-p", p_grid=(0.4, 0.8))
        serial = experiments.run_experiment(spec)
        parallel = experiments.run_experiment(small("rate-vs-p", p_grid=(0.4, 0.8), workers=2))
        pd.testing.assert_frame_equal(serial.records, parallel.records)


class TestOutput:
    def test_csv(self, tmp_path):
        path = str(tmp_path / "rate.csv")
        spec = small("rate-vs-p", output=path)
        result = experiments.run_experiment(spec)
        with open(path, "r", encoding="utf-8") as handle:
            head = handle.readline()
        assert head == "# experiment=rate-vs-p\n"
        table = experiments.read_csv(path)
        assert list(table.columns) == list(result.columns)
        assert len(table) == len(result.table)
        assert table["linf_err"].tolist() == pytest.approx(result.column("linf_err"))

    def test_missing_values(self, tmp_path):
        path = str(tmp_path / "ci.csv")
        experiments.run_experiment(small("ci-table", item=3, output=path))
        table = experiments.read_csv(path)
        assert table["within_bonferroni"].isna().tolist() == [False, False, True]

    def test_tabulate_means(self):
        records = experiments.record_frame("topk-recovery", [
            {"p": 0.1, "L": 5, "rep": 0, "k": 2, "budget": 1.0, "recovery": True},
            {"p": 0.1, "L": 5, "rep": 1, "k": 2, "budget": 3.0, "recovery": False},
            {"p": 0.2, "L": 5, "rep": 0, "k": 2, "budget": 4.0, "recovery": True}
        ])
        table = experiments.tabulate("topk-recovery", records)
        assert list(table.columns) == ["p", "k", "budget", "recovery"]
        assert table["budget"].tolist() == [2.0, 4.0]
        assert table["recovery"].tolist() == [0.5, 1.0]

    def test_tabulate_empty(self):
        table = experiments.tabulate("ci-table", experiments.record_frame("ci-table", []))
        assert table.empty
        assert table.columns[-1] == "within_bonferroni"


class TestFitThroughOrigin:
    def test_exact_line(self):
        slope, r_squared = experiments.fit_through_origin([1, 2, 3], [2, 4, 6])
        assert math.isclose(slope, 2.0)
        assert math.isclose(r_squared, 1.0)

    def test_noisy(self):
        x = np.linspace(0.1, 1.0, 20)
        slope, r_squared = experiments.fit_through_origin(x, 3 * x + 0.01 * np.sin(x * 40))
        assert abs(slope - 3) < 0.05
        assert r_squared > 0.99

