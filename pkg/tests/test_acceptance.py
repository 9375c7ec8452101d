#!/usr/bin/env python3
# -*- coding: utf-8 -*-


import math

import pytest

from pyrankinfer import experiments


pytestmark = pytest.mark.slow


def run(name, **overrides):
    overrides.setdefault("workers", 0)
    return experiments.run_experiment(experiments.ExperimentSpec.preset(name, **overrides))


def rows_by(result, **match):
    return [
        row for row in result.rows
        if all(row[key] == value for key, value in match.items())
    ]


class TestErrorRates:
    @pytest.mark.parametrize("name, key", [("rate-vs-p", "p"), ("rate-vs-L", "L")])
    def test_linear_in_rate(self, name, key):
        result = run(name, replications=200)
        cells = result.table.groupby(key).mean()
        for column in ("linf_err", "l2_err"):
            _, r_squared = experiments.fit_through_origin(
                cells["theory_rate"], cells[column]
            )
            assert r_squared >= 0.95


class TestNormality:
    def test_item_one(self):
        result = run("normality", l_grid=(20,), p_grid=(0.03,))
        summary = experiments.normality_summary(result)[0]
        assert 0.93 <= summary["coverage"] <= 0.97
        assert summary["ks"] <= 0.08

    def test_delta_diagnostic(self):
        result = run("normality", l_grid=(80,), p_grid=(0.05,), replications=200)
        summary = experiments.normality_summary(result)[0]
        assert summary["delta_share"] >= 0.9


class TestBootstrapCalibration:
    def test_pp_plot(self):
        result = run("pp-plot")
        for row in result.rows:
            assert abs(row["empirical"] - row["alpha"]) <= 0.04


class TestTables:
    def test_rank_intervals(self):
        result = run("ci-table", p_grid=(0.05,))
        expected = {"sigma-hat": 5.59, "bonferroni-eta": 5.72}
        for normalizer, length in expected.items():
            row = rows_by(result, normalizer=normalizer)[0]
            assert 0.92 <= row["ec_theta"] <= 0.98
            assert row["ec_rank"] >= 0.99
            assert abs(row["length"] - length) <= 0.9
            assert row["within_bonferroni"] >= 0.99
        baseline = rows_by(result, normalizer="bonferroni")[0]
        assert abs(baseline["length"] - 10.29) <= 1.2
        assert baseline["length"] > rows_by(result, normalizer="sigma-hat")[0]["length"]

    def test_top_k_power(self):
        result = run("power-table", p_grid=(0.05,))
        for m in (8, 9, 10):
            row = rows_by(result, m=m)[0]
            assert row["rank_rejection"] <= 0.01
            assert 0.02 <= row["score_size"] <= 0.08
        powers = [rows_by(result, m=m)[0]["rank_rejection"] for m in range(11, 16)]
        for power, expected in zip(powers, (0.008, 0.144, 0.444, 0.822, 0.986)):
            assert abs(power - expected) <= 0.05
        assert all(a <= b for a, b in zip(powers, powers[1:]))

    def test_screening(self):
        result = run("screening-table", p_grid=(0.05,))
        for row, size in zip(result.rows, (8.81, 13.82, 18.89)):
            assert 0.93 <= row["ec_theta"] <= 0.99
            assert row["ec_rank"] >= 0.97
            assert abs(row["size"] - size) <= 1.5
            assert not math.isnan(row["d_hat"])
