#!/usr/bin/env python3
# -*- coding: utf-8 -*-


from __future__ import annotations
from typing import Dict, Tuple


# Damped Newton settings used by mle.fit_mle
FIT_DEFAULTS: Dict[str, float] = {
    "GRAD_TOL":         1e-10,
    "MAX_ITER":         500,
    "KAPPA_MAX":        10.0,
    "SHRINK":           0.5,
    "SUFFICIENT":       1e-4,
    "RIDGE":            1e-10,
    "MAX_HALVINGS":     60
}

# Gaussian multiplier bootstrap settings
BOOTSTRAP_DEFAULTS: Dict[str, float] = {
    "DRAWS":            1000,
    "MIN_DRAWS":        100,
    "ALPHA":            0.05,
    "C0":               1.0,
    "SEED":             0
}

# Hypergraph sampler settings
SIMULATION_DEFAULTS: Dict[str, float] = {
    # Above this many candidate subsets the sampler stops enumerating
    "ENUMERATION_LIMIT":    10_000_000,
    # Expected edge count allowed before raising a resource error
    "MAX_EDGES":            5_000_000,
    "KAPPA_MAX":            10.0
}

# Experiment harness settings
EXPERIMENT_DEFAULTS: Dict[str, float] = {
    "REPLICATIONS":     500,
    "GRID_COUNT":       8,
    "RATE_LOW":         0.04,
    "RATE_HIGH":        0.18,
    # Bound on the median of |delta_m| * rho_m(theta*) in the normality summary
    "DELTA_THRESHOLD":  0.3,
    # replications x draws x L allowed before raising a resource error
    "MAX_WORKLOAD":     1e12
}

# Normalizers accepted by the bootstrap
NORMALIZERS: Tuple[str, ...] = ("sigma-hat", "bonferroni-eta", "unit")

# Sides accepted by the bootstrap and the rank intervals
SIDES: Tuple[str, ...] = ("two-sided", "one-sided")

# Score specifications accepted by the simulator
SCORE_KINDS: Tuple[str, ...] = ("uniform", "grid", "explicit")

# Dataset file formats
FORMATS: Tuple[str, ...] = ("trial-csv", "aggregate-csv", "json")

# Experiments reproduced by the harness
EXPERIMENTS: Tuple[str, ...] = (
    "rate-vs-p",
    "rate-vs-L",
    "normality",
    "pp-plot",
    "ci-table",
    "power-table",
    "screening-table",
    "topk-recovery"
)

# Random stream purposes. Each purpose gets its own substream
# so replications are reproducible regardless of execution order.
PURPOSE_TAGS: Dict[str, int] = {
    "truth":            0,
    "graph":            1,
    "outcomes":         2,
    "bootstrap":        3,
    "bootstrap-unit":   4,
    "rankings":         5
}

# Process exit codes of the command line interface
EXIT_CODES: Dict[str, int] = {
    "OK":           0,
    "VALIDATION":   2,
    "RESOURCE":     3
}

# Environment variables
ENV_THREADS = "RANKINFER_THREADS"
ENV_LOG_FILE = "RANKINFER_LOG_FILE"
