"""Shared simulation batteries for the acceptance suite.

The heavy 50-replication runs are computed once per session and reused by
the efficiency, timing, allocation and density criteria.  Everything is
seeded from one module-level constant, so the whole acceptance outcome is
deterministic.
"""

import os
import time

import pytest

from seqdopt.config import parse_config
from seqdopt.harness import run_experiment

ACCEPTANCE_SEED = 20240
REPLICATIONS = 50
WORKERS = os.cpu_count() or 2

#: (model, n1, n, initial_design) cells of the main comparison battery
BATTERY_CELLS = [
    ("M1", 40, 100, "uniform"),
    ("M1", 60, 200, "uniform"),
    ("M2", 40, 100, "three_point"),
    ("M2", 60, 200, "three_point"),
    ("M3", 40, 100, "uniform"),
    ("M3", 60, 200, "uniform"),
    ("GLM_C1", 80, 800, "four_point"),
    ("GLM_C1", 100, 1200, "four_point"),
    ("GLM_C2", 80, 800, "four_point"),
    ("GLM_C2", 100, 1200, "four_point"),
]


@pytest.fixture(scope="session")
def battery():
    """dict: (model, n1, n, method) -> (ReplicationSummary, wall_seconds)."""
    results = {}
    for model, n1, n, init in BATTERY_CELLS:
        for method in ("cm", "pics"):
            cfg = parse_config(model=model, method=method, n1=n1, n=n,
                               initial_design=init, seed=ACCEPTANCE_SEED,
                               replications=REPLICATIONS)
            t0 = time.perf_counter()
            summary = run_experiment(cfg, workers=WORKERS)
            results[(model, n1, n, method)] = (summary,
                                               time.perf_counter() - t0)
    return results


@pytest.fixture(scope="session")
def balanced_m3_battery():
    cfg = parse_config(model="M3", method="balanced_pics", n1=60, n=200,
                       initial_design="uniform", seed=ACCEPTANCE_SEED,
                       replications=REPLICATIONS)
    return run_experiment(cfg, workers=WORKERS)


@pytest.fixture(scope="session")
def normality_battery():
    cfg = parse_config(model="M1", method="pics", n1=60, n=400,
                       initial_design="uniform", seed=ACCEPTANCE_SEED,
                       replications=200)
    t0 = time.perf_counter()
    summary = run_experiment(cfg, workers=WORKERS)
    return summary, time.perf_counter() - t0
