"""Replication orchestration, aggregation and flat-file outputs.

Replications run in a process pool (one rng stream per replication, seeded
as base seed + replication index), so results are independent of execution
order and worker count.  All output files except the timing report are pure
functions of the run configuration; wall-clock measurements are inherently
non-reproducible and live only in ``timing.json``.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import metrics
from .config import RunConfig, parse_config, validate_config
from .engine import Trajectory, run
from .errors import ConfigMismatch

__all__ = ["RunConfig", "parse_config", "validate_config", "ReplicationSummary",
           "run_experiment", "compare_methods", "write_outputs"]


@dataclass
class ReplicationSummary:
    """Aggregates of one configuration's replications."""

    config: RunConfig
    trajectories: list[Trajectory]
    mean_curve: metrics.EfficiencyCurve | None
    median_total_ms: float
    total_ms: list[float]
    final_theta_mean: np.ndarray
    final_theta_cov: np.ndarray
    allocation: np.ndarray | None          # GLM: pooled adaptive proportions
    density: metrics.DensityHistogram | None  # growth models: pooled histogram
    stop_indices: list[int | None] | None
    failures: list[tuple[int, int, str]]   # (replication, seed, message)


def _replicate(args) -> tuple[int, Trajectory | None, str | None]:
    config, r = args
    rng = np.random.default_rng(config.seed + r)
    try:
        return r, run(config, rng=rng), None
    except Exception as exc:  # recorded per replication, budgeted by the caller
        return r, None, f"{type(exc).__name__}: {exc}"


def _run_replications(config: RunConfig, workers: int | None):
    jobs = [(config, r) for r in range(config.replications)]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or config.replications == 1:
        results = [_replicate(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, jobs))
    results.sort(key=lambda item: item[0])
    return results


def run_experiment(config: RunConfig, out_dir: str | None = None,
                   workers: int | None = None) -> ReplicationSummary:
    """Run all replications, aggregate, and optionally write artifact files.

    Individual replication failures are recorded and skipped; the experiment
    only fails when more than 10% of replications do.
    """
    validate_config(config)
    results = _run_replications(config, workers)

    trajectories: list[Trajectory] = []
    failures: list[tuple[int, int, str]] = []
    for r, traj, err in results:
        if err is None:
            trajectories.append(traj)
        else:
            failures.append((r, config.seed + r, err))
    if len(failures) > 0.10 * config.replications:
        raise RuntimeError(
            f"{len(failures)}/{config.replications} replications failed; "
            f"first failure: {failures[0]}")

    model = config.to_model()
    i_star = metrics.true_fisher_info(model)
    curves = [metrics.relative_efficiency(t, i_star) for t in trajectories]
    min_len = min(len(c.steps) for c in curves)
    mean_curve = metrics.mean_efficiency(
        [metrics.EfficiencyCurve(c.steps[:min_len], c.values[:min_len])
         for c in curves])

    finals = np.array([t.final_theta for t in trajectories])
    theta_cov = (np.cov(finals, rowvar=False) if len(finals) > 1
                 else np.zeros((finals.shape[1],) * 2))
    total_ms = [t.total_compute_ms() for t in trajectories]

    summary = ReplicationSummary(
        config=config,
        trajectories=trajectories,
        mean_curve=mean_curve,
        median_total_ms=float(np.median(total_ms)),
        total_ms=total_ms,
        final_theta_mean=finals.mean(axis=0),
        final_theta_cov=np.atleast_2d(theta_cov),
        allocation=metrics.glm_allocation(trajectories) if model.is_glm else None,
        density=None if model.is_glm else metrics.sequential_density(trajectories),
        stop_indices=([t.stop_index for t in trajectories]
                      if config.delta_stop is not None else None),
        failures=failures,
    )
    if out_dir is not None:
        write_outputs(summary, out_dir)
    return summary


def _write_trajectories_csv(summary: ReplicationSummary, path):
    model = summary.config.to_model()
    d = model.dim
    xcols = ["x1", "x2"] if model.is_glm else ["x"]
    header = (["replication", "step"] + xcols + ["y"]
              + [f"theta_hat_{k + 1}" for k in range(d)] + ["det_cum_info"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rep, traj in enumerate(summary.trajectories):
            for rec in traj.records:
                row = [rep, rec.step]
                row += list(rec.x) if model.is_glm else [repr(float(rec.x))]
                row.append(repr(float(rec.y)))
                if rec.theta_hat is None:
                    row += [""] * (d + 1)
                else:
                    row += [repr(float(v)) for v in rec.theta_hat]
                    row.append(repr(float(rec.det_cum_info)))
                writer.writerow(row)


def write_outputs(summary: ReplicationSummary, out_dir: str):
    """Write the artifact tree: deterministic CSV/JSON plus timing.json."""
    os.makedirs(out_dir, exist_ok=True)
    model = summary.config.to_model()

    _write_trajectories_csv(summary, os.path.join(out_dir, "trajectories.csv"))
    metrics.efficiency_to_csv(summary.mean_curve,
                              os.path.join(out_dir, "mean_efficiency.csv"))
    if model.is_glm:
        with open(os.path.join(out_dir, "allocation.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x1", "x2", "proportion"])
            from .logistic import LEVEL_POINTS
            for point, p in zip(LEVEL_POINTS, summary.allocation):
                writer.writerow([point[0], point[1], repr(float(p))])
    else:
        metrics.histogram_to_csv(summary.density,
                                 os.path.join(out_dir, "density.csv"))

    doc = {
        "config": summary.config.as_dict(),
        "replications_succeeded": len(summary.trajectories),
        "failures": [list(f) for f in summary.failures],
        "final_theta_mean": [float(v) for v in summary.final_theta_mean],
        "final_theta_cov": [[float(v) for v in row]
                            for row in summary.final_theta_cov],
        "final_mean_efficiency": float(summary.mean_curve.values[-1]),
        "stop_indices": summary.stop_indices,
    }
    if summary.allocation is not None:
        doc["allocation"] = [float(v) for v in summary.allocation]
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    timing = {
        "median_total_ms": summary.median_total_ms,
        "total_ms": summary.total_ms,
        "stage1_ms": [t.stage1_ms for t in summary.trajectories],
    }
    with open(os.path.join(out_dir, "timing.json"), "w") as fh:
        json.dump(timing, fh, indent=2, sort_keys=True)
        fh.write("\n")


def compare_methods(configs: list[RunConfig], workers: int | None = None,
                    eff_target: float = 0.6):
    """Run configs that differ only in method and tabulate the comparison.

    Returns (report, summaries): the report maps method name to median total
    compute time, the smallest step whose mean efficiency reaches the
    target, and the final mean efficiency.
    """
    if len(configs) < 2:
        raise ConfigMismatch("need at least two configs to compare")
    base = configs[0]
    for other in configs[1:]:
        for name in RunConfig.__dataclass_fields__:
            if name == "method":
                continue
            if getattr(base, name) != getattr(other, name):
                raise ConfigMismatch(
                    f"configs differ in '{name}': "
                    f"{getattr(base, name)!r} vs {getattr(other, name)!r}")
    methods = [c.method for c in configs]
    if len(set(methods)) != len(methods):
        raise ConfigMismatch(f"duplicate methods in comparison: {methods}")

    report: dict = {"efficiency_target": eff_target}
    summaries: dict[str, ReplicationSummary] = {}
    for cfg in configs:
        summary = run_experiment(cfg, workers=workers)
        summaries[cfg.method] = summary
        report[cfg.method] = {
            "median_total_ms": summary.median_total_ms,
            "crossing_step": metrics.crossing_step(summary.mean_curve, eff_target),
            "final_mean_efficiency": float(summary.mean_curve.values[-1]),
        }
    return report, summaries
