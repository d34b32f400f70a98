"""Efficiency, density and normality diagnostics over finished trajectories.

The per-step relative efficiency compares the determinant of the averaged
cumulative information (under the step's own estimate, recomputed in full
rather than patched incrementally) to the determinant of the information at
the true optimal design.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .designs import d_criterion
from .engine import Trajectory
from .errors import DegenerateInformation
from .growth import cumulative_fisher_nlr
from .linalg import cholesky_spd, det_sym
from .logistic import cell_index, fisher_from_counts
from .modelspec import ModelSpec, closed_form_design, fisher_point


@dataclass
class EfficiencyCurve:
    """Relative efficiency e_i for i = n1..n (values can dip below 0 early)."""

    steps: np.ndarray
    values: np.ndarray

    def at(self, step: int) -> float:
        k = int(np.searchsorted(self.steps, step))
        if k >= len(self.steps) or self.steps[k] != step:
            raise KeyError(f"step {step} not on the curve")
        return float(self.values[k])


@dataclass
class DensityHistogram:
    edges: np.ndarray   # bins + 1 edges
    mass: np.ndarray    # sums to 1

    def mass_near(self, x: float, halfwidth_bins: int = 2) -> float:
        """Pooled mass within +/- `halfwidth_bins` bin widths of x."""
        width = self.edges[1] - self.edges[0]
        lo, hi = x - halfwidth_bins * width, x + halfwidth_bins * width
        centers = (self.edges[:-1] + self.edges[1:]) / 2.0
        return float(self.mass[(centers >= lo) & (centers <= hi)].sum())

    def mode_masses(self, points) -> np.ndarray:
        """Mass collected by each mode under a nearest-point partition.

        Every bin is assigned to the closest of the given points, so the
        returned masses form an exact decomposition of the total mass into
        "around point k" shares.
        """
        centers = (self.edges[:-1] + self.edges[1:]) / 2.0
        points = np.asarray(points, dtype=float)
        nearest = np.argmin(np.abs(centers[:, None] - points[None, :]), axis=1)
        return np.array([self.mass[nearest == k].sum()
                         for k in range(points.size)])


def true_fisher_info(model: ModelSpec, theta=None) -> np.ndarray:
    """Information at the true optimal design, integrated over its measure.

    For the factorial logistic models this collapses to the 4x3 design
    matrix sandwich with cell weights w*_c p*_c; for the growth models it is
    the weighted sum of the single-point informations over the closed-form
    support.
    """
    theta = model.theta_star if theta is None else theta
    measure = closed_form_design(model, theta)
    if model.is_glm:
        return fisher_from_counts(np.asarray(measure.weights), theta)
    return sum(w * fisher_point(model, theta, x)
               for x, w in zip(measure.support, measure.weights))


def relative_efficiency(traj: Trajectory, i_star: np.ndarray,
                        model: ModelSpec | None = None) -> EfficiencyCurve:
    """e_i = 1 - |det((1/i) sum_j I(theta_hat_i, X_j)) - det(I*)| / det(I*)."""
    model = traj.model if model is None else model
    det_star = det_sym(i_star)
    if det_star <= 0.0:
        raise DegenerateInformation(f"det(I*) = {det_star!r} must be positive")

    n = len(traj.records)
    steps = np.arange(traj.n1, n + 1)
    values = np.empty(steps.size)
    if model.is_glm:
        cells = np.array([cell_index(r.x) for r in traj.records])
        counts = np.zeros(4)
        for c in cells[: traj.n1]:
            counts[c] += 1.0
        for k, i in enumerate(steps):
            if k > 0:
                counts[cells[i - 1]] += 1.0
            info = fisher_from_counts(counts, traj.records[i - 1].theta_hat) / i
            values[k] = 1.0 - abs(det_sym(info) - det_star) / det_star
    else:
        xs = np.array([r.x for r in traj.records])
        kind, sigma2 = model.nlr_kind, model.sigma2
        for k, i in enumerate(steps):
            theta_i = traj.records[i - 1].theta_hat
            info = cumulative_fisher_nlr(kind, theta_i, xs[:i], sigma2) / i
            values[k] = 1.0 - abs(det_sym(info) - det_star) / det_star
    return EfficiencyCurve(steps=steps, values=values)


def mean_efficiency(curves: list[EfficiencyCurve]) -> EfficiencyCurve:
    """Pointwise mean over replications (curves must share their steps)."""
    steps = curves[0].steps
    for c in curves[1:]:
        if not np.array_equal(c.steps, steps):
            raise ValueError("efficiency curves cover different step ranges")
    return EfficiencyCurve(steps=steps,
                           values=np.mean([c.values for c in curves], axis=0))


def crossing_step(curve: EfficiencyCurve, target: float) -> int | None:
    """Smallest step with curve value >= target, or None if never reached."""
    hits = np.nonzero(curve.values >= target)[0]
    return int(curve.steps[hits[0]]) if hits.size else None


def sequential_density(trajectories: list[Trajectory], bins: int = 100,
                       x_min: float | None = None,
                       x_max: float | None = None) -> DensityHistogram:
    """Normalized histogram of all adaptive-stage points, pooled over runs."""
    model = trajectories[0].model
    x_min = model.x_min if x_min is None else x_min
    x_max = model.x_max if x_max is None else x_max
    pooled = np.concatenate([np.asarray(t.stage2_xs(), dtype=float)
                             for t in trajectories])
    hist, edges = np.histogram(pooled, bins=bins, range=(x_min, x_max))
    return DensityHistogram(edges=edges, mass=hist / hist.sum())


def normality_diagnostic(theta_hats, theta_star, cum_infos) -> dict:
    """Standardize replicated final estimates by their own information.

    z_r = L_r^T (theta_hat_r - theta*), with L_r the lower Cholesky factor
    of replication r's cumulative information; if the estimates are
    asymptotically efficient the z_r pool to a standard normal sample.
    Returns the pooled z draws with their empirical mean and covariance.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    zs = np.empty((len(theta_hats), theta_star.size))
    for r, (theta, info) in enumerate(zip(theta_hats, cum_infos)):
        lower = cholesky_spd(np.asarray(info, dtype=float))
        zs[r] = lower.T @ (np.asarray(theta, dtype=float) - theta_star)
    return {
        "z": zs,
        "mean": zs.mean(axis=0),
        "cov": np.cov(zs, rowvar=False),
    }


def glm_allocation(trajectories: list[Trajectory]) -> np.ndarray:
    """Pooled adaptive-stage cell proportions in the fixed row order."""
    counts = np.zeros(4)
    for traj in trajectories:
        for x in traj.stage2_xs():
            counts[cell_index(x)] += 1.0
    return counts / counts.sum()


def efficiency_to_csv(curve: EfficiencyCurve, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "value"])
        for s, v in zip(curve.steps, curve.values):
            writer.writerow([int(s), repr(float(v))])


def histogram_to_csv(hist: DensityHistogram, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "mass"])
        for left, right, m in zip(hist.edges[:-1], hist.edges[1:], hist.mass):
            writer.writerow([repr(float(left)), repr(float(right)), repr(float(m))])


__all__ = [
    "EfficiencyCurve", "DensityHistogram", "true_fisher_info",
    "relative_efficiency", "mean_efficiency", "crossing_step",
    "sequential_density", "normality_diagnostic", "glm_allocation",
    "efficiency_to_csv", "histogram_to_csv", "d_criterion",
]
