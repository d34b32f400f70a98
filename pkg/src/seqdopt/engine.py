"""Two-stage sequential design engines.

Stage 1 draws a static design and fits the initial estimate.  Stage 2 then
adds one trial at a time using one of three methods:

* ``cm`` -- pick the point maximizing the determinant of the updated total
  information under the current estimate (numerical search over the
  interval; exact enumeration over the four factorial cells for the
  logistic models).
* ``pics`` -- plug the current estimate into the family's closed-form
  optimal design and draw the next point from that measure.
* ``balanced_pics`` -- same plug-in, but served in randomized cycles that
  cover the (weight-expanded) support exactly once per cycle.

Every step refits the constrained MLE and rebuilds the cumulative
information under the new estimate; per-step wall time covers exactly that
compute (selection + response + refit + information rebuild).
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import modelspec
from .config import RunConfig
from .designs import BalancedScheduler, DesignMeasure, draw_point
from .errors import ConstraintViolated, DegenerateDesign, DegenerateInformation
from .fitting import FitResult, local_minimize
from .growth import cumulative_fisher_nlr, fisher_info_nlr
from .linalg import det_sym
from .logistic import LEVEL_POINTS, XXT_CELLS, cell_index, cell_weights, fisher_from_counts
from .modelspec import ModelSpec

logger = logging.getLogger(__name__)

#: number of perturbed restarts for the cold (static-stage) fit
COLD_FIT_STARTS = 3

#: sequential refits are warm-started, so a single simplex run suffices
WARM_FIT_STARTS = 1

#: warm-refit optimizer budget: per-step estimate noise is orders of
#: magnitude above these, so the cold-fit defaults (1e-8, 5%) buy nothing.
#: tolerances are scaled to the parameter magnitudes of each family
#: (growth parameters run to ~100, logistic log-magnitudes are order one)
WARM_FIT_XTOL_NLR = 1e-5
WARM_FIT_XTOL_GLM = 1e-4
WARM_FIT_INIT_STEP = 0.01


@dataclass
class TrialRecord:
    """One trial: the chosen point, its response, and the post-refit state."""

    step: int
    x: object
    y: float
    theta_hat: np.ndarray | None
    det_cum_info: float | None
    step_ms: float


@dataclass
class Trajectory:
    model: ModelSpec
    method: str
    n1: int
    records: list[TrialRecord]
    stage1_ms: float
    stop_index: int | None = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final_theta(self) -> np.ndarray:
        return self.records[-1].theta_hat

    def xs(self) -> list:
        return [r.x for r in self.records]

    def stage2_xs(self) -> list:
        return [r.x for r in self.records[self.n1:]]

    def total_compute_ms(self) -> float:
        return self.stage1_ms + sum(r.step_ms for r in self.records[self.n1:])

    def to_csv(self, path, include_step_ms: bool = True):
        """Write records as CSV.

        Columns: step, x (or x1,x2), y, theta_hat_1..d, det_cum_info and,
        unless disabled, step_ms.  Wall times are the only non-deterministic
        column, so reproducibility-checked outputs drop them.
        """
        d = self.model.dim
        xcols = ["x1", "x2"] if self.model.is_glm else ["x"]
        header = (["step"] + xcols + ["y"]
                  + [f"theta_hat_{k + 1}" for k in range(d)] + ["det_cum_info"])
        if include_step_ms:
            header.append("step_ms")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for r in self.records:
                row = [r.step]
                row += list(r.x) if self.model.is_glm else [repr(float(r.x))]
                row.append(repr(float(r.y)))
                if r.theta_hat is None:
                    row += [""] * d + [""]
                else:
                    row += [repr(float(v)) for v in r.theta_hat]
                    row.append(repr(float(r.det_cum_info)))
                if include_step_ms:
                    row.append(repr(float(r.step_ms)))
                writer.writerow(row)


@dataclass
class EngineState:
    """Mutable state of one sequential run (single-threaded by design)."""

    model: ModelSpec
    method: str
    n1: int
    n: int
    rng: np.random.Generator
    records: list[TrialRecord] = field(default_factory=list)
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    theta_hat: np.ndarray | None = None
    cum_info: np.ndarray | None = None
    det_cum: float | None = None
    cell_counts: np.ndarray | None = None
    cell_successes: np.ndarray | None = None
    scheduler: BalancedScheduler | None = None
    stage1_ms: float = 0.0
    refit_starts: int = WARM_FIT_STARTS

    @property
    def step(self) -> int:
        return len(self.records)


def _initial_points(model: ModelSpec, initial_design: str, n1: int,
                    rng: np.random.Generator) -> list:
    if initial_design == "uniform":
        return [float(rng.uniform(model.x_min, model.x_max)) for _ in range(n1)]
    if initial_design == "three_point":
        mid = (model.x_min + model.x_max) / 2.0
        xi0 = DesignMeasure((model.x_min, model.x_max, mid), (0.3, 0.3, 0.4))
        return [draw_point(xi0, rng) for _ in range(n1)]
    if initial_design == "four_point":
        if n1 % 4 != 0:
            raise ValueError(f"four_point design needs 4 | n1, got {n1}")
        cells = np.repeat(np.arange(4), n1 // 4)
        rng.shuffle(cells)
        return [LEVEL_POINTS[c] for c in cells]
    raise ValueError(f"unknown initial design {initial_design!r}")


def _refit(state: EngineState, n_starts: int, warm: bool = False) -> FitResult:
    kwargs = dict(init=state.theta_hat, n_starts=n_starts, warm=warm)
    if warm:
        xtol = WARM_FIT_XTOL_GLM if state.model.is_glm else WARM_FIT_XTOL_NLR
        kwargs.update(xtol=xtol, init_step=WARM_FIT_INIT_STEP)
    if state.model.is_glm:
        return modelspec.fit(state.model, None, None,
                             cell_counts=state.cell_counts,
                             cell_successes=state.cell_successes, **kwargs)
    return modelspec.fit(state.model, np.asarray(state.xs),
                         np.asarray(state.ys), **kwargs)


def _rebuild_cum_info(state: EngineState):
    if state.model.is_glm:
        state.cum_info = fisher_from_counts(state.cell_counts, state.theta_hat)
    else:
        state.cum_info = cumulative_fisher_nlr(
            state.model.nlr_kind, state.theta_hat, state.xs, state.model.sigma2)
    state.det_cum = det_sym(state.cum_info)


def _observe(state: EngineState, x):
    y = modelspec.simulate(state.model, x, state.rng)
    state.xs.append(x)
    state.ys.append(y)
    if state.model.is_glm:
        c = cell_index(x)
        state.cell_counts[c] += 1.0
        state.cell_successes[c] += float(y)
    return y


def run_static_stage(model: ModelSpec, method: str, n1: int, n: int,
                     initial_design: str, rng: np.random.Generator) -> EngineState:
    """Draw the static design, observe responses and fit the initial MLE."""
    state = EngineState(model=model, method=method, n1=n1, n=n, rng=rng)
    if model.is_glm:
        state.cell_counts = np.zeros(4)
        state.cell_successes = np.zeros(4)

    t0 = time.perf_counter()
    points = _initial_points(model, initial_design, n1, rng)
    for j, x in enumerate(points, start=1):
        y = _observe(state, x)
        state.records.append(TrialRecord(j, x, y, None, None, 0.0))

    result = _refit(state, n_starts=COLD_FIT_STARTS)
    state.theta_hat = result.theta
    _rebuild_cum_info(state)
    state.stage1_ms = (time.perf_counter() - t0) * 1e3

    last = state.records[-1]
    last.theta_hat = state.theta_hat
    last.det_cum_info = state.det_cum
    return state


def _cm_select_interval(state: EngineState) -> float:
    """Numerical maximization of det(cum + I(theta, x)) over the interval.

    Uses the package's multi-start simplex descent launched from the
    interval midpoint.  The criterion surface is multimodal (one peak per
    optimal support point), so the search returns a local maximizer.
    """
    model, theta = state.model, state.theta_hat
    kind, sigma2, cum = model.nlr_kind, model.sigma2, state.cum_info

    def neg_criterion(x) -> float:
        return -det_sym(cum + fisher_info_nlr(kind, theta, float(x[0]), sigma2))

    x0 = np.array([(model.x_min + model.x_max) / 2.0])
    bounds = (np.array([model.x_min]), np.array([model.x_max]))
    result = local_minimize(neg_criterion, x0, bounds=bounds)
    return float(result.theta[0])


def _cm_select_cells(state: EngineState):
    """Exact argmax over the four level combinations (lexicographic ties)."""
    w = cell_weights(state.theta_hat)
    best_point, best_val = None, -np.inf
    for point in sorted(LEVEL_POINTS):
        c = cell_index(point)
        val = det_sym(state.cum_info + w[c] * XXT_CELLS[c])
        if val > best_val:
            best_point, best_val = point, val
    return best_point


def cm_step(state: EngineState) -> EngineState:
    """One criterion-maximizing trial: select, observe, refit, record."""
    t0 = time.perf_counter()
    x = _cm_select_cells(state) if state.model.is_glm else _cm_select_interval(state)
    _finish_step(state, x, t0)
    return state


def _plugin_measure(state: EngineState) -> DesignMeasure:
    theta = state.theta_hat
    try:
        return modelspec.closed_form_design(state.model, theta)
    except (ConstraintViolated, DegenerateDesign) as exc:
        projected = modelspec.project_admissible(state.model, theta)
        logger.warning("step %d: estimate %s inadmissible for the closed form "
                       "(%s); projected to %s", state.step + 1,
                       np.array2string(np.asarray(theta), precision=6), exc,
                       np.array2string(projected, precision=6))
        return modelspec.closed_form_design(state.model, projected)


def pics_step(state: EngineState) -> EngineState:
    """One plug-in trial: draw from the closed form at the current estimate."""
    t0 = time.perf_counter()
    measure = _plugin_measure(state)
    if state.method == "balanced_pics":
        if state.scheduler is None:
            state.scheduler = BalancedScheduler(measure, state.rng)
        x = state.scheduler.next_point(measure)
    else:
        x = draw_point(measure, state.rng)
    _finish_step(state, x, t0)
    return state


def _finish_step(state: EngineState, x, t0: float):
    y = _observe(state, x)
    result = _refit(state, n_starts=state.refit_starts, warm=True)
    state.theta_hat = result.theta
    _rebuild_cum_info(state)
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    state.records.append(TrialRecord(state.step + 1, x, y, state.theta_hat,
                                     state.det_cum, elapsed_ms))


def stopping_check(state: EngineState, delta: float) -> bool:
    """Relative determinant improvement below `delta`?

    Never fires before step n1 + 2, so the comparison always has two
    post-static determinants available.
    """
    i = state.step
    if i < state.n1 + 2:
        return False
    det_now = state.records[-1].det_cum_info
    det_prev = state.records[-2].det_cum_info
    if det_prev <= 1e-300:
        raise DegenerateInformation(f"determinant {det_prev!r} at step {i - 1}")
    return abs(det_now - det_prev) / det_prev < delta


def run(config: RunConfig, rng: np.random.Generator | None = None) -> Trajectory:
    """Full two-stage run for one replication.

    The trajectory is a pure function of (config, rng state); passing no rng
    seeds a fresh stream from config.seed.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    model = config.to_model()
    state = run_static_stage(model, config.method, config.n1, config.n,
                             config.initial_design, rng)
    step_fn = cm_step if config.method == "cm" else pics_step
    stop_index = None
    for i in range(config.n1 + 1, config.n + 1):
        try:
            step_fn(state)
        except Exception as exc:
            raise RuntimeError(f"step {i} failed: {exc}") from exc
        if config.delta_stop is not None and stopping_check(state, config.delta_stop):
            stop_index = i
            break
    return Trajectory(model=model, method=config.method, n1=config.n1,
                      records=state.records, stage1_ms=state.stage1_ms,
                      stop_index=stop_index)
