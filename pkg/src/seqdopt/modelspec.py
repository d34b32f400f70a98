"""Concrete model specifications and the per-model dispatch used by the
sequential engines, metrics and the experiment harness.

Five models are supported: the growth families M1/M2/M3 on a scalar input
interval, and the factorial logistic cases GLM_C1 (equal coefficients) and
GLM_C2 (zero two-factor coefficient, matched signs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import designs, fitting, growth, logistic

MODEL_NAMES = ("M1", "M2", "M3", "GLM_C1", "GLM_C2")

#: simulation-study truths: growth parameters, change point and noise level,
#: and the two logistic parameter vectors satisfying their admissibility rules
DEFAULT_TRUE_PARAMS = {
    "M1": (32.11, 105.65),
    "M2": (32.11, 105.65),
    "M3": (32.11, 105.65, 86.67),
    "GLM_C1": (0.7125, 0.7125, 0.7125),
    "GLM_C2": (1.5, 0.5, 0.0),
}
DEFAULT_X0_KNOWN = 86.67
DEFAULT_SIGMA2 = 0.086


@dataclass(frozen=True)
class ModelSpec:
    """One of the five concrete models with its simulation truth."""

    name: str
    theta_star: tuple
    sigma2: float | None = None      # growth models only
    x_min: float = 0.5
    x_max: float = 210.0
    x0_known: float | None = None    # M2 only

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}")
        if self.is_glm:
            if len(self.theta_star) != 3:
                raise ValueError("logistic models take three coefficients")
        else:
            if self.sigma2 is None or self.sigma2 < 0.0:
                raise ValueError("growth models need sigma2 >= 0")
            if len(self.theta_star) != self.dim:
                raise ValueError(f"{self.name} takes {self.dim} parameters")
        if self.name == "M2" and self.x0_known is None:
            raise ValueError("M2 requires x0_known")

    @property
    def is_glm(self) -> bool:
        return self.name.startswith("GLM")

    @property
    def dim(self) -> int:
        return 2 if self.name in ("M1", "M2") else 3

    @property
    def interval(self) -> growth.ExperimentInterval:
        return growth.ExperimentInterval(self.x_min, self.x_max)

    @property
    def nlr_kind(self) -> growth.NlrKind:
        if self.is_glm:
            raise ValueError(f"{self.name} is not a growth model")
        return growth.NlrKind(self.name, self.x0_known if self.name == "M2" else None)


def default_model(name: str, **overrides) -> ModelSpec:
    """ModelSpec preloaded with the simulation-study true values."""
    kwargs = {"name": name, "theta_star": DEFAULT_TRUE_PARAMS[name]}
    if not name.startswith("GLM"):
        kwargs["sigma2"] = DEFAULT_SIGMA2
    if name == "M2":
        kwargs["x0_known"] = DEFAULT_X0_KNOWN
    kwargs.update(overrides)
    return ModelSpec(**kwargs)


def closed_form_design(model: ModelSpec, theta) -> designs.DesignMeasure:
    """Locally D-optimal design at `theta` for the model's family."""
    if model.name == "M1":
        return designs.optimal_design_m1(theta, model.interval)
    if model.name == "M2":
        return designs.optimal_design_m2(theta, model.x0_known, model.interval)
    if model.name == "M3":
        return designs.optimal_design_m3(theta, model.interval)
    if model.name == "GLM_C1":
        return designs.mandal_c1(theta)
    return designs.mandal_c2(theta)


def project_admissible(model: ModelSpec, theta) -> np.ndarray:
    """Project an estimate onto the closed form's admissible set.

    The constrained MLEs keep estimates admissible by construction, so this
    is a safety net for drift: the equal-coefficient case clamps the common
    value, the matched-sign case floors magnitudes away from zero.
    """
    theta = np.asarray(theta, dtype=float)
    if model.name == "GLM_C1":
        b = float(np.clip(theta[0], -fitting.C1_EDGE, fitting.C1_EDGE))
        return np.array([b, b, b])
    if model.name == "GLM_C2":
        sign = 1.0 if theta[0] >= 0.0 else -1.0
        b0 = sign * max(abs(theta[0]), 1e-6)
        b1 = sign * max(abs(theta[1]), 1e-6)
        return np.array([b0, b1, 0.0])
    return theta  # growth-model estimates are admissible via the fit bounds


def fisher_point(model: ModelSpec, theta, x) -> np.ndarray:
    """Single-trial information matrix at design point x under `theta`."""
    if model.is_glm:
        return logistic.fisher_info_glm(theta, x)
    return growth.fisher_info_nlr(model.nlr_kind, theta, x, model.sigma2)


def simulate(model: ModelSpec, x, rng: np.random.Generator):
    """One response draw at x under the model's simulation truth."""
    if model.is_glm:
        return logistic.simulate_binary(model.theta_star, x, rng)
    return growth.simulate_response_nlr(model.nlr_kind, model.theta_star, x,
                                        model.sigma2, rng)


def fit(model: ModelSpec, xs, ys, init=None, *, cell_counts=None,
        cell_successes=None, n_starts: int = 3, xtol: float = 1e-8,
        init_step: float = 0.05, warm: bool = False) -> fitting.FitResult:
    """Constrained MLE for the model; growth fits are least squares.

    `warm` marks a sequential refit from the previous estimate: the
    matched-sign logistic case then only searches the incumbent's quadrant
    (the mirror quadrant cannot win once the data have picked a sign).
    """
    if model.name == "GLM_C1":
        if cell_counts is None:
            cell_counts, cell_successes = fitting.cells_from_pairs(zip(xs, ys))
        return fitting.logistic_mle_c1(counts=cell_counts, successes=cell_successes)
    if model.name == "GLM_C2":
        if cell_counts is None:
            cell_counts, cell_successes = fitting.cells_from_pairs(zip(xs, ys))
        signs = (1.0, -1.0)
        if warm and init is not None:
            signs = (1.0 if init[0] >= 0.0 else -1.0,)
        return fitting.logistic_mle_c2(counts=cell_counts, successes=cell_successes,
                                       init=init, n_starts=n_starts, xtol=xtol,
                                       signs=signs)
    return fitting.nls_fit(model.nlr_kind, xs, ys, interval=model.interval,
                           init=init, n_starts=n_starts, xtol=xtol,
                           init_step=init_step)
