"""Maximum-likelihood subsolvers shared by the sequential engines.

Gaussian growth models are fitted by least squares with a derivative-free
simplex search (the change-point objective is only piecewise smooth in x0,
which rules out plain gradient descent).  The factorial logistic cases are
fitted under their admissibility constraints: a one-dimensional bounded
search for the equal-coefficient case and a sign-fixed two-dimensional
search for the zero-beta2 case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .designs import MANDAL_C0
from .errors import InsufficientData
from .growth import ExperimentInterval, NlrKind
from .logistic import cell_index

#: box for the growth-curve amplitude and rate parameters
ALPHA_BOUNDS = (1e-3, 1e3)

#: the equal-beta MLE lives strictly inside the admissible interval
C1_EDGE = MANDAL_C0 - 1e-6

#: log-magnitude box for the sign-fixed logistic parameterization
C2_UBOUND = 10.0


@dataclass
class FitResult:
    theta: np.ndarray
    objective: float
    converged: bool
    iterations: int
    boundary: bool = False


# ---------------------------------------------------------------------------
# generic local optimizers
# ---------------------------------------------------------------------------

def _project(x, bounds):
    if bounds is None:
        return np.asarray(x, dtype=float)
    return np.minimum(np.maximum(x, bounds[0]), bounds[1])


def nelder_mead(f, x0, bounds=None, xtol: float = 1e-8,
                max_iter: int | None = None, init_step: float = 0.05) -> FitResult:
    """Reflect/expand/contract/shrink simplex descent with box projection.

    Terminates when the simplex diameter drops below xtol * (1 + |best|)
    or after max_iter (default 500 * d) iterations.
    """
    x0 = _project(np.asarray(x0, dtype=float), bounds)
    d = x0.size
    if max_iter is None:
        max_iter = 500 * d

    sim = np.empty((d + 1, d))
    sim[0] = x0
    for k in range(d):
        step = init_step * max(abs(x0[k]), 1.0)
        vertex = x0.copy()
        vertex[k] += step
        vertex = _project(vertex, bounds)
        if vertex[k] == x0[k]:  # clipped onto a bound face; step inward
            vertex[k] = x0[k] - step
            vertex = _project(vertex, bounds)
        sim[k + 1] = vertex
    fsim = np.array([f(v) for v in sim])

    rho, chi, psi, sigma = 1.0, 2.0, 0.5, 0.5
    inv_d = 1.0 / d
    it = 0
    while it < max_iter:
        order = np.argsort(fsim)
        sim, fsim = sim[order], fsim[order]
        diameter = abs(sim[1:] - sim[0]).max()
        if diameter < xtol * (1.0 + abs(sim[0]).max()):
            break
        it += 1

        centroid = sim[:-1].sum(axis=0) * inv_d
        xr = _project(centroid + rho * (centroid - sim[-1]), bounds)
        fr = f(xr)
        if fr < fsim[0]:
            xe = _project(centroid + rho * chi * (centroid - sim[-1]), bounds)
            fe = f(xe)
            sim[-1], fsim[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        else:
            if fr < fsim[-1]:
                xc = _project(centroid + psi * rho * (centroid - sim[-1]), bounds)
            else:
                xc = _project(centroid - psi * (centroid - sim[-1]), bounds)
            fc = f(xc)
            if fc < min(fr, fsim[-1]):
                sim[-1], fsim[-1] = xc, fc
            else:
                for j in range(1, d + 1):
                    sim[j] = _project(sim[0] + sigma * (sim[j] - sim[0]), bounds)
                    fsim[j] = f(sim[j])

    order = np.argsort(fsim)
    sim, fsim = sim[order], fsim[order]
    return FitResult(theta=sim[0], objective=float(fsim[0]),
                     converged=it < max_iter, iterations=it)


def local_minimize(f, x0, bounds=None, n_starts: int = 3, perturb: float = 0.05,
                   xtol: float = 1e-8, max_iter: int | None = None,
                   init_step: float = 0.05) -> FitResult:
    """Multi-start simplex descent; the first start is x0 itself, so the
    returned objective never exceeds a restart from the incumbent.

    Extra starts use deterministic +/- `perturb` relative perturbations
    (alternating sign patterns), keeping fits free of any random stream.
    """
    x0 = np.asarray(x0, dtype=float)
    scale = np.maximum(np.abs(x0), 1.0)
    best = None
    total_iter = 0
    for s in range(n_starts):
        if s == 0:
            start = x0
        else:
            signs = np.array([(-1.0) ** (k + s) for k in range(x0.size)])
            start = x0 + perturb * scale * signs
        res = nelder_mead(f, start, bounds=bounds, xtol=xtol, max_iter=max_iter,
                          init_step=init_step)
        total_iter += res.iterations
        if best is None or res.objective < best.objective:
            best = res
    best.iterations = total_iter
    return best


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, lo: float, hi: float, xtol: float = 1e-8,
                       max_iter: int = 200) -> tuple[float, float, int]:
    """Golden-section minimization on [lo, hi]; returns (x, f(x), iterations)."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > xtol * (1.0 + abs(a) + abs(b)) and it < max_iter:
        it += 1
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc < fd else d
    return float(x), float(min(fc, fd)), it


# ---------------------------------------------------------------------------
# nonlinear least squares for the growth models
# ---------------------------------------------------------------------------

def _rss_fn(kind: NlrKind, x: np.ndarray, y: np.ndarray):
    """Residual-sum-of-squares closure, specialized per model.

    The data are sorted by x once so the change-point branch split is a
    single searchsorted per evaluation; this sits in the innermost loop of
    every sequential refit.  Values agree with growth_mean exactly.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    inv_x = 1.0 / xs

    if kind.tag == "M1":
        def rss(theta):
            r = ys - theta[0] * np.exp(-theta[1] * inv_x)
            return float(r @ r)
        return rss

    def branched_rss(a1, a2, x0, k):
        r_lo = ys[:k] - a1 * np.exp(-a2 * inv_x[:k])
        r_hi = ys[k:] - a1 * np.exp(-a2 / x0) * (1.0 - a2 / x0 + a2 * xs[k:] / x0**2)
        return float(r_lo @ r_lo + r_hi @ r_hi)

    if kind.tag == "M2":
        x0 = float(kind.x0_known)
        k_fixed = int(np.searchsorted(xs, x0, side="left"))

        def rss(theta):
            return branched_rss(theta[0], theta[1], x0, k_fixed)
        return rss

    def rss(theta):  # M3: the change point moves with theta
        k = int(np.searchsorted(xs, theta[2], side="left"))
        return branched_rss(theta[0], theta[1], theta[2], k)
    return rss


def _cold_init_exp(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Log-linear regression of y on 1/x as a starting point for (a1, a2)."""
    usable = y > max(1e-6, 0.02 * float(np.max(y, initial=0.0)))
    if usable.sum() >= 2 and np.ptp(x[usable]) > 0.0:
        coef = np.polyfit(1.0 / x[usable], np.log(y[usable]), 1)
        a2 = float(np.clip(-coef[0], *ALPHA_BOUNDS))
        a1 = float(np.clip(np.exp(coef[1]), *ALPHA_BOUNDS))
        return np.array([a1, a2])
    return np.array([1.0, 1.0])


def _nls_bounds(kind: NlrKind, interval: ExperimentInterval):
    lo = [ALPHA_BOUNDS[0], ALPHA_BOUNDS[0]]
    hi = [ALPHA_BOUNDS[1], ALPHA_BOUNDS[1]]
    if kind.tag == "M3":
        lo.append(interval.x_min + 1.0)
        hi.append(interval.x_max - 1.0)
    return np.asarray(lo), np.asarray(hi)


def _profile_fit_m3(x, y, interval: ExperimentInterval, grid_size: int = 40):
    """Profile the change point on a grid, fitting (a1, a2) at each node,
    then refine the best node by golden section on the profile objective."""
    x0_lo, x0_hi = interval.x_min + 1.0, interval.x_max - 1.0
    grid = np.linspace(x0_lo, x0_hi, grid_size)
    inner_bounds = (np.array([ALPHA_BOUNDS[0]] * 2), np.array([ALPHA_BOUNDS[1]] * 2))

    chain = _cold_init_exp(x, y)

    # the grid pass only ranks candidate change points, so the inner fits
    # run on a small budget; the final polish restores full precision
    def inner(x0: float, init: np.ndarray) -> FitResult:
        rss = _rss_fn(NlrKind("M2", x0_known=float(x0)), x, y)
        return local_minimize(rss, init, bounds=inner_bounds, n_starts=1,
                              xtol=1e-4, max_iter=80)

    best_k, best_fit = 0, None
    for k, x0 in enumerate(grid):
        res = inner(x0, chain)
        chain = res.theta  # warm-chain along the profile
        if best_fit is None or res.objective < best_fit.objective:
            best_k, best_fit = k, res

    lo = grid[max(best_k - 1, 0)]
    hi = grid[min(best_k + 1, grid_size - 1)]
    warm = best_fit.theta

    def profile(x0: float) -> float:
        return inner(x0, warm).objective

    x0_star, _, _ = golden_section_min(profile, lo, hi, xtol=1e-3)
    final_inner = inner(x0_star, warm)
    return np.append(final_inner.theta, x0_star)


def nls_fit(kind: NlrKind, x, y, interval: ExperimentInterval | None = None,
            init=None, n_starts: int = 3, xtol: float = 1e-8,
            init_step: float = 0.05) -> FitResult:
    """Least-squares fit of a growth model, warm-started at `init` when given.

    Without a warm start, M1/M2 start from a log-linear regression and M3
    runs the change-point profile search before the final polish.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if interval is None:
        interval = ExperimentInterval()
    d = kind.dim
    if x.size < d + 1:
        raise InsufficientData(f"need at least {d + 1} observations, got {x.size}")
    if np.unique(x).size < 2:
        raise InsufficientData("all design points identical")

    bounds = _nls_bounds(kind, interval)
    rss = _rss_fn(kind, x, y)
    if init is None:
        if kind.tag == "M3":
            init = _profile_fit_m3(x, y, interval)
        else:
            init = _cold_init_exp(x, y)
    init = np.clip(np.asarray(init, dtype=float), bounds[0], bounds[1])
    return local_minimize(rss, init, bounds=bounds, n_starts=n_starts, xtol=xtol,
                          init_step=init_step)


# ---------------------------------------------------------------------------
# constrained logistic maximum likelihood
# ---------------------------------------------------------------------------

def cells_from_pairs(data) -> tuple[np.ndarray, np.ndarray]:
    """Collapse (level point, y) pairs to per-cell trial and success counts."""
    counts = np.zeros(4)
    succ = np.zeros(4)
    for point, y in data:
        c = cell_index(point)
        counts[c] += 1.0
        succ[c] += float(y)
    return counts, succ


def _neg_loglik_cells(counts, succ, etas) -> float:
    # scalar loop over the four cells: this sits inside every simplex
    # iteration of the logistic refits, where numpy round-trips dominate.
    # log(1 + exp(eta)) = max(eta, 0) + log1p(exp(-|eta|)) stays finite
    # for |eta| up to ~700.
    total = 0.0
    for c in range(4):
        eta = float(etas[c])
        total += counts[c] * (max(eta, 0.0) + math.log1p(math.exp(-abs(eta)))) \
            - succ[c] * eta
    return total


def logistic_mle_c1(data=None, *, counts=None, successes=None) -> FitResult:
    """MLE under beta0 = beta1 = beta2 = b with |b| < 0.8314.

    The log-likelihood is concave in the scalar b, so a golden-section
    search on the open admissible interval is exact; when the optimum pins
    to an edge (e.g. complete separation) the result carries boundary=True.
    """
    if counts is None:
        counts, successes = cells_from_pairs(data)
    counts = [float(v) for v in counts]
    successes = [float(v) for v in successes]
    mult = (3.0, 1.0, 1.0, -1.0)  # 1 + x1 + x2 per cell

    def nll(b: float) -> float:
        return _neg_loglik_cells(counts, successes, [b * m for m in mult])

    b_hat, obj, it = golden_section_min(nll, -C1_EDGE, C1_EDGE, xtol=1e-8)
    boundary = C1_EDGE - abs(b_hat) < 1e-5
    if boundary:
        b_hat = float(np.sign(b_hat) * C1_EDGE)
        obj = nll(b_hat)
    return FitResult(theta=np.array([b_hat] * 3), objective=obj,
                     converged=True, iterations=it, boundary=boundary)


def logistic_mle_c2(data=None, *, counts=None, successes=None,
                    init=None, n_starts: int = 3, xtol: float = 1e-8,
                    signs=(1.0, -1.0)) -> FitResult:
    """MLE under beta2 = 0 and beta0 * beta1 > 0.

    The open-quadrant constraint is enforced by the parameterization
    beta = s * exp(u) with u in [-10, 10]^2; by default both signs are
    fitted and the better objective wins, so the returned estimate always
    satisfies beta0 * beta1 > 0.  Warm sequential refits may pass a single
    sign (the incumbent's) to skip the mirror quadrant.
    """
    if counts is None:
        counts, successes = cells_from_pairs(data)
    counts = [float(v) for v in counts]
    successes = [float(v) for v in successes]
    bounds = (np.full(2, -C2_UBOUND), np.full(2, C2_UBOUND))

    def nll_for(sign: float):
        def nll(u):
            b0 = sign * math.exp(u[0])
            b1 = sign * math.exp(u[1])
            # x1 = +1 on the first two cells, -1 on the last two
            return _neg_loglik_cells(counts, successes,
                                     (b0 + b1, b0 + b1, b0 - b1, b0 - b1))
        return nll

    best = None
    best_sign = 1.0
    for sign in signs:
        if init is not None and np.sign(init[0]) == sign:
            u0 = np.clip(np.log(np.maximum(np.abs(init[:2]), 1e-12)),
                         -C2_UBOUND, C2_UBOUND)
        else:
            u0 = np.array([0.0, -1.0])
        res = local_minimize(nll_for(sign), u0, bounds=bounds, n_starts=n_starts,
                             xtol=xtol)
        if best is None or res.objective < best.objective:
            best, best_sign = res, sign

    u = best.theta
    boundary = bool(np.any(np.abs(u) >= C2_UBOUND - 1e-6))
    theta = np.array([best_sign * np.exp(u[0]), best_sign * np.exp(u[1]), 0.0])
    return FitResult(theta=theta, objective=best.objective, converged=best.converged,
                     iterations=best.iterations, boundary=boundary)
