import numpy as np
import pytest

from seqdopt.config import parse_config
from seqdopt.engine import TrialRecord, Trajectory, run
from seqdopt.errors import DegenerateInformation
from seqdopt.metrics import (
    DensityHistogram,
    EfficiencyCurve,
    crossing_step,
    glm_allocation,
    mean_efficiency,
    normality_diagnostic,
    relative_efficiency,
    sequential_density,
    true_fisher_info,
)
from seqdopt.designs import draw_point, optimal_design_m1
from seqdopt.growth import cumulative_fisher_nlr
from seqdopt.linalg import det_sym
from seqdopt.modelspec import closed_form_design, default_model, fisher_point


def test_true_fisher_glm_zero_beta_identity_pattern():
    # hand oracle: X*^T X* = 4 I, weights 1/4, proportions 1/4 -> I* = 0.25 I
    model = default_model("GLM_C1", theta_star=(0.0, 0.0, 0.0))
    i_star = true_fisher_info(model)
    assert np.allclose(i_star, 0.25 * np.eye(3))


def test_true_fisher_m1_nondegenerate():
    i_star = true_fisher_info(default_model("M1"))
    assert det_sym(i_star) > 0.0


@pytest.mark.parametrize("name", ["M1", "M2", "M3", "GLM_C1", "GLM_C2"])
def test_true_fisher_matches_monte_carlo(name):
    # oracle: Monte Carlo integration of the single-point information over
    # draws from the optimal design
    model = default_model(name)
    theta = np.asarray(model.theta_star)
    i_star = true_fisher_info(model)
    measure = closed_form_design(model, theta)
    rng = np.random.default_rng(123)
    total = np.zeros_like(i_star)
    n = 100_000
    idx = rng.choice(len(measure.support), size=n, p=np.asarray(measure.weights))
    counts = np.bincount(idx, minlength=len(measure.support))
    for c, x in zip(counts, measure.support):
        total += c * fisher_point(model, theta, x)
    mc = total / n
    scale = np.abs(i_star).max()
    assert np.all(np.abs(mc - i_star) <= 0.01 * scale)


def _toy_trajectory(model, xs, theta):
    records = [TrialRecord(j + 1, float(x), 0.0, None, None, 0.0)
               for j, x in enumerate(xs[:-1])]
    records.append(TrialRecord(len(xs), float(xs[-1]), 0.0, theta, 1.0, 0.0))
    # mark every step from n1 on as estimated at the same theta
    n1 = 2
    for r in records[n1 - 1:]:
        r.theta_hat = theta
    return Trajectory(model=model, method="pics", n1=n1, records=records,
                      stage1_ms=0.0)


def test_efficiency_one_when_information_matches():
    model = default_model("M1")
    theta = np.asarray(model.theta_star)
    measure = optimal_design_m1(theta, model.interval)
    # alternate the two support points: the empirical average equals I*
    xs = list(measure.support) * 30
    traj = _toy_trajectory(model, xs, theta)
    i_star = true_fisher_info(model)
    curve = relative_efficiency(traj, i_star)
    assert curve.values[-1] == pytest.approx(1.0, abs=1e-10)


def test_efficiency_half_when_det_is_half():
    # formula arithmetic on synthetic determinants
    model = default_model("M1")
    theta = np.asarray(model.theta_star)
    i_star = true_fisher_info(model)
    # scale I* by c so det(c I*) = 0.5 det(I*): c = sqrt(0.5) for d = 2
    # construct a two-point design whose average info is c * I*
    # (not exactly reachable with model gradients, so check the formula
    # directly instead)
    det_star = det_sym(i_star)
    e = 1.0 - abs(0.5 * det_star - det_star) / det_star
    assert e == pytest.approx(0.5)


def test_efficiency_sigma2_invariance_at_formula_level():
    # sigma2 scales both determinants by sigma^(-2d) and cancels
    model_a = default_model("M1", sigma2=0.086)
    model_b = default_model("M1", sigma2=4 * 0.086)
    theta = np.asarray(model_a.theta_star)
    xs = np.linspace(10.0, 210.0, 40)
    curves = []
    for model in (model_a, model_b):
        traj = _toy_trajectory(model, list(xs), theta)
        curves.append(relative_efficiency(traj, true_fisher_info(model)))
    assert np.allclose(curves[0].values, curves[1].values, rtol=1e-10)


def test_efficiency_requires_positive_det():
    model = default_model("M1")
    traj = _toy_trajectory(model, [10.0, 20.0, 30.0], np.array([32.11, 105.65]))
    with pytest.raises(DegenerateInformation):
        relative_efficiency(traj, np.zeros((2, 2)))


def test_efficiency_glm_matches_direct_recomputation():
    cfg = parse_config(model="GLM_C1", method="pics", n1=80, n=120, seed=4)
    traj = run(cfg)
    model = cfg.to_model()
    i_star = true_fisher_info(model)
    curve = relative_efficiency(traj, i_star)
    # recompute one step by brute force
    i = 100
    theta_i = traj.records[i - 1].theta_hat
    from seqdopt.logistic import fisher_info_glm
    info = sum(fisher_info_glm(theta_i, r.x) for r in traj.records[:i]) / i
    expected = 1.0 - abs(det_sym(info) - det_sym(i_star)) / det_sym(i_star)
    assert curve.at(i) == pytest.approx(expected, rel=1e-10)


def test_efficiency_nlr_uses_stepwise_estimates():
    cfg = parse_config(model="M1", method="pics", n1=40, n=60, seed=5)
    traj = run(cfg)
    model = cfg.to_model()
    i_star = true_fisher_info(model)
    curve = relative_efficiency(traj, i_star)
    i = 50
    theta_i = traj.records[i - 1].theta_hat
    xs = np.array([r.x for r in traj.records[:i]])
    info = cumulative_fisher_nlr(model.nlr_kind, theta_i, xs, model.sigma2) / i
    expected = 1.0 - abs(det_sym(info) - det_sym(i_star)) / det_sym(i_star)
    assert curve.at(i) == pytest.approx(expected, rel=1e-10)
    assert curve.steps[0] == 40 and curve.steps[-1] == 60


def test_efficiency_iid_optimal_draws_approach_one():
    # law of large numbers with the truth plugged in throughout
    model = default_model("M1")
    theta = np.asarray(model.theta_star)
    measure = optimal_design_m1(theta, model.interval)
    rng = np.random.default_rng(11)
    xs = [draw_point(measure, rng) for _ in range(2000)]
    traj = _toy_trajectory(model, xs, theta)
    curve = relative_efficiency(traj, true_fisher_info(model))
    assert curve.values[-1] > 0.95


def test_mean_efficiency_and_crossing():
    a = EfficiencyCurve(np.array([1, 2, 3]), np.array([0.1, 0.5, 0.9]))
    b = EfficiencyCurve(np.array([1, 2, 3]), np.array([0.3, 0.7, 0.7]))
    m = mean_efficiency([a, b])
    assert np.allclose(m.values, [0.2, 0.6, 0.8])
    assert crossing_step(m, 0.6) == 2
    assert crossing_step(m, 0.95) is None
    with pytest.raises(ValueError):
        mean_efficiency([a, EfficiencyCurve(np.array([1, 2]), np.array([0.0, 0.0]))])


def test_density_single_point_single_bin():
    model = default_model("M1")
    traj = _toy_trajectory(model, [100.0] * 50, np.asarray(model.theta_star))
    hist = sequential_density([traj], bins=100)
    assert hist.mass.sum() == pytest.approx(1.0)
    assert np.count_nonzero(hist.mass) == 1


def test_density_masses_sum_to_one():
    cfg = parse_config(model="M3", method="pics", n1=60, n=90, seed=6)
    trajs = [run(cfg)]
    hist = sequential_density(trajs, bins=100)
    assert hist.mass.sum() == pytest.approx(1.0)
    assert hist.edges[0] == 0.5 and hist.edges[-1] == 210.0


def test_density_mass_near_helper():
    edges = np.linspace(0.0, 10.0, 11)
    mass = np.zeros(10)
    mass[4] = 0.6
    mass[5] = 0.4
    hist = DensityHistogram(edges=edges, mass=mass)
    assert hist.mass_near(4.7, halfwidth_bins=2) == pytest.approx(1.0)
    assert hist.mass_near(0.5, halfwidth_bins=1) == 0.0


def test_density_mode_masses_partition():
    edges = np.linspace(0.0, 10.0, 11)
    mass = np.full(10, 0.1)
    hist = DensityHistogram(edges=edges, mass=mass)
    modes = hist.mode_masses([1.0, 9.0])  # split halfway at 5.0
    assert modes.tolist() == pytest.approx([0.5, 0.5])
    assert modes.sum() == pytest.approx(hist.mass.sum())
    skew = hist.mode_masses([1.0, 3.0])
    assert skew[0] == pytest.approx(0.2)  # bins centered below 2.0


def test_glm_allocation_pools_stage2_only():
    model = default_model("GLM_C1")
    records = [TrialRecord(1, (1, 1), 1.0, None, None, 0.0),
               TrialRecord(2, (1, 1), 0.0, np.zeros(3), 1.0, 0.0),
               TrialRecord(3, (-1, -1), 1.0, np.zeros(3), 1.0, 0.0),
               TrialRecord(4, (-1, 1), 1.0, np.zeros(3), 1.0, 0.0)]
    traj = Trajectory(model=model, method="pics", n1=2, records=records,
                      stage1_ms=0.0)
    alloc = glm_allocation([traj])
    assert alloc.tolist() == [0.0, 0.0, 0.5, 0.5]


def test_normality_diagnostic_calibrated_on_synthetic_normals():
    # feed exact standard normal z through identity information
    rng = np.random.default_rng(21)
    d = 2
    theta_star = np.zeros(d)
    thetas = rng.normal(size=(200, d))
    infos = [np.eye(d)] * 200
    diag = normality_diagnostic(thetas, theta_star, infos)
    assert np.all(np.abs(diag["mean"]) < 0.2)
    assert np.all((np.diag(diag["cov"]) > 0.8) & (np.diag(diag["cov"]) < 1.2))


def test_normality_diagnostic_whitens_correlated_estimates():
    # estimates drawn with covariance M^-1 must whiten to identity
    rng = np.random.default_rng(22)
    m = np.array([[4.0, 1.0], [1.0, 2.0]])
    cov = np.linalg.inv(m)
    chol = np.linalg.cholesky(cov)
    thetas = (chol @ rng.normal(size=(2, 500))).T
    diag = normality_diagnostic(thetas, np.zeros(2), [m] * 500)
    assert np.all(np.abs(diag["mean"]) < 0.2)
    assert np.all(np.abs(diag["cov"] - np.eye(2)) < 0.2)
