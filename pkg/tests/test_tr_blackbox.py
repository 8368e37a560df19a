import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuraltr.linalg_small import InvalidInputError
from neuraltr.newton_model import QuadraticModel
from neuraltr.problems import get_problem
from neuraltr.results import CountingObjective
from neuraltr.tr_blackbox import (
    BlackboxConfig,
    BlackboxLossWeights,
    StepSearchState,
    clarke_stationarity_proxy,
    default_train_config,
    loss_delta,
    loss_delta_derivative,
    loss_La,
    loss_LBNTR,
    loss_LBNTR_star,
    loss_Lprime,
    loss_Ls,
    loss_mse_lb,
    model_and_step,
    run_algorithm2,
    sample_sets,
)
from neuraltr.tr_quadratic import DegenerateRatio

seeds = st.integers(0, 2**31 - 1)
G = np.array([1.0, -2.0])
H = np.diag([2.0, 4.0])
QUAD = QuadraticModel(np.zeros(2), 5.0, G, H)


def quad_f(x):
    return float(QUAD(np.asarray(x, dtype=float)))


@given(st.integers(1, 4), st.integers(2, 20), st.integers(0, 10), seeds)
def test_sample_sets_geometry_and_counts(n, n_w, n_b, seed):
    calls = []
    f = lambda y: calls.append(1) or float(np.sum(y))
    c = np.linspace(-1, 1, n)
    sets = sample_sets(f, c, 0.7, n_w, n_b, seed=seed)
    assert sets.n_w == n_w and sets.n_b == n_b and sets.new_evals == len(calls) == n_w + n_b
    assert np.all(np.linalg.norm(sets.interior - c, axis=1) < 0.7)
    assert np.allclose(np.linalg.norm(sets.boundary - c, axis=1), 0.7)
    again = sample_sets(f, c, 0.7, n_w, n_b, existing=sets, seed=seed + 1)
    assert again.new_evals == 0 and again.n_w == n_w and again.n_b == n_b


def test_sample_sets_reuses_points_inside_the_new_ball():
    f = lambda y: float(y @ y)
    big = sample_sets(f, np.zeros(2), 1.0, 10, 4)
    small = sample_sets(f, np.zeros(2), 0.5, 10, 4, existing=big, seed=3)
    inside = np.sum(np.linalg.norm(big.interior, axis=1) < 0.5)
    assert small.new_evals == (10 - inside) + 4
    with pytest.raises(InvalidInputError):
        sample_sets(f, np.zeros(2), 0.0, 3, 1)


def test_balanced_mse():
    f = lambda y: float(y @ y)
    sets = sample_sets(f, np.zeros(2), 1.0, 6, 4)
    model = QuadraticModel(np.zeros(2), 0.0, np.zeros(2), 2 * np.eye(2))
    assert loss_mse_lb(model, sets) == pytest.approx(0.0, abs=1e-28)
    shifted = QuadraticModel(np.zeros(2), 1.0, np.zeros(2), 2 * np.eye(2))
    # interior and boundary means are weighted equally whatever their sizes
    assert loss_mse_lb(shifted, sets) == pytest.approx(2.0)


@given(st.floats(0.01, 5.0), st.floats(0.0, 3.0))
def test_loss_delta_shape(delta, excess):
    assert loss_delta(delta * 0.5, delta) == 0.0
    r = delta + excess
    assert loss_delta(r, delta) >= 0.0
    h = 1e-6
    if excess > 1e-3:
        fd = (loss_delta(r + h, delta) - loss_delta(r - h, delta)) / (2 * h)
        assert loss_delta_derivative(r, delta) == pytest.approx(fd, rel=1e-5, abs=1e-6)
        assert loss_delta_derivative(r, delta) > 0


def test_loss_delta_seam_is_once_differentiable():
    for delta in (0.1, 1.0, 3.0):
        assert loss_delta(delta + 1e-9, delta) < 1e-12
        assert loss_delta_derivative(delta + 1e-9, delta) < 1e-8
        curv = (loss_delta_derivative(delta + 2e-6, delta) - loss_delta_derivative(delta + 1e-6, delta)) / 1e-6
        assert curv == pytest.approx(1.0 + delta, rel=1e-3)
    assert loss_delta(1e4, 1.0) == math.inf


def test_ls_vanishes_at_the_exact_region_solution():
    delta = 0.3
    mu = 0.0
    lo, hi = 0.0, 1e3
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        r = np.linalg.norm(np.linalg.solve(H + mu * np.eye(2), -G))
        lo, hi = (mu, hi) if r > delta else (lo, mu)
    s = np.linalg.solve(H + mu * np.eye(2), -G)
    assert loss_Ls(QUAD, np.zeros(2), StepSearchState(s, mu), delta) < 1e-20
    assert loss_Ls(QUAD, np.zeros(2), StepSearchState(s, 0.0), delta) > 1e-3


def test_agreement_losses_with_an_exact_model():
    s = np.array([-0.2, 0.1])
    assert loss_La(quad_f, QUAD, np.zeros(2), s) == pytest.approx(0.0, abs=1e-20)
    total, parts = loss_LBNTR_star(QUAD, quad_f, np.zeros(2), StepSearchState(s), 1.0, terms=True)
    assert parts["agreement"] == pytest.approx(1.0)
    assert parts["delta"] == 0.0
    lw = BlackboxLossWeights()
    md = quad_f(np.zeros(2)) - quad_f(s)
    assert parts["cauchy"] == pytest.approx(abs(-md + lw.beta_p * (s @ s)))
    assert total == pytest.approx(lw.g2 * parts["cauchy"] + lw.g3 * parts["local"] + lw.g4 * 1.0)
    assert loss_LBNTR(QUAD, quad_f, np.zeros(2), s, 1.0) == pytest.approx(lw.g2 * parts["cauchy"])


def test_hinge_form_ignores_surplus_decrease():
    s = -np.linalg.solve(H, G)
    lw = BlackboxLossWeights(cauchy_form="hinge")
    _, parts = loss_LBNTR_star(QUAD, quad_f, np.zeros(2), s, 10.0, lw, terms=True)
    assert parts["cauchy"] == 0.0


def test_lprime_at_the_model_minimizer():
    s = -np.linalg.solve(H, G)
    lw = BlackboxLossWeights(c_i=(2.0, 8.0))
    assert loss_Lprime(QUAD, np.zeros(2), s, lw) == pytest.approx(0.0, abs=1e-24)
    assert loss_Lprime(QUAD, np.zeros(2), s, lw, f=quad_f) == pytest.approx(0.0, abs=1e-20)


def test_zero_step_has_no_ratio():
    with pytest.raises(DegenerateRatio):
        loss_LBNTR_star(QUAD, quad_f, np.zeros(2), np.zeros(2), 1.0)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        BlackboxConfig(g1=0.5, g2=0.4)
    with pytest.raises(InvalidInputError):
        BlackboxConfig(child_loss="other")
    with pytest.raises(InvalidInputError):
        BlackboxLossWeights(eta3=0.5)
    with pytest.raises(InvalidInputError):
        BlackboxLossWeights(cauchy_form="square")
    with pytest.raises(InvalidInputError):
        BlackboxLossWeights(c_i=(1.0,)).minor_targets(2)
    assert BlackboxConfig().sizes(3) == (10, 6)


@pytest.mark.parametrize("kind", ["LBNTR_star", "LBNTR", "Lprime", "L"])
def test_model_and_step_decreases_the_model(kind):
    obj = CountingObjective(quad_f)
    center = np.array([0.5, 0.5])
    sets = sample_sets(obj, center, 0.5, 12, 6, seed=1)
    cfg = BlackboxConfig(child_loss=kind)
    net, s, diag = model_and_step(sets, center, 0.5, cfg, f=obj, train=default_train_config(2, 0))
    assert diag["leakage"] == []
    assert diag["gate"]
    assert np.linalg.norm(s) <= 0.5 + 1e-12
    assert diag["model_decrease"] >= BlackboxLossWeights().beta_p * (s @ s)
    assert quad_f(center + s) < quad_f(center)


def test_model_and_step_needs_samples():
    sets = sample_sets(quad_f, np.zeros(2), 1.0, 1, 0)
    with pytest.raises(InvalidInputError):
        model_and_step(sets, np.zeros(2), 1.0)


def test_clarke_proxy_signs():
    f = get_problem("l1norm")
    assert clarke_stationarity_proxy(f, np.zeros(2)) >= 0.0
    assert clarke_stationarity_proxy(f, np.array([1.0, 1.0])) < -1.0
    with pytest.raises(InvalidInputError):
        clarke_stationarity_proxy(f, np.zeros(2), n_dirs=4)


def test_engine_descends_and_is_deterministic():
    f = get_problem("sphere")
    cfg = BlackboxConfig(budget=150)
    a = run_algorithm2(f, np.array([1.0, 1.0]), cfg)
    b = run_algorithm2(f, np.array([1.0, 1.0]), cfg)
    assert a.f < 0.5 * f(np.array([1.0, 1.0]))
    assert a.evals <= 150 and a.trace[-1].evals == a.evals
    assert np.array_equal(a.x, b.x) and [r.row() for r in a.trace] == [r.row() for r in b.trace]
    assert a.extra["leakage"] == []
    acc = [r.f for r in a.trace if r.accepted]
    assert all(y < x for x, y in zip(acc, acc[1:]))
    assert all(r.decrease_ok for r in a.trace if r.accepted)
