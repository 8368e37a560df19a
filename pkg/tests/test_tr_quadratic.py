import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuraltr.interp_geometry import poisedness_determinant
from neuraltr.linalg_small import InvalidInputError
from neuraltr.tr_quadratic import (
    DegenerateRatio,
    LossWeightsQuad,
    QuadraticNTRWeights,
    QuadTrainConfig,
    TRConfig,
    agreement_ratio,
    assemble_hessian,
    cauchy_decrease,
    cauchy_decrease_gradient,
    hessian_weights,
    initial_point_set,
    kkt_residuals,
    loss_L1,
    loss_L2,
    loss_L3,
    overall_loss,
    run_algorithm1,
    run_newton_tr,
    solve_step_quadratic,
)

seeds = st.integers(0, 2**31 - 1)


def convex_quadratic(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    h = q @ np.diag(rng.uniform(0.5, 5.0, n)) @ q.T
    g = rng.normal(size=n)
    pts = rng.uniform(-1, 1, ((n + 1) * (n + 2) // 2 + 2, n))
    vals = pts @ g + 0.5 * np.einsum("ij,jk,ik->i", pts, h, pts)
    return n, g, h, pts, vals


@given(st.integers(1, 5), seeds)
def test_hessian_weight_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(n, n))
    h = h + h.T
    assert np.allclose(assemble_hessian(hessian_weights(h), n), h)


@given(seeds, st.floats(0.05, 5.0))
def test_cauchy_decrease_beats_a_line_search(seed, delta):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    h = rng.normal(size=(n, n))
    h = h + h.T
    g = rng.normal(size=n)
    # independent route: dense grid along -g inside the ball
    t = np.linspace(0, delta / np.linalg.norm(g), 20001)
    d = -g
    dec = -(t * (g @ d) + 0.5 * t * t * (d @ h @ d))
    exact = cauchy_decrease((g, h), delta)
    assert exact >= dec.max() - 1e-12 * max(1.0, dec.max())
    assert exact <= dec.max() + 1e-5 * max(1e-3, dec.max())


@given(seeds)
def test_cauchy_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n = 3
    h = rng.normal(size=(n, n))
    h = h + h.T
    g = rng.normal(size=n)
    dg, dh = cauchy_decrease_gradient(g, h, 1.0)
    fd = np.array([(cauchy_decrease((g + 1e-7 * e, h), 1.0) - cauchy_decrease((g - 1e-7 * e, h), 1.0)) / 2e-7
                   for e in np.eye(n)])
    assert np.allclose(dg, fd, atol=1e-5)
    e = rng.normal(size=(n, n))
    e = e + e.T
    fdh = (cauchy_decrease((g, h + 1e-7 * e), 1.0) - cauchy_decrease((g, h - 1e-7 * e), 1.0)) / 2e-7
    assert np.sum(dh * e) == pytest.approx(fdh, abs=1e-5)


def test_losses_vanish_at_an_exact_solution():
    g = np.array([1.0, -2.0])
    h = np.diag([2.0, 4.0])
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.5], [0.3, -0.2]])
    vals = 3.0 + pts @ g + 0.5 * np.einsum("ij,jk,ik->i", pts, h, pts)
    s = -np.linalg.solve(h, g)
    w = QuadraticNTRWeights.from_parts(g, h, s, 0.0)
    lw = LossWeightsQuad()
    assert loss_L1(w, pts, vals, np.zeros(2), 3.0, lw) < 1e-14
    assert loss_L2(w, 10.0, lw) < 1e-28
    assert loss_L3(1.0, 10.0, lw) == pytest.approx(0.0)
    total, parts = overall_loss(w, pts, vals, np.zeros(2), 3.0, 10.0, lw)
    assert total < 1e-14 and parts[2] == 0.0
    assert kkt_residuals(g, h, s, 0.0, 10.0)[:2] == pytest.approx((0.0, 0.0), abs=1e-14)


def test_loss_weights_are_validated():
    with pytest.raises(InvalidInputError):
        LossWeightsQuad(z1=-1.0)
    with pytest.raises(InvalidInputError):
        TRConfig(eta1=0.9, eta2=0.1)
    with pytest.raises(InvalidInputError):
        TRConfig(g1=1.5)


@pytest.mark.parametrize("seed", range(5))
def test_step_matches_newton_when_interior(seed):
    n, g, h, pts, vals = convex_quadratic(seed)
    newton = -np.linalg.solve(h, g)
    s, w, diag = solve_step_quadratic(pts, vals, np.zeros(n), 0.0, 10 * np.linalg.norm(newton),
                                      train=QuadTrainConfig(seed=seed))
    assert np.linalg.norm(s - newton) <= 1e-3 * np.linalg.norm(newton)
    assert w.w_star <= 1e-4


@pytest.mark.parametrize("seed", range(5))
def test_step_on_the_boundary_satisfies_kkt(seed):
    n, g, h, pts, vals = convex_quadratic(seed)
    delta = 0.1 * np.linalg.norm(np.linalg.solve(h, g))
    s, w, diag = solve_step_quadratic(pts, vals, np.zeros(n), 0.0, delta, train=QuadTrainConfig(seed=seed))
    assert abs(np.linalg.norm(s) - delta) <= 1e-5 * delta
    assert diag["kkt_stationarity"] <= 1e-4 and diag["kkt_complementarity"] <= 1e-4
    assert diag["kkt_eigen"] >= -1e-4
    # independent route: the exact boundary solution from a scalar secular equation
    lam = np.linalg.eigvalsh(h)
    lo, hi = 0.0, 1e6
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        r = np.linalg.norm(np.linalg.solve(h + mu * np.eye(n), -g))
        lo, hi = (mu, hi) if r > delta else (lo, mu)
    exact = np.linalg.solve(h + mu * np.eye(n), -g)
    assert np.linalg.norm(s - exact) <= 1e-4 * delta
    assert lam.min() > 0


def test_step_with_sparse_points_far_inside_the_region():
    n, g, h, pts, vals = convex_quadratic(0)
    newton = -np.linalg.solve(h, g)
    s, _, _ = solve_step_quadratic(pts * 0.01, (pts * 0.01) @ g + 0.5 * np.einsum("ij,jk,ik->i", pts * 0.01, h,
                                   pts * 0.01), np.zeros(n), 0.0, 100.0)
    assert np.linalg.norm(s - newton) <= 1e-3 * np.linalg.norm(newton)


def test_step_rejects_bad_radius():
    with pytest.raises(InvalidInputError):
        solve_step_quadratic(np.zeros((3, 1)), np.zeros(3), np.zeros(1), 0.0, 0.0)


def test_agreement_ratio():
    assert agreement_ratio(10.0, 8.0, 10.0, 9.0) == 2.0
    with pytest.raises(DegenerateRatio):
        agreement_ratio(1.0, 0.5, 1.0, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_initial_point_set_is_poised(n):
    y = initial_point_set(np.ones(n), 0.5)
    assert y.shape == ((n + 1) * (n + 2) // 2, n)
    assert abs(poisedness_determinant(y - np.ones(n))) > 0


def quad_fn(x):
    x = np.asarray(x)
    return float((x[0] - 1) ** 2 + 3 * (x[1] + 0.5) ** 2 + x[0] * x[1])


@pytest.mark.parametrize("runner", [run_algorithm1, run_newton_tr])
def test_engines_solve_a_convex_quadratic(runner):
    res = runner(quad_fn, np.array([2.0, 2.0]), TRConfig(max_iters=100))
    xstar = np.linalg.solve([[2.0, 1.0], [1.0, 6.0]], [2.0, -3.0])
    assert np.linalg.norm(res.x - xstar) < 1e-4
    assert res.terminated_by in ("delta", "stationarity")
    assert res.trace[0].update == "init"
    acc = [r.f for r in res.trace if r.accepted]
    assert all(b <= a for a, b in zip(acc, acc[1:]))


def test_engine_respects_budget_and_trace_totals():
    res = run_algorithm1(quad_fn, np.array([2.0, 2.0]), TRConfig(budget=9))
    assert res.terminated_by == "budget" and res.evals <= 9
    assert res.trace[-1].evals == res.evals


def test_engine_reports_objective_failure():
    def f(x):
        return np.nan if x[0] > 2.2 else float(x @ x)

    res = run_newton_tr(f, np.array([2.0, 0.0]), TRConfig(delta0=1.0))
    assert res.terminated_by == "failure" and "non-finite" in res.message
