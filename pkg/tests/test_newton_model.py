import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from neuraltr.interp_geometry import BlockedPointSet, MonomialPoly, build_newton_basis, poisedness_determinant
from neuraltr.linalg_small import InvalidInputError
from neuraltr.newton_model import (
    IncompleteBasisError,
    QuadraticModel,
    assemble_model,
    evaluate_model,
    generalized_finite_differences,
    interpolation_model,
)

seeds = st.integers(0, 2**31 - 1)


def random_quadratic(n, rng):
    return MonomialPoly(n, rng.normal(size=(n + 1) * (n + 2) // 2))


@given(st.integers(1, 5), seeds)
def test_model_reproduces_any_quadratic(n, seed):
    rng = np.random.default_rng(seed)
    q = random_quadratic(n, rng)
    p = (n + 1) * (n + 2) // 2
    pts = rng.uniform(-1, 1, (p, n))
    assume(abs(poisedness_determinant(pts)) > 1e-8)
    ps = BlockedPointSet.from_flat(pts, q(pts))
    basis = build_newton_basis(ps, pivot_pool="all")
    m = assemble_model(ps, basis, generalized_finite_differences(ps, basis))
    assert np.allclose(m.to_monomial().coeffs, q.coeffs, atol=1e-7 * max(1.0, np.abs(q.coeffs).max()))


@given(st.integers(1, 4), seeds)
def test_model_interpolates_arbitrary_values(n, seed):
    rng = np.random.default_rng(seed)
    p = (n + 1) * (n + 2) // 2
    pts = rng.uniform(-1, 1, (p, n))
    assume(abs(poisedness_determinant(pts)) > 1e-6)
    vals = np.sin(3 * pts.sum(axis=1)) + pts[:, 0] ** 3
    ps = BlockedPointSet.from_flat(pts, vals)
    basis = build_newton_basis(ps, pivot_pool="all")
    m = assemble_model(ps, basis, generalized_finite_differences(ps, basis))
    assert np.allclose(m(pts), vals, atol=1e-8)


def test_model_against_direct_solve():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, (6, 2))
    vals = rng.normal(size=6)
    m = interpolation_model(BlockedPointSet.from_flat(pts, vals))
    # independent route: solve the monomial interpolation system directly
    a = np.c_[np.ones(6), pts, pts[:, 0] ** 2, pts[:, 0] * pts[:, 1], pts[:, 1] ** 2]
    assert np.allclose(m.to_monomial().coeffs, np.linalg.solve(a, vals), atol=1e-10)


def test_incomplete_basis_is_refused():
    t = np.linspace(0, 2 * np.pi, 6, endpoint=False)
    pts = np.c_[np.cos(t), np.sin(t)]
    ps = BlockedPointSet.from_flat(pts, np.ones(6))
    basis = build_newton_basis(ps, pivot_pool="all")
    with pytest.raises(IncompleteBasisError):
        generalized_finite_differences(ps, basis)


def test_values_are_required():
    ps = BlockedPointSet([[[0, 0]], [[1, 0], [0, 1]], [[2, 0], [1, 1], [0, 2]]])
    with pytest.raises(InvalidInputError):
        generalized_finite_differences(ps, build_newton_basis(ps))


@given(st.integers(1, 4), seeds)
def test_recentering_preserves_the_function(n, seed):
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(n, n))
    m = QuadraticModel(rng.normal(size=n), rng.normal(), rng.normal(size=n), h + h.T)
    c2 = rng.normal(size=n)
    x = rng.normal(size=(5, n))
    assert np.allclose(m.recentered(c2)(x), m(x))
    assert np.allclose(QuadraticModel.from_monomial(m.to_monomial(), c2)(x), m(x))


def test_evaluate_model_batch_and_single():
    m = QuadraticModel(np.zeros(2), 1.0, np.array([1.0, 0.0]), np.eye(2))
    assert evaluate_model(m, [1.0, 1.0]) == 3.0
    assert np.allclose(evaluate_model(m, np.array([[0.0, 0.0], [2.0, 0.0]])), [1.0, 5.0])
    with pytest.raises(InvalidInputError):
        m([1.0, 2.0, 3.0])
