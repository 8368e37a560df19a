import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from neuraltr.interp_geometry import (
    BlockedPointSet,
    DegeneratePointSetError,
    GeometryRepairError,
    MonomialPoly,
    NonPoisedError,
    ball_sample,
    build_newton_basis,
    check_adequacy,
    determinant_polynomials,
    lagrange_polynomials,
    maximize_abs_on_ball,
    parse_monomials,
    poisedness_determinant,
    quadratic_basis,
    quadratic_exponents,
    read_point_set,
    select_exit_point_inadequate,
    select_exit_point_success,
    write_point_set,
)
from neuraltr.linalg_small import InvalidInputError

GRID = [[[0, 0]], [[0.5, 0], [0, 0.5]], [[1, 0], [0.5, 0.5], [0, 1]]]
seeds = st.integers(0, 2**31 - 1)
dims = st.integers(1, 4)


def random_set(n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    p = (n + 1) * (n + 2) // 2
    return BlockedPointSet.from_flat(rng.uniform(-scale, scale, (p, n)))


def test_exponents_are_graded():
    assert quadratic_exponents(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_monomial_poly_evaluation_gradient_hessian():
    q = MonomialPoly(2, [1.0, 2.0, -1.0, 3.0, 0.5, -2.0])  # 1 + 2x - y + 3x^2 + xy/2 - 2y^2
    x = np.array([0.3, -0.7])
    val = 1 + 2 * 0.3 + 0.7 + 3 * 0.09 + 0.5 * 0.3 * -0.7 - 2 * 0.49
    assert q(x) == pytest.approx(val)
    assert np.allclose(q.hessian(), [[6.0, 0.5], [0.5, -4.0]])
    assert np.allclose(q.gradient(x), [2 + 6 * 0.3 + 0.5 * -0.7, -1 + 0.5 * 0.3 - 4 * -0.7])
    assert q.degree == 2


def test_parse_monomials_roundtrip():
    polys = parse_monomials("1,x1,x2,x1^2,x2^2,x1*x2", 2)
    assert [str(p) for p in polys] == ["+1", "+1*x1", "+1*x2", "+1*x1^2", "+1*x2^2", "+1*x1*x2"]
    with pytest.raises(InvalidInputError):
        parse_monomials("x3", 2)
    with pytest.raises(InvalidInputError):
        parse_monomials("x1^2*x2", 2)


def test_block_structure_is_validated():
    with pytest.raises(InvalidInputError):
        BlockedPointSet([[[0, 0], [1, 1]]])
    with pytest.raises(InvalidInputError):
        BlockedPointSet([[[0, 0]], [[1, 0], [0, 1], [1, 1]]])


def test_duplicate_points_are_rejected():
    pts = BlockedPointSet([[[0, 0]], [[1, 0], [1, 0]]])
    with pytest.raises(DegeneratePointSetError):
        build_newton_basis(pts)


def test_point_set_file_roundtrip(tmp_path):
    pts = BlockedPointSet(GRID, [[1.0], [2.0, 3.0], [4.0, 5.0, 6.0]])
    path = tmp_path / "y.txt"
    write_point_set(pts, path)
    back = read_point_set(str(path))
    assert np.array_equal(back.points, pts.points)
    assert np.array_equal(back.flat_values, pts.flat_values)
    plain = read_point_set(["0 0 0", "1 1 0", "# comment", "1 0 1"])
    assert plain.sizes == (1, 2, 0) and plain.values is None


@pytest.mark.parametrize("text", [["3 0 0"], ["0 a b"], ["0 0 0", "1 1"], []])
def test_point_set_parse_errors(text):
    with pytest.raises(InvalidInputError):
        read_point_set(text)


@given(dims, seeds)
def test_newton_kronecker_property(n, seed):
    pts = random_set(n, seed)
    basis = build_newton_basis(pts, pivot_pool="all")
    assume(basis.complete)
    k = basis.kronecker_matrix()
    blocks = [l for l, polys in enumerate(basis.polys) for _ in polys]
    scale = max(1.0, max(np.abs(q.coeffs).max() for q in basis.flat_polys))
    for a in range(len(blocks)):
        for b in range(len(blocks)):
            if blocks[b] <= blocks[a]:
                assert abs(k[a, b] - (a == b)) < 1e-9 * scale


@given(dims, seeds)
def test_basis_spans_the_quadratics(n, seed):
    pts = random_set(n, seed)
    basis = build_newton_basis(pts, pivot_pool="all")
    assume(basis.complete)
    coeffs = np.array([q.coeffs for q in basis.flat_polys])
    assert abs(np.linalg.det(coeffs)) > 0


def test_incomplete_basis_reports_failure():
    # six points on the unit circle: the quadratic x1^2 + x2^2 - 1 vanishes on all of them
    t = np.linspace(0, 2 * np.pi, 6, endpoint=False)
    pts = BlockedPointSet.from_flat(np.c_[np.cos(t), np.sin(t)])
    basis = build_newton_basis(pts, pivot_pool="all")
    assert not basis.complete and basis.failed_at[0] == 2
    assert abs(poisedness_determinant(pts)) < 1e-12
    with pytest.raises(NonPoisedError):
        lagrange_polynomials(pts)


def test_pivot_pool_validation():
    with pytest.raises(InvalidInputError):
        build_newton_basis(BlockedPointSet(GRID), pivot_pool="nearest")


@given(st.integers(1, 3), seeds)
def test_lagrange_cardinality(n, seed):
    pts = random_set(n, seed)
    assume(abs(poisedness_determinant(pts)) > 1e-6)
    lag = lagrange_polynomials(pts)
    vals = np.array([q(pts.points) for q in lag])
    assert np.allclose(vals, np.eye(pts.p), atol=1e-8)


@given(st.integers(1, 3), seeds)
def test_determinant_polynomials_match_swapped_determinants(n, seed):
    pts = random_set(n, seed)
    rng = np.random.default_rng(seed + 1)
    y = rng.uniform(-1, 1, n)
    cpolys = determinant_polynomials(pts)
    for i, c in enumerate(cpolys):
        swapped = pts.points.copy()
        swapped[i] = y
        d = poisedness_determinant(swapped)
        assert c(y) == pytest.approx(d, rel=1e-8, abs=1e-10)


@given(st.integers(1, 4), seeds)
def test_ball_sample_stays_inside(n, seed):
    c = np.arange(n, dtype=float)
    y = ball_sample(c, 0.3, 50, seed)
    assert y.shape == (50, n)
    assert np.all(np.linalg.norm(y - c, axis=1) <= 0.3 + 1e-12)
    assert np.array_equal(y, ball_sample(c, 0.3, 50, seed))


def test_adequacy_of_the_grid_set():
    pts = BlockedPointSet(GRID)
    basis = build_newton_basis(pts, pivot_pool="all")
    rep = check_adequacy(basis, pts, [1 / 3, 1 / 3], 0.75)
    assert rep.adequate and rep.complete and rep.in_region
    # a ball much larger than the set lets the basis grow past kappa
    wide = check_adequacy(basis, pts, [0.0, 0.0], 1.5)
    assert wide.in_region and not wide.adequate and wide.max_abs_value > wide.kappa_n
    small = check_adequacy(basis, pts, [0.0, 0.0], 0.5)
    assert not small.in_region and not small.adequate


def test_maximize_abs_on_ball_hits_known_maximum():
    q = MonomialPoly(2, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0])  # x1
    y, v = maximize_abs_on_ball(q, [0.0, 0.0], 2.0)
    assert v == pytest.approx(2.0, abs=1e-9)
    assert abs(abs(y[0]) - 2.0) < 1e-6


def test_select_exit_point_success_prefers_largest_lagrange_value():
    pts = BlockedPointSet(GRID)
    new = np.array([2.0, 2.0])
    lag = lagrange_polynomials(pts)
    i = select_exit_point_success(pts, new)
    assert abs(lag[i](new)) == pytest.approx(max(abs(q(new)) for q in lag))


@given(seeds)
def test_geometry_repair_never_decreases_determinant(seed):
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 2 * np.pi, 6)
    pts = np.c_[0.5 * np.cos(t), 0.5 * np.sin(t)] + rng.normal(0, 1e-4, (6, 2))
    before = abs(poisedness_determinant(pts))
    i, y = select_exit_point_inadequate(BlockedPointSet.from_flat(pts), [0.0, 0.0], 1.0, seed=seed)
    after = pts.copy()
    after[i] = y
    assert np.linalg.norm(y) <= 1.0 + 1e-9
    assert abs(poisedness_determinant(after)) >= before


def test_geometry_repair_respects_keep():
    t = np.linspace(0, 2 * np.pi, 6, endpoint=False)
    pts = BlockedPointSet.from_flat(0.5 * np.c_[np.cos(t), np.sin(t)])
    i, _ = select_exit_point_inadequate(pts, [0.0, 0.0], 1.0, keep=(0, 1, 2))
    assert i not in (0, 1, 2)
    with pytest.raises(GeometryRepairError):
        select_exit_point_inadequate(pts, [0.0, 0.0], 1.0, keep=range(6))


def test_quadratic_basis_order():
    b = quadratic_basis(2, order=[0, 2, 1, 5, 4, 3])
    assert [str(q) for q in b] == ["+1", "+1*x2", "+1*x1", "+1*x2^2", "+1*x1*x2", "+1*x1^2"]
