"""Interpolation-set geometry for quadratic models.

Newton fundamental polynomials built block by block (degree 0, 1, 2),
poisedness through the interpolation determinant, adequacy checks, and
Lagrange-polynomial driven point replacement.

Point sets are :class:`BlockedPointSet` instances; polynomials are
:class:`MonomialPoly` objects over the graded monomial basis
``1, x1, ..., xn, x1^2, x1 x2, ..., xn^2``.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc
from scipy.special import ndtri

from ._subproblem import solve_ball_quadratic
from .linalg_small import InvalidInputError, SingularMatrixError, determinant, solve_linear

__all__ = [
    "MonomialPoly",
    "BlockedPointSet",
    "NewtonBasis",
    "AdequacyReport",
    "NonPoisedError",
    "DegeneratePointSetError",
    "GeometryRepairError",
    "quadratic_exponents",
    "quadratic_basis",
    "parse_monomials",
    "ball_sample",
    "build_newton_basis",
    "interpolation_matrix",
    "poisedness_determinant",
    "check_adequacy",
    "lagrange_polynomials",
    "determinant_polynomials",
    "maximize_abs_on_ball",
    "select_exit_point_success",
    "select_exit_point_inadequate",
    "read_point_set",
    "write_point_set",
]

DEFAULT_PIVOT_THRESHOLD = 1e-8


class NonPoisedError(ArithmeticError):
    """The interpolation system is singular: no unique quadratic interpolant."""


class DegeneratePointSetError(InvalidInputError):
    """Two interpolation points coincide (to ``1e-12`` of the set's scale)."""


class GeometryRepairError(ArithmeticError):
    """No admissible replacement makes the interpolation determinant nonzero."""


def quadratic_exponents(n):
    """Exponent tuples of the graded quadratic basis in ``n`` variables."""
    exps = [(0,) * n]
    for i in range(n):
        e = [0] * n
        e[i] = 1
        exps.append(tuple(e))
    for i, j in combinations_with_replacement(range(n), 2):
        e = [0] * n
        e[i] += 1
        e[j] += 1
        exps.append(tuple(e))
    return exps


def _features(x, n):
    """Monomial values ``[1, x_i, x_i x_j (i <= j)]`` for one point or a batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    iu, ju = np.triu_indices(n)
    quad = x[:, iu] * x[:, ju]
    out = np.hstack([np.ones((x.shape[0], 1)), x, quad])
    return out[0] if single else out


@dataclass(frozen=True)
class MonomialPoly:
    """Polynomial of total degree at most two, stored as graded-basis coefficients."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != ((self.dim + 1) * (self.dim + 2) // 2,):
            raise InvalidInputError(f"expected {(self.dim + 1) * (self.dim + 2) // 2} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def monomial(cls, exponent):
        n = len(exponent)
        c = np.zeros((n + 1) * (n + 2) // 2)
        c[quadratic_exponents(n).index(tuple(exponent))] = 1.0
        return cls(n, c)

    @property
    def degree(self):
        nz = np.flatnonzero(self.coeffs)
        if nz.size == 0:
            return 0
        last = nz[-1]
        return 0 if last == 0 else (1 if last <= self.dim else 2)

    def terms(self, tol=0.0):
        """Mapping ``exponent tuple -> coefficient`` for the nonzero terms."""
        return {e: float(c) for e, c in zip(quadratic_exponents(self.dim), self.coeffs) if abs(c) > tol}

    def __call__(self, x):
        return _features(x, self.dim) @ self.coeffs

    def linear_part(self):
        return self.coeffs[1:self.dim + 1].copy()

    def hessian(self):
        n = self.dim
        h = np.zeros((n, n))
        iu, ju = np.triu_indices(n)
        q = self.coeffs[n + 1:]
        h[iu, ju] = q
        h[ju, iu] = q
        h[np.diag_indices(n)] *= 2.0
        return h

    def gradient(self, x):
        return self.linear_part() + self.hessian() @ np.asarray(x, dtype=float)

    def __add__(self, other):
        return MonomialPoly(self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return MonomialPoly(self.dim, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return MonomialPoly(self.dim, self.coeffs * float(a))

    __rmul__ = __mul__

    def __truediv__(self, a):
        return MonomialPoly(self.dim, self.coeffs / float(a))

    def __str__(self):
        parts = []
        for e, c in self.terms(tol=1e-15).items():
            mono = "*".join(
                (f"x{i + 1}" if k == 1 else f"x{i + 1}^{k}") for i, k in enumerate(e) if k
            )
            parts.append(f"{c:+.12g}" + (f"*{mono}" if mono else ""))
        return " ".join(parts) if parts else "0"


def parse_monomials(text, n):
    """Parse ``"1,x1,x2,x1^2,x2^2,x1*x2"`` into a list of monomial polynomials."""
    polys = []
    for tok in text.split(","):
        tok = tok.strip().replace(" ", "")
        e = [0] * n
        if tok != "1":
            for factor in tok.split("*"):
                if "^" in factor:
                    var, power = factor.split("^")
                else:
                    var, power = factor, "1"
                if not var.startswith("x"):
                    raise InvalidInputError(f"bad monomial {tok!r}")
                idx = int(var[1:]) - 1
                if not 0 <= idx < n:
                    raise InvalidInputError(f"variable {var} out of range for n={n}")
                e[idx] += int(power)
        if sum(e) > 2:
            raise InvalidInputError(f"monomial {tok!r} has degree > 2")
        polys.append(MonomialPoly.monomial(e))
    return polys


def quadratic_basis(n, order=None):
    """The graded monomial basis, optionally permuted (``order`` indexes it)."""
    basis = [MonomialPoly.monomial(e) for e in quadratic_exponents(n)]
    if order is not None:
        basis = [basis[i] for i in order]
    return basis


@dataclass
class BlockedPointSet:
    """Interpolation points grouped by degree block, with objective values.

    ``blocks[l]`` is an ``(m_l, n)`` array; ``values[l]`` the matching
    objective values, or ``None`` when values are not (yet) known.
    """

    blocks: list
    values: Optional[list] = None

    def __post_init__(self):
        blocks = [np.array(b, dtype=float).reshape(-1, self._infer_dim()) for b in self.blocks]
        while len(blocks) < 3:
            blocks.append(np.zeros((0, blocks[0].shape[1])))
        if len(blocks) != 3:
            raise InvalidInputError("a blocked point set has exactly three blocks")
        n = blocks[0].shape[1]
        if blocks[0].shape[0] != 1:
            raise InvalidInputError("block 0 must hold exactly one point")
        if blocks[1].shape[0] > n or blocks[2].shape[0] > n * (n + 1) // 2:
            raise InvalidInputError("block sizes exceed the quadratic basis")
        for b in blocks:
            if not np.all(np.isfinite(b)):
                raise InvalidInputError("points must be finite")
        self.blocks = blocks
        if self.values is not None:
            vals = [np.array(v, dtype=float).reshape(-1) for v in self.values]
            while len(vals) < 3:
                vals.append(np.zeros(0))
            if [v.size for v in vals] != [b.shape[0] for b in blocks]:
                raise InvalidInputError("values do not match block sizes")
            if not all(np.all(np.isfinite(v)) for v in vals):
                raise InvalidInputError("objective values must be finite")
            self.values = vals

    def _infer_dim(self):
        for b in self.blocks:
            a = np.asarray(b, dtype=float)
            if a.size:
                return a.shape[-1] if a.ndim > 1 else a.size
        raise InvalidInputError("empty block 0")

    @classmethod
    def from_flat(cls, points, values=None, sizes=None):
        """Split a flat ``(p, n)`` array into blocks of sizes ``1, n, rest``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        p, n = pts.shape
        if sizes is None:
            m1 = min(n, p - 1)
            sizes = (1, m1, p - 1 - m1)
        cuts = np.cumsum(sizes)[:-1]
        blocks = np.split(pts, cuts)
        vals = None if values is None else np.split(np.asarray(values, dtype=float), cuts)
        return cls(blocks, vals)

    @property
    def n(self):
        return self.blocks[0].shape[1]

    @property
    def sizes(self):
        return tuple(b.shape[0] for b in self.blocks)

    @property
    def p(self):
        return sum(self.sizes)

    @property
    def points(self):
        return np.vstack(self.blocks)

    @property
    def flat_values(self):
        if self.values is None:
            raise InvalidInputError("point set has no objective values")
        return np.concatenate(self.values)

    def block_of(self, index):
        edges = np.cumsum(self.sizes)
        block = int(np.searchsorted(edges, index, side="right"))
        start = 0 if block == 0 else int(edges[block - 1])
        return block, index - start

    def replaced(self, index, point, value=None):
        """Copy with the flat-indexed point swapped for ``point``."""
        block, j = self.block_of(index)
        blocks = [b.copy() for b in self.blocks]
        blocks[block][j] = np.asarray(point, dtype=float)
        values = None
        if self.values is not None:
            values = [v.copy() for v in self.values]
            values[block][j] = np.nan if value is None else float(value)
            if value is None:
                values = None
        return BlockedPointSet(blocks, values)

    def check_distinct(self, scale=None):
        pts = self.points
        if scale is None:
            scale = max(1.0, float(np.max(np.linalg.norm(pts - pts[0], axis=1))))
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        d[np.diag_indices_from(d)] = np.inf
        if np.any(d < 1e-12 * scale):
            i, j = np.unravel_index(np.argmin(d), d.shape)
            raise DegeneratePointSetError(f"points {i} and {j} coincide")


def read_point_set(source):
    """Read the plain-text point table.

    One point per line: a leading block index (0, 1 or 2), the coordinates,
    and optionally a trailing objective value. ``#`` starts a comment. A
    value column is present when a header comment contains ``values`` or
    when the caller passes lines with ``n + 2`` fields and ``n`` is fixed by
    a ``# n=<dim>`` comment; otherwise every number is a coordinate.

    Parameters
    ----------
    source : str or iterable of str
        A file path, or the lines themselves.
    """
    if isinstance(source, str):
        with open(source) as fh:
            lines = fh.read().splitlines()
    else:
        lines = list(source)
    rows = []
    has_values = False
    dim = None
    for lineno, raw in enumerate(lines, 1):
        body, _, comment = raw.partition("#")
        comment = comment.strip().lower()
        if "values" in comment:
            has_values = True
        if comment.startswith("n="):
            dim = int(comment[2:].split()[0])
        line = body.strip()
        if not line:
            continue
        fields = line.split()
        try:
            block = int(fields[0])
            nums = [float(t) for t in fields[1:]]
        except ValueError as exc:
            raise InvalidInputError(f"line {lineno}: {exc}") from None
        if block not in (0, 1, 2):
            raise InvalidInputError(f"line {lineno}: block index must be 0, 1 or 2")
        rows.append((block, nums))
    if not rows:
        raise InvalidInputError("no points found")
    widths = {len(nums) for _, nums in rows}
    if len(widths) != 1:
        raise InvalidInputError("rows have different numbers of columns")
    width = widths.pop()
    if dim is not None:
        if width not in (dim, dim + 1):
            raise InvalidInputError(f"rows have {width} numbers, expected {dim} or {dim + 1}")
        has_values = width == dim + 1
    n = width - 1 if has_values else width
    if n < 1:
        raise InvalidInputError("points need at least one coordinate")
    blocks = [[], [], []]
    values = [[], [], []]
    for block, nums in rows:
        blocks[block].append(nums[:n])
        if has_values:
            values[block].append(nums[n])
    blocks = [np.array(b, dtype=float).reshape(-1, n) for b in blocks]
    return BlockedPointSet(blocks, values if has_values else None)


def write_point_set(points, path=None):
    """Render a point set as a text table; also writes it when ``path`` is given."""
    out = [f"# n={points.n}" + (" values" if points.values is not None else "")]
    for block, pts in enumerate(points.blocks):
        for j, y in enumerate(pts):
            fields = [str(block)] + [f"{v:.17g}" for v in y]
            if points.values is not None:
                fields.append(f"{points.values[block][j]:.17g}")
            out.append(" ".join(fields))
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


@dataclass
class NewtonBasis:
    """Newton fundamental polynomials organised by degree block.

    ``polys[l][i]`` is the ``i``-th polynomial of block ``l`` and
    ``pivots[l][i]`` the flat index of the point it was normalised at.
    ``failed_at`` is ``(block, index)`` of the polynomial that found no
    admissible pivot, or ``None``.
    """

    polys: list
    pivots: list
    points: np.ndarray
    complete: bool
    failed_at: Optional[tuple] = None

    @property
    def flat_polys(self):
        return [q for blk in self.polys for q in blk]

    @property
    def flat_pivots(self):
        return [i for blk in self.pivots for i in blk]

    @property
    def pivot_points(self):
        return self.points[self.flat_pivots]

    @property
    def failed_label(self):
        if self.failed_at is None:
            return None
        block, i = self.failed_at
        return f"N_{i + 1}^[{block}]"

    def kronecker_matrix(self):
        """``K[a, b] = N_a(pivot_b)`` over the flattened basis."""
        piv = self.pivot_points
        return np.array([q(piv) for q in self.flat_polys]).reshape(len(self.flat_polys), -1)


def _graded_start(n, initial_basis):
    basis = quadratic_basis(n) if initial_basis is None else list(initial_basis)
    blocks = [[], [], []]
    for q in basis:
        if q.dim != n:
            raise InvalidInputError("initial basis dimension does not match the points")
        blocks[q.degree].append(q)
    if [len(b) for b in blocks] != [1, n, n * (n + 1) // 2]:
        raise InvalidInputError("initial basis must hold 1, n and n(n+1)/2 polynomials of degree 0, 1, 2")
    return blocks


def build_newton_basis(points, pivot_threshold=DEFAULT_PIVOT_THRESHOLD, paper_order=False, initial_basis=None,
                       pivot_pool="block"):
    """Newton fundamental polynomials by block-wise pivot / normalise / update sweeps.

    Parameters
    ----------
    points : BlockedPointSet
    pivot_threshold : float
        A pivot with ``|N(y)| < pivot_threshold`` is rejected.
    paper_order : bool
        Pair the ``i``-th polynomial of block ``l`` with the ``i``-th listed
        point of block ``l``, as in a hand-worked table. The default picks
        the unused point with the largest ``|N(y)|`` (ties to the earlier point).
    pivot_pool : {"block", "all"}
        Where the largest-pivot search looks: unused points of the current
        block, or every unused point of the set. ``"all"`` finds a complete
        basis for any poised set regardless of how it was split into blocks.
    initial_basis : sequence of MonomialPoly, optional
        Starting polynomials; their order inside each degree is the order
        the sweep visits them. Defaults to ``1, x1.., x1^2, x1 x2, ..``.

    Returns
    -------
    NewtonBasis
        ``complete`` is false when some polynomial has no admissible pivot
        or the point count is short of a full quadratic basis.
    """
    if not pivot_threshold > 0:
        raise InvalidInputError("pivot_threshold must be positive")
    if pivot_pool not in ("block", "all"):
        raise InvalidInputError("pivot_pool must be 'block' or 'all'")
    points.check_distinct()
    n = points.n
    pts = points.points
    sizes = points.sizes
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    work = _graded_start(n, initial_basis)
    polys = [[], [], []]
    pivots = [[], [], []]
    failed_at = None

    for l in range(3):
        cand = list(range(offsets[l], offsets[l + 1]))
        for i in range(sizes[l]):
            q = work[l][i]
            if paper_order:
                k = cand[i]
                val = float(q(pts[k]))
            else:
                taken = {k for blk in pivots for k in blk}
                pool = range(points.p) if pivot_pool == "all" else cand
                free = [c for c in pool if c not in taken]
                vals = q(pts[free])
                best = int(np.argmax(np.abs(vals)))
                k, val = free[best], float(vals[best])
            if abs(val) < pivot_threshold:
                failed_at = (l, i)
                break
            q = q / val
            y = pts[k]
            polys[l].append(q)
            pivots[l].append(k)
            # every other polynomial of this block and all higher blocks vanish at y
            for j in range(i):
                polys[l][j] = polys[l][j] - q * polys[l][j](y)
            for j in range(i + 1, len(work[l])):
                work[l][j] = work[l][j] - q * work[l][j](y)
            for m in range(l + 1, 3):
                work[m] = [r - q * r(y) for r in work[m]]
        if failed_at is not None:
            break

    complete = failed_at is None and points.p == (n + 1) * (n + 2) // 2
    return NewtonBasis(polys, pivots, pts, complete, failed_at)


def interpolation_matrix(points, basis=None):
    """``M[i, j] = phi_j(y^i)`` over the flattened point list."""
    pts = points.points if isinstance(points, BlockedPointSet) else np.atleast_2d(points)
    n = pts.shape[1]
    if basis is None:
        basis = quadratic_basis(n)[: pts.shape[0]]
    return np.column_stack([q(pts) for q in basis]) if len(basis) else np.zeros((pts.shape[0], 0))


def poisedness_determinant(points, basis=None):
    """Interpolation determinant ``D(Y) = det[phi_j(y^i)]``.

    ``basis`` defaults to the first ``p`` graded monomials.
    """
    pts = points.points if isinstance(points, BlockedPointSet) else np.atleast_2d(points)
    if basis is not None and len(basis) != pts.shape[0]:
        raise InvalidInputError(f"basis has {len(basis)} polynomials for {pts.shape[0]} points")
    return determinant(interpolation_matrix(pts, basis))


def ball_sample(center, radius, count, seed=0):
    """Quasi-uniform points in a ball: scrambled Halton mapped by radial inversion."""
    center = np.asarray(center, dtype=float)
    n = center.size
    u = qmc.Halton(d=n + 1, scramble=True, seed=seed).random(count)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    g = ndtri(u[:, :n])
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = u[:, n] ** (1.0 / n)
    return center + radius * r[:, None] * g


@dataclass
class AdequacyReport:
    adequate: bool
    kappa_n: float
    max_abs_value: float
    cardinality_ok: bool
    complete: bool = True
    in_region: bool = True


def default_kappa(points):
    return 2.0 ** points.sizes[2] + 1.0


def check_adequacy(basis, points, center, radius, kappa_n=None, probes=512, seed=0):
    """Adequacy of an interpolation set in the ball ``B(center, radius)``.

    Adequate means: at least ``n + 1`` points, a complete basis, every
    point inside the ball, ``|N_i^[l](y)| <= kappa_n`` at the points of the
    next block, and ``|N_i^[l](x)| <= kappa_n`` at ``probes`` quasi-uniform
    ball samples plus the interpolation points themselves.
    """
    if not radius > 0:
        raise InvalidInputError("radius must be positive")
    if kappa_n is None:
        kappa_n = default_kappa(points)
    n = points.n
    cardinality_ok = points.p >= n + 1
    center = np.asarray(center, dtype=float)
    pts = points.points
    in_region = bool(np.all(np.linalg.norm(pts - center, axis=1) <= radius * (1 + 1e-10)))
    if not basis.complete:
        return AdequacyReport(False, kappa_n, np.inf, cardinality_ok, False, in_region)
    worst = 0.0
    for l in range(2):
        nxt = points.blocks[l + 1]
        if nxt.shape[0]:
            for q in basis.polys[l]:
                worst = max(worst, float(np.max(np.abs(q(nxt)))))
    probe_pts = np.vstack([ball_sample(center, radius, probes, seed), pts])
    for q in basis.flat_polys:
        worst = max(worst, float(np.max(np.abs(q(probe_pts)))))
    ok = cardinality_ok and in_region and worst <= kappa_n
    return AdequacyReport(bool(ok), kappa_n, worst, cardinality_ok, True, in_region)


def lagrange_polynomials(points, basis=None):
    """Lagrange polynomials ``L_i`` with ``L_i(y^j) = delta_ij``.

    Expressed over ``basis`` (default: the first ``p`` graded monomials) by
    one solve of the interpolation system against the identity.
    """
    pts = points.points if isinstance(points, BlockedPointSet) else np.atleast_2d(points)
    p, n = pts.shape
    if basis is None:
        basis = quadratic_basis(n)[:p]
    if len(basis) != p:
        raise InvalidInputError(f"basis has {len(basis)} polynomials for {p} points")
    m = interpolation_matrix(pts, basis)
    try:
        coef = solve_linear(m, np.eye(p))
    except SingularMatrixError as exc:
        raise NonPoisedError(str(exc)) from None
    out = []
    for i in range(p):
        c = np.zeros_like(basis[0].coeffs)
        for j, q in enumerate(basis):
            c = c + coef[j, i] * q.coeffs
        out.append(MonomialPoly(n, c))
    return out


def determinant_polynomials(points, basis=None):
    """``C_i(y) = D(Y with y^i replaced by y)``, each a quadratic in ``y``.

    Equals ``D(Y) L_i(y)`` on a poised set; built by cofactor expansion so it
    stays meaningful when ``D(Y) = 0``.
    """
    pts = points.points if isinstance(points, BlockedPointSet) else np.atleast_2d(points)
    p, n = pts.shape
    if basis is None:
        basis = quadratic_basis(n)[:p]
    m = interpolation_matrix(pts, basis)
    out = []
    for i in range(p):
        c = np.zeros_like(basis[0].coeffs)
        rows = [r for r in range(p) if r != i]
        for j, q in enumerate(basis):
            cols = [k for k in range(p) if k != j]
            minor = determinant(m[np.ix_(rows, cols)]) if p > 1 else 1.0
            c = c + (-1.0) ** (i + j) * minor * q.coeffs
        out.append(MonomialPoly(n, c))
    return out


def maximize_abs_on_ball(poly, center, radius, starts=16, seed=0, iters=200):
    """Approximate ``argmax |poly(y)|`` over the ball ``B(center, radius)``.

    Candidates: the exact maximiser and minimiser of the quadratic over the
    ball, plus multi-start projected gradient ascent on ``poly^2``. Returns
    ``(point, |value|)`` of the best candidate.
    """
    center = np.asarray(center, dtype=float)
    n = center.size
    g0 = poly.gradient(center)
    h = poly.hessian()
    cands = [center.copy()]
    for sign in (1.0, -1.0):
        s, _ = solve_ball_quadratic(-sign * g0, -sign * h, radius)
        cands.append(center + s)
    if starts > 0:
        rng = np.random.default_rng(seed)
        y = ball_sample(center, radius, starts, seed=int(rng.integers(2**31)))
        step = 0.5 / max(1.0, np.linalg.norm(h, 2) * radius + np.linalg.norm(g0))
        for _ in range(iters):
            v = poly(y)
            grad = 2.0 * v[:, None] * (g0 + (y - center) @ h)
            scale = np.maximum(np.abs(v), 1e-300)[:, None]
            y = y + step * radius * grad / scale
            d = y - center
            nrm = np.linalg.norm(d, axis=1, keepdims=True)
            y = np.where(nrm > radius, center + d * (radius / np.maximum(nrm, 1e-300)), y)
        cands.extend(y)
    cands = np.array(cands)
    vals = np.abs(poly(cands))
    k = int(np.argmax(vals))
    return cands[k], float(vals[k])


def select_exit_point_success(points, new_point, basis=None, center=None):
    """Index ``i`` maximising ``|L_i(new_point)|``; ties go to the point farthest from ``center``.

    Remaining ties go to the lowest index.
    """
    lag = lagrange_polynomials(points, basis)
    x = np.asarray(new_point, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("new point must be finite")
    vals = np.abs(np.array([float(L(x)) for L in lag]))
    pts = points.points if isinstance(points, BlockedPointSet) else np.atleast_2d(points)
    if center is None:
        center = pts[0]
    dist = np.linalg.norm(pts - np.asarray(center, dtype=float), axis=1)
    top = vals.max()
    tied = np.flatnonzero(vals >= top - 1e-12 * max(1.0, top))
    return int(tied[np.argmax(dist[tied])])


def select_exit_point_inadequate(points, center, radius, basis=None, candidates=16, seed=0, keep=()):
    """Geometry repair: the exit index and its replacement inside the ball.

    For each point ``y^i`` the replacement maximises ``|C_i(y)|`` over the
    ball, where ``C_i(y)`` is the interpolation determinant with ``y^i``
    swapped for ``y`` (so ``C_i = D(Y) L_i`` on a poised set). The point
    whose best replacement gives the largest ``|D|`` leaves. The current
    point is itself a candidate, so ``|D|`` never decreases. Indices in
    ``keep`` never leave (e.g. the current iterate).

    Raises
    ------
    GeometryRepairError
        If every candidate leaves the determinant at zero.
    """
    if not radius > 0:
        raise InvalidInputError("radius must be positive")
    pts = points.points if isinstance(points, BlockedPointSet) else np.atleast_2d(points)
    p, n = pts.shape
    center = np.asarray(center, dtype=float)
    if p == 1:
        direction = np.zeros(n)
        direction[0] = 1.0
        return 0, center + radius * direction
    if basis is None:
        basis = quadratic_basis(n)[:p]
    cpolys = determinant_polynomials(pts, basis)
    d_now = abs(poisedness_determinant(pts, basis))
    best = (-1.0, None, None)
    for i, c in enumerate(cpolys):
        if i in keep:
            continue
        y, val = maximize_abs_on_ball(c, center, radius, starts=candidates, seed=seed + i)
        if abs(float(c(pts[i]))) >= val:
            y, val = pts[i].copy(), abs(float(c(pts[i])))
        if val > best[0]:
            best = (val, i, y)
    val, i, y = best
    if i is None:
        raise GeometryRepairError("every point is pinned")
    # confirm with a direct determinant
    trial = pts.copy()
    trial[i] = y
    d_new = abs(poisedness_determinant(trial, basis))
    if d_new < d_now:
        return i, pts[i].copy()
    if d_new == 0.0:
        raise GeometryRepairError("no replacement inside the ball makes the set poised")
    return i, y
