"""Quadratic interpolation models assembled from a Newton basis.

The interpolant is ``m = sum_l sum_j lambda_l(y_j^[l]) N_j^[l]`` where the
coefficients are generalized finite differences computed from function
values at the pivot points only.
"""

from dataclasses import dataclass

import numpy as np

from .interp_geometry import BlockedPointSet, MonomialPoly, build_newton_basis
from .linalg_small import InvalidInputError

__all__ = [
    "QuadraticModel",
    "DifferenceCoefficients",
    "IncompleteBasisError",
    "generalized_finite_differences",
    "assemble_model",
    "evaluate_model",
    "interpolation_model",
]


class IncompleteBasisError(ArithmeticError):
    """The Newton basis does not span the quadratics on this point set."""


@dataclass(frozen=True)
class QuadraticModel:
    """``m(x) = constant + g.(x - center) + 0.5 (x - center).B (x - center)``."""

    center: np.ndarray
    constant: float
    gradient: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        g = np.asarray(self.gradient, dtype=float).reshape(-1)
        h = np.asarray(self.hessian, dtype=float).reshape(c.size, c.size)
        if g.size != c.size:
            raise InvalidInputError("gradient and center dimensions differ")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", 0.5 * (h + h.T))
        object.__setattr__(self, "constant", float(self.constant))

    @property
    def n(self):
        return self.center.size

    def __call__(self, x):
        return evaluate_model(self, x)

    def grad_at(self, x):
        return self.gradient + self.hessian @ (np.asarray(x, dtype=float) - self.center)

    def recentered(self, new_center):
        """The same quadratic expanded about another point."""
        new_center = np.asarray(new_center, dtype=float)
        return QuadraticModel(new_center, self(new_center), self.grad_at(new_center), self.hessian)

    def to_monomial(self):
        """The model as a :class:`MonomialPoly` in absolute coordinates."""
        z = self.recentered(np.zeros(self.n))
        n = self.n
        iu, ju = np.triu_indices(n)
        quad = np.where(iu == ju, 0.5 * z.hessian[iu, ju], z.hessian[iu, ju])
        return MonomialPoly(n, np.concatenate([[z.constant], z.gradient, quad]))

    @classmethod
    def from_monomial(cls, poly, center=None):
        center = np.zeros(poly.dim) if center is None else np.asarray(center, dtype=float)
        return cls(center, float(poly(center)), poly.gradient(center), poly.hessian())


@dataclass(frozen=True)
class DifferenceCoefficients:
    """``lambdas[l][j]`` is the coefficient paired with ``N_j^[l]``."""

    lambdas: list

    @property
    def flat(self):
        return np.concatenate([np.asarray(b, dtype=float) for b in self.lambdas])


def generalized_finite_differences(points, basis):
    """Generalized finite differences of ``points.values`` on a complete basis.

    ``lambda_0 = f`` at every point; after block ``l`` the residual
    ``lambda_{l+1}(x) = lambda_l(x) - sum_j lambda_l(pivot_j^[l]) N_j^[l](x)``
    is updated at the points only.
    """
    if not basis.complete:
        raise IncompleteBasisError("basis is incomplete")
    if points.values is None:
        raise InvalidInputError("point set has no objective values")
    pts = points.points
    lam = points.flat_values.astype(float).copy()
    out = []
    for l in range(3):
        coef = np.array([lam[k] for k in basis.pivots[l]])
        for c, q in zip(coef, basis.polys[l]):
            lam = lam - c * q(pts)
        out.append(coef)
    return DifferenceCoefficients(out)


def assemble_model(points, basis, coeffs, center=None):
    """Expand ``sum lambda N`` into a :class:`QuadraticModel` about ``center``.

    ``center`` defaults to the block-0 point.
    """
    if not basis.complete:
        raise IncompleteBasisError("basis is incomplete")
    if [len(c) for c in coeffs.lambdas] != [len(b) for b in basis.polys]:
        raise InvalidInputError("coefficient counts do not match the basis")
    n = points.n
    total = np.zeros((n + 1) * (n + 2) // 2)
    for cs, qs in zip(coeffs.lambdas, basis.polys):
        for c, q in zip(cs, qs):
            total = total + c * q.coeffs
    poly = MonomialPoly(n, total)
    if center is None:
        center = points.blocks[0][0]
    return QuadraticModel.from_monomial(poly, center)


def evaluate_model(m, x):
    """Exact quadratic evaluation; ``x`` may be one point or a batch of rows."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.n:
        raise InvalidInputError(f"point has dimension {x.shape[-1]}, model has {m.n}")
    s = x - m.center
    if s.ndim == 1:
        return float(m.constant + m.gradient @ s + 0.5 * s @ m.hessian @ s)
    return m.constant + s @ m.gradient + 0.5 * np.einsum("ij,jk,ik->i", s, m.hessian, s)


def interpolation_model(points, center=None, pivot_threshold=1e-8, paper_order=False):
    """Convenience: basis, differences and model in one call."""
    basis = build_newton_basis(points, pivot_threshold, paper_order=paper_order)
    return assemble_model(points, basis, generalized_finite_differences(points, basis), center)
