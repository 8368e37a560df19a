"""Benchmark objectives with known properties."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["Problem", "UnknownProblemError", "get_problem", "list_problems"]


class UnknownProblemError(KeyError):
    pass


@dataclass(frozen=True)
class Problem:
    name: str
    dim: int
    evaluate: Callable
    known_minimizer: Optional[np.ndarray] = None
    known_minimum: Optional[float] = None
    smooth: bool = True
    lipschitz_note: str = ""
    default_start: Optional[np.ndarray] = None

    def __call__(self, x):
        return self.evaluate(x)


def _example3(x):
    x = np.asarray(x, dtype=float)
    # far from the origin the value overflows to +-inf; callers treat that as an objective failure
    with np.errstate(over="ignore", invalid="ignore"):
        return float((x[0] - 2.0) ** 4 + (x[1] - 1.0) ** 3 + np.exp(x[0] + x[1]))


def _sphere(x):
    x = np.asarray(x, dtype=float)
    return float(x @ x)


def _rosenbrock(x):
    x = np.asarray(x, dtype=float)
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)


_ILL_DIAG = np.array([1.0, 1e4])


def _quad_illcond(x):
    x = np.asarray(x, dtype=float)
    return float(0.5 * np.sum(_ILL_DIAG * x * x))


def _l1norm(x):
    return float(np.sum(np.abs(np.asarray(x, dtype=float))))


def _maxabs(x):
    return float(np.max(np.abs(np.asarray(x, dtype=float))))


def _piecewise_quad(x):
    # max of two shifted bowls; the kink runs along x1 = 0, minimum at the origin
    x = np.asarray(x, dtype=float)
    a = (x[0] - 1.0) ** 2 + x[1] ** 2 - 1.0
    b = (x[0] + 1.0) ** 2 + x[1] ** 2 - 1.0
    return float(max(a, b))


def _registry():
    probs = [
        Problem("example3", 2, _example3, smooth=True,
                lipschitz_note="smooth; unbounded below through the cubic x2 term",
                default_start=np.zeros(2)),
        Problem("rosenbrock", 2, _rosenbrock, np.ones(2), 0.0, True,
                "smooth; curved valley", np.array([-1.2, 1.0])),
        Problem("quad_illcond", 2, _quad_illcond, np.zeros(2), 0.0, True,
                "convex quadratic, condition number 1e4", np.array([1.0, 1.0])),
        Problem("l1norm", 2, _l1norm, np.zeros(2), 0.0, False,
                "Lipschitz constant sqrt(n); kinks on the axes", np.ones(2)),
        Problem("maxabs", 2, _maxabs, np.zeros(2), 0.0, False,
                "Lipschitz constant 1; kinks where coordinates tie", np.array([1.0, 0.5])),
        Problem("piecewise_quad", 2, _piecewise_quad, np.zeros(2), 0.0, False,
                "max of two quadratics; kink on x1 = 0", np.array([1.0, 1.0])),
    ]
    for n in (2, 5, 10):
        probs.append(Problem(f"sphere{n}", n, _sphere, np.zeros(n), 0.0, True,
                             "convex quadratic", np.full(n, 2.0)))
    out = {p.name: p for p in probs}
    out["sphere"] = Problem("sphere", 2, _sphere, np.zeros(2), 0.0, True, "convex quadratic", np.full(2, 2.0))
    return out


_PROBLEMS = _registry()


def get_problem(name, dim=None):
    """Look a problem up by name.

    ``sphere`` accepts any ``dim``; ``sphere2``, ``sphere5`` and
    ``sphere10`` are the fixed-size entries.
    """
    if name == "sphere" and dim is not None:
        n = int(dim)
        return Problem("sphere", n, _sphere, np.zeros(n), 0.0, True, "convex quadratic", np.full(n, 2.0))
    try:
        p = _PROBLEMS[name]
    except KeyError:
        raise UnknownProblemError(name) from None
    if dim is not None and int(dim) != p.dim:
        raise ValueError(f"problem {name} has fixed dimension {p.dim}")
    return p


def list_problems():
    """``(name, dim, smooth)`` for every registered problem, sorted by name."""
    return [(p.name, p.dim, p.smooth) for _, p in sorted(_PROBLEMS.items())]
