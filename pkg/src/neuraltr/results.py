"""Objective bookkeeping, per-iteration trace records and run results."""

from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

__all__ = [
    "ObjectiveError",
    "BudgetExceeded",
    "CountingObjective",
    "TraceRecord",
    "OptimizationResult",
    "TRACE_COLUMNS",
    "close_trace",
]


class ObjectiveError(RuntimeError):
    """The objective returned a non-finite value (or raised) at ``point``."""

    def __init__(self, point, message="objective returned a non-finite value"):
        self.point = np.array(point, dtype=float)
        super().__init__(f"{message} at x={self.point.tolist()}")


class BudgetExceeded(RuntimeError):
    """The evaluation budget is spent."""


class CountingObjective:
    """Wraps ``f`` with a point cache, an evaluation budget and a finiteness check.

    Repeated queries at a bit-identical point are served from the cache and
    do not count against the budget. ``evals`` is the number of distinct
    points at which ``f`` fired.
    """

    def __init__(self, f, budget=None):
        self.f = f
        self.budget = budget
        self.evals = 0
        self._cache = {}
        self.log = []

    def _key(self, x):
        return np.asarray(x, dtype=float).tobytes()

    def cached(self, x):
        return self._key(x) in self._cache

    def remaining(self):
        return np.inf if self.budget is None else self.budget - self.evals

    def __call__(self, x):
        x = np.array(x, dtype=float)
        key = self._key(x)
        if key in self._cache:
            return self._cache[key]
        if self.budget is not None and self.evals >= self.budget:
            raise BudgetExceeded(f"budget of {self.budget} evaluations exhausted")
        try:
            v = float(self.f(x))
        except (ArithmeticError, ValueError) as exc:
            raise ObjectiveError(x, f"objective raised {exc!r}") from exc
        self.evals += 1
        if not np.isfinite(v):
            raise ObjectiveError(x)
        self._cache[key] = v
        self.log.append((x, v))
        return v


TRACE_COLUMNS = [
    "iter", "evals", "f", "delta", "rho", "step_norm", "model_decrease", "accepted", "update",
    "kkt_stationarity", "kkt_complementarity", "kkt_eigen",
    "train_mse", "test_mse", "loss_delta", "loss_cauchy", "loss_local", "loss_agreement",
    "clarke", "n_w", "n_b",
]


@dataclass
class TraceRecord:
    """One iteration. Fields that do not apply to an engine stay ``None``.

    ``x`` and ``f`` describe the iterate after the iteration's update;
    ``update`` is one of ``init``, ``success-swap``, ``geometry-repair``,
    ``shrink``, ``stationary`` or ``final``.
    """

    iter: int
    evals: int
    x: np.ndarray
    f: float
    delta: float
    rho: Optional[float] = None
    step_norm: Optional[float] = None
    model_decrease: Optional[float] = None
    accepted: bool = False
    update: str = ""
    kkt_stationarity: Optional[float] = None
    kkt_complementarity: Optional[float] = None
    kkt_eigen: Optional[float] = None
    train_mse: Optional[float] = None
    test_mse: Optional[float] = None
    loss_delta: Optional[float] = None
    loss_cauchy: Optional[float] = None
    loss_local: Optional[float] = None
    loss_agreement: Optional[float] = None
    clarke: Optional[float] = None
    n_w: Optional[int] = None
    n_b: Optional[int] = None
    decrease_ok: Optional[bool] = None

    def row(self):
        """CSV cells: the fixed columns then ``x_1..x_n``; floats at 17 digits."""
        cells = []
        for name in TRACE_COLUMNS:
            v = getattr(self, name)
            cells.append(_fmt(v))
        cells.extend(_fmt(float(v)) for v in self.x)
        return cells


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def close_trace(trace, evals, x, f, delta):
    """Append a ``final`` record when evaluations happened after the last record.

    Keeps the last ``evals`` cell equal to the run total when a budget stop
    or objective failure interrupts an iteration.
    """
    if trace and trace[-1].evals != evals:
        trace.append(TraceRecord(trace[-1].iter + 1, evals, np.array(x, dtype=float), float(f), float(delta),
                                 update="final"))


@dataclass
class OptimizationResult:
    x: np.ndarray
    f: float
    evals: int
    iters: int
    terminated_by: str
    delta: float
    trace: list = field(default_factory=list)
    message: str = ""
    extra: dict = field(default_factory=dict)
