"""Trust-region iteration with a trained black-box neural model.

Each iteration samples points strictly inside the trust region and on its
boundary, trains a small sigmoid net on a holdout split with the balanced
error ``MSE_w + MSE_b`` and then searches for a step by descending a
child loss built from the net's input derivatives:

    L*_BNTR = g1 L_delta + g2 L_cauchy + g3 L_local + g4 cosh(rho - eta'')

``L_delta`` is a smooth penalty on ``||s|| > delta``, ``L_cauchy`` asks for
a model decrease of ``beta' ||s||^2``, ``L_local`` asks for a model
stationary point with positive curvature and the last term asks for good
agreement between model and objective. The ratio ``rho`` needs true
objective values; inside the search they are refreshed every ``refresh``
descent steps to bound the evaluation cost.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .interp_geometry import (
    BlockedPointSet,
    GeometryRepairError,
    NonPoisedError,
    ball_sample,
    build_newton_basis,
    check_adequacy,
    lagrange_polynomials,
    quadratic_basis,
    select_exit_point_inadequate,
)
from .linalg_small import InvalidInputError, leading_principal_minors, smallest_eigenpair
from .neural_model import FeedForwardNet, TrainConfig, forward, input_derivatives, split_indices, train_regression_detailed
from .newton_model import QuadraticModel
from .results import BudgetExceeded, CountingObjective, ObjectiveError, OptimizationResult, TraceRecord, close_trace
from .tr_quadratic import DegenerateRatio, agreement_ratio

__all__ = [
    "SampledSets",
    "BlackboxLossWeights",
    "BlackboxConfig",
    "StepSearchState",
    "sample_sets",
    "loss_mse_lb",
    "loss_delta",
    "loss_delta_derivative",
    "loss_Ls",
    "loss_La",
    "loss_Lprime",
    "loss_LBNTR",
    "loss_LBNTR_star",
    "model_and_step",
    "default_train_config",
    "run_algorithm2",
    "clarke_stationarity_proxy",
]

BOUNDARY_RTOL = 1e-10


@dataclass(frozen=True)
class SampledSets:
    """Interior points ``S`` (``||y - x|| < delta``) and boundary points ``T`` (``||y - x|| = delta``)."""

    center: np.ndarray
    delta: float
    interior: np.ndarray
    interior_values: np.ndarray
    boundary: np.ndarray
    boundary_values: np.ndarray
    new_evals: int = 0

    @property
    def n_w(self):
        return self.interior.shape[0]

    @property
    def n_b(self):
        return self.boundary.shape[0]

    @property
    def points(self):
        return np.vstack([self.interior, self.boundary])

    @property
    def values(self):
        return np.concatenate([self.interior_values, self.boundary_values])


@dataclass(frozen=True)
class BlackboxLossWeights:
    """Weights and targets of the child losses.

    ``g1..g4`` weight ``L_delta``, ``L_cauchy``, ``L_local`` and the
    agreement term; ``g2p`` and ``g2pp`` weight the eigenvalue and the
    gradient parts of ``L_local``; ``beta_p``, ``beta_pp`` set the decrease
    target ``beta' ||s||^2 - beta''``; ``eta_pp`` is the agreement target
    and ``eta3`` the target of ``L_a``; ``c`` is the curvature target of
    ``L_local`` and ``c_i`` the leading-minor targets of ``L'``
    (``None`` means ``c`` for every minor); ``z1..z3``, ``c_tilde`` weight
    ``L_s``; ``zt1``, ``zt2`` combine ``L = zt1 L_s + zt2 L_a``.

    ``cauchy_form`` selects ``|phi|`` (``"equality"``, the default) or
    ``max(0, phi)`` (``"hinge"``) for ``phi = m(x+s) - m(x) + beta' ||s||^2
    - beta''``. The absolute value targets a decrease of exactly
    ``beta' ||s||^2 - beta''`` and is zero at ``s = 0``; the hinge only
    penalises a decrease that falls short of it. Either way the engine
    accepts a step only if the decrease reaches the target.
    """

    g1: float = 1.0
    g2: float = 1.0
    g3: float = 0.1
    g4: float = 0.1
    g2p: float = 0.0
    g2pp: float = 1.0
    beta_p: float = 1e-4
    beta_pp: float = 0.0
    eta_pp: float = 1.0
    eta3: float = 1.0
    c: float = 1e-2
    c_i: Optional[tuple] = None
    z1: float = 1.0
    z2: float = 1.0
    z3: float = 0.0
    c_tilde: float = 0.0
    zt1: float = 1.0
    zt2: float = 1.0
    cauchy_form: str = "equality"

    def __post_init__(self):
        for name in ("g1", "g2", "g3", "g4", "g2p", "g2pp", "beta_pp", "z1", "z2", "z3", "c_tilde", "zt1", "zt2"):
            if not getattr(self, name) >= 0:
                raise InvalidInputError(f"{name} must be nonnegative")
        if not self.beta_p > 0:
            raise InvalidInputError("beta_p must be positive")
        if not self.eta3 >= 1:
            raise InvalidInputError("eta3 must be at least 1")
        if self.cauchy_form not in ("equality", "hinge"):
            raise InvalidInputError("cauchy_form must be 'equality' or 'hinge'")

    def minor_targets(self, n):
        if self.c_i is None:
            return np.full(n, self.c)
        c = np.asarray(self.c_i, dtype=float).reshape(-1)
        if c.size != n:
            raise InvalidInputError(f"c_i needs {n} entries")
        return c


@dataclass(frozen=True)
class BlackboxConfig:
    """Radius control, sampling and step-search settings.

    Orderings: ``0 <= eta1 <= eta2 <= 1`` and ``0 < g1 < g2 <= 1 <= g3``.
    ``n_w`` and ``n_b`` default to ``(n+1)(n+2)/2`` and ``2n``.
    ``child_loss`` is one of ``LBNTR_star``, ``LBNTR``, ``Lprime``, ``L``.
    """

    eta1: float = 0.05
    eta2: float = 0.75
    g1: float = 0.5
    g2: float = 1.0
    g3: float = 2.0
    delta0: float = 1.0
    eps_delta: float = 1e-6
    eps_station: float = 1e-3
    eps_grad: float = 1e-5
    max_iters: int = 500
    seed: int = 0
    budget: Optional[int] = None
    n_w: Optional[int] = None
    n_b: Optional[int] = None
    max_interior: Optional[int] = None
    child_loss: str = "LBNTR_star"
    refresh: int = 25
    search_starts: int = 8
    search_iters: int = 100
    step_starts: int = 2
    child_steps: int = 40
    relax_boundary: bool = False
    relax_gamma: float = 1.0
    clarke_radius: float = 1e-2
    clarke_dirs: int = 8
    clarke_every: int = 5
    kappa_n: Optional[float] = None
    probes: int = 256
    repair_candidates: int = 16

    def __post_init__(self):
        if not 0 <= self.eta1 <= self.eta2 <= 1:
            raise InvalidInputError("need 0 <= eta1 <= eta2 <= 1")
        if not 0 < self.g1 < self.g2 <= 1 <= self.g3:
            raise InvalidInputError("need 0 < g1 < g2 <= 1 <= g3")
        if not self.delta0 > 0:
            raise InvalidInputError("delta0 must be positive")
        if self.child_loss not in ("LBNTR_star", "LBNTR", "Lprime", "L"):
            raise InvalidInputError(f"unknown child loss {self.child_loss!r}")
        if self.refresh < 1 or self.step_starts < 1 or self.search_starts < 1:
            raise InvalidInputError("refresh, step_starts and search_starts must be positive")
        if self.clarke_dirs < 8:
            raise InvalidInputError("clarke_dirs must be at least 8")

    def sizes(self, n):
        n_w = (n + 1) * (n + 2) // 2 if self.n_w is None else self.n_w
        n_b = 2 * n if self.n_b is None else self.n_b
        if n_w < 2 or n_b < 0:
            raise InvalidInputError("need n_w >= 2 and n_b >= 0")
        return n_w, n_b


@dataclass
class StepSearchState:
    """Step weights ``w_s`` (the step is ``s = sum w_s[i] e_i``) and multiplier ``w_star >= 0``."""

    w_s: np.ndarray
    w_star: float = 0.0
    losses: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w_s = np.asarray(self.w_s, dtype=float).reshape(-1)
        if not self.w_star >= 0:
            raise InvalidInputError("w_star must be nonnegative")

    @property
    def s(self):
        return self.w_s


# --------------------------------------------------------------- sampling


def _as_pool(existing):
    if existing is None:
        return None, None
    if isinstance(existing, SampledSets):
        return existing.points, existing.values
    if isinstance(existing, BlockedPointSet):
        if existing.values is None:
            raise InvalidInputError("existing point set has no values")
        return existing.points, existing.flat_values
    pts, vals = existing
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return pts, np.asarray(vals, dtype=float).reshape(-1)


def sample_sets(f, center, delta, n_w, n_b, existing=None, seed=0, max_interior=None):
    """Reuse known points in the ball and top up ``S`` and ``T``.

    Interior points come from a scrambled Halton sequence mapped into the
    ball, boundary points from normalised seeded Gaussian directions. ``f``
    is called at new points only.

    Parameters
    ----------
    f : callable
    center : array (n,)
    delta : float
    n_w, n_b : int
        Target counts; existing points beyond the targets are kept, up to
        ``max_interior`` interior points (most recent first).
    existing : SampledSets, BlockedPointSet or (points, values), optional
    """
    if n_w < 1 or n_b < 0:
        raise InvalidInputError("need n_w >= 1 and n_b >= 0")
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    center = np.asarray(center, dtype=float).reshape(-1)
    n = center.size
    pts, vals = _as_pool(existing)
    inner, inner_v, bnd, bnd_v = [], [], [], []
    if pts is not None and pts.shape[0]:
        if pts.shape[1] != n:
            raise InvalidInputError("existing points have the wrong dimension")
        dist = np.linalg.norm(pts - center, axis=1)
        on_b = np.abs(dist - delta) <= BOUNDARY_RTOL * delta
        ins = (dist < delta) & ~on_b
        inner, inner_v = list(pts[ins]), list(vals[ins])
        bnd, bnd_v = list(pts[on_b]), list(vals[on_b])
    if max_interior is not None and len(inner) > max_interior:
        # keep the iterate when present, then the most recent points
        d0 = [i for i, y in enumerate(inner) if np.array_equal(y, center)]
        rest = [i for i in range(len(inner)) if i not in d0][-(max_interior - len(d0)):]
        keep = d0 + rest
        inner, inner_v = [inner[i] for i in keep], [inner_v[i] for i in keep]
    new = 0
    need = n_w - len(inner)
    if need > 0:
        for y in ball_sample(center, delta, need, seed):
            inner.append(y)
            inner_v.append(_value(f, y))
            new += 1
    need = n_b - len(bnd)
    if need > 0:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((need, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        for d in g:
            y = center + delta * d
            bnd.append(y)
            bnd_v.append(_value(f, y))
            new += 1
    return SampledSets(center.copy(), float(delta), np.array(inner).reshape(-1, n), np.array(inner_v, dtype=float),
                       np.array(bnd).reshape(-1, n), np.array(bnd_v, dtype=float), new)


def _value(f, y):
    v = float(f(y))
    if not np.isfinite(v):
        raise ObjectiveError(y)
    return v


# --------------------------------------------------------------- losses


def _predict(model, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if isinstance(model, FeedForwardNet):
        return forward(model, x)
    if isinstance(model, QuadraticModel):
        return np.atleast_1d(model(x)).astype(float)
    return np.array([float(model(row)) for row in x])


def _derivs(model, x):
    """Value, gradient and Hessian of the model at a batch of points."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if isinstance(model, FeedForwardNet):
        return input_derivatives(model, x, order=2)
    if isinstance(model, QuadraticModel):
        v = np.atleast_1d(model(x)).astype(float)
        g = np.array([model.grad_at(row) for row in x])
        h = np.broadcast_to(model.hessian, (x.shape[0],) + model.hessian.shape)
        return v, g, h
    raise InvalidInputError("model needs input derivatives (a FeedForwardNet or QuadraticModel)")


def loss_mse_lb(net, sets):
    """Balanced error: mean squared residual over ``S`` plus mean over ``T`` (0 if ``T`` is empty)."""
    if sets.n_w == 0:
        raise InvalidInputError("interior set is empty")
    rw = _predict(net, sets.interior) - sets.interior_values
    out = float(np.mean(rw * rw))
    if sets.n_b:
        rb = _predict(net, sets.boundary) - sets.boundary_values
        out += float(np.mean(rb * rb))
    return out


def loss_delta(r, delta):
    """Step-length penalty: ``r (e^(r - delta) - 1) - r^2/2 + delta^2/2`` for ``r > delta``, else 0."""
    if r <= delta:
        return 0.0
    if r - delta > 700.0:
        return math.inf
    return r * math.expm1(r - delta) - 0.5 * r * r + 0.5 * delta * delta


def loss_delta_derivative(r, delta):
    """``d L_delta / d r``."""
    if r <= delta:
        return 0.0
    e = math.exp(r - delta)
    return (e - 1.0) + r * e - r


def _terms(lw, v0, v, g, h, s, delta, fx=None, fs=None, w_star=0.0, need=("all",)):
    """Every child-loss ingredient at one step.

    ``v0 = m(x)``, ``v, g, h`` are the model value, gradient and Hessian at
    ``x + s``; ``fx`` and ``fs`` are objective values at ``x`` and ``x + s``
    (``fs`` may be stale or ``None``). ``rho`` is ``None`` when ``fs`` is
    unknown and 0 when the predicted decrease vanishes.
    """
    want = set(need)
    every = "all" in want
    n = s.size
    r = float(np.linalg.norm(s))
    md = v0 - v
    phi = v - v0 + lw.beta_p * r * r - lw.beta_pp
    cauchy = abs(phi) if lw.cauchy_form == "equality" else max(0.0, phi)
    t = {"r": r, "model_decrease": md, "phi": phi, "l_delta": loss_delta(r, delta), "cauchy": cauchy}
    t["grad_sq_mean"] = float(np.mean(g * g))
    rho = None
    if fx is not None and fs is not None:
        rho = (fx - fs) / md if abs(md) >= 1e-14 * (1.0 + abs(fx)) else 0.0
    t["rho"] = rho
    if every or "eig" in want:
        t["lambda_min"] = smallest_eigenpair(h)[0] if (lw.g2p > 0 or every) else None
    lam = t.get("lambda_min")
    t["local"] = (lw.g2p * abs(lam - lw.c) if lw.g2p > 0 else 0.0) + lw.g2pp * t["grad_sq_mean"]
    t["agreement_abs"] = abs(rho - lw.eta_pp) if rho is not None else 0.0
    t["agreement_cosh"] = _cosh(rho - lw.eta_pp) if rho is not None else 0.0
    t["la"] = (rho - lw.eta3) ** 2 if rho is not None else 0.0
    if every or "minors" in want:
        minors = leading_principal_minors(h)
        t["minors"] = minors
        t["lprime_s"] = t["grad_sq_mean"] + float(np.mean((minors - lw.minor_targets(n)) ** 2))
    if every or "ls" in want:
        res = g + w_star * s
        t["ls_stationarity"] = float(res @ res)
        t["ls_complementarity"] = (w_star * (delta - r)) ** 2
        lam_hat = smallest_eigenpair(h + w_star * np.eye(n))[0] if (lw.z3 > 0 or every) else 0.0
        t["ls_eigen"] = (lam_hat - lw.c_tilde) ** 2
        t["ls"] = lw.z1 * t["ls_stationarity"] + lw.z2 * t["ls_complementarity"] + lw.z3 * t["ls_eigen"]
    return t


def _cosh(z):
    # capped so a vanishing predicted decrease gives a huge but finite penalty
    return math.cosh(min(abs(z), 700.0))


def _combine(kind, lw, t):
    if kind == "LBNTR_star":
        return lw.g1 * t["l_delta"] + lw.g2 * t["cauchy"] + lw.g3 * t["local"] + lw.g4 * t["agreement_cosh"]
    if kind == "LBNTR":
        return lw.g1 * t["l_delta"] + lw.g2 * t["cauchy"] + lw.g3 * t["agreement_abs"]
    if kind == "Lprime":
        return t["lprime_s"] + t["la"]
    return lw.zt1 * t["ls"] + lw.zt2 * t["la"]


_NEEDS = {"LBNTR_star": ("eig",), "LBNTR": (), "Lprime": ("minors",), "L": ("ls",)}


def _step_of(step_state):
    return step_state.s if isinstance(step_state, StepSearchState) else np.asarray(step_state, dtype=float).reshape(-1)


def _point_terms(model, center, step_state, delta, lw, f=None, need=("all",)):
    center = np.asarray(center, dtype=float).reshape(-1)
    s = _step_of(step_state)
    w_star = step_state.w_star if isinstance(step_state, StepSearchState) else 0.0
    v, g, h = _derivs(model, np.vstack([center, center + s]))
    fx = fs = None
    if f is not None:
        fx, fs = float(f(center)), float(f(center + s))
    return _terms(lw, float(v[0]), float(v[1]), g[1], h[1], s, delta, fx, fs, w_star, need)


def loss_Ls(net, center, step_state, delta, lw=None):
    """Optimality-condition loss ``z1 |grad m + w* s|^2 + z2 [w*(delta - ||s||)]^2 + z3 (lambda_hat - c~)^2``.

    ``lambda_hat`` is the smallest eigenvalue of ``hess m + w* I`` at ``x + s``.
    """
    lw = BlackboxLossWeights() if lw is None else lw
    return _point_terms(net, center, step_state, delta, lw, need=("ls",))["ls"]


def loss_La(f_callback, net, center, step, lw=None):
    """``(rho - eta3)^2`` with the true objective at ``x`` and ``x + step``."""
    lw = BlackboxLossWeights() if lw is None else lw
    center = np.asarray(center, dtype=float).reshape(-1)
    s = _step_of(step)
    v = _predict(net, np.vstack([center, center + s]))
    rho = agreement_ratio(float(f_callback(center)), float(f_callback(center + s)), float(v[0]), float(v[1]))
    return (rho - lw.eta3) ** 2


def loss_Lprime(net, center, step_state, lw=None, f=None):
    """``L' = L'_s + L'_a``.

    ``L'_s`` is the mean squared model partial at ``x + s`` plus the mean of
    ``(H_i - c_i)^2`` over the leading principal minors ``H_i`` of the model
    Hessian there. ``L'_a = (rho - eta3)^2`` is added when ``f`` is given.
    """
    lw = BlackboxLossWeights() if lw is None else lw
    t = _point_terms(net, center, step_state, np.inf, lw, need=("minors",))
    out = t["lprime_s"]
    if f is not None:
        out += loss_La(f, net, center, step_state, lw)
    return out


def loss_LBNTR(net, f_callback, center, step_state, delta, lw=None):
    """``g1 L_delta + g2 L_cauchy + g3 |rho - eta''|``."""
    lw = BlackboxLossWeights() if lw is None else lw
    t = _point_terms(net, center, step_state, delta, lw, f_callback, need=())
    _check_ratio(t, lw.g3)
    return _combine("LBNTR", lw, t)


def loss_LBNTR_star(net, f_callback, center, step_state, delta, lw=None, terms=False):
    """``g1 L_delta + g2 L_cauchy + g3 L_local + g4 cosh(rho - eta'')``.

    ``L_local = g2' |lambda_min - c| + g2'' mean((dm/dx_i)^2)`` at ``x + s``.
    With ``terms=True`` returns ``(total, dict of the four terms)``.
    """
    lw = BlackboxLossWeights() if lw is None else lw
    t = _point_terms(net, center, step_state, delta, lw, f_callback, need=("eig",))
    _check_ratio(t, lw.g4)
    total = _combine("LBNTR_star", lw, t)
    if terms:
        return total, {"delta": t["l_delta"], "cauchy": t["cauchy"], "local": t["local"],
                       "agreement": t["agreement_cosh"]}
    return total


def _check_ratio(t, weight):
    if weight > 0 and abs(t["model_decrease"]) < 1e-14:
        raise DegenerateRatio("predicted decrease is numerically zero")


# --------------------------------------------------------------- step search


def _minimize_on_ball(model, center, delta, starts, iters):
    """Vectorised projected descent of the model over the ball, in units of ``delta``."""
    u = np.array(starts, dtype=float)
    v, g, _ = _derivs(model, center + delta * u)
    t = np.full(u.shape[0], 0.5)
    for _ in range(iters):
        gu = delta * g
        gn = np.linalg.norm(gu, axis=1)
        if np.all(gn < 1e-14):
            break
        trial = u - (t / np.maximum(gn, 1e-300))[:, None] * gu
        nrm = np.linalg.norm(trial, axis=1)
        trial /= np.maximum(nrm, 1.0)[:, None]
        vt, gt, _ = _derivs(model, center + delta * trial)
        ok = vt <= v - 1e-4 * np.einsum("ij,ij->i", gu, u - trial)
        u[ok], v[ok], g[ok] = trial[ok], vt[ok], gt[ok]
        t = np.where(ok, np.minimum(2.0 * t, 2.0), 0.5 * t)
        if np.all(t < 1e-10):
            break
    return u, v


def _search_starts(model, center, delta, cfg, seed):
    n = center.size
    v0, g0, _ = _derivs(model, center[None, :])
    starts = [np.zeros(n)]
    gn = np.linalg.norm(g0[0])
    if gn > 0:
        starts.append(-g0[0] / gn)
    if cfg.search_starts > len(starts):
        starts.extend(ball_sample(np.zeros(n), 1.0, cfg.search_starts - len(starts), seed))
    u, v = _minimize_on_ball(model, center, delta, np.array(starts), cfg.search_iters)
    order = np.argsort(v, kind="stable")
    chosen = []
    for i in order:
        if all(np.linalg.norm(u[i] - u[j]) > 1e-6 for j in chosen):
            chosen.append(i)
        if len(chosen) == cfg.step_starts:
            break
    return [delta * u[i] for i in chosen], float(v0[0])


def _child_descent(model, center, delta, s0, kind, lw, cfg, f, fx, v0):
    """Descend the child loss from ``s0``; the objective is refreshed every ``cfg.refresh`` steps."""
    n = center.size
    need = _NEEDS[kind]
    with_w = kind == "L"
    theta = np.concatenate([s0, [0.0]]) if with_w else s0.copy()
    uses_rho = f is not None and _agreement_weight(kind, lw) > 0
    fs = None
    h_fd = 1e-7 * delta
    evals = 0

    def batch_loss(thetas, fs_now):
        ss = thetas[:, :n]
        v, g, hh = _derivs(model, center + ss)
        out = np.empty(thetas.shape[0])
        for i in range(thetas.shape[0]):
            ws = max(0.0, float(thetas[i, n])) if with_w else 0.0
            t = _terms(lw, v0, float(v[i]), g[i], hh[i], ss[i], delta, fx if uses_rho else None, fs_now, ws, need)
            out[i] = _combine(kind, lw, t)
        return out

    step = 0.1 * delta
    dim = theta.size
    eye = np.eye(dim) * h_fd
    val = None
    for it in range(cfg.child_steps):
        if uses_rho and it % cfg.refresh == 0:
            fs = float(f(center + theta[:n]))
            evals += 1
            val = None
        stencil = np.vstack([theta, theta + eye, theta - eye])
        vals = batch_loss(stencil, fs)
        val = vals[0]
        grad = (vals[1:dim + 1] - vals[dim + 1:]) / (2 * h_fd)
        gn = float(np.linalg.norm(grad))
        if gn < 1e-14:
            break
        moved = False
        while step > 1e-12 * delta:
            cand = theta - step * grad / gn
            if with_w:
                cand[n] = max(0.0, cand[n])
            cv = batch_loss(cand[None, :], fs)[0]
            if cv <= val - 1e-4 * step * gn:
                theta, val, moved = cand, cv, True
                step = min(2.0 * step, delta)
                break
            step *= 0.5
        if not moved:
            break
    s = theta[:n].copy()
    w_star = max(0.0, float(theta[n])) if with_w else 0.0
    return s, w_star, evals


def _agreement_weight(kind, lw):
    if kind == "LBNTR_star":
        return lw.g4
    if kind == "LBNTR":
        return lw.g3
    if kind == "Lprime":
        return 1.0
    return lw.zt2


def default_train_config(n, seed=0):
    """Training defaults for the engine: one hidden layer of ``max(8, 4n)`` units with biases."""
    return TrainConfig(epochs=300, seed=seed, split_fraction=0.8, hidden=(max(8, 4 * n),), bias=True,
                       optimizer="lbfgs", check_every=50, patience=2)


def _split(sets, center, fraction, seed):
    """Independent holdout splits of ``S`` and ``T``; the iterate always trains."""
    n_w, n_b = sets.n_w, sets.n_b
    at_center = [i for i in range(n_w) if np.array_equal(sets.interior[i], center)]
    others = np.array([i for i in range(n_w) if i not in at_center], dtype=int)
    if others.size:
        k = len(others)
        n_test = min(k, int(round((1.0 - fraction) * n_w)))
        perm = np.random.default_rng(seed).permutation(k)
        te_w = np.sort(others[perm[:n_test]])
        tr_w = np.sort(np.concatenate([at_center, others[perm[n_test:]]]).astype(int))
    else:
        tr_w, te_w = np.array(at_center, dtype=int), np.array([], dtype=int)
    if n_b >= 2:
        tr_b, te_b = split_indices(n_b, fraction, seed + 1)
    else:
        tr_b, te_b = np.arange(n_b), np.array([], dtype=int)
    return tr_w, te_w, tr_b + n_w, te_b + n_w


def model_and_step(sets, center, delta, cfg=None, lw=None, train=None, f=None, warm=None, fx=None):
    """Train the net on a holdout split and search for a step.

    Parameters
    ----------
    sets : SampledSets
    center : array (n,)
    delta : float
    cfg : BlackboxConfig
    lw : BlackboxLossWeights
    train : TrainConfig
    f : callable, optional
        Objective for the agreement terms; without it those terms are dropped.
    warm : FeedForwardNet, optional
        Previous net to start training from.
    fx : float, optional
        ``f(center)``; looked up through ``f`` when omitted.

    Returns
    -------
    net : FeedForwardNet
    step : ndarray (n,)
        Zero when no candidate passes the decrease gate.
    diag : dict
    """
    cfg = BlackboxConfig() if cfg is None else cfg
    lw = BlackboxLossWeights() if lw is None else lw
    center = np.asarray(center, dtype=float).reshape(-1)
    n = center.size
    train = default_train_config(n) if train is None else train
    if sets.n_w < 2:
        raise InvalidInputError("model_and_step needs at least two interior samples")
    pts, vals = sets.points, sets.values
    tr_w, te_w, tr_b, te_b = _split(sets, center, train.split_fraction, train.seed)
    tr = np.concatenate([tr_w, tr_b]).astype(int)
    te = np.concatenate([te_w, te_b]).astype(int)
    sw = np.zeros(pts.shape[0])
    tw = np.zeros(pts.shape[0])
    sw[tr_w] = 1.0 / max(1, tr_w.size)
    sw[tr_b] = 1.0 / max(1, tr_b.size)
    tw[te_w] = 1.0 / max(1, te_w.size)
    tw[te_b] = 1.0 / max(1, te_b.size)
    rep = train_regression_detailed(pts, train, values=vals, sample_weight=sw, x_shift=center, x_scale=delta,
                                    init=warm, split=(tr, te), test_weight=tw)
    net = rep.net
    r = forward(net, pts) - vals

    def part(idx):
        return float(np.mean(r[idx] ** 2)) if idx.size else 0.0

    train_mse = part(tr_w) + part(tr_b)
    test_mse = part(te_w) + part(te_b) if te.size else float("nan")
    if fx is None and f is not None:
        fx = float(f(center))
    kind = cfg.child_loss
    starts, v0 = _search_starts(net, center, delta, cfg, train.seed)
    cands = []
    evals = 0
    for s0 in starts:
        cands.append((s0, 0.0))
        s, w_star, k = _child_descent(net, center, delta, s0, kind, lw, cfg, f, fx, v0)
        evals += k
        cands.append((s, w_star))
    best = None
    for s, w_star in cands:
        s, relaxed = _place(net, center, delta, s, cfg)
        v = float(_predict(net, center + s)[0])
        md = v0 - v
        r2 = float(s @ s)
        gate = r2 > 0 and md >= lw.beta_p * r2 - lw.beta_pp - 1e-12 * (1.0 + abs(v0)) and md > 0
        if not gate:
            continue
        fs = float(f(center + s)) if (f is not None and _cached(f, center + s)) else None
        t = _point_terms(net, center, StepSearchState(s, w_star), delta, lw, need=("all",))
        if fs is not None:
            t = _with_rho(t, fx, fs, lw)
        score = _combine(kind, lw, t)
        key = (score, -md)
        if best is None or key < best[0]:
            best = (key, s, w_star, t, relaxed)
    diag = {"net": net, "train_report": rep, "train_mse": train_mse, "test_mse": test_mse,
            "leakage": rep.leakage, "n_w": sets.n_w, "n_b": sets.n_b, "search_evals": evals, "model_at_center": v0}
    if best is None:
        diag.update({"model_decrease": 0.0, "gate": False, "relaxed": False, "terms": None, "w_star": 0.0})
        return net, np.zeros(n), diag
    _, s, w_star, t, relaxed = best
    diag.update({"model_decrease": t["model_decrease"], "gate": True, "relaxed": relaxed, "terms": t,
                 "w_star": w_star})
    return net, s, diag


def _with_rho(t, fx, fs, lw):
    t = dict(t)
    md = t["model_decrease"]
    rho = (fx - fs) / md if abs(md) >= 1e-14 * (1.0 + abs(fx)) else 0.0
    t["rho"] = rho
    t["agreement_abs"] = abs(rho - lw.eta_pp)
    t["agreement_cosh"] = _cosh(rho - lw.eta_pp)
    t["la"] = (rho - lw.eta3) ** 2
    return t


def _cached(f, x):
    return isinstance(f, CountingObjective) and f.cached(x)


def _place(net, center, delta, s, cfg):
    """Project a step into the ball unless boundary relaxation accepts it as a net local minimum."""
    r = float(np.linalg.norm(s))
    if r <= delta:
        return s, False
    if cfg.relax_boundary:
        v, g, h = _derivs(net, (center + s)[None, :])
        flat = float(np.linalg.norm(g[0])) * r <= 1e-3 * (1.0 + abs(float(v[0])))
        if flat and smallest_eigenpair(h[0])[0] > 0:
            return s, True
    return s * (delta / r), False


# --------------------------------------------------------------- geometry on sampled sets


def _poised_subset(points, center, delta, first=0):
    """Greedy quadratic-sized subset by largest pivots (the iterate first).

    Runs the Newton pivot sweep over every available point; the returned
    indices follow pivot order, so the block sizes are ``1, n, ...``.
    """
    u = (points - center) / delta
    n = u.shape[1]
    basis = quadratic_basis(n)
    w = np.column_stack([q(u) for q in basis])
    used = []
    for j in range(len(basis)):
        free = [i for i in range(u.shape[0]) if i not in used]
        if not free:
            break
        if j == 0 and first in free:
            k = first
        else:
            k = free[int(np.argmax(np.abs(w[free, j])))]
        piv = w[k, j]
        if abs(piv) < 1e-8:
            break
        w[:, j] = w[:, j] / piv
        for m in range(j + 1, w.shape[1]):
            w[:, m] = w[:, m] - w[:, j] * w[k, m]
        used.append(k)
    return used


def _geometry(points, center, delta, cfg):
    """Best-poised quadratic subset of the sampled points and its adequacy."""
    idx = _poised_subset(points, center, delta)
    scaled = BlockedPointSet.from_flat((points[idx] - center) / delta)
    basis = build_newton_basis(scaled, pivot_pool="all")
    rep = check_adequacy(basis, scaled, np.zeros(center.size), 1.0, cfg.kappa_n, cfg.probes, cfg.seed)
    return idx, scaled, rep.adequate


def _success_exit(scaled, xplus):
    """Exit index (into the subset) for a successful step: largest ``|L_i(x+)|`` except the iterate."""
    try:
        lag = lagrange_polynomials(scaled)
    except NonPoisedError:
        return None
    vals = np.abs([float(L(xplus)) for L in lag])
    vals[0] = -np.inf
    dist = np.linalg.norm(scaled.points, axis=1)
    top = vals.max()
    tied = np.flatnonzero(vals >= top - 1e-12 * max(1.0, top))
    return int(tied[np.argmax(dist[tied])])


# --------------------------------------------------------------- engine


def clarke_stationarity_proxy(f, x, radius=1e-2, n_dirs=64, seed=0):
    """Sampled surrogate of ``min_d f°(x; d)``.

    For unit directions ``d`` (antithetic pairs of seeded Gaussians) takes
    the largest difference quotient ``(f(x + a d) - f(x)) / a`` over
    ``a in {radius, radius/4, radius/16}`` and returns the smallest such
    value over the directions.
    """
    if not radius > 0:
        raise InvalidInputError("radius must be positive")
    if n_dirs < 8:
        raise InvalidInputError("n_dirs must be at least 8")
    x = np.asarray(x, dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    half = rng.standard_normal(((n_dirs + 1) // 2, x.size))
    half /= np.linalg.norm(half, axis=1, keepdims=True)
    dirs = np.vstack([half, -half])[:n_dirs]
    fx = float(f(x))
    best = np.inf
    for d in dirs:
        q = max((float(f(x + a * d)) - fx) / a for a in (radius, radius / 4, radius / 16))
        best = min(best, q)
    return float(best)


def run_algorithm2(f, x0, cfg=None, lw=None, train=None):
    """Trust-region loop with the black-box neural model.

    Returns
    -------
    OptimizationResult
        ``terminated_by`` is ``delta``, ``stationarity``, ``max_iters``,
        ``budget`` or ``failure``. ``extra`` holds the last Clarke proxy
        value and the test indices that leaked into training (empty).
    """
    cfg = BlackboxConfig() if cfg is None else cfg
    lw = BlackboxLossWeights() if lw is None else lw
    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    n = x.size
    train = default_train_config(n, cfg.seed) if train is None else train
    n_w, n_b = cfg.sizes(n)
    max_int = cfg.max_interior if cfg.max_interior is not None else 3 * n_w
    obj = f if isinstance(f, CountingObjective) else CountingObjective(f, cfg.budget)
    delta = cfg.delta0
    trace = []
    leakage = []
    terminated, message = "max_iters", ""
    clarke = None
    last_clarke = -cfg.clarke_every
    extra_pts = 0
    fx = np.nan
    pool = None
    net = None
    try:
        fx = obj(x)
        pool = (x[None, :].copy(), np.array([fx]))
        trace.append(TraceRecord(0, obj.evals, x.copy(), fx, delta, update="init"))
        for k in range(1, cfg.max_iters + 1):
            if delta < cfg.eps_delta:
                terminated = "delta"
                break
            sets = sample_sets(obj, x, delta, n_w + extra_pts, n_b, pool, cfg.seed + k, max_int)
            pts, vals = sets.points, sets.values
            net, s, diag = model_and_step(sets, x, delta, cfg, lw, replace(train, seed=train.seed + k), obj, net, fx)
            leakage.extend(diag["leakage"])
            idx, scaled, adequate = _geometry(pts, x, delta, cfg)
            t = diag["terms"] or {}
            rec = TraceRecord(k, 0, x, fx, delta, step_norm=float(np.linalg.norm(s)),
                              model_decrease=diag["model_decrease"], train_mse=diag["train_mse"],
                              test_mse=diag["test_mse"], loss_delta=t.get("l_delta"), loss_cauchy=t.get("cauchy"),
                              loss_local=t.get("local"), loss_agreement=t.get("agreement_cosh"),
                              n_w=sets.n_w, n_b=sets.n_b)
            gnorm = float(np.linalg.norm(input_derivatives(net, x[None, :], order=1)[1][0]))
            if gnorm <= cfg.eps_grad and adequate:
                clarke = clarke_stationarity_proxy(obj, x, min(cfg.clarke_radius, delta), cfg.clarke_dirs, cfg.seed + k)
                last_clarke = k
                rec.clarke = clarke
                if clarke >= -cfg.eps_station:
                    rec.update = "stationary"
                    rec.evals = obj.evals
                    trace.append(rec)
                    terminated = "stationarity"
                    break
            accepted = False
            rho = None
            if diag["gate"]:
                x_new = x + s
                f_new = obj(x_new)
                try:
                    rho = agreement_ratio(fx, f_new, diag["model_at_center"], diag["model_at_center"] - diag["model_decrease"])
                except DegenerateRatio:
                    rho = None
                threshold = cfg.eta2 if diag["relaxed"] else cfg.eta1
                accepted = rho is not None and rho >= threshold and f_new < fx
            rec.rho = rho
            rec.accepted = accepted
            if accepted:
                r = float(np.linalg.norm(s))
                rec.decrease_ok = bool(diag["model_decrease"] >= lw.beta_p * r * r - lw.beta_pp - 1e-12 * (1 + abs(fx)))
                out = _success_exit(scaled, s / delta) if len(idx) > 1 else None
                keep = np.ones(pts.shape[0], dtype=bool)
                if out is not None:
                    keep[idx[out]] = False
                pool = (np.vstack([pts[keep], x_new[None, :]]), np.concatenate([vals[keep], [f_new]]))
                x, fx = x_new, f_new
                if diag["relaxed"]:
                    delta = cfg.relax_gamma * r
                else:
                    delta *= cfg.g3 if rho >= cfg.eta2 else cfg.g2
                extra_pts = 0
                rec.update = "success-swap"
            else:
                pool = (pts, vals)
                repaired = False
                if not adequate:
                    try:
                        i, y = select_exit_point_inadequate(scaled, np.zeros(n), 1.0, candidates=cfg.repair_candidates,
                                                            seed=cfg.seed + k, keep=(0,))
                        if not np.allclose(y, scaled.points[i]):
                            new = x + delta * y
                            p2, v2 = pts.copy(), vals.copy()
                            p2[idx[i]] = new
                            v2[idx[i]] = obj(new)
                            pool = (p2, v2)
                            repaired = True
                    except GeometryRepairError:
                        repaired = False
                if repaired:
                    rec.update = "geometry-repair"
                else:
                    delta *= cfg.g1
                    extra_pts += math.ceil(n_w / 4)
                    rec.update = "shrink"
                if delta <= cfg.clarke_radius and k - last_clarke >= cfg.clarke_every:
                    clarke = clarke_stationarity_proxy(obj, x, cfg.clarke_radius, cfg.clarke_dirs, cfg.seed + k)
                    last_clarke = k
                    rec.clarke = clarke
                    if clarke >= -cfg.eps_station:
                        terminated = "stationarity"
            rec.x, rec.f, rec.delta, rec.evals = x.copy(), fx, delta, obj.evals
            trace.append(rec)
            if terminated == "stationarity":
                break
    except BudgetExceeded as exc:
        terminated, message = "budget", str(exc)
    except ObjectiveError as exc:
        terminated, message = "failure", str(exc)
    iters = len(trace) - 1 if trace else 0
    close_trace(trace, obj.evals, x, fx, delta)
    return OptimizationResult(x.copy(), float(fx), obj.evals, iters, terminated, delta,
                              trace, message, {"clarke": clarke, "leakage": sorted(set(leakage)), "net": net})
