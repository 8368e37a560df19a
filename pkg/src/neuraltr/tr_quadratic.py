"""Trust-region iteration with a trained quadratic model.

The model gradient ``g``, the Hessian weights ``w^H`` (assembled as
``H = sum_{i<j} w_ij (E_ij + E_ji) + 1/2 sum_i w_ii E_ii``), the step
weights ``w^s`` and the multiplier ``w* = u^2`` are fitted together by
minimising

    Overall = zt1 * L1 + zt2 * L2 + zt3 * L3

where ``L1`` fits the interpolation data, ``L2`` penalises violation of the
subproblem optimality conditions and ``L3`` asks for a fraction of the
Cauchy decrease. Training works in coordinates scaled to the unit ball and
to unit function variation; reported quantities are in original units.

The module also provides the classical baseline that interpolates with
Newton fundamental polynomials and solves the ball subproblem exactly.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ._subproblem import solve_ball_quadratic
from .interp_geometry import (
    BlockedPointSet,
    GeometryRepairError,
    build_newton_basis,
    check_adequacy,
    determinant_polynomials,
    maximize_abs_on_ball,
    poisedness_determinant,
    quadratic_basis,
    select_exit_point_inadequate,
    select_exit_point_success,
)
from .linalg_small import InvalidInputError, jacobi_eigh, min_eigenvalue_gradient
from .newton_model import QuadraticModel, assemble_model, generalized_finite_differences
from .results import BudgetExceeded, CountingObjective, ObjectiveError, OptimizationResult, TraceRecord, close_trace

__all__ = [
    "QuadraticNTRWeights",
    "LossWeightsQuad",
    "TRConfig",
    "QuadTrainConfig",
    "TrustRegionState",
    "TrainingFailure",
    "DegenerateRatio",
    "assemble_hessian",
    "hessian_weights",
    "loss_L1",
    "loss_L2",
    "loss_L3",
    "cauchy_decrease",
    "cauchy_decrease_gradient",
    "overall_loss",
    "kkt_residuals",
    "solve_step_quadratic",
    "agreement_ratio",
    "initial_point_set",
    "run_algorithm1",
    "run_newton_tr",
]


class TrainingFailure(ArithmeticError):
    """The overall loss became non-finite during training."""


class DegenerateRatio(ArithmeticError):
    """The predicted model decrease is too small to form the agreement ratio."""


def _tri(n):
    return np.triu_indices(n)


def assemble_hessian(w_h, n):
    """``H`` from upper-triangle weights: off-diagonal ``w_ij``, diagonal ``w_ii / 2``."""
    h = np.zeros((n, n))
    iu, ju = _tri(n)
    h[iu, ju] = w_h
    h[ju, iu] = w_h
    h[np.diag_indices(n)] *= 0.5
    return h


def hessian_weights(h):
    """Inverse of :func:`assemble_hessian`."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    iu, ju = _tri(n)
    w = 0.5 * (h + h.T)[iu, ju].copy()
    w[iu == ju] *= 2.0
    return w


def _matgrad_to_weights(gm):
    """Chain a gradient with respect to symmetric ``H`` to the ``w^H`` weights."""
    n = gm.shape[0]
    iu, ju = _tri(n)
    out = gm[iu, ju] + gm[ju, iu]
    diag = iu == ju
    out[diag] = 0.5 * gm[iu[diag], ju[diag]]
    return out


@dataclass
class QuadraticNTRWeights:
    """Model and step weights; ``w_star = u**2`` keeps the multiplier nonnegative."""

    w_g: np.ndarray
    w_h: np.ndarray
    w_s: np.ndarray
    u: float = 0.0

    @property
    def n(self):
        return self.w_g.size

    @property
    def w_star(self):
        return float(self.u * self.u)

    @property
    def g(self):
        return self.w_g

    @property
    def hessian(self):
        return assemble_hessian(self.w_h, self.n)

    @property
    def s(self):
        return self.w_s

    def pack(self):
        return np.concatenate([self.w_g, self.w_h, self.w_s, [self.u]])

    @classmethod
    def unpack(cls, theta, n):
        m = n * (n + 1) // 2
        return cls(theta[:n].copy(), theta[n:n + m].copy(), theta[n + m:2 * n + m].copy(), float(theta[-1]))

    @classmethod
    def from_parts(cls, g, h, s, w_star=0.0):
        return cls(np.asarray(g, dtype=float).copy(), hessian_weights(h), np.asarray(s, dtype=float).copy(),
                   float(np.sqrt(max(w_star, 0.0))))


@dataclass
class LossWeightsQuad:
    zbar1: float = 1.0
    zbar2: float = 0.0
    z1: float = 1.0
    z2: float = 1.0
    z3: float = 0.0
    zt1: float = 1.0
    zt2: float = 1.0
    zt3: float = 0.0
    c: float = 1.0
    c_tilde: float = 0.0
    c_star: float = 0.1

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not (np.isfinite(v) and v >= 0):
                raise InvalidInputError(f"loss weight {k} must be a nonnegative number")


@dataclass
class QuadTrainConfig:
    """Descent settings for the overall loss.

    A warm start (when given), a data start (model block at the
    least-squares fit, step at rest) and ``restarts`` seeded random starts,
    each running up to ``steps`` projected Gauss-Newton steps; a start stops
    early once the loss falls below ``tol``.
    """

    steps: int = 2000
    restarts: int = 3
    seed: int = 0
    tol: float = 1e-22
    init_scale: float = 0.1


@dataclass
class TRConfig:
    eta1: float = 0.1
    eta2: float = 0.9
    g1: float = 0.5
    g2: float = 2.0
    delta0: float = 1.0
    eps_delta: float = 1e-6
    eps_station: float = 1e-5
    max_iters: int = 500
    seed: int = 0
    budget: Optional[int] = None
    beta: float = 1e-6
    kappa_n: Optional[float] = None
    probes: int = 512
    poised_tol: float = 1e-8
    repair_candidates: int = 16
    tol_kkt: float = 1e-4

    def __post_init__(self):
        if not (0 < self.eta1 <= self.eta2 <= 1):
            raise InvalidInputError("need 0 < eta1 <= eta2 <= 1")
        if not (0 < self.g1 < 1 <= self.g2):
            raise InvalidInputError("need 0 < g1 < 1 <= g2")
        if not (self.delta0 > 0 and self.eps_delta > 0 and self.eps_station >= 0):
            raise InvalidInputError("delta0 and eps_delta must be positive")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be positive")


@dataclass
class TrustRegionState:
    """Iterate, radius and interpolation data.

    ``points[0]`` is always the current iterate ``x``.
    """

    x: np.ndarray
    delta: float
    points: np.ndarray
    values: np.ndarray
    fx: float
    rho: Optional[float] = None
    iter: int = 0
    evals: int = 0
    history: list = field(default_factory=list)
    warm: Optional[QuadraticNTRWeights] = None

    @property
    def point_set(self):
        return BlockedPointSet.from_flat(self.points, self.values)


# ---------------------------------------------------------------- losses


def _fit_design(disp):
    """Rows ``[s_i, features of 1/2 s_i^T H s_i in w^H]`` for displacements ``s_i``."""
    n = disp.shape[1]
    iu, ju = _tri(n)
    quad = disp[:, iu] * disp[:, ju]
    quad = np.where(iu == ju, 0.25 * quad, quad)
    return np.hstack([disp, quad])


def loss_L1(weights, points, values, center, fc, lw):
    """RMSE fit of ``f(x^k) + g.s_i + 1/2 s_i.H s_i`` to ``f(y^i)``, ``s_i = y^i - x^k``, plus the curvature term."""
    disp = np.atleast_2d(points) - np.asarray(center, dtype=float)
    a = _fit_design(disp)
    r = a @ np.concatenate([weights.w_g, weights.w_h]) - (np.asarray(values, dtype=float) - fc)
    val = lw.zbar1 * float(np.sqrt(np.mean(r * r)))
    if lw.zbar2:
        lam = float(jacobi_eigh(weights.hessian)[0][0])
        val += lw.zbar2 * (lam - lw.c) ** 2
    return val


def loss_L2(weights, delta, lw):
    """``z1 |(H + w* I) s + g|^2 + z2 [w* (delta - |s|)]^2 + z3 (lambda_min(H + w* I) - c_tilde)^2``."""
    h = weights.hessian
    w = weights.w_star
    s = weights.w_s
    q = h @ s + w * s + weights.w_g
    val = lw.z1 * float(q @ q) + lw.z2 * (w * (delta - np.linalg.norm(s))) ** 2
    if lw.z3:
        lam = float(jacobi_eigh(h)[0][0]) + w
        val += lw.z3 * (lam - lw.c_tilde) ** 2
    return val


def loss_L3(model_decrease, cauchy_dec, lw):
    """``max(0, (model_decrease - c* cauchy_decrease)^2 - c_tilde)``."""
    return max(0.0, (model_decrease - lw.c_star * cauchy_dec) ** 2 - lw.c_tilde)


def cauchy_decrease(model, delta):
    """Exact decrease along ``-grad m`` to the minimiser inside the ball.

    ``model`` is a :class:`QuadraticModel` or a ``(g, H)`` pair.
    """
    g, h = (model.gradient, model.hessian) if isinstance(model, QuadraticModel) else model
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    gn2 = float(g @ g)
    if gn2 == 0.0:
        return 0.0
    gn = np.sqrt(gn2)
    curv = float(g @ h @ g)
    t_max = delta / gn
    t = min(gn2 / curv, t_max) if curv > 0 else t_max
    return t * gn2 - 0.5 * t * t * curv


def cauchy_decrease_gradient(g, h, delta):
    """Gradients of :func:`cauchy_decrease` with respect to ``g`` and to the matrix ``H``."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    gn2 = float(g @ g)
    n = g.size
    if gn2 == 0.0:
        return np.zeros(n), np.zeros((n, n))
    gn = np.sqrt(gn2)
    hg = h @ g
    curv = float(g @ hg)
    if curv > 0 and gn2 / curv <= delta / gn:
        dg = 2.0 * gn2 * g / curv - gn2 * gn2 * hg / curv**2
        dh = -0.5 * gn2 * gn2 / curv**2 * np.outer(g, g)
    else:
        dg = delta * g / gn - delta**2 * (hg / gn2 - curv * g / gn2**2)
        dh = -0.5 * delta**2 * np.outer(g, g) / gn2
    return dg, dh


def overall_loss(weights, points, values, center, fc, delta, lw=None):
    """``zt1 L1 + zt2 L2 + zt3 L3`` in original units; returns ``(total, (L1, L2, L3))``."""
    lw = LossWeightsQuad() if lw is None else lw
    l1 = loss_L1(weights, points, values, center, fc, lw)
    l2 = loss_L2(weights, delta, lw)
    l3 = 0.0
    if lw.zt3:
        g, h, s = weights.w_g, weights.hessian, weights.w_s
        md = -(float(g @ s) + 0.5 * float(s @ h @ s))
        l3 = loss_L3(md, cauchy_decrease((g, h), delta), lw)
    return lw.zt1 * l1 + lw.zt2 * l2 + lw.zt3 * l3, (l1, l2, l3)


def kkt_residuals(g, h, s, w_star, delta):
    """``(|(H + w I) s + g|, |w (delta - |s|)|, lambda_min(H + w I))``."""
    g = np.asarray(g, dtype=float)
    s = np.asarray(s, dtype=float)
    h = np.asarray(h, dtype=float)
    stat = float(np.linalg.norm(h @ s + w_star * s + g))
    comp = abs(w_star * (delta - np.linalg.norm(s)))
    eig = float(jacobi_eigh(h + w_star * np.eye(g.size))[0][0])
    return stat, comp, eig


class _Problem:
    """Overall loss and its gradient in scaled coordinates (ball of radius ``rad``, unit f spread)."""

    def __init__(self, disp, fdiff, lw, rad=1.0):
        self.rad = rad
        self.n = disp.shape[1]
        self.m = self.n * (self.n + 1) // 2
        self.a = _fit_design(disp)
        self.b = fdiff
        self.lw = lw
        self.p = disp.shape[0]

    def split(self, theta):
        n, m = self.n, self.m
        return theta[:n], theta[n:n + m], theta[n + m:2 * n + m], theta[-1]

    def terms(self, theta, grad=True):
        lw = self.lw
        n = self.n
        g, wh, s, u = self.split(theta)
        w = u * u
        h = assemble_hessian(wh, n)
        gg = np.zeros(n)
        gh = np.zeros((n, n))
        gs = np.zeros(n)
        gw = 0.0
        # L1
        r = self.a @ np.concatenate([g, wh]) - self.b
        rmse = float(np.sqrt(np.mean(r * r)))
        l1 = lw.zbar1 * rmse
        g_fit = np.zeros(n + self.m)
        if rmse > 0:
            g_fit = lw.zbar1 * (self.a.T @ r) / (self.p * rmse)
        lam = None
        if lw.zbar2 or lw.z3:
            lam, vv = min_eigenvalue_gradient(h)
        if lw.zbar2:
            l1 += lw.zbar2 * (lam - lw.c) ** 2
            gh += lw.zt1 * lw.zbar2 * 2.0 * (lam - lw.c) * vv
        # L2
        snorm = float(np.linalg.norm(s))
        q = h @ s + w * s + g
        comp = w * (self.rad - snorm)
        l2 = lw.z1 * float(q @ q) + lw.z2 * comp * comp
        gg += lw.zt2 * 2.0 * lw.z1 * q
        gh += lw.zt2 * 2.0 * lw.z1 * np.outer(q, s)
        gs += lw.zt2 * (2.0 * lw.z1 * (h @ q + w * q))
        gw += lw.zt2 * (2.0 * lw.z1 * float(q @ s) + 2.0 * lw.z2 * comp * (self.rad - snorm))
        if snorm > 0:
            gs += lw.zt2 * (2.0 * lw.z2 * comp * (-w) * s / snorm)
        if lw.z3:
            l2 += lw.z3 * (lam + w - lw.c_tilde) ** 2
            gh += lw.zt2 * lw.z3 * 2.0 * (lam + w - lw.c_tilde) * vv
            gw += lw.zt2 * lw.z3 * 2.0 * (lam + w - lw.c_tilde)
        # L3
        l3 = 0.0
        if lw.zt3:
            md = -(float(g @ s) + 0.5 * float(s @ h @ s))
            cd = cauchy_decrease((g, h), self.rad)
            d = md - lw.c_star * cd
            l3 = max(0.0, d * d - lw.c_tilde)
            if l3 > 0:
                dcg, dch = cauchy_decrease_gradient(g, h, self.rad)
                gg += lw.zt3 * 2.0 * d * (-s - lw.c_star * dcg)
                gh += lw.zt3 * 2.0 * d * (-0.5 * np.outer(s, s) - lw.c_star * dch)
                gs += lw.zt3 * 2.0 * d * (-(g + h @ s))
        total = lw.zt1 * l1 + lw.zt2 * l2 + lw.zt3 * l3
        if not grad:
            return total, (l1, l2, l3)
        gmodel = lw.zt1 * g_fit
        gmodel[:n] += gg
        gmodel[n:] += _matgrad_to_weights(gh)
        gu = 2.0 * u * gw
        return total, (l1, l2, l3), gmodel, np.concatenate([gs, [gu]])


def _project(theta, n, m, rad=1.0):
    s = theta[n + m:2 * n + m]
    nrm = np.linalg.norm(s)
    if nrm > rad:
        theta = theta.copy()
        theta[n + m:2 * n + m] = s * (rad / nrm)
    return theta


def _metric(prob, theta):
    """Gauss-Newton metric of the overall loss.

    The fit term contributes ``A^T A / (p rmse)`` on the model block (the
    curvature of the RMSE away from its residual direction); the optimality
    residuals ``[sqrt(z1) q, sqrt(z2) w*(1 - |s|)]`` contribute ``2 J^T J``
    over all variables, which couples the model and step blocks.
    """
    lw = prob.lw
    n, m = prob.n, prob.m
    nm = n + m
    g, wh, s, u = prob.split(theta)
    h = assemble_hessian(wh, n)
    w = u * u
    r = prob.a @ np.concatenate([g, wh]) - prob.b
    rmse = max(float(np.sqrt(np.mean(r * r))), 1e-300)
    size = 2 * n + m + 1
    metric = np.zeros((size, size))
    metric[:nm, :nm] = lw.zt1 * lw.zbar1 * (prob.a.T @ prob.a) / (prob.p * rmse)
    iu, ju = _tri(n)
    jac = np.zeros((n + 1, size))
    jac[:n, :n] = np.eye(n)
    for k, (i, j) in enumerate(zip(iu, ju)):
        if i == j:
            jac[i, n + k] = 0.5 * s[i]
        else:
            jac[i, n + k] += s[j]
            jac[j, n + k] += s[i]
    jac[:n, nm:nm + n] = h + w * np.eye(n)
    jac[:n, -1] = 2.0 * u * s
    jac[:n] *= np.sqrt(lw.z1)
    snorm = float(np.linalg.norm(s))
    if snorm > 0:
        jac[n, nm:nm + n] = -np.sqrt(lw.z2) * w * s / snorm
    jac[n, -1] = np.sqrt(lw.z2) * 2.0 * u * (prob.rad - snorm)
    metric += 2.0 * lw.zt2 * (jac.T @ jac)
    return metric


def _descend(prob, theta, steps, tol):
    """Projected Gauss-Newton descent on the overall loss with Armijo backtracking.

    The direction is the full gradient preconditioned by :func:`_metric`
    (with a small Levenberg shift; the plain gradient is the fallback).
    After each trial step ``w^s`` is projected onto the unit ball and the
    full overall loss must decrease sufficiently.
    """
    n, m = prob.n, prob.m
    theta = _project(theta, n, m, prob.rad)
    if abs(theta[-1]) < 1e-3:
        # u = 0 is a stationary point of w* = u^2; start just off it
        theta = theta.copy()
        theta[-1] = 1e-3
    f = prob.terms(theta, grad=False)[0]
    recent = []
    for _ in range(steps):
        recent.append(f)
        # a start that has stopped making progress is abandoned; restarts cover local minima
        if len(recent) > 10 and f > recent[-11] * (1.0 - 1e-3):
            break
        if not np.isfinite(f):
            raise TrainingFailure("overall loss is not finite")
        if f <= tol:
            break
        f, _, gm, gsu = prob.terms(theta)
        grad = np.concatenate([gm, gsu])
        metric = _metric(prob, theta)
        # Marquardt shift, per variable: the fit curvature grows like 1/rmse and must not swamp the step block
        sys_m = metric + np.diag(1e-10 * np.diag(metric) + 1e-14)
        try:
            d = -np.linalg.solve(sys_m, grad)
            sv = theta[n + m:2 * n + m]
            if np.linalg.norm(sv) >= prob.rad * (1.0 - 1e-12) and float(d[n + m:2 * n + m] @ sv) > 0:
                # boundary active and the free step points outward: stay on the sphere to first order
                c = np.zeros(grad.size)
                c[n + m:2 * n + m] = sv
                kkt = np.block([[sys_m, c[:, None]], [c[None, :], np.zeros((1, 1))]])
                d = -np.linalg.solve(kkt, np.concatenate([grad, [0.0]]))[:-1]
        except np.linalg.LinAlgError:
            d = -grad
        if not (np.all(np.isfinite(d)) and float(d @ grad) < 0):
            d = -grad
        t = 1.0
        accepted = False
        for _ in range(60):
            trial = _project(theta + t * d, n, m, prob.rad)
            ft = prob.terms(trial, grad=False)[0]
            if ft <= f + 1e-4 * float(grad @ (trial - theta)):
                accepted = True
                break
            t *= 0.5
        if not accepted or ft >= f * (1.0 - 1e-14):
            break
        theta, f = trial, ft
    f, parts = prob.terms(theta, grad=False)
    return theta, f, parts


def solve_step_quadratic(points, values, center, fc, delta, lw=None, train=None, warm=None):
    """Fit the quadratic model and the step by minimising the overall loss.

    Parameters
    ----------
    points, values : interpolation data (rows and ``f`` values)
    center : the iterate ``x^k``; ``fc = f(x^k)``
    delta : trust-region radius
    warm : QuadraticNTRWeights, optional
        Warm start in original units (first restart).

    Returns
    -------
    step : ndarray
    weights : QuadraticNTRWeights in original units
    diagnostics : dict
        ``L1``, ``L2``, ``L3``, ``overall``, the KKT residuals, ``eig``
        (``lambda_min(H + w* I)``) and ``model``.
    """
    lw = LossWeightsQuad() if lw is None else lw
    train = QuadTrainConfig() if train is None else train
    if not delta > 0:
        raise InvalidInputError("delta must be positive")
    center = np.asarray(center, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=float)
    n = center.size
    m = n * (n + 1) // 2
    fs = float(np.max(np.abs(vals - fc))) if vals.size else 0.0
    fs = fs if fs > 0 else 1.0
    # unit length: the radius, or the point spread when the points sit deep inside the ball
    spread = float(np.max(np.linalg.norm(pts - center, axis=1))) if pts.size else 0.0
    unit = min(delta, spread) if spread > 0 else delta
    prob = _Problem((pts - center) / unit, (vals - fc) / fs, lw, rad=delta / unit)
    rng = np.random.default_rng(train.seed)
    starts = []
    if warm is not None:
        starts.append(np.concatenate([warm.w_g * unit / fs, warm.w_h * unit**2 / fs,
                                      warm.w_s / unit, [warm.u * unit / np.sqrt(fs)]]))
    # data start: model block at the least-squares fit, step block at rest; descent still shapes every weight
    fit = np.linalg.lstsq(prob.a, prob.b, rcond=None)[0]
    starts.append(np.concatenate([fit, np.zeros(n), [1e-3]]))
    while len(starts) < max(1, train.restarts) + 1:
        starts.append(train.init_scale * rng.standard_normal(2 * n + m + 1))
    best = None
    for th0 in starts:
        th, fval, parts = _descend(prob, th0, train.steps, train.tol)
        if best is None or fval < best[1]:
            best = (th, fval, parts)
    th, fval, parts = best
    if not np.isfinite(fval):
        raise TrainingFailure("overall loss is not finite")
    ws = QuadraticNTRWeights.unpack(th, n)
    # back to original units
    g = ws.w_g * fs / unit
    h = ws.hessian * fs / unit**2
    s = ws.w_s * unit
    wstar = ws.w_star * fs / unit**2
    nrm = np.linalg.norm(s)
    if nrm > delta:
        s *= delta / nrm
    weights = QuadraticNTRWeights.from_parts(g, h, s, wstar)
    stat, comp, eig = kkt_residuals(g, h, s, wstar, delta)
    model = QuadraticModel(center, fc, g, h)
    l1 = loss_L1(weights, pts, vals, center, fc, lw)
    l2 = loss_L2(weights, delta, lw)
    md = fc - model(center + s)
    l3 = loss_L3(md, cauchy_decrease(model, delta), lw)
    diag = {
        "L1": l1, "L2": l2, "L3": l3, "overall": lw.zt1 * l1 + lw.zt2 * l2 + lw.zt3 * l3,
        "scaled_overall": fval, "kkt_stationarity": stat, "kkt_complementarity": comp,
        "kkt_eigen": eig, "eig": eig, "model": model, "model_decrease": md,
    }
    return s, weights, diag


def agreement_ratio(f_old, f_new, m_old, m_new):
    """``(f_old - f_new) / (m_old - m_new)``; raises :class:`DegenerateRatio` on a vanishing denominator."""
    den = m_old - m_new
    if abs(den) < 1e-14 * (1.0 + abs(f_old)):
        raise DegenerateRatio("predicted decrease is numerically zero")
    return (f_old - f_new) / den


# --------------------------------------------------------------- engine


def initial_point_set(x0, delta):
    """``x0``, ``x0 + delta/2 e_i``, ``x0 + delta e_i``, ``x0 + delta/2 (e_i + e_j)`` (i < j)."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    eye = np.eye(n)
    rows = [x0]
    rows += [x0 + 0.5 * delta * eye[i] for i in range(n)]
    rows += [x0 + delta * eye[i] for i in range(n)]
    rows += [x0 + 0.5 * delta * (eye[i] + eye[j]) for i in range(n) for j in range(i + 1, n)]
    return np.array(rows)


def _scaled_set(points, center, delta):
    return BlockedPointSet.from_flat((points - center) / delta)


def _geometry(state, cfg):
    """Scaled determinant and adequacy of the current set."""
    scaled = _scaled_set(state.points, state.x, state.delta)
    d = poisedness_determinant(scaled)
    poised = abs(d) >= cfg.poised_tol
    adequate = False
    if poised:
        basis = build_newton_basis(scaled, pivot_pool="all")
        poised = basis.complete
    if poised:
        rep = check_adequacy(basis, scaled, np.zeros(state.x.size), 1.0, cfg.kappa_n, cfg.probes, cfg.seed)
        adequate = rep.adequate
    return d, poised, adequate


def _repair(state, obj, cfg):
    """Replace one point to improve the geometry inside the current ball.

    A point outside the ball leaves first (the farthest one), replaced by
    the ball maximiser of its determinant polynomial; otherwise the usual
    Lagrange-based exit rule applies. The iterate itself never leaves.
    """
    n = state.x.size
    scaled = (state.points - state.x) / state.delta
    dist = np.linalg.norm(scaled, axis=1)
    outside = np.flatnonzero(dist > 1.0 + 1e-10)
    basis = quadratic_basis(n)[: scaled.shape[0]]
    if outside.size:
        i = int(outside[np.argmax(dist[outside])])
        c = determinant_polynomials(scaled, basis)[i]
        y, _ = maximize_abs_on_ball(c, np.zeros(n), 1.0, cfg.repair_candidates, cfg.seed + state.iter)
    else:
        cpolys = determinant_polynomials(scaled, basis)
        best = (-1.0, None, None)
        for i in range(1, scaled.shape[0]):
            y, val = maximize_abs_on_ball(cpolys[i], np.zeros(n), 1.0, cfg.repair_candidates, cfg.seed + i)
            cur = abs(float(cpolys[i](scaled[i])))
            if cur >= val:
                y, val = scaled[i], cur
            if val > best[0]:
                best = (val, i, y)
        _, i, y = best
        if np.allclose(y, scaled[i]):
            raise GeometryRepairError("no replacement improves the interpolation determinant")
    new = state.x + state.delta * y
    state.points[i] = new
    state.values[i] = obj(new)


def _run_tr(f, x0, cfg, step_fn, record_extra=None):
    cfg = TRConfig() if cfg is None else cfg
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    obj = f if isinstance(f, CountingObjective) else CountingObjective(f, cfg.budget)
    trace = []
    pts = initial_point_set(x0, cfg.delta0)
    state = None
    terminated = "max_iters"
    message = ""
    try:
        fx = obj(x0)
        vals = np.array([obj(p) for p in pts])
        state = TrustRegionState(x0.copy(), cfg.delta0, pts, vals, fx)
        trace.append(TraceRecord(0, obj.evals, state.x.copy(), fx, state.delta, update="init"))
        for k in range(1, cfg.max_iters + 1):
            state.iter = k
            if state.delta < cfg.eps_delta:
                terminated = "delta"
                break
            d, poised, adequate = _geometry(state, cfg)
            if not poised:
                _repair(state, obj, cfg)
                trace.append(TraceRecord(k, obj.evals, state.x.copy(), state.fx, state.delta,
                                         update="geometry-repair"))
                continue
            step, info = step_fn(state)
            model = info["model"]
            gnorm = float(np.linalg.norm(model.gradient))
            if gnorm <= cfg.eps_station and adequate:
                terminated = "stationarity"
                trace.append(TraceRecord(k, obj.evals, state.x.copy(), state.fx, state.delta,
                                         update="stationary", **_kkt_fields(info)))
                break
            x_new = state.x + step
            md = state.fx - model(x_new)
            rho = None
            accepted = False
            if np.linalg.norm(step) > 0 and md > 0:
                f_new = obj(x_new)
                try:
                    rho = agreement_ratio(state.fx, f_new, state.fx, model(x_new))
                except DegenerateRatio:
                    rho = None
                accepted = rho is not None and rho >= cfg.eta1 and f_new < state.fx
            rec = TraceRecord(k, 0, state.x, state.fx, state.delta, rho=rho,
                              step_norm=float(np.linalg.norm(step)), model_decrease=md, accepted=accepted,
                              decrease_ok=bool(md >= cfg.beta * float(step @ step)) if accepted else None,
                              **_kkt_fields(info))
            if accepted:
                scaled = (state.points - state.x) / state.delta
                out = select_exit_point_success(BlockedPointSet.from_flat(scaled), step / state.delta,
                                                center=np.zeros(x0.size))
                if out == 0:
                    # the old iterate stays; drop the next best instead
                    out = _second_exit(scaled, step / state.delta)
                state.points[out] = state.points[0]
                state.values[out] = state.values[0]
                state.points[0] = x_new
                state.values[0] = f_new
                state.x = x_new.copy()
                state.fx = f_new
                state.delta *= cfg.g2
                rec.update = "success-swap"
            elif not adequate:
                _repair(state, obj, cfg)
                rec.update = "geometry-repair"
            else:
                state.delta *= cfg.g1
                rec.update = "shrink"
            state.warm = info.get("weights")
            state.rho = rho
            rec.x = state.x.copy()
            rec.f = state.fx
            rec.delta = state.delta
            rec.evals = obj.evals
            trace.append(rec)
    except BudgetExceeded as exc:
        terminated = "budget"
        message = str(exc)
    except ObjectiveError as exc:
        terminated = "failure"
        message = str(exc)
    if state is None:
        x, fx, delta = x0, np.nan, cfg.delta0
        if obj.log:
            fx = obj.log[0][1]
    else:
        x, fx, delta = state.x, state.fx, state.delta
    iters = len(trace) - 1 if trace else 0
    close_trace(trace, obj.evals, x, fx, delta)
    return OptimizationResult(x.copy(), float(fx), obj.evals, iters, terminated, delta, trace, message)


def _second_exit(scaled, xplus):
    """Best exit index among points other than the iterate (index 0)."""
    from .interp_geometry import lagrange_polynomials

    lag = lagrange_polynomials(scaled)
    vals = np.abs([float(L(xplus)) for L in lag])
    vals[0] = -np.inf
    dist = np.linalg.norm(scaled, axis=1)
    top = vals.max()
    tied = np.flatnonzero(vals >= top - 1e-12 * max(1.0, top))
    return int(tied[np.argmax(dist[tied])])


def _kkt_fields(info):
    return {
        "kkt_stationarity": info.get("kkt_stationarity"),
        "kkt_complementarity": info.get("kkt_complementarity"),
        "kkt_eigen": info.get("kkt_eigen"),
    }


def run_algorithm1(f, x0, cfg=None, lw=None, train=None):
    """Trust-region loop with the loss-trained quadratic model and step.

    Returns
    -------
    OptimizationResult
        ``terminated_by`` is ``delta``, ``stationarity``, ``max_iters``,
        ``budget`` or ``failure``.
    """
    lw = LossWeightsQuad() if lw is None else lw
    train = QuadTrainConfig() if train is None else train

    def step_fn(state):
        s, weights, diag = solve_step_quadratic(state.points, state.values, state.x, state.fx, state.delta,
                                                lw, replace(train, seed=train.seed + state.iter), state.warm)
        diag["weights"] = weights
        return s, diag

    return _run_tr(f, x0, cfg, step_fn)


def run_newton_tr(f, x0, cfg=None):
    """Classical baseline: Newton-polynomial interpolation model and exact ball step."""

    def step_fn(state):
        # interpolate in coordinates scaled to the unit ball, where the pivot threshold is meaningful
        pset = BlockedPointSet.from_flat((state.points - state.x) / state.delta, state.values)
        basis = build_newton_basis(pset, pivot_pool="all")
        scaled = assemble_model(pset, basis, generalized_finite_differences(pset, basis), np.zeros(state.x.size))
        model = QuadraticModel(state.x, state.fx, scaled.gradient / state.delta, scaled.hessian / state.delta**2)
        s, w = solve_ball_quadratic(model.gradient, model.hessian, state.delta)
        stat, comp, eig = kkt_residuals(model.gradient, model.hessian, s, w, state.delta)
        return s, {"model": model, "kkt_stationarity": stat, "kkt_complementarity": comp, "kkt_eigen": eig}

    return _run_tr(f, x0, cfg, step_fn)
