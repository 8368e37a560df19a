"""Exact minimisation of a quadratic over a Euclidean ball.

Used by the geometry code (maximising Lagrange polynomials) and by the
classical Newton-interpolation baseline. Eigendecomposition plus a 1-D
secular-equation root find; the hard case is handled explicitly.
"""

import numpy as np
from scipy.optimize import brentq

from .linalg_small import jacobi_eigh


def solve_ball_quadratic(g, h, delta):
    """Global minimiser of ``g.s + 0.5 s.H s`` subject to ``||s|| <= delta``.

    Returns
    -------
    s : ndarray
        The minimising step.
    multiplier : float
        The Lagrange multiplier ``w >= 0`` with ``(H + w I) s = -g``.
    """
    g = np.asarray(g, dtype=float)
    h = 0.5 * (np.asarray(h, dtype=float) + np.asarray(h, dtype=float).T)
    n = g.size
    if delta <= 0:
        return np.zeros(n), 0.0
    lam, q = jacobi_eigh(h)
    gt = q.T @ g
    lam_min = lam[0]
    gnorm = np.linalg.norm(g)
    scale = max(np.max(np.abs(lam)), gnorm / delta, 1e-300)

    def step(w):
        return -gt / (lam + w)

    if lam_min > 1e-14 * scale:
        s_newton = step(0.0)
        if np.linalg.norm(s_newton) <= delta:
            return q @ s_newton, 0.0

    w_lo = max(0.0, -lam_min)
    # hard case: gradient has (numerically) no component in the bottom eigenspace
    bottom = np.abs(lam - lam_min) <= 1e-12 * scale
    if np.all(np.abs(gt[bottom]) <= 1e-12 * max(gnorm, 1e-300)) or gnorm == 0.0:
        w = w_lo
        st = np.zeros(n)
        top = ~bottom
        st[top] = -gt[top] / (lam[top] + w)
        rem = delta**2 - st @ st
        if rem >= 0.0:
            k = int(np.flatnonzero(bottom)[0])
            st[k] += np.sqrt(rem)
            return q @ st, w

    def secular(w):
        return np.linalg.norm(step(w)) - delta

    lo = w_lo
    # tiny offset keeps the pole out of the bracket
    eps = 1e-15 * max(1.0, abs(lo))
    while secular(lo + eps) <= 0.0 and eps < 1.0:
        eps *= 10.0
    lo = lo + eps
    hi = max(lo, w_lo + gnorm / delta) + 1.0
    while secular(hi) > 0.0:
        hi *= 2.0
    if secular(lo) <= 0.0:
        w = lo
    else:
        w = brentq(secular, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    st = step(w)
    st *= delta / np.linalg.norm(st)
    return q @ st, w
