"""Self-checks behind ``neuraltr check``: one ``(name, status, detail)`` row per check.

Each check compares a library routine with an independent route (finite
differences, a cofactor expansion, a closed form, a direct substitution).
Status is ``pass``, ``fail`` or ``info`` (reported, never failing).
"""

import itertools
import math

import numpy as np

from .interp_geometry import BlockedPointSet, build_newton_basis
from .linalg_small import determinant, jacobi_eigh
from .neural_model import (
    closed_form_input_gradient,
    closed_form_input_hessian,
    forward,
    hessian_bound,
    init_net,
    input_gradient,
    input_hessian,
    weight_gradients,
)
from .tr_blackbox import loss_delta, loss_delta_derivative
from .tr_quadratic import QuadTrainConfig, solve_step_quadratic


def _row(name, ok, detail):
    return name, "pass" if ok else "fail", detail


def _nets(seed):
    rng = np.random.default_rng(seed)
    deep = init_net((3, 5, 4, 1), seed=seed, bias=True)
    deep = deep.with_params(rng.normal(0.0, 1.0, deep.n_params))
    shallow = init_net((3, 6, 1), seed=seed + 1)
    shallow = shallow.with_params(rng.normal(0.0, 1.0, shallow.n_params))
    xs = rng.uniform(-1.0, 1.0, (5, 3))
    return deep, shallow, xs


def check_input_gradient(seed):
    deep, _, xs = _nets(seed)
    h = 1e-6
    err = 0.0
    for x in xs:
        fd = np.array([(forward(deep, x + h * e) - forward(deep, x - h * e)) / (2 * h) for e in np.eye(3)])
        err = max(err, float(np.max(np.abs(fd - input_gradient(deep, x)))))
    return _row("input_gradient_fd", err < 1e-6, f"max_err={err:.3e}")


def check_input_hessian(seed):
    deep, _, xs = _nets(seed)
    h = 1e-5
    err = 0.0
    for x in xs:
        fd = np.array([(input_gradient(deep, x + h * e) - input_gradient(deep, x - h * e)) / (2 * h)
                       for e in np.eye(3)])
        err = max(err, float(np.max(np.abs(fd - input_hessian(deep, x)))))
    return _row("input_hessian_fd", err < 1e-6, f"max_err={err:.3e}")


def check_closed_forms(seed):
    _, shallow, xs = _nets(seed)
    err = 0.0
    for x in xs:
        err = max(err, float(np.max(np.abs(closed_form_input_gradient(shallow, x) - input_gradient(shallow, x)))))
        err = max(err, float(np.max(np.abs(closed_form_input_hessian(shallow, x) - input_hessian(shallow, x)))))
    return _row("closed_form_match", err < 1e-12, f"max_err={err:.3e}")


def check_hessian_bound(seed):
    deep, _, _ = _nets(seed)
    rng = np.random.default_rng(seed + 7)
    bound = hessian_bound(deep)
    worst = max(float(np.max(np.abs(input_hessian(deep, x)))) for x in rng.uniform(-5, 5, (200, 3)))
    return _row("hessian_bound", worst <= bound, f"max_entry={worst:.3e} bound={bound:.3e}")


def check_weight_gradient(seed):
    deep, _, xs = _nets(seed)
    t = np.sin(xs.sum(axis=1))
    g = weight_gradients(deep, (xs, t)).flat()
    theta = deep.flat_params()
    h = 1e-6

    def loss(th):
        r = forward(deep.with_params(th), xs) - t
        return float(np.mean(r * r))

    fd = np.array([(loss(theta + h * e) - loss(theta - h * e)) / (2 * h) for e in np.eye(theta.size)])
    err = float(np.max(np.abs(fd - g)))
    return _row("weight_gradient_fd", err < 1e-6, f"max_err={err:.3e}")


def check_jacobi(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(6, 6))
    a = a + a.T
    w, v = jacobi_eigh(a)
    res = float(np.max(np.abs(a @ v - v * w)))
    orth = float(np.max(np.abs(v.T @ v - np.eye(6))))
    return _row("jacobi_eigh", res < 1e-10 and orth < 1e-12, f"residual={res:.3e} orthogonality={orth:.3e}")


def _cofactor(m):
    if m.shape[0] == 1:
        return m[0, 0]
    return sum((-1) ** j * m[0, j] * _cofactor(np.delete(m[1:], j, axis=1)) for j in range(m.shape[0]))


def check_determinant(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(5, 5))
    d, c = determinant(a), _cofactor(a)
    err = abs(d - c) / max(1.0, abs(c))
    return _row("determinant_cofactor", err < 1e-12, f"rel_err={err:.3e}")


def check_kronecker(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (6, 2))
    basis = build_newton_basis(BlockedPointSet.from_flat(pts), pivot_pool="all")
    k = basis.kronecker_matrix()
    # N_a(pivot_b) must be 1 on the diagonal and 0 for every pivot of the same or a lower block
    blocks = [l for l, polys in enumerate(basis.polys) for _ in polys]
    err = 0.0
    for a, b in itertools.product(range(len(blocks)), repeat=2):
        if blocks[b] <= blocks[a]:
            err = max(err, abs(k[a, b] - (1.0 if a == b else 0.0)))
    return _row("newton_kronecker", basis.complete and err < 1e-10, f"max_err={err:.3e}")


def check_kkt_quadratic(seed):
    rng = np.random.default_rng(seed)
    n = 3
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    h = q @ np.diag(rng.uniform(0.5, 5.0, n)) @ q.T
    g = rng.normal(size=n)
    pts = rng.uniform(-1, 1, (12, n))
    vals = pts @ g + 0.5 * np.einsum("ij,jk,ik->i", pts, h, pts)
    newton = -np.linalg.solve(h, g)
    delta = 10.0 * float(np.linalg.norm(newton))
    s, w, _ = solve_step_quadratic(pts, vals, np.zeros(n), 0.0, delta, train=QuadTrainConfig(seed=seed))
    err = float(np.linalg.norm(s - newton) / np.linalg.norm(newton))
    return _row("kkt_quadratic", err < 1e-3 and w.w_star <= 1e-4, f"rel_step_err={err:.3e} w_star={w.w_star:.3e}")


def check_seam(delta=1.0):
    eps = 1e-6
    left, right = loss_delta(delta - eps, delta), loss_delta(delta + eps, delta)
    val_ok = abs(right - left) < 1e-10
    d_left, d_right = loss_delta_derivative(delta - eps, delta), loss_delta_derivative(delta + eps, delta)
    slope_ok = abs(d_right - d_left) < 1e-5
    # one-sided second derivatives at the seam: 0 inside, (1 + delta) outside
    c_right = (loss_delta_derivative(delta + 2 * eps, delta) - loss_delta_derivative(delta + eps, delta)) / eps
    return [
        _row("l_delta_seam_value", val_ok, f"jump={abs(right - left):.3e}"),
        _row("l_delta_seam_slope", slope_ok, f"jump={abs(d_right - d_left):.3e}"),
        ("l_delta_seam_curvature", "info", f"jump={c_right:.3e} (second derivative is not continuous)"),
    ]


def run_checks(seed=0, force_fail=False):
    rows = [
        check_input_gradient(seed),
        check_input_hessian(seed),
        check_closed_forms(seed),
        check_hessian_bound(seed),
        check_weight_gradient(seed),
        check_jacobi(seed),
        check_determinant(seed),
        check_kronecker(seed),
        check_kkt_quadratic(seed),
    ]
    rows.extend(check_seam())
    if force_fail:
        rows.append(("forced_failure", "fail", "requested by --force-fail"))
    return rows
