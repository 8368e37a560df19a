"""Small dense linear algebra used throughout the package.

Everything here works on dense ``float64`` arrays of modest size (a few
dozen rows at most): interpolation matrices, model Hessians, network input
Hessians.  Symmetric eigenproblems are solved by cyclic Jacobi rotations,
determinants and linear solves by Gaussian elimination with partial
pivoting.
"""

import numpy as np

__all__ = [
    "InvalidInputError",
    "SingularMatrixError",
    "jacobi_eigh",
    "smallest_eigenpair",
    "min_eigenvalue_gradient",
    "determinant",
    "leading_principal_minors",
    "solve_linear",
]

PIVOT_RTOL = 1e-12


class InvalidInputError(ValueError):
    """Raised for non-finite, non-square or otherwise malformed input."""


class SingularMatrixError(ArithmeticError):
    """Raised when elimination meets a pivot below the relative tolerance."""


def _as_square(m, name="m"):
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def jacobi_eigh(m, tol=1e-12, max_sweeps=100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Symmetric matrix. Only the symmetric part ``(m + m.T) / 2`` is used.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm drops below
        ``tol * ||m||_F``.
    max_sweeps : int
        Safety cap on the number of full sweeps.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Ascending.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns, ``eigenvectors[:, k]`` pairs with
        ``eigenvalues[k]``.
    """
    a = _as_square(m)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    target = tol * scale
    for _ in range(max_sweeps):
        # summed directly: ||a||^2 - ||diag a||^2 cancels and stops the sweeps early
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    # deterministic sign: largest-magnitude component positive
    for k in range(n):
        i = np.argmax(np.abs(v[:, k]) - 1e-12 * np.arange(n))
        if v[i, k] < 0:
            v[:, k] = -v[:, k]
    return w, v


def smallest_eigenpair(m):
    """Algebraically smallest eigenvalue of a symmetric matrix and a unit eigenvector."""
    w, v = jacobi_eigh(m)
    return float(w[0]), v[:, 0]


def min_eigenvalue_gradient(m, gap=1e-9):
    """Smallest eigenvalue and its (sub)gradient with respect to the matrix entries.

    For a simple smallest eigenvalue with unit eigenvector ``v`` the gradient
    is ``v v^T``. When other eigenvalues lie within ``gap`` of the smallest
    one, the average of ``v_k v_k^T`` over that cluster is returned instead.
    """
    w, v = jacobi_eigh(m)
    cluster = np.abs(w - w[0]) <= gap * max(1.0, abs(w[0]))
    vs = v[:, cluster]
    grad = vs @ vs.T / vs.shape[1]
    return float(w[0]), grad


def _lu_partial(a):
    """In-place LU with partial pivoting; returns (lu, perm, sign, min_rel_pivot)."""
    n = a.shape[0]
    perm = np.arange(n)
    sign = 1.0
    row_scale = np.max(np.abs(a), axis=1)
    row_scale[row_scale == 0.0] = 1.0
    min_rel = np.inf
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            perm[[k, piv]] = perm[[piv, k]]
            row_scale[[k, piv]] = row_scale[[piv, k]]
            sign = -sign
        pivot = a[k, k]
        min_rel = min(min_rel, abs(pivot) / row_scale[k])
        if pivot == 0.0:
            return a, perm, 0.0, 0.0
        if k + 1 < n:
            factors = a[k + 1:, k] / pivot
            a[k + 1:, k] = factors
            a[k + 1:, k + 1:] -= np.outer(factors, a[k, k + 1:])
    return a, perm, sign, min_rel


def determinant(m):
    """Determinant of a square matrix by pivoted Gaussian elimination."""
    a = _as_square(m)
    lu, _, sign, _ = _lu_partial(a.copy())
    if sign == 0.0:
        return 0.0
    return float(sign * np.prod(np.diag(lu)))


def leading_principal_minors(m):
    """Determinants of the top-left ``i x i`` blocks, ``i = 1..n``."""
    a = _as_square(m)
    return np.array([determinant(a[:i, :i]) for i in range(1, a.shape[0] + 1)])


def solve_linear(a, b):
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides. Raises
    :class:`SingularMatrixError` when a pivot falls below ``1e-12`` times
    the scale of its (original) row.
    """
    lu = _as_square(a, "a")
    rhs = np.array(b, dtype=float)
    if rhs.shape[0] != lu.shape[0]:
        raise InvalidInputError(f"right-hand side has {rhs.shape[0]} rows, matrix has {lu.shape[0]}")
    if not np.all(np.isfinite(rhs)):
        raise InvalidInputError("right-hand side has non-finite entries")
    lu, perm, sign, min_rel = _lu_partial(lu.copy())
    if sign == 0.0 or min_rel < PIVOT_RTOL:
        raise SingularMatrixError(f"matrix is singular to working precision (relative pivot {min_rel:.3e})")
    n = lu.shape[0]
    y = rhs[perm].copy()
    for k in range(n):
        y[k + 1:] -= np.multiply.outer(lu[k + 1:, k], y[k])
    for k in range(n - 1, -1, -1):
        y[k] = (y[k] - lu[k, k + 1:] @ y[k + 1:]) / lu[k, k]
    return y
