"""Small feed-forward sigmoid networks used as trust-region surrogates.

Hidden layers apply the logistic sigmoid, the output layer is linear. By
default there are no bias terms. A net may carry an affine input map and an
output scaling (``m(x) = y_shift + y_scale * raw((x - x_shift) / x_scale)``)
whose effect is folded into every derivative by the chain rule.

Input derivatives are propagated forward (value, Jacobian and Hessian of the
pre-activations, layer by layer), batched over points. Weight gradients use
reverse accumulation.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .interp_geometry import ball_sample
from .linalg_small import InvalidInputError

__all__ = [
    "FeedForwardNet",
    "TrainConfig",
    "TrainReport",
    "ModelAccuracy",
    "TrainingError",
    "SIGMOID_D2_SUP",
    "sigmoid",
    "init_net",
    "forward",
    "weight_gradients",
    "input_gradient",
    "input_hessian",
    "input_derivatives",
    "closed_form_input_gradient",
    "closed_form_input_hessian",
    "train_regression",
    "train_regression_detailed",
    "build_hypercube_approximator",
    "model_accuracy",
    "validity_check",
    "dumps_net",
    "loads_net",
    "save_net",
    "load_net",
]

# sup |sigma''| = 1 / (6 sqrt 3), attained at sigma = (3 -+ sqrt 3) / 6
SIGMOID_D2_SUP = 1.0 / (6.0 * np.sqrt(3.0))


class TrainingError(ArithmeticError):
    """Training produced a non-finite loss."""


def sigmoid(a):
    return expit(a)


def _step(a):
    return (np.asarray(a) >= 0.0).astype(float)


@dataclass(frozen=True, eq=False)
class FeedForwardNet:
    """Layered weights ``weights[r]`` of shape ``(m_{r+1}, m_r)``.

    Parameters
    ----------
    layer_sizes : tuple of int
        ``(n, m_1, ..., m_l, 1)``.
    weights : list of ndarray
    biases : list of ndarray or None
        ``None`` for the bias-free form.
    activation : {"sigmoid", "step"}
        Hidden-layer nonlinearity; ``step`` is only used by the constructive
        hypercube nets and has no useful derivatives.
    x_shift, x_scale, y_shift, y_scale
        Input and output standardization.
    """

    layer_sizes: tuple
    weights: list
    biases: Optional[list] = None
    activation: str = "sigmoid"
    x_shift: Optional[np.ndarray] = None
    x_scale: float = 1.0
    y_shift: float = 0.0
    y_scale: float = 1.0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or sizes[-1] != 1 or min(sizes) < 1:
            raise InvalidInputError(f"bad layer sizes {sizes}")
        ws = [np.array(w, dtype=float) for w in self.weights]
        if len(ws) != len(sizes) - 1:
            raise InvalidInputError("one weight matrix per layer transition is required")
        for r, w in enumerate(ws):
            if w.shape != (sizes[r + 1], sizes[r]):
                raise InvalidInputError(f"layer {r + 1} weights have shape {w.shape}, expected {(sizes[r + 1], sizes[r])}")
            if not np.all(np.isfinite(w)):
                raise InvalidInputError("weights must be finite")
        bs = None
        if self.biases is not None:
            bs = [np.array(b, dtype=float).reshape(-1) for b in self.biases]
            if [b.size for b in bs] != list(sizes[1:]) or not all(np.all(np.isfinite(b)) for b in bs):
                raise InvalidInputError("biases must be finite and match the layer sizes")
        if self.activation not in ("sigmoid", "step"):
            raise InvalidInputError(f"unknown activation {self.activation!r}")
        xs = np.zeros(sizes[0]) if self.x_shift is None else np.array(self.x_shift, dtype=float).reshape(sizes[0])
        if not (self.x_scale > 0 and self.y_scale > 0):
            raise InvalidInputError("scales must be positive")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        object.__setattr__(self, "x_shift", xs)
        object.__setattr__(self, "x_scale", float(self.x_scale))
        object.__setattr__(self, "y_shift", float(self.y_shift))
        object.__setattr__(self, "y_scale", float(self.y_scale))

    @property
    def n(self):
        return self.layer_sizes[0]

    @property
    def has_bias(self):
        return self.biases is not None

    @property
    def n_params(self):
        return sum(w.size for w in self.weights) + (sum(b.size for b in self.biases) if self.has_bias else 0)

    def flat_params(self):
        parts = []
        for r, w in enumerate(self.weights):
            parts.append(w.ravel())
            if self.has_bias:
                parts.append(self.biases[r])
        return np.concatenate(parts)

    def with_params(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.n_params:
            raise InvalidInputError("parameter vector has the wrong length")
        ws, bs, k = [], [], 0
        for w in self.weights:
            ws.append(theta[k:k + w.size].reshape(w.shape))
            k += w.size
            if self.has_bias:
                bs.append(theta[k:k + w.shape[0]].copy())
                k += w.shape[0]
        return replace(self, weights=ws, biases=bs if self.has_bias else None)

    def __call__(self, x):
        return forward(self, x)


def init_net(layer_sizes, seed=0, bias=False, x_shift=None, x_scale=1.0, y_shift=0.0, y_scale=1.0):
    """Weights uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` from a seeded generator."""
    rng = np.random.default_rng(seed)
    sizes = tuple(int(s) for s in layer_sizes)
    ws, bs = [], []
    for r in range(len(sizes) - 1):
        lim = 1.0 / np.sqrt(sizes[r])
        ws.append(rng.uniform(-lim, lim, size=(sizes[r + 1], sizes[r])))
        if bias:
            bs.append(rng.uniform(-lim, lim, size=sizes[r + 1]))
    return FeedForwardNet(sizes, ws, bs if bias else None, "sigmoid", x_shift, x_scale, y_shift, y_scale)


def _as_batch(net, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    if xb.shape[1] != net.n:
        raise InvalidInputError(f"input has dimension {xb.shape[1]}, net expects {net.n}")
    return xb, single


def _raw_layers(net, u):
    """Pre-activations and activations of every layer for standardized inputs ``u``."""
    act = sigmoid if net.activation == "sigmoid" else _step
    zs = [u]
    pre = []
    z = u
    last = len(net.weights) - 1
    for r, w in enumerate(net.weights):
        a = z @ w.T
        if net.has_bias:
            a = a + net.biases[r]
        pre.append(a)
        z = a if r == last else act(a)
        zs.append(z)
    return pre, zs


def forward(net, x):
    """Net output at one point (returns float) or a batch of rows (returns array)."""
    xb, single = _as_batch(net, x)
    u = (xb - net.x_shift) / net.x_scale
    _, zs = _raw_layers(net, u)
    out = net.y_shift + net.y_scale * zs[-1][:, 0]
    return float(out[0]) if single else out


@dataclass
class NetGradient:
    weights: list
    biases: Optional[list]

    def flat(self):
        parts = []
        for r, w in enumerate(self.weights):
            parts.append(w.ravel())
            if self.biases is not None:
                parts.append(self.biases[r])
        return np.concatenate(parts)


def _loss_and_grad(net, xb, t, sample_weight=None, loss="mse"):
    u = (xb - net.x_shift) / net.x_scale
    pre, zs = _raw_layers(net, u)
    out = net.y_shift + net.y_scale * zs[-1][:, 0]
    r = out - t
    if sample_weight is None:
        sample_weight = np.ones_like(t)
    if loss == "mse":
        wts = sample_weight / np.sum(sample_weight)
    elif loss == "sse":
        wts = sample_weight
    else:
        raise InvalidInputError(f"unknown loss {loss!r}")
    value = float(np.sum(wts * r * r))
    delta = (2.0 * wts * r * net.y_scale)[:, None]
    gw = [None] * len(net.weights)
    gb = [None] * len(net.weights) if net.has_bias else None
    for k in range(len(net.weights) - 1, -1, -1):
        gw[k] = delta.T @ zs[k]
        if net.has_bias:
            gb[k] = delta.sum(axis=0)
        if k > 0:
            z = zs[k]
            delta = (delta @ net.weights[k]) * z * (1.0 - z)
    return value, NetGradient(gw, gb)


def weight_gradients(net, batch, loss="mse", sample_weight=None):
    """Gradient of the batch loss with respect to every weight (and bias).

    Parameters
    ----------
    batch : sequence of (x, target) pairs, or a tuple ``(X, t)`` of arrays
    loss : {"mse", "sse"}
        Weighted mean or plain sum of squared residuals.

    Returns
    -------
    NetGradient
        Arrays shaped like ``net.weights`` / ``net.biases``.
    """
    xb, t = _unpack_batch(net, batch)
    if xb.shape[0] == 0:
        raise InvalidInputError("empty batch")
    return _loss_and_grad(net, xb, t, sample_weight, loss)[1]


def _unpack_batch(net, batch):
    if isinstance(batch, tuple) and len(batch) == 2 and np.ndim(batch[1]) == 1 and np.ndim(batch[0]) == 2:
        xb, t = np.asarray(batch[0], dtype=float), np.asarray(batch[1], dtype=float)
    else:
        pairs = list(batch)
        xb = np.array([np.asarray(p[0], dtype=float).reshape(-1) for p in pairs]).reshape(len(pairs), -1)
        t = np.array([float(p[1]) for p in pairs])
    if xb.size and xb.shape[1] != net.n:
        raise InvalidInputError("batch dimension mismatch")
    return xb, t


def input_derivatives(net, x, order=2):
    """Value, input gradient and (if ``order == 2``) input Hessian, batched.

    Forward propagation of first and second derivatives of every
    pre-activation with respect to the standardized input, then the chain
    rule through the input/output maps.

    Returns
    -------
    value : ndarray (B,)
    grad : ndarray (B, n)
    hess : ndarray (B, n, n) or None
    """
    if net.activation != "sigmoid":
        raise InvalidInputError("input derivatives need the sigmoid activation")
    xb, _ = _as_batch(net, x)
    bsz, n = xb.shape
    z = (xb - net.x_shift) / net.x_scale
    dz = np.broadcast_to(np.eye(n), (bsz, n, n))
    d2z = np.zeros((bsz, n, n, n)) if order == 2 else None
    last = len(net.weights) - 1
    for r, w in enumerate(net.weights):
        a = z @ w.T
        if net.has_bias:
            a = a + net.biases[r]
        da = np.einsum("jk,bkn->bjn", w, dz)
        d2a = np.einsum("jk,bkmn->bjmn", w, d2z) if order == 2 else None
        if r == last:
            z, dz, d2z = a, da, d2a
            break
        s = sigmoid(a)
        s1 = s * (1.0 - s)
        s2 = s1 * (1.0 - 2.0 * s)
        z = s
        dz = s1[:, :, None] * da
        if order == 2:
            d2z = s2[:, :, None, None] * da[:, :, :, None] * da[:, :, None, :] + s1[:, :, None, None] * d2a
    value = net.y_shift + net.y_scale * z[:, 0]
    grad = net.y_scale / net.x_scale * dz[:, 0, :]
    hess = None
    if order == 2:
        hess = net.y_scale / net.x_scale**2 * d2z[:, 0, :, :]
        hess = 0.5 * (hess + np.swapaxes(hess, 1, 2))
    return value, grad, hess


def input_gradient(net, x):
    """``grad_x m(x)`` at a single point."""
    x = np.asarray(x, dtype=float)
    return input_derivatives(net, x.reshape(1, -1), order=1)[1][0]


def hessian_bound(net):
    """Certified entrywise bound on ``|d^2 m / dx_r dx_s|`` valid at every ``x``.

    Propagates bounds on the first and second input derivatives of every
    pre-activation using ``sup sigma' = 1/4`` and ``sup |sigma''| = 1/(6 sqrt 3)``.
    """
    n = net.n
    d = np.eye(n)
    e = np.zeros((n, n, n))
    last = len(net.weights) - 1
    for r, w in enumerate(net.weights):
        aw = np.abs(w)
        da = aw @ d
        d2a = np.einsum("jk,kmn->jmn", aw, e)
        if r == last:
            d, e = da, d2a
            break
        d = 0.25 * da
        e = SIGMOID_D2_SUP * da[:, :, None] * da[:, None, :] + 0.25 * d2a
    return float(np.max(e[0]) * net.y_scale / net.x_scale**2)


def input_hessian(net, x, with_bound=False):
    """``Hessian_x m(x)`` at a single point, exactly symmetric.

    With ``with_bound=True`` returns ``(H, kappa_hm)`` where ``kappa_hm``
    bounds every entry of the Hessian anywhere in input space.
    """
    x = np.asarray(x, dtype=float)
    h = input_derivatives(net, x.reshape(1, -1), order=2)[2][0]
    if with_bound:
        return h, hessian_bound(net)
    return h


def _check_single_hidden(net):
    if len(net.weights) != 2 or net.activation != "sigmoid":
        raise InvalidInputError("closed forms apply to one-hidden-layer sigmoid nets")


def closed_form_input_gradient(net, x):
    """``dm/dx_r = sum_j w2_j w1_jr (sigma_j - sigma_j^2)`` for one hidden layer."""
    _check_single_hidden(net)
    u = (np.asarray(x, dtype=float) - net.x_shift) / net.x_scale
    w1, w2 = net.weights
    a = w1 @ u + (net.biases[0] if net.has_bias else 0.0)
    s = sigmoid(a)
    g = np.zeros(net.n)
    for r in range(net.n):
        g[r] = np.sum(w2[0] * w1[:, r] * (s - s * s))
    return net.y_scale / net.x_scale * g


def closed_form_input_hessian(net, x):
    """``sum_j w2_j w1_jr w1_js [sigma(1-sigma) - 2 sigma^2 (1-sigma)]`` for one hidden layer."""
    _check_single_hidden(net)
    u = (np.asarray(x, dtype=float) - net.x_shift) / net.x_scale
    w1, w2 = net.weights
    a = w1 @ u + (net.biases[0] if net.has_bias else 0.0)
    s = sigmoid(a)
    c = s * (1.0 - s) - 2.0 * s * s * (1.0 - s)
    h = np.zeros((net.n, net.n))
    for r in range(net.n):
        for q in range(net.n):
            h[r, q] = np.sum(w2[0] * w1[:, r] * w1[:, q] * c)
    return net.y_scale / net.x_scale**2 * h


@dataclass
class TrainConfig:
    """Training settings.

    ``optimizer`` is ``"gd"`` (full-batch gradient descent with optional
    momentum) or ``"lbfgs"``. Training runs in chunks of ``check_every``
    epochs; with a holdout, the weights with the lowest test loss are kept
    and training stops after ``patience`` chunks without improvement.
    """

    epochs: int = 2000
    learning_rate: float = 0.05
    seed: int = 0
    split_fraction: float = 0.8
    batch: str = "full"
    momentum: float = 0.9
    hidden: tuple = (8,)
    bias: bool = False
    optimizer: str = "gd"
    standardize: bool = True
    check_every: int = 100
    patience: int = 0

    def __post_init__(self):
        if not 0.0 < self.split_fraction <= 1.0:
            raise InvalidInputError("split_fraction must lie in (0, 1]")
        if self.epochs < 1 or self.learning_rate <= 0:
            raise InvalidInputError("epochs and learning_rate must be positive")
        if self.batch != "full":
            raise InvalidInputError("only full-batch training is supported")
        if self.optimizer not in ("gd", "lbfgs"):
            raise InvalidInputError(f"unknown optimizer {self.optimizer!r}")
        self.hidden = tuple(int(h) for h in self.hidden)


@dataclass
class TrainReport:
    net: FeedForwardNet
    train_loss: float
    test_loss: float
    train_idx: np.ndarray
    test_idx: np.ndarray
    gradient_indices: set = field(default_factory=set)
    epochs_run: int = 0

    @property
    def leakage(self):
        """Test indices that reached a training-gradient computation (should be empty)."""
        return sorted(self.gradient_indices & set(self.test_idx.tolist()))


def split_indices(p, fraction, seed):
    """Seeded shuffle, first ``round(fraction * p)`` (at least one) indices train."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(p)
    k = min(p, max(1, int(round(fraction * p))))
    return np.sort(perm[:k]), np.sort(perm[k:])


def train_regression_detailed(points, cfg=None, values=None, sample_weight=None, x_shift=None,
                              x_scale=None, init=None, split=None, test_weight=None):
    """Fit a net to ``(x, f(x))`` pairs with a seeded holdout split.

    Parameters
    ----------
    points : sequence of (x, target) pairs, or an ``(p, n)`` array with ``values``
    cfg : TrainConfig
    sample_weight : array, optional
        Per-point weights of the mean squared error.
    x_shift, x_scale : optional
        Input standardization (e.g. trust-region center and radius);
        defaults to the training mean and the largest distance from it.
    init : FeedForwardNet, optional
        Warm start (its standardization is replaced).
    split : (train_idx, test_idx), optional
        Explicit split instead of the seeded shuffle.
    test_weight : array, optional
        Per-point weights of the held-out error (defaults to ``sample_weight``).
        The held-out loss is the weighted sum ``sum w r^2`` when given, the
        weighted mean otherwise.
    """
    cfg = TrainConfig() if cfg is None else cfg
    if values is None:
        pairs = list(points)
        xb = np.array([np.asarray(p[0], dtype=float).reshape(-1) for p in pairs])
        t = np.array([float(p[1]) for p in pairs])
    else:
        xb = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.asarray(values, dtype=float).reshape(-1)
    p = xb.shape[0]
    if p < 2:
        raise InvalidInputError("training needs at least two points")
    if not (np.all(np.isfinite(xb)) and np.all(np.isfinite(t))):
        raise InvalidInputError("training data must be finite")
    sw = np.ones(p) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    tw = None if test_weight is None else np.asarray(test_weight, dtype=float)
    tr, te = split_indices(p, cfg.split_fraction, cfg.seed) if split is None else (np.asarray(split[0]), np.asarray(split[1]))
    tr = np.asarray(tr, dtype=int)
    te = np.asarray(te, dtype=int)
    xt, tt, wt = xb[tr], t[tr], sw[tr]
    n = xb.shape[1]
    if cfg.standardize:
        xs = xt.mean(axis=0) if x_shift is None else np.asarray(x_shift, dtype=float)
        sc = float(np.max(np.linalg.norm(xt - xs, axis=1))) if x_scale is None else float(x_scale)
        sc = sc if sc > 0 else 1.0
        ys = float(np.average(tt, weights=wt))
        yd = float(np.sqrt(np.average((tt - ys) ** 2, weights=wt)))
        yd = yd if yd > 1e-12 * max(1.0, abs(ys)) else 1.0
    else:
        xs, sc, ys, yd = np.zeros(n), 1.0, 0.0, 1.0
    sizes = (n, *cfg.hidden, 1)
    if init is not None and init.layer_sizes == sizes:
        net = replace(init, x_shift=xs, x_scale=sc, y_shift=ys, y_scale=yd)
    else:
        net = init_net(sizes, cfg.seed, cfg.bias, xs, sc, ys, yd)
    seen = set()

    def objective(theta, rows=tr):
        # record exactly the rows the gradient reads
        seen.update(rows.tolist())
        cand = net.with_params(theta)
        val, g = _loss_and_grad(cand, xb[rows], t[rows], sw[rows], "mse")
        # gradient in standardized target units keeps step sizes scale free
        return val / yd**2, g.flat() / yd**2

    def test_loss(theta):
        if te.size == 0:
            return np.nan
        cand = net.with_params(theta)
        r = forward(cand, xb[te]) - t[te]
        if tw is not None:
            return float(np.sum(tw[te] * r * r))
        return float(np.average(r * r, weights=sw[te]))

    theta = net.flat_params()
    best_theta, best_test = theta.copy(), test_loss(theta)
    stale = 0
    vel = np.zeros_like(theta)
    done = 0
    chunk = max(1, min(cfg.check_every, cfg.epochs))
    while done < cfg.epochs:
        steps = min(chunk, cfg.epochs - done)
        if cfg.optimizer == "gd":
            for _ in range(steps):
                val, g = objective(theta)
                if not np.isfinite(val):
                    raise TrainingError("training loss became non-finite")
                vel = cfg.momentum * vel - cfg.learning_rate * g
                theta = theta + vel
        else:
            res = minimize(objective, theta, jac=True, method="L-BFGS-B",
                           options={"maxiter": steps, "gtol": 1e-12, "ftol": 1e-15})
            theta = res.x
        done += steps
        if not np.all(np.isfinite(theta)):
            raise TrainingError("training produced non-finite weights")
        tl = test_loss(theta)
        if te.size == 0 or cfg.patience <= 0:
            best_theta, best_test = theta.copy(), tl
            continue
        if tl < best_test:
            best_theta, best_test, stale = theta.copy(), tl, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    net = net.with_params(best_theta)
    r = forward(net, xt) - tt
    train_loss = float(np.average(r * r, weights=wt))
    return TrainReport(net, train_loss, test_loss(best_theta), tr, te, seen, done)


def train_regression(points, cfg=None, **kwargs):
    """Train on a holdout split; returns ``(net, train_loss, test_loss)``.

    ``test_loss`` is ``nan`` when ``split_fraction`` leaves no test points.
    """
    rep = train_regression_detailed(points, cfg, **kwargs)
    return rep.net, rep.train_loss, rep.test_loss


def build_hypercube_approximator(f_values, cubes, activation="step", sharpness=50.0):
    """Explicit two-hidden-layer net approximating ``f`` by its values at cube centers.

    Each cube ``[a, b]`` gets ``2n`` first-layer neurons ``s(x_k - a_k)``
    and ``s(x_k - b_k)``; a second-layer neuron sums ``s(x_k - a_k) -
    s(x_k - b_k)`` over ``k`` with bias ``-n + 1/2``, firing only when all
    ``n`` edge tests pass; the linear output weights are ``f(c_i)``. With
    the sigmoid activation ``s(t) = sigma(sharpness t)``.

    Parameters
    ----------
    f_values : sequence of float, or mapping center-tuple -> float
    cubes : sequence of (a, b) corner pairs
    """
    cubes = [(np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float))) for a, b in cubes]
    if not cubes:
        raise InvalidInputError("at least one cube is required")
    n = cubes[0][0].size
    edges = {round(float(e), 12) for a, b in cubes for e in (b - a)}
    if len(edges) != 1 or min(edges) <= 0:
        raise InvalidInputError("cubes must be axis-aligned with equal positive edges")
    if isinstance(f_values, dict):
        vals = []
        for a, b in cubes:
            c = tuple(float(v) for v in 0.5 * (a + b))
            key = next((k for k in f_values if np.allclose(np.atleast_1d(k), c, rtol=0, atol=1e-12)), None)
            if key is None:
                raise InvalidInputError(f"no value for cube center {c}")
            vals.append(float(f_values[key]))
    else:
        vals = [float(v) for v in f_values]
    if len(vals) != len(cubes):
        raise InvalidInputError("one value per cube is required")
    m = len(cubes)
    scale = 1.0 if activation == "step" else float(sharpness)
    w1 = np.zeros((2 * n * m, n))
    b1 = np.zeros(2 * n * m)
    w2 = np.zeros((m, 2 * n * m))
    b2 = np.full(m, (-n + 0.5) * scale)
    for i, (a, b) in enumerate(cubes):
        for k in range(n):
            lo, hi = 2 * n * i + 2 * k, 2 * n * i + 2 * k + 1
            w1[lo, k] = w1[hi, k] = scale
            b1[lo] = -a[k] * scale
            b1[hi] = -b[k] * scale
            w2[i, lo] = scale
            w2[i, hi] = -scale
    w3 = np.array(vals).reshape(1, m)
    act = "step" if activation == "step" else "sigmoid"
    return FeedForwardNet((n, 2 * n * m, m, 1), [w1, w2, w3], [b1, b2, np.zeros(1)], act)


@dataclass
class ModelAccuracy:
    q: float
    value: float
    n_samples: int


def model_accuracy(model, f, center, radius, q=2.0, n_samples=4096, seed=0):
    """Monte-Carlo ``(mean |f - m|^q)^(1/q)`` under the uniform law on the ball."""
    if n_samples < 1 or q <= 0:
        raise InvalidInputError("n_samples must be >= 1 and q > 0")
    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_samples, center.size))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.random(n_samples) ** (1.0 / center.size)
    xs = center + radius * r[:, None] * g
    err = np.array([abs(f(x) - float(model(x))) for x in xs])
    return ModelAccuracy(q, float(np.mean(err**q) ** (1.0 / q)), n_samples)


def validity_check(model, f, center, radius, kappa, n_samples=256, seed=0):
    """True iff the largest sampled ``|f - m|`` over the ball is at most ``kappa radius^2``."""
    if not kappa > 0:
        raise InvalidInputError("kappa must be positive")
    xs = np.vstack([np.asarray(center, dtype=float), ball_sample(center, radius, n_samples, seed)])
    err = max(abs(f(x) - float(model(x))) for x in xs)
    return bool(err <= kappa * radius**2)


def dumps_net(net):
    """Plain-text form; floats at 17 significant digits so reloading is exact."""
    g = lambda v: f"{float(v):.17g}"
    lines = [
        "ffnet " + " ".join(str(s) for s in net.layer_sizes),
        f"bias {int(net.has_bias)}",
        f"activation {net.activation}",
        "x_shift " + " ".join(g(v) for v in net.x_shift),
        f"x_scale {g(net.x_scale)}",
        f"y_shift {g(net.y_shift)}",
        f"y_scale {g(net.y_scale)}",
    ]
    for r, w in enumerate(net.weights):
        lines.append(f"layer {r + 1}")
        lines.extend(" ".join(g(v) for v in row) for row in w)
        if net.has_bias:
            lines.append(" ".join(g(v) for v in net.biases[r]))
    return "\n".join(lines) + "\n"


def loads_net(text):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        head = lines[0].split()
        if head[0] != "ffnet":
            raise ValueError("missing ffnet header")
        sizes = tuple(int(v) for v in head[1:])
        kv = {}
        for ln in lines[1:7]:
            key, *rest = ln.split()
            kv[key] = rest
        has_bias = kv["bias"][0] == "1"
        k = 7
        ws, bs = [], []
        for r in range(len(sizes) - 1):
            if lines[k].split() != ["layer", str(r + 1)]:
                raise ValueError(f"expected layer {r + 1}")
            k += 1
            rows = [[float(v) for v in lines[k + i].split()] for i in range(sizes[r + 1])]
            k += sizes[r + 1]
            ws.append(np.array(rows).reshape(sizes[r + 1], sizes[r]))
            if has_bias:
                bs.append(np.array([float(v) for v in lines[k].split()]))
                k += 1
        return FeedForwardNet(
            sizes, ws, bs if has_bias else None, kv["activation"][0],
            np.array([float(v) for v in kv["x_shift"]]), float(kv["x_scale"][0]),
            float(kv["y_shift"][0]), float(kv["y_scale"][0]),
        )
    except (IndexError, KeyError, ValueError) as exc:
        raise InvalidInputError(f"malformed net file: {exc}") from None


def save_net(net, path):
    with open(path, "w") as fh:
        fh.write(dumps_net(net))


def load_net(path):
    with open(path) as fh:
        return loads_net(fh.read())
