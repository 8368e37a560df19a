import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from neuraltr.linalg_small import InvalidInputError
from neuraltr.neural_model import (
    SIGMOID_D2_SUP,
    FeedForwardNet,
    TrainConfig,
    build_hypercube_approximator,
    closed_form_input_gradient,
    closed_form_input_hessian,
    dumps_net,
    forward,
    hessian_bound,
    init_net,
    input_derivatives,
    input_gradient,
    input_hessian,
    load_net,
    loads_net,
    model_accuracy,
    save_net,
    sigmoid,
    train_regression,
    train_regression_detailed,
    validity_check,
    weight_gradients,
)

seeds = st.integers(0, 2**31 - 1)


def random_net(seed, n=None, layers=None, bias=None):
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, 6))
    layers = layers or int(rng.integers(1, 3))
    hidden = tuple(int(rng.integers(1, 9)) for _ in range(layers))
    bias = bool(rng.integers(2)) if bias is None else bias
    net = init_net((n, *hidden, 1), seed=seed, bias=bias, x_shift=rng.normal(size=n),
                   x_scale=float(rng.uniform(0.5, 2)), y_shift=float(rng.normal()), y_scale=float(rng.uniform(0.5, 2)))
    return net.with_params(rng.normal(0, 1.5, net.n_params)), rng


def fd_gradient(f, x, h):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


@given(seeds)
def test_input_gradient_matches_finite_differences(seed):
    net, rng = random_net(seed)
    x = rng.normal(size=net.n)
    fd = fd_gradient(lambda y: forward(net, y), x, 1e-6)
    g = input_gradient(net, x)
    assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(fd))


@given(seeds)
def test_input_hessian_matches_differenced_gradient(seed):
    net, rng = random_net(seed)
    x = rng.normal(size=net.n)
    fd = np.array([(input_gradient(net, x + 1e-5 * e) - input_gradient(net, x - 1e-5 * e)) / 2e-5
                   for e in np.eye(net.n)])
    h = input_hessian(net, x)
    assert np.array_equal(h, h.T)
    assert np.linalg.norm(h - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


@given(seeds)
def test_closed_forms_match_generic_path(seed):
    net, rng = random_net(seed, layers=1)
    x = rng.normal(size=net.n)
    assert np.allclose(closed_form_input_gradient(net, x), input_gradient(net, x), rtol=0, atol=1e-12)
    assert np.allclose(closed_form_input_hessian(net, x), input_hessian(net, x), rtol=0, atol=1e-12)


def test_closed_forms_refuse_deep_nets():
    net, _ = random_net(0, layers=2)
    with pytest.raises(InvalidInputError):
        closed_form_input_gradient(net, np.zeros(net.n))


@given(seeds)
def test_hessian_bound_holds_everywhere(seed):
    net, rng = random_net(seed)
    bound = hessian_bound(net)
    xs = net.x_shift + net.x_scale * rng.normal(0, 4, (200, net.n))
    _, _, hs = input_derivatives(net, xs)
    assert np.abs(hs).max() <= bound * (1 + 1e-12)


def test_sigmoid_second_derivative_supremum():
    a = np.linspace(-10, 10, 200001)
    s = sigmoid(a)
    assert np.max(np.abs(s * (1 - s) * (1 - 2 * s))) == pytest.approx(SIGMOID_D2_SUP, rel=1e-8)


@given(seeds)
def test_weight_gradient_matches_finite_differences(seed):
    net, rng = random_net(seed)
    xs = rng.normal(size=(7, net.n))
    t = rng.normal(size=7)
    w = rng.uniform(0.1, 1.0, 7)
    g = weight_gradients(net, (xs, t), sample_weight=w).flat()
    theta = net.flat_params()

    def loss(th):
        r = forward(net.with_params(th), xs) - t
        return float(np.sum(w * r * r) / np.sum(w))

    fd = np.array([(loss(theta + 1e-6 * e) - loss(theta - 1e-6 * e)) / 2e-6 for e in np.eye(theta.size)])
    assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


def test_weight_gradients_accepts_pairs_and_rejects_empty():
    net, _ = random_net(1, n=2)
    pairs = [(np.array([0.1, 0.2]), 1.0), (np.array([0.3, -0.1]), 0.0)]
    a = weight_gradients(net, pairs).flat()
    b = weight_gradients(net, (np.array([p[0] for p in pairs]), np.array([1.0, 0.0]))).flat()
    assert np.array_equal(a, b)
    with pytest.raises(InvalidInputError):
        weight_gradients(net, (np.zeros((0, 2)), np.zeros(0)))


def test_forward_single_and_batch_agree():
    net, rng = random_net(5)
    xs = rng.normal(size=(4, net.n))
    assert np.allclose(forward(net, xs), [forward(net, x) for x in xs])
    with pytest.raises(InvalidInputError):
        forward(net, np.zeros(net.n + 1))


def test_net_validation():
    with pytest.raises(InvalidInputError):
        FeedForwardNet((2, 3, 2), [np.zeros((3, 2)), np.zeros((2, 3))])
    with pytest.raises(InvalidInputError):
        FeedForwardNet((2, 1), [np.zeros((1, 3))])
    with pytest.raises(InvalidInputError):
        FeedForwardNet((2, 1), [np.full((1, 2), np.inf)])


@pytest.mark.parametrize("optimizer", ["gd", "lbfgs"])
def test_training_fits_a_smooth_function(optimizer):
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (60, 2))
    y = np.sin(x[:, 0]) + x[:, 1] ** 2
    cfg = TrainConfig(epochs=400 if optimizer == "lbfgs" else 3000, optimizer=optimizer, hidden=(10,), bias=True,
                      learning_rate=0.02, seed=1)
    net, train_loss, test_loss = train_regression(x, cfg, values=y)
    assert train_loss < 0.01 * np.var(y)
    assert test_loss < 0.05 * np.var(y)


def test_training_never_touches_held_out_rows():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, (30, 2))
    y = x[:, 0] - x[:, 1] ** 2
    cfg = TrainConfig(epochs=200, optimizer="lbfgs", hidden=(6,), bias=True, seed=4)
    rep = train_regression_detailed(x, cfg, values=y)
    assert rep.leakage == []
    assert rep.gradient_indices == set(rep.train_idx.tolist())
    # independent route: held-out targets cannot influence the trained weights
    y2 = y.copy()
    y2[rep.test_idx] += 100.0
    rep2 = train_regression_detailed(x, cfg, values=y2)
    assert np.array_equal(rep.net.flat_params(), rep2.net.flat_params())


def test_training_is_deterministic():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, (20, 3))
    y = x.sum(axis=1)
    cfg = TrainConfig(epochs=100, seed=7)
    a = train_regression(x, cfg, values=y)[0]
    b = train_regression(x, cfg, values=y)[0]
    assert np.array_equal(a.flat_params(), b.flat_params())


def test_training_input_validation():
    with pytest.raises(InvalidInputError):
        train_regression(np.zeros((1, 2)), values=np.zeros(1))
    with pytest.raises(InvalidInputError):
        train_regression(np.array([[0.0], [np.nan]]), values=np.zeros(2))
    with pytest.raises(InvalidInputError):
        TrainConfig(split_fraction=0.0)


@given(seeds)
def test_text_roundtrip_is_exact(seed):
    net, rng = random_net(seed)
    back = loads_net(dumps_net(net))
    x = rng.normal(size=(3, net.n))
    assert np.array_equal(forward(back, x), forward(net, x))


def test_file_roundtrip_and_bad_text(tmp_path):
    net, _ = random_net(9)
    path = tmp_path / "net.txt"
    save_net(net, path)
    assert np.array_equal(load_net(path).flat_params(), net.flat_params())
    with pytest.raises(InvalidInputError):
        loads_net("nonsense")


def test_hypercube_net_returns_cell_values():
    cubes = [((0.0, 0.0), (0.5, 0.5)), ((0.5, 0.0), (1.0, 0.5)), ((0.0, 0.5), (0.5, 1.0)), ((0.5, 0.5), (1.0, 1.0))]
    vals = [1.0, 2.0, 3.0, 4.0]
    net = build_hypercube_approximator(vals, cubes)
    pts = np.array([[0.2, 0.3], [0.7, 0.1], [0.1, 0.9], [0.8, 0.8]])
    assert np.array_equal(forward(net, pts), vals)
    smooth = build_hypercube_approximator(vals, cubes, activation="sigmoid", sharpness=200.0)
    assert np.allclose(forward(smooth, pts), vals, atol=1e-3)
    with pytest.raises(InvalidInputError):
        build_hypercube_approximator([1.0], [((0.0,), (1.0,)), ((1.0,), (1.5,))])


def test_accuracy_and_validity():
    net, _ = random_net(11, n=2)
    f = lambda x: forward(net, x)
    assert model_accuracy(net, f, [0.0, 0.0], 1.0).value == 0.0
    shifted = lambda x: forward(net, x) + 0.1
    assert model_accuracy(net, shifted, [0.0, 0.0], 1.0).value == pytest.approx(0.1)
    assert validity_check(net, shifted, [0.0, 0.0], 1.0, kappa=0.2)
    assert not validity_check(net, shifted, [0.0, 0.0], 0.1, kappa=0.2)
