"""An explicit two-hidden-layer net that is piecewise constant on a cube grid.

Each cube gets 2n edge-test neurons, a second-layer neuron fires only when
all n edge tests pass, and the output weights are the function values at
the cube centers. For a Lipschitz function the sup error shrinks linearly
with the edge length.
"""

import numpy as np

from neuraltr.neural_model import build_hypercube_approximator, forward

x = np.linspace(0, 1, 2001)[1:-1]
print(" edge    sup error  (f(x) = x on [0, 1])")
prev = None
for m in (2, 4, 8, 16, 32):
    l = 1.0 / m
    cubes = [((i * l,), ((i + 1) * l,)) for i in range(m)]
    net = build_hypercube_approximator([(i + 0.5) * l for i in range(m)], cubes)
    err = np.abs(forward(net, x[:, None]) - x).max()
    ratio = "" if prev is None else f"ratio {err / prev:.3f}"
    print(f" 1/{m:<3d}  {err:.5f}   {ratio}")
    prev = err

# two dimensions, sigmoid edges: a smooth approximation of the same construction
f = lambda p: np.sin(3 * p[0]) * np.cos(2 * p[1])
m = 6
l = 1.0 / m
cubes, vals = [], []
for i in range(m):
    for j in range(m):
        a = np.array([i * l, j * l])
        cubes.append((a, a + l))
        vals.append(f(a + l / 2))
rng = np.random.default_rng(0)
pts = rng.uniform(0, 1, (2000, 2))
for act in ("step", "sigmoid"):
    net = build_hypercube_approximator(vals, cubes, activation=act, sharpness=400.0)
    err = np.abs(forward(net, pts) - np.array([f(p) for p in pts])).max()
    print(f"2-D grid 6x6, {act:7s} activation: sup error {err:.3f}")
