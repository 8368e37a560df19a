"""A black-box trust-region run on a nonsmooth function.

Each iteration samples the trust region, trains a small sigmoid net on a
holdout split and searches for a step with a child loss that penalises
leaving the region, too little model decrease, a non-stationary model and
poor model/objective agreement. The run stops when a sampled Clarke
stationarity proxy is nonnegative.
"""

from collections import Counter

import numpy as np

from neuraltr import BlackboxConfig, clarke_stationarity_proxy, get_problem, run_algorithm2

f = get_problem("l1norm")
res = run_algorithm2(f, np.array([1.0, 1.0]), BlackboxConfig(budget=1000))
print(f"final x={res.x} |x|_1={np.abs(res.x).sum():.2e} evals={res.evals} stop={res.terminated_by}")
print("updates:", dict(Counter(r.update for r in res.trace)))
print("held-out indices that reached training:", res.extra["leakage"])
print(f"Clarke proxy at the end: {clarke_stationarity_proxy(f, res.x, 1e-2, 64):.3f}")
print("\n iter  evals        f        delta      rho   train_mse  test_mse")
for r in res.trace[:: max(1, len(res.trace) // 15)]:
    rho = "" if r.rho is None else f"{r.rho:8.3f}"
    tr = "" if r.train_mse is None else f"{r.train_mse:9.2e}"
    te = "" if r.test_mse is None else f"{r.test_mse:9.2e}"
    print(f"{r.iter:5d} {r.evals:6d} {r.f:10.3e} {r.delta:10.3e} {rho:>8s} {tr:>9s} {te:>9s}")
