"""Trust-region runs whose quadratic model and step come from one trained loss.

The trained engine fits the model to the interpolation data and drives the
step to satisfy the subproblem optimality conditions at the same time. The
classical engine interpolates with Newton polynomials and solves the ball
subproblem exactly. Both start from the same point on each problem.
"""

import numpy as np

from neuraltr import TRConfig, get_problem, run_algorithm1, run_newton_tr
from neuraltr.tr_quadratic import solve_step_quadratic

for name, x0 in [("sphere2", np.full(2, 2.0)), ("rosenbrock", np.array([-1.2, 1.0])),
                 ("quad_illcond", np.array([1.0, 1.0]))]:
    f = get_problem(name)
    print(f"== {name} from {x0}")
    for label, runner in [("trained", run_algorithm1), ("classical", run_newton_tr)]:
        res = runner(f, x0, TRConfig(max_iters=200))
        print(f"  {label:9s} f={res.f:.3e} x={np.round(res.x, 6)} evals={res.evals} "
              f"iters={res.iters} stop={res.terminated_by}")
    acc = [r for r in res.trace if r.accepted]
    print(f"  classical accepted steps: {len(acc)}, last radius {res.delta:.2e}")

# one step in isolation: the trained step and its optimality residuals
rng = np.random.default_rng(0)
h = np.array([[3.0, 1.0], [1.0, 2.0]])
g = np.array([1.0, -1.0])
pts = rng.uniform(-1, 1, (8, 2))
vals = pts @ g + 0.5 * np.einsum("ij,jk,ik->i", pts, h, pts)
for delta in (2.0, 0.1):
    s, w, diag = solve_step_quadratic(pts, vals, np.zeros(2), 0.0, delta)
    print(f"\nradius {delta}: step {np.round(s, 8)} |s|={np.linalg.norm(s):.6f} w*={w.w_star:.3e}")
    print(f"  stationarity {diag['kkt_stationarity']:.1e} complementarity {diag['kkt_complementarity']:.1e} "
          f"lambda_min(H + w* I) {diag['kkt_eigen']:.3f}")
print("Newton step:", np.round(-np.linalg.solve(h, g), 8))
