"""Newton fundamental polynomials on three small point sets.

1. A six-point grid: the block sweep in listed order gives 1, 2x1, 2x2,
   2x1^2 - x1, 4x1x2, 2x2^2 - x2.
2. A set where the listed-order sweep with the initial basis
   1, x1, x2, x1^2, x2^2, x1x2 finds no pivot for the second quadratic
   polynomial, although the set itself is poised (D = 24).
3. The interpolation model of (x1 - 2)^4 + (x2 - 1)^3 + exp(x1 + x2) on
   the integer grid, checked against the function at every point.
"""

from pathlib import Path

import numpy as np

from neuraltr.interp_geometry import (
    BlockedPointSet,
    build_newton_basis,
    parse_monomials,
    poisedness_determinant,
    read_point_set,
)
from neuraltr.newton_model import assemble_model, generalized_finite_differences
from neuraltr.problems import get_problem

DATA = Path(__file__).parent / "data"

print("== grid set, listed order")
pts = read_point_set(str(DATA / "example1.txt"))
basis = build_newton_basis(pts, paper_order=True)
for l, polys in enumerate(basis.polys):
    for i, q in enumerate(polys):
        print(f"  N_{i + 1}^[{l}] = {q}")
print("  N(pivot) table (lower-block entries vanish):")
print(np.round(basis.kronecker_matrix(), 12))

print("\n== second set, listed order, basis 1, x1, x2, x1^2, x2^2, x1x2")
pts = read_point_set(str(DATA / "example2.txt"))
monos = parse_monomials("1,x1,x2,x1^2,x2^2,x1*x2", 2)
basis = build_newton_basis(pts, paper_order=True, initial_basis=monos)
print(f"  complete={basis.complete} failed at {basis.failed_label}")
print(f"  D = {poisedness_determinant(pts, monos):.6g}  (nonzero: a different pivot order succeeds)")
basis = build_newton_basis(pts)
print(f"  largest-pivot order: complete={basis.complete}")

print("\n== interpolation model of a smooth function on the integer grid")
f = get_problem("example3")
grid = [[[0, 0]], [[1, 0], [0, 1]], [[2, 0], [1, 1], [0, 2]]]
pts = BlockedPointSet(grid, [[f(y) for y in np.atleast_2d(b)] for b in grid])
basis = build_newton_basis(pts, paper_order=True)
lam = generalized_finite_differences(pts, basis)
model = assemble_model(pts, basis, lam)
c = model.to_monomial().coeffs
e = np.e
print("  grouped coefficients over 1, x1, x2, (x1^2 - x1), x1x2, (x2^2 - x2):")
for name, got, closed in [
    ("1", c[0], 16.0),
    ("x1", c[1] + c[3], e - 16),
    ("x2", c[2] + c[5], e),
    ("x1^2 - x1", c[3], (e * e - 2 * e + 15) / 2),
    ("x1x2", c[4], e * e - 2 * e + 1),
    ("x2^2 - x2", c[5], (e * e - 2 * e + 1) / 2),
]:
    print(f"    {name:10s} {got: .12f}   closed form {closed: .12f}")
print("  residuals at the six points:", np.abs(model(pts.points) - pts.flat_values).max())
