"""Zero set of H = x1^2 p1 + x2^2 p2 on the 2-torus cosphere grid.

The set {H = 0} is not a manifold at the origin fiber.  The script marks
the sampled zero set, checks invariance under the Hamiltonian flow, and
reports how many directions survive above each base point.
"""
import numpy as np

from goperators.hamflow import FlowMap
from goperators.phasespace import TorusGrid, check_invariance, quadratic_example, transverse_zero_set

grid = TorusGrid(2, 32, 32)
H = quadratic_example()
ts = transverse_zero_set([H], grid, 1e-9)
print("marked cells:", ts.count, "of", ts.mask.size)
print("invariance under the t = 0.1 flow:", check_invariance(ts, FlowMap(H, 0.1)))
per_point = ts.mask.reshape(grid.n_points ** 2, -1).sum(axis=1)
print("directions per base point: max", per_point.max(), " histogram",
      {int(k): int(v) for k, v in zip(*np.unique(per_point, return_counts=True))})
