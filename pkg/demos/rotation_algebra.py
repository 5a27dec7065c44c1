"""Rotation algebra: invertibility of 1 + c U for an irrational rotation.

Trajectory symbols of the crossed-product element are checked on growing
finite sections.  |c| < 1 stays uniformly invertible; c = -1 degenerates.
"""
import numpy as np

from goperators.acceptance import GOLDEN
from goperators.crossed import CrossedElement, GroupModel, finite_section_invertibility, symbol_inverse
from goperators.fredholm import default_bases
from goperators.phasespace import HomogeneousSymbol, TorusGrid

grid = TorusGrid(1, 128)
group = GroupModel.rotation(0.2 * np.pi * GOLDEN)
bases = default_bases(grid, 8)
windows = [8, 16, 32, 64]

for c in (0.5, 0.9, -1.0):
    x = CrossedElement(grid, {1: HomogeneousSymbol.constant(grid, c)}, 1.0)
    r = finite_section_invertibility(x, group, bases, windows)
    print(f"c = {c:+.1f}  verdict = {r.verdict:10s}  sigma_min by window:",
          " ".join(f"{s:.2e}" for s in r.sigma_min.min(axis=0)))

x = CrossedElement(grid, {1: HomogeneousSymbol.constant(grid, 0.5)}, 1.0)
y, res = symbol_inverse(x, group, support_cap=12)
print("truncated Neumann inverse: support", sorted(y.coeffs), "residuals", res)
