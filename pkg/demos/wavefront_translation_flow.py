"""Wavefront estimate for an operator averaged along a translation flow.

The unit plus a smooth average of translations x -> x + t over |t| <= 1/4
is assembled as a matrix; its kernel's wavefront is estimated with windowed
FFTs and compared with the prediction from the group action.
"""
import numpy as np

from goperators.acceptance import analytic_symbol, smooth_bump
from goperators.crossed import CrossedElement, GroupModel
from goperators.microlocal import containment_report, kernel_of, predicted_wavefront, wavefront_estimate
from goperators.phasespace import TorusGrid, linear_hamiltonian
from goperators.quantize import assemble_G_operator, flow_representation

grid = TorusGrid(1, 128)
group = GroupModel.flow(linear_hamiltonian([1.0]), 0.0125, 80)
elt = CrossedElement.from_profile(grid, group, smooth_bump(0.25), analytic_symbol(grid), 1.0)
D = assemble_G_operator(elt, flow_representation(grid, group), group)

est = wavefront_estimate(kernel_of(D), 8, 0.1)
pred = predicted_wavefront(elt, group, None, stride=est.stride)
rep = containment_report(est, pred, 2)
print("estimated cells:", est.count, " predicted cells:", pred.count)
print("containment:", {k: rep[k] for k in ("pass", "outside_cells", "outside_mass_fraction")})
print("offsets seen:", sorted({int((c2 - c) % est.cells_per_axis) for c, c2, _, _ in est.cells()})[:12])
print("smooth part norm:", np.linalg.norm(D.matrix - np.eye(grid.n_points)))
