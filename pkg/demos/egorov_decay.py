"""Egorov transport for the |p| flow on the circle.

Quantizes the time-t flow of |p|, conjugates the quantization of a smooth
symbol, and compares with the quantization of the transported symbol on
frequency bands |xi| >= K.  The residual falls as K grows.
"""
import numpy as np

from goperators.acceptance import analytic_symbol
from goperators.hamflow import FlowMap
from goperators.phasespace import TorusGrid, abs_p
from goperators.quantize import egorov_residual, quantize_canonical

grid = TorusGrid(1, 256)
g = FlowMap(abs_p(1), 0.1)
phi = quantize_canonical(g, grid)
a = analytic_symbol(grid)

print(" K   residual")
for K in (1, 2, 4, 8, 16, 32):
    print(f"{K:3d}  {egorov_residual(phi, a, g, K):.3e}")

# the quantized flow is the Fourier multiplier exp(-i t |xi|)
xi = grid.frequencies[:, 0]
F = np.fft.fft(np.eye(grid.n_points), axis=0, norm="ortho")
diag = np.diag(F @ phi.matrix @ F.conj().T)
print("max |diag - exp(-0.1 i |xi|)| =", np.max(np.abs(diag - np.exp(-0.1j * np.abs(xi)))))
