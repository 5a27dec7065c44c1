"""Numerical index of the quantized winding symbol.

The symbol is e^{ix} on positive frequencies and 1 on negative ones, so the
operator raises positive modes by one.  The index is read off from singular
values below a tolerance separated by a spectral gap, on three grid sizes.
"""
from goperators.fredholm import numerical_index, winding_symbol
from goperators.phasespace import TorusGrid
from goperators.quantize import quantize_symbol

sizes = (64, 128, 256)
ops = [quantize_symbol(winding_symbol(TorusGrid(1, n))) for n in sizes]
rep = numerical_index(ops)
print("verdict:", rep.verdict, " index:", rep.index)
for n, k, c, gap in zip(sizes, rep.kernel_dims, rep.cokernel_dims, rep.gap_ratios):
    print(f"n = {n:4d}  dim ker = {k}  dim coker = {c}  gap ratio = {gap:.2e}")

sq = [D @ D for D in ops]
print("index of the square:", numerical_index(sq).index)
