"""Finite-section Fredholm experiments on grid operators.

A square section of an operator on a finite grid always has index zero, so
kernels are searched among band-limited vectors: with ``P_B`` the projector
onto frequencies ``|xi|_inf < N/4`` the report counts small singular values
of the tall matrices ``D P_B`` and ``D* P_B``.  Kernels and cokernels of
elliptic operators are smooth, so they are captured once the band is wide
enough; a visible spectral gap is required before a number is reported.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .crossed import (CrossedElement, GroupModel, finite_section_invertibility,
                      symbol_inverse)
from .errors import GOperatorError, InversionError, UsageError
from .phasespace import CospherePoint, HomogeneousSymbol, TorusGrid
from .quantize import GridOperator, assemble_G_operator, band_norm, to_fourier

GAP_RATIO = 10.0


@dataclass
class IndexReport:
    sizes: list
    profiles: list
    kernel_dims: list
    cokernel_dims: list
    gap_ratios: list
    svd_tol: float
    indices: list = field(default_factory=list)

    @property
    def gapped(self) -> bool:
        return all(r >= GAP_RATIO for r in self.gap_ratios)

    @property
    def stable(self) -> bool:
        return self.gapped and len(set(self.indices)) == 1

    @property
    def verdict(self) -> str:
        return "index" if self.gapped else "inconclusive"

    @property
    def index(self) -> Optional[int]:
        """Common index across sizes, or ``None`` when unstable or ungapped."""
        return self.indices[0] if self.stable else None

    def to_csv(self, path, head: int = 4) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["size", "sigma_head", "dim_ker", "dim_coker", "index", "gap_ratio"])
            for i, n in enumerate(self.sizes):
                prof = " ".join(f"{s:.6e}" for s in self.profiles[i][:head])
                out.writerow([n, prof, self.kernel_dims[i], self.cokernel_dims[i],
                              self.indices[i], f"{self.gap_ratios[i]:.6e}"])


def _count_small(sig: np.ndarray, tol: float):
    small = sig <= tol
    k = int(small.sum())
    above = sig[~small]
    lo = above.min() if above.size else 0.0
    hi = sig[small].max() if k else tol
    ratio = lo / max(hi, 1e-300) if lo > 0 else 0.0
    return k, ratio


def section_singular_values(D: GridOperator, band: bool = True):
    """Ascending singular values of ``D P_B`` and ``D* P_B`` (square sections if not ``band``)."""
    F = to_fourier(D.matrix, D.grid)
    if band:
        cols = np.max(np.abs(D.grid.frequencies), axis=-1) < D.grid.n_points // 4
    else:
        cols = np.ones(D.grid.size, dtype=bool)
    s = np.linalg.svd(F[:, cols], compute_uv=False)[::-1]
    s_adj = np.linalg.svd(F.conj().T[:, cols], compute_uv=False)[::-1]
    return s, s_adj


def numerical_index(ops: Sequence[GridOperator], svd_tol: float = 1e-6,
                    band: bool = True) -> IndexReport:
    """``dim ker - dim coker`` by singular-value counting on at least three grid sizes.

    ``svd_tol`` is relative to the largest singular value.  The gap ratio is
    the smallest singular value above the tolerance over the largest one
    below it (or over the tolerance when none is below).
    """
    ops = list(ops)
    if len(ops) < 3:
        raise UsageError("numerical_index needs at least three grid sizes")
    rep = IndexReport([], [], [], [], [], svd_tol)
    for D in ops:
        s, s_adj = section_singular_values(D, band)
        tol = svd_tol * max(s.max(), s_adj.max())
        k, r1 = _count_small(s, tol)
        c, r2 = _count_small(s_adj, tol)
        rep.sizes.append(D.grid.n_points)
        rep.profiles.append(s.tolist())
        rep.kernel_dims.append(k)
        rep.cokernel_dims.append(c)
        rep.gap_ratios.append(min(r1, r2))
        rep.indices.append(k - c)
    return rep


# ---------------------------------------------------------------------------
# almost inverses


def with_unit(elt: CrossedElement, group: GroupModel) -> CrossedElement:
    """Rewrite ``a_e delta_e`` as ``1 + (a_e - 1) delta_e`` when no unit is present.

    ``Op(1)`` is the identity, so the assembled operator does not change.
    """
    if elt.unit != 0:
        return elt
    e = group.normalize(0)
    if e not in elt.coeffs:
        raise UsageError("element has neither a unit nor an identity coefficient")
    coeffs = dict(elt.coeffs)
    coeffs[e] = coeffs[e] - 1.0 / group.haar
    return CrossedElement(elt.grid, coeffs, 1.0, elt.mask).pruned()


def almost_inverse(D: GridOperator, b: CrossedElement, rep, K: float, group=None,
                   floor: float = 1e-12, symbol_residual: Optional[float] = None) -> dict:
    """``R = assemble(b)`` with band residuals of ``RD - I`` and ``DR - I`` at ``K`` and ``2K``.

    ``decreasing`` holds when both residuals drop from ``K`` to ``2K`` or sit
    below ``floor``.  With constant symbols and exact shifts the residual is
    the symbol-level truncation error and does not depend on ``K``; such a
    pair is still consistent when it does not grow and stays within ten
    times ``symbol_residual``.  ``calculus_failure`` is set when neither holds.
    """
    R = assemble_G_operator(b, rep, group)
    I = np.eye(D.grid.size)
    left = R.matrix @ D.matrix - I
    right = D.matrix @ R.matrix - I
    res = {}
    for name, M in (("left", left), ("right", right)):
        res[name] = [band_norm(M, D.grid, K), band_norm(M, D.grid, 2 * K)]
    dec = all(r[1] < r[0] or max(r) <= floor for r in res.values())
    non_inc = all(r[1] <= r[0] * (1 + 1e-9) + floor for r in res.values())
    bounded = symbol_residual is not None and all(
        r[0] <= 10 * symbol_residual + floor for r in res.values())
    return {"R": R, "K": K, "left": res["left"], "right": res["right"], "decreasing": dec,
            "non_increasing": non_inc, "calculus_failure": not (dec or (non_inc and bounded))}


# ---------------------------------------------------------------------------
# experiments


def sigma_min_trend(ops: Sequence[GridOperator], rel_tol: float = 1e-10) -> dict:
    """Smallest singular values of the square sections over grid sizes.

    ``sigma_min`` is the smallest one; ``sigma_min_nonzero`` skips the exact
    kernel (values below ``rel_tol`` times the largest), so that spectrum
    accumulating at zero shows up as a decreasing sequence.
    """
    sig, nz = [], []
    for D in ops:
        s = np.linalg.svd(D.matrix, compute_uv=False)
        sig.append(float(s[-1]))
        above = s[s > rel_tol * s[0]]
        nz.append(float(above[-1]) if above.size else 0.0)
    return {"sizes": [D.grid.n_points for D in ops], "sigma_min": sig, "sigma_min_nonzero": nz,
            "decreasing": bool(np.all(np.diff(nz) < 0))}


def default_bases(grid: TorusGrid, count: int = 16, seed: int = 0):
    """``count`` cosphere points: evenly spaced in dim 1, seeded random in dim 2."""
    if grid.dim == 1:
        xs = np.linspace(0, 2 * np.pi, count // 2, endpoint=False)
        return [CospherePoint([x], [s]) for x in xs for s in (1.0, -1.0)]
    rng = np.random.default_rng(seed)
    return [CospherePoint.from_angle(rng.uniform(0, 2 * np.pi, 2), rng.uniform(0, 2 * np.pi))
            for _ in range(count)]


def _grown_inverse(elt, group, tol, max_cap):
    cap = max(1, 4 * elt.support_radius(group))
    while True:
        try:
            b, res = symbol_inverse(elt, group, support_cap=cap, tol=tol)
            return b, res, cap
        except InversionError:
            if 2 * cap > max_cap:
                raise
            cap *= 2


def ellipticity_experiment(element: Callable, group: GroupModel, representation: Callable,
                           sizes: Sequence[int] = (64, 128, 256), dim: int = 1,
                           windows: Sequence[int] = (8, 16, 32, 64), K: float = 8,
                           svd_tol: float = 1e-6, inverse_tol: float = 1e-2,
                           n_bases: int = 16, max_cap: int = 32) -> dict:
    """Sections, symbol inverse, almost inverse and index for one element over grid sizes.

    The symbol inverse starts from the default support cap and doubles it
    up to ``max_cap`` until the residual meets ``inverse_tol``.
    ``element(grid)`` builds the crossed element and ``representation(grid)``
    the group representation on each grid.  The verdict is
    ``"Fredholm-consistent"`` when the sections are elliptic, the symbol
    inverse converges, the almost inverse shows no calculus failure and the
    index is stable.
    """
    grids = [TorusGrid(dim, n) for n in sizes]
    elts = [with_unit(element(g), group) for g in grids]
    sections = finite_section_invertibility(elts[0], group, default_bases(grids[0], n_bases), windows)
    ops = [assemble_G_operator(e, representation(g), group) for e, g in zip(elts, grids)]
    out = {"sections": sections.verdict, "sections_sigma_min": float(sections.sigma_min.min()),
           "trend": sigma_min_trend(ops)}
    inverse_ok = False
    almost = None
    if sections.verdict == "elliptic":
        try:
            b, res, cap = _grown_inverse(elts[-1], group, inverse_tol, max_cap)
            out["symbol_inverse_residual"] = max(res.values())
            out["support_cap"] = cap
            inverse_ok = True
            almost = almost_inverse(ops[-1], b, representation(grids[-1]), K, group,
                                    symbol_residual=max(res.values()))
            out["almost_inverse"] = {k: almost[k] for k in
                                     ("K", "left", "right", "decreasing", "calculus_failure")}
        except GOperatorError as exc:
            out["symbol_inverse_error"] = str(exc)
    report = numerical_index(ops, svd_tol)
    out["index"] = report.index
    out["index_stable"] = report.stable
    out["gap_ratios"] = report.gap_ratios
    ok = (sections.verdict == "elliptic" and inverse_ok and almost is not None
          and not almost["calculus_failure"] and report.stable)
    out["verdict"] = "Fredholm-consistent" if ok else "not Fredholm-consistent"
    out["report"] = report
    return out


def winding_symbol(grid: TorusGrid) -> HomogeneousSymbol:
    """``a(x, +1) = exp(ix)``, ``a(x, -1) = 1``: a raising ladder on positive frequencies."""
    return HomogeneousSymbol.split(grid, lambda x: np.exp(1j * x), lambda x: np.ones_like(x))
