"""Crossed-product symbols ``C(S*M) x| G`` and their trajectory representations.

Group elements are integer indices: residues for the cyclic group ``Z/n``,
integers for ``Z``, and multiples of the quadrature step ``tau`` for the line
``R`` (index ``m`` stands for ``t = m tau``).  Products of elements follow
the covariance rule

    (a * b)_g = sum_h w a_h (b_{h^-1 g} o h^-1)

with ``w = tau`` on the line and ``w = 1`` otherwise.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InversionError, TruncationError, UsageError
from .phasespace import (CanonicalMap, CospherePoint, Hamiltonian, HomogeneousSymbol,
                         TorusGrid, TransverseSet, identity_map, transport_matrix,
                         translation)

KINDS = ("cyclic", "integers", "line")


class GroupModel:
    """A group with an action on T*_0 M by homogeneous canonical maps.

    ``generator`` is the map of the element with index 1; the map of index
    ``m`` is the ``m``-fold composition, cached.
    """

    def __init__(self, kind: str, generator: CanonicalMap, order: Optional[int] = None,
                 tau: float = 1.0, window: Optional[int] = None,
                 hamiltonian: Optional[Hamiltonian] = None, flow_step: float = 0.01,
                 descriptor: str = ""):
        if kind not in KINDS:
            raise UsageError(f"unknown group kind {kind!r}")
        if kind == "cyclic" and (order is None or order < 1):
            raise UsageError("cyclic groups need a positive order")
        if kind == "line" and window is None:
            raise UsageError("line groups need a quadrature window")
        self.kind = kind
        self.generator = generator
        self.order = order
        self.tau = float(tau) if kind == "line" else 1.0
        self.window = window
        self.hamiltonian = hamiltonian
        self.flow_step = flow_step
        self.descriptor = descriptor
        self._maps: Dict[int, CanonicalMap] = {0: identity_map(generator.dim)}
        self._inverse_generator = generator.inverted()
        self._transports: Dict[tuple, sp.csr_matrix] = {}

    # constructors ---------------------------------------------------------

    @classmethod
    def rotation(cls, alpha, kind: str = "integers", order: Optional[int] = None) -> "GroupModel":
        """Group generated by the translation ``x -> x + alpha``."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        return cls(kind, translation(alpha), order=order,
                   descriptor=f"rotation({alpha.tolist()})")

    @classmethod
    def flow(cls, hamiltonian: Hamiltonian, tau: float, window: int,
             step: float = 0.01) -> "GroupModel":
        """The line acting by the flow of ``hamiltonian``; index ``m`` is time ``m tau``."""
        from .hamflow import FlowMap

        if hamiltonian.descriptor.startswith("linear:"):
            v = hamiltonian.grad_p(np.zeros(hamiltonian.dim), np.ones(hamiltonian.dim))
            gen = translation(tau * np.asarray(v))
        else:
            gen = FlowMap(hamiltonian, tau, step=step)
        return cls("line", gen, tau=tau, window=window, hamiltonian=hamiltonian,
                   flow_step=step, descriptor=f"flow({hamiltonian.descriptor})")

    # group law ------------------------------------------------------------

    @property
    def haar(self) -> float:
        return self.tau

    def normalize(self, m: int) -> int:
        return int(m) % self.order if self.kind == "cyclic" else int(m)

    def mul(self, g: int, h: int) -> int:
        return self.normalize(g + h)

    def inv(self, g: int) -> int:
        return self.normalize(-g)

    def radius(self, g: int) -> int:
        g = self.normalize(g)
        if self.kind == "cyclic":
            return min(g, self.order - g)
        return abs(g)

    def param(self, m: int) -> float:
        return m * self.tau if self.kind == "line" else float(m)

    def elements(self, radius: int):
        if self.kind == "cyclic":
            return list(range(self.order))
        return list(range(-radius, radius + 1))

    def in_window(self, g: int) -> bool:
        return self.kind != "line" or abs(g) <= self.window

    # action ---------------------------------------------------------------

    def act(self, m: int) -> CanonicalMap:
        m = self.normalize(m)
        if self.kind == "cyclic" and m > self.order // 2:
            m = m - self.order
        if m not in self._maps:
            step = self.generator if m > 0 else self._inverse_generator
            prev = self.act(m - 1 if m > 0 else m + 1)
            self._maps[m] = step.compose(prev)
        return self._maps[m]

    def transport_matrix(self, m: int, grid: TorusGrid) -> sp.csr_matrix:
        """Sparse map ``a -> a o g_m^{-1}`` on flattened samples."""
        key = (self.normalize(m), grid)
        if key not in self._transports:
            self._transports[key] = transport_matrix(grid, self.act(m))
        return self._transports[key]

    def transport(self, a: HomogeneousSymbol, m: int) -> HomogeneousSymbol:
        if self.normalize(m) == 0:
            return a
        T = self.transport_matrix(m, a.grid)
        return HomogeneousSymbol(a.grid, (T @ a.flat).reshape(a.samples.shape))

    def orbit(self, base: CospherePoint, indices: Sequence[int]):
        """Points ``h(x, xi)`` for ``h`` in ``indices``, by iterating the generator."""
        x0 = base.x[None, :]
        p0 = base.omega[None, :]
        pts = {0: (x0, p0)}
        hi = max(max(indices), 0)
        lo = min(min(indices), 0)
        x, p = x0, p0
        for m in range(1, hi + 1):
            x, p = self.generator.forward(x, p)
            pts[m] = (x, p)
        x, p = x0, p0
        for m in range(-1, lo - 1, -1):
            x, p = self._inverse_generator.forward(x, p)
            pts[m] = (x, p)
        xs = np.concatenate([pts[m][0] for m in indices])
        ps = np.concatenate([pts[m][1] for m in indices])
        return xs, ps

    def __repr__(self):
        return f"GroupModel({self.kind}, {self.descriptor})"


# ---------------------------------------------------------------------------
# elements


@dataclass
class CrossedElement:
    """``unit + sum_g a_g delta_g`` with symbol-valued coefficients.

    ``mask`` (boolean over cosphere cells) marks the cells that survive a
    restriction to the transverse set; ``None`` means the full cosphere.
    """

    grid: TorusGrid
    coeffs: Dict[int, HomogeneousSymbol] = field(default_factory=dict)
    unit: complex = 0.0
    mask: Optional[np.ndarray] = None

    @property
    def support(self):
        return sorted(self.coeffs)

    @classmethod
    def delta(cls, grid: TorusGrid, g: int, symbol=1.0) -> "CrossedElement":
        if not isinstance(symbol, HomogeneousSymbol):
            symbol = HomogeneousSymbol.constant(grid, symbol)
        return cls(grid, {int(g): symbol})

    @classmethod
    def scalar(cls, grid: TorusGrid, value=1.0) -> "CrossedElement":
        return cls(grid, {}, complex(value))

    @classmethod
    def from_profile(cls, grid: TorusGrid, group: GroupModel, profile: Callable,
                     symbol=1.0, unit=0.0) -> "CrossedElement":
        """``unit + int profile(t) a delta_t dt`` sampled on the quadrature window.

        Nodes where ``profile`` vanishes are left out of the support.
        """
        if group.kind != "line":
            raise UsageError("profiles need a line group")
        if not isinstance(symbol, HomogeneousSymbol):
            symbol = HomogeneousSymbol.constant(grid, symbol)
        coeffs = {}
        for m in range(-group.window, group.window + 1):
            w = complex(profile(group.param(m)))
            if w != 0:
                coeffs[m] = w * symbol
        return cls(grid, coeffs, complex(unit))

    def support_radius(self, group: GroupModel) -> int:
        return max((group.radius(g) for g in self.coeffs), default=0)

    def _merge(self, other: "CrossedElement", sign: float) -> "CrossedElement":
        if other.grid != self.grid:
            raise UsageError("elements live on different grids")
        coeffs = dict(self.coeffs)
        for g, b in other.coeffs.items():
            coeffs[g] = coeffs[g] + sign * b if g in coeffs else sign * b
        mask = _combine_masks(self.mask, other.mask)
        return CrossedElement(self.grid, coeffs, self.unit + sign * other.unit, mask)

    def __add__(self, other):
        if not isinstance(other, CrossedElement):
            return CrossedElement(self.grid, dict(self.coeffs), self.unit + other, self.mask)
        return self._merge(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, CrossedElement):
            return CrossedElement(self.grid, dict(self.coeffs), self.unit - other, self.mask)
        return self._merge(other, -1.0)

    def __rsub__(self, other):
        return -self + other

    def __mul__(self, scalar):
        return CrossedElement(self.grid, {g: scalar * a for g, a in self.coeffs.items()},
                              scalar * self.unit, self.mask)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def max_norm(self) -> float:
        """Max-coefficient norm over the unit and all coefficients (on ``mask``)."""
        vals = [abs(self.unit)]
        for a in self.coeffs.values():
            s = a.samples if self.mask is None else a.samples[self.mask]
            vals.append(float(np.max(np.abs(s), initial=0.0)))
        return max(vals)

    def pruned(self, tol: float = 0.0) -> "CrossedElement":
        """Drop coefficients whose max modulus (on ``mask``) is at most ``tol``."""
        keep = {}
        for g, a in self.coeffs.items():
            s = a.samples if self.mask is None else a.samples[self.mask]
            if s.size and np.max(np.abs(s)) > tol:
                keep[g] = a
        return CrossedElement(self.grid, keep, self.unit, self.mask)


def _combine_masks(m1, m2):
    if m1 is None:
        return m2
    if m2 is None:
        return m1
    return m1 & m2


# ---------------------------------------------------------------------------
# algebra


def convolve(a: CrossedElement, b: CrossedElement, group: GroupModel,
             truncate: bool = False) -> CrossedElement:
    """Twisted convolution with adjoined units."""
    if a.grid != b.grid:
        raise UsageError("elements live on different grids")
    grid = a.grid
    w = group.haar
    acc: Dict[int, np.ndarray] = {}
    dropped = 0

    def add(g, vals):
        nonlocal dropped
        if not group.in_window(g):
            if not truncate:
                raise TruncationError(f"product support {g} leaves the window +-{group.window}")
            dropped += 1
            return
        acc[g] = acc[g] + vals if g in acc else vals

    for h, ah in a.coeffs.items():
        for k, bk in b.coeffs.items():
            g = group.mul(h, k)
            add(g, w * ah.samples * group.transport(bk, h).samples)
    if b.unit != 0:
        for h, ah in a.coeffs.items():
            add(group.normalize(h), b.unit * ah.samples)
    if a.unit != 0:
        for k, bk in b.coeffs.items():
            add(group.normalize(k), a.unit * bk.samples)
    if dropped:
        warnings.warn(f"convolution dropped {dropped} terms outside the window", stacklevel=2)
    coeffs = {g: HomogeneousSymbol(grid, v) for g, v in sorted(acc.items())}
    return CrossedElement(grid, coeffs, a.unit * b.unit, _combine_masks(a.mask, b.mask))


def involution(a: CrossedElement, group: GroupModel) -> CrossedElement:
    """``(a*)_g = conj(a_{g^-1}) o g^-1``; the unit is conjugated."""
    coeffs = {}
    for h, ah in a.coeffs.items():
        g = group.inv(h)
        coeffs[g] = group.transport(ah.conj(), g)
    return CrossedElement(a.grid, dict(sorted(coeffs.items())), np.conj(a.unit), a.mask)


def restrict_to_transverse(a: CrossedElement, ts: TransverseSet) -> CrossedElement:
    """Keep coefficient values on the cells of ``ts``; other cells are zeroed and masked."""
    if ts.grid != a.grid:
        raise UsageError("transverse set lives on another grid")
    if ts.is_empty:
        warnings.warn("transverse set is empty: the restricted symbol carries no information",
                      stacklevel=2)
    mask = _combine_masks(a.mask, ts.mask)
    coeffs = {g: HomogeneousSymbol(a.grid, np.where(mask, c.samples, 0.0))
              for g, c in a.coeffs.items()}
    return CrossedElement(a.grid, coeffs, a.unit, mask).pruned()


# ---------------------------------------------------------------------------
# trajectory symbols


@dataclass
class TrajectoryOperator:
    """Finite section of the regular representation at a cosphere point."""

    matrix: np.ndarray
    indices: list
    base: CospherePoint

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def sigma_min(self) -> float:
        return float(self.singular_values()[-1])


def trajectory_symbol(a: CrossedElement, group: GroupModel, base: CospherePoint,
                      W: int) -> TrajectoryOperator:
    """``M[h, k] = w a_{h k^-1}(h(x, xi)) + unit delta_{hk}`` on the window ``|h| <= W``.

    The whole group is used for ``Z/n``; on the line ``w = tau`` (uniform
    quadrature weights).
    """
    if W < a.support_radius(group) and group.kind != "cyclic":
        raise UsageError(f"window {W} smaller than the support radius")
    if a.mask is not None and not a.mask.ravel()[a.grid.nearest_cell_index(base.x, base.omega)]:
        raise UsageError("base point is outside the transverse set of a restricted element")
    idx = group.elements(W)
    xs, ps = group.orbit(base, idx)
    n = len(idx)
    M = a.unit * np.eye(n, dtype=complex)
    w = group.haar
    for g, ag in a.coeffs.items():
        vals = ag.evaluate(xs, ps)
        for r, h in enumerate(idx):
            k = group.mul(h, group.inv(g))
            if group.kind == "cyclic":
                c = k
            else:
                c = k - idx[0]
                if not 0 <= c < n:
                    continue
            M[r, c] += w * vals[r]
    return TrajectoryOperator(M, idx, base)


@dataclass
class InvertibilityReport:
    windows: list
    sigma_min: np.ndarray
    verdicts: list
    verdict: str
    threshold: float

    def rows(self):
        for i, v in enumerate(self.verdicts):
            yield i, v, self.sigma_min[i]


def _classify(sig: np.ndarray, windows: Sequence[int], threshold: float) -> str:
    if len(sig) >= 2:
        drops = np.all(np.diff(sig) < 0)
        slope = np.polyfit(np.log(windows), np.log(np.maximum(sig, 1e-300)), 1)[0]
        if drops and slope <= -0.5:
            return "degenerate"
    if np.min(sig) >= threshold:
        if len(sig) < 2 or abs(sig[-1] - sig[-2]) <= 0.1 * sig[-2]:
            return "elliptic"
    return "inconclusive"


def finite_section_invertibility(a: CrossedElement, group: GroupModel,
                                 bases: Sequence[CospherePoint], windows: Sequence[int],
                                 threshold: float = 1e-3) -> InvertibilityReport:
    """Smallest singular values of trajectory sections over growing windows.

    Per base point the verdict is ``"degenerate"`` when ``sigma_min`` falls at
    every window with log-log slope at most ``-1/2``, ``"elliptic"`` when it
    stays above ``threshold`` and its last relative change is at most 10%,
    and ``"inconclusive"`` otherwise.
    """
    windows = list(windows)
    if any(w2 <= w1 for w1, w2 in zip(windows, windows[1:])):
        raise UsageError("windows must be increasing")
    sig = np.array([[trajectory_symbol(a, group, b, W).sigma_min() for W in windows]
                    for b in bases])
    verdicts = [_classify(s, windows, threshold) for s in sig]
    if "degenerate" in verdicts:
        overall = "degenerate"
    elif all(v == "elliptic" for v in verdicts):
        overall = "elliptic"
    else:
        overall = "inconclusive"
    return InvertibilityReport(windows, sig, verdicts, overall, threshold)


def _left_multiplication(a: CrossedElement, group: GroupModel, cap: Sequence[int]):
    """Sparse matrix of ``b -> a * b`` (units included) on coefficients supported in ``cap``.

    Returns the matrix and the list of output group elements (row blocks).
    """
    grid = a.grid
    C = grid.n_cells
    w = group.haar
    out = []
    out_index = {}

    def row_block(g):
        if g not in out_index:
            out_index[g] = len(out)
            out.append(g)
        return out_index[g]

    blocks = {}
    for c, k in enumerate(cap):
        if a.unit != 0:
            blocks[(row_block(group.normalize(k)), c)] = a.unit * sp.identity(C, format="csr")
        for h, ah in a.coeffs.items():
            g = group.mul(h, k)
            if not group.in_window(g):
                continue
            r = row_block(g)
            T = group.transport_matrix(h, grid) if group.normalize(h) else sp.identity(C, format="csr")
            blk = w * sp.diags(ah.flat) @ T
            blocks[(r, c)] = blocks[(r, c)] + blk if (r, c) in blocks else blk
    grid_blocks = [[blocks.get((r, c)) for c in range(len(cap))] for r in range(len(out))]
    for r in range(len(out)):
        if all(b is None for b in grid_blocks[r]):
            grid_blocks[r][0] = sp.csr_matrix((C, C))
    for c in range(len(cap)):
        if all(grid_blocks[r][c] is None for r in range(len(out))):
            grid_blocks[0][c] = sp.csr_matrix((C, C))
    return sp.bmat(grid_blocks, format="csr"), out


def symbol_inverse(x: CrossedElement, group: GroupModel,
                   bases: Optional[Sequence[CospherePoint]] = None,
                   windows: Optional[Sequence[int]] = None,
                   support_cap: Optional[int] = None, tol: float = 1e-2) -> tuple:
    """Approximate inverse of a unital element by least squares on a truncated support.

    Solves ``x * y = 1`` for ``y = 1/unit + sum_{|g| <= L} b_g delta_g`` in the
    least-squares sense, ``L = support_cap`` (default four times the support
    radius of ``x``).  When ``bases`` are given the trajectory sections must
    first be certified elliptic.

    Returns ``(y, residuals)`` with left and right residuals in the
    max-coefficient norm.
    """
    if x.unit == 0:
        raise UsageError("only elements with a nonzero unit part can be inverted")
    if bases is not None:
        report = finite_section_invertibility(x, group, bases, windows or [8, 16, 32])
        if report.verdict != "elliptic":
            raise InversionError(f"trajectory sections are {report.verdict}")
    grid = x.grid
    beta = 1.0 / x.unit
    if not x.coeffs:
        y = CrossedElement.scalar(grid, beta)
        y.mask = x.mask
        return y, {"right": 0.0, "left": 0.0}
    L = support_cap if support_cap is not None else max(1, 4 * x.support_radius(group))
    cap = [g for g in group.elements(L) if group.in_window(g)]
    A, rows = _left_multiplication(x, group, cap)
    C = grid.n_cells
    rhs = np.zeros(len(rows) * C, dtype=complex)
    for r, g in enumerate(rows):
        if g in x.coeffs:
            rhs[r * C:(r + 1) * C] = -beta * x.coeffs[g].flat
    missing = [g for g in x.coeffs if g not in rows]
    if missing:
        raise InversionError(f"support cap {L} cannot reach coefficients at {missing}")
    if x.mask is not None:
        keep = np.tile(x.mask.ravel(), len(rows))
        A = A[keep]
        rhs = rhs[keep]
    sol = spla.lsqr(A, rhs, atol=1e-15, btol=1e-15, iter_lim=20 * A.shape[1])[0]
    coeffs = {g: HomogeneousSymbol(grid, sol[c * C:(c + 1) * C].reshape(grid.size, grid.n_dirs))
              for c, g in enumerate(cap)}
    y = CrossedElement(grid, coeffs, beta, x.mask).pruned(1e-15)
    one = CrossedElement.scalar(grid, 1.0)
    trunc = group.kind == "line"
    right = (convolve(x, y, group, truncate=trunc) - one)
    left = (convolve(y, x, group, truncate=trunc) - one)
    right.mask = left.mask = x.mask
    residuals = {"right": right.max_norm(), "left": left.max_norm()}
    if max(residuals.values()) > tol:
        raise InversionError(f"inverse residual {max(residuals.values()):.3e} exceeds tol {tol}")
    return y, residuals


# ---------------------------------------------------------------------------
# serialization


def to_json(a: CrossedElement) -> str:
    """Structured-text form: grid, unit, support list and sampled coefficients."""
    doc = {
        "format": "crossed-element/1",
        "grid": {"dim": a.grid.dim, "n_points": a.grid.n_points, "n_dirs": a.grid.n_dirs},
        "unit": [float(np.real(a.unit)), float(np.imag(a.unit))],
        "support": [int(g) for g in a.support],
        "coeffs": {str(g): {"re": a.coeffs[g].samples.real.ravel().tolist(),
                            "im": a.coeffs[g].samples.imag.ravel().tolist()}
                   for g in a.support},
        "mask": None if a.mask is None else np.flatnonzero(a.mask.ravel()).tolist(),
    }
    return json.dumps(doc, indent=1)


def from_json(text: str) -> CrossedElement:
    doc = json.loads(text)
    if doc.get("format") != "crossed-element/1":
        raise UsageError("not a crossed-element document")
    grid = TorusGrid(**doc["grid"])
    coeffs = {}
    for g in doc["support"]:
        c = doc["coeffs"][str(g)]
        vals = np.asarray(c["re"]) + 1j * np.asarray(c["im"])
        coeffs[int(g)] = HomogeneousSymbol(grid, vals.reshape(grid.size, grid.n_dirs))
    mask = None
    if doc.get("mask") is not None:
        mask = np.zeros(grid.n_cells, dtype=bool)
        mask[doc["mask"]] = True
        mask = mask.reshape(grid.size, grid.n_dirs)
    return CrossedElement(grid, coeffs, complex(*doc["unit"]), mask)
