"""Grid surrogates for wavefront sets of operator kernels.

Cells of ``S*(M x M)`` are indexed ``(c, c', d, d')``: position cells of the
output and input variables (``stride`` grid points per axis, flattened
row-major) and cosphere direction indices.  Points are reported in the
convention ``(x, p, x', p')`` with ``(x, p, x', -p')`` in the wavefront set of
the kernel, so the kernel of ``u -> u(x - c)`` lives over the graph
``x' = x - c, p' = p``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .crossed import CrossedElement, GroupModel
from .errors import UsageError
from .hamflow import T_MAX, GeneratingFunction
from .phasespace import TWO_PI, HomogeneousSymbol, TorusGrid, TransverseSet
from .quantize import GridOperator, band_norm

BITSET_MAGIC = b"GOPWF001"


@dataclass
class GridKernel:
    """Kernel samples ``K(x_j, x'_k)`` of a grid operator."""

    values: np.ndarray
    grid: TorusGrid


def kernel_of(D: GridOperator) -> GridKernel:
    """Kernel with the Riemann weight divided out; the identity gives ``1/spacing``."""
    return GridKernel(np.asarray(D.matrix) / D.grid.weight, D.grid)


# ---------------------------------------------------------------------------
# wavefront sets


@dataclass
class WavefrontSet:
    """Boolean mask over cells ``(c, c', d, d')`` of ``S*(M x M)``.

    ``energy`` (same shape, optional) weighs the marked cells in containment
    reports.
    """

    grid: TorusGrid
    mask: np.ndarray
    stride: int = 1
    threshold: Optional[float] = None
    window_width: Optional[int] = None
    energy: Optional[np.ndarray] = None

    @property
    def cells_per_axis(self) -> int:
        return self.grid.n_points // self.stride

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    def cells(self) -> np.ndarray:
        """Marked cells as rows ``(c, c', d, d')``."""
        return np.argwhere(self.mask)

    def weights(self) -> np.ndarray:
        if self.energy is None:
            return self.mask.astype(float)
        return np.where(self.mask, self.energy, 0.0)

    def to_csv(self, path) -> None:
        w = self.weights()
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["cell", "cell_prime", "dir", "dir_prime", "weight"])
            for c, cp, d, dp in self.cells():
                out.writerow([c, cp, d, dp, repr(float(w[c, cp, d, dp]))])

    def to_bitset(self, path) -> None:
        """Header (magic, dim, n_points, n_dirs, stride) followed by packed mask bits."""
        head = BITSET_MAGIC + struct.pack("<IIII", self.grid.dim, self.grid.n_points,
                                          self.grid.n_dirs, self.stride)
        with open(path, "wb") as fh:
            fh.write(head + np.packbits(self.mask.ravel()).tobytes())

    @classmethod
    def from_bitset(cls, path) -> "WavefrontSet":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:8] != BITSET_MAGIC:
            raise UsageError(f"{path} is not a wavefront bitset")
        dim, n, nd, stride = struct.unpack("<IIII", data[8:24])
        grid = TorusGrid(dim, n, nd if dim == 2 else None)
        shape = _mask_shape(grid, stride)
        bits = np.unpackbits(np.frombuffer(data[24:], dtype=np.uint8))[: int(np.prod(shape))]
        return cls(grid, bits.astype(bool).reshape(shape), stride)


def _mask_shape(grid: TorusGrid, stride: int):
    if grid.n_points % stride:
        raise UsageError("stride must divide n_points")
    cx = (grid.n_points // stride) ** grid.dim
    return (cx, cx, grid.n_dirs, grid.n_dirs)


def empty_wavefront(grid: TorusGrid, stride: int = 1) -> WavefrontSet:
    return WavefrontSet(grid, np.zeros(_mask_shape(grid, stride), dtype=bool), stride)


def position_cell(grid: TorusGrid, x, stride: int = 1) -> np.ndarray:
    """Index of the nearest position cell of side ``stride`` grid points."""
    x = np.asarray(x, dtype=float).reshape(-1, grid.dim)
    nc = grid.n_points // stride
    idx = np.rint(np.mod(x, TWO_PI) / (grid.spacing * stride)).astype(int) % nc
    if grid.dim == 1:
        return idx[:, 0]
    return idx[:, 0] * nc + idx[:, 1]


def dilate(ws: WavefrontSet, slack: int, dir_slack: Optional[int] = None) -> np.ndarray:
    """Mask of ``ws`` grown by ``slack`` position cells and ``dir_slack`` direction bins."""
    if dir_slack is None:
        dir_slack = _default_dir_slack(ws.grid)
    nc = ws.cells_per_axis
    d = ws.grid.dim
    D = ws.grid.n_dirs
    arr = ws.mask.reshape((nc,) * (2 * d) + (D, D))
    size = (2 * slack + 1,) * (2 * d) + (2 * dir_slack + 1,) * 2
    out = ndimage.maximum_filter(arr.astype(np.uint8), size=size, mode="wrap")
    return out.astype(bool).reshape(ws.mask.shape)


def _default_dir_slack(grid: TorusGrid) -> int:
    return 0 if grid.dim == 1 else 1


def containment_report(est: WavefrontSet, pred: WavefrontSet, slack_cells: int = 2,
                       dir_slack: Optional[int] = None, max_fraction: float = 0.05) -> dict:
    """Weighted fraction of ``est`` lying outside the dilated ``pred``."""
    if est.grid != pred.grid or est.stride != pred.stride:
        raise UsageError("wavefront sets live on different cell grids")
    if dir_slack is None:
        dir_slack = _default_dir_slack(est.grid)
    dil = dilate(pred, slack_cells, dir_slack)
    w = est.weights()
    total = float(w.sum())
    outside = float(w[est.mask & ~dil].sum())
    frac = outside / total if total > 0 else 0.0
    return {"outside_mass_fraction": frac, "pass": frac <= max_fraction,
            "marked": est.count, "outside_cells": int(np.sum(est.mask & ~dil))}


def compare_wavefronts(a: WavefrontSet, b: WavefrontSet, slack_cells: int = 2,
                       dir_slack: Optional[int] = None) -> dict:
    """Two-sided containment: every cell of either set within the slack of the other."""
    ab = containment_report(a, b, slack_cells, dir_slack, max_fraction=0.0)
    ba = containment_report(b, a, slack_cells, dir_slack, max_fraction=0.0)
    return {"a_outside_b": ab["outside_cells"], "b_outside_a": ba["outside_cells"],
            "agree": ab["outside_cells"] == 0 and ba["outside_cells"] == 0,
            "count_a": a.count, "count_b": b.count}


def wavefront_estimate(kernel: GridKernel, window_width: int = 8,
                       threshold: float = 0.1) -> WavefrontSet:
    """Windowed-FFT surrogate on ``T^1 x T^1``.

    Base cells are centred every ``window_width // 2`` grid points.  Each
    patch of ``2 window_width`` points per axis is multiplied by a Gaussian of
    standard deviation ``window_width / 4`` and transformed.  The high band is
    ``max(|eta|, |eta'|) >= window_width / 2`` (half the patch Nyquist),
    without the sign-ambiguous Nyquist row and column.  A
    direction pair ``(sign p, sign p')`` with ``p = eta``, ``p' = -eta'`` is
    marked when its high-band energy is at least ``threshold`` times the
    patch energy and the patch energy is at least ``threshold`` times the
    largest patch energy of the kernel.
    """
    grid = kernel.grid
    if grid.dim != 1:
        raise UsageError("wavefront estimates are implemented on T^1 only")
    w = int(window_width)
    if w < 4 or w % 2:
        raise UsageError("window_width must be an even number >= 4")
    if not 0 < threshold < 1:
        raise UsageError("threshold must lie in (0, 1)")
    n = grid.n_points
    stride = w // 2
    if n % stride:
        raise UsageError("window_width // 2 must divide n_points")
    P = 2 * w
    offs = np.arange(P) - w
    centres = stride * np.arange(n // stride)
    idx = (centres[:, None] + offs[None, :]) % n
    g = np.exp(-0.5 * (offs / (w / 4.0)) ** 2)
    K = np.asarray(kernel.values)
    patches = K[idx[:, None, :, None], idx[None, :, None, :]] * (g[:, None] * g[None, :])
    F = np.abs(np.fft.fft2(patches, axes=(-2, -1))) ** 2
    total = F.sum(axis=(-2, -1))
    eta = np.rint(np.fft.fftfreq(P) * P).astype(int)
    high = np.maximum(np.abs(eta)[:, None], np.abs(eta)[None, :]) >= P // 4
    # the patch Nyquist frequency has no sign
    high &= (np.abs(eta)[:, None] < P // 2) & (np.abs(eta)[None, :] < P // 2)
    C = centres.size
    energy = np.zeros((C, C, 2, 2))
    for a, sp_ in enumerate((1, -1)):
        for b, spp in enumerate((1, -1)):
            sel = high & (np.sign(eta)[:, None] == sp_) & (-np.sign(eta)[None, :] == spp)
            energy[:, :, a, b] = F[:, :, sel].sum(axis=-1)
    tmax = total.max()
    if tmax <= 0:
        return WavefrontSet(grid, np.zeros_like(energy, dtype=bool), stride, threshold, w, energy)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(total[..., None, None] > 0, energy / total[..., None, None], 0.0)
    mask = (frac >= threshold) & ((total / tmax)[..., None, None] >= threshold)
    return WavefrontSet(grid, mask, stride, threshold, w, energy)


# ---------------------------------------------------------------------------
# predictions


def essential_support(symbol: HomogeneousSymbol, floor: float = 1e-12, pad: int = 1) -> np.ndarray:
    """Cells where ``|a| > floor``, dilated by ``pad`` cells (positions, and angles in 2D)."""
    grid = symbol.grid
    m = np.abs(symbol.samples) > floor
    if pad <= 0:
        return m
    n, D = grid.n_points, grid.n_dirs
    if grid.dim == 1:
        arr, size = m.reshape(n, D), (2 * pad + 1, 1)
    else:
        arr, size = m.reshape(n, n, D), (2 * pad + 1, 2 * pad + 1, 2 * pad + 1)
    out = ndimage.maximum_filter(arr.astype(np.uint8), size=size, mode="wrap")
    return out.astype(bool).reshape(m.shape)


def predicted_wavefront(elt: CrossedElement, group: GroupModel, ts: Optional[TransverseSet] = None,
                        stride: int = 1, floor: float = 1e-12, pad: int = 1) -> WavefrontSet:
    """Union over the support of ``{(m, g^-1 m) : m in ess supp a_g}``.

    For a line group both ``m`` and ``g^-1 m`` must lie in ``ts``; discrete
    groups ignore ``ts``.  A nonzero unit contributes the diagonal.
    """
    grid = elt.grid
    ws = empty_wavefront(grid, stride)
    x, omega = grid.cell_points()
    cell_x = position_cell(grid, x, stride)
    dir_x = np.tile(np.arange(grid.n_dirs), grid.size)
    use_ts = group.kind == "line" and ts is not None
    if elt.unit != 0:
        ws.mask[cell_x, cell_x, dir_x, dir_x] = True
    for g, a in elt.coeffs.items():
        sel = essential_support(a, floor, pad).ravel()
        if elt.mask is not None:
            sel &= elt.mask.ravel()
        if use_ts:
            sel &= ts.mask.ravel()
        if not sel.any():
            continue
        y, q = group.act(g).inverse(x[sel], omega[sel])
        keep = np.ones(y.shape[0], dtype=bool)
        if use_ts:
            keep = ts.contains(y, q)
        ws.mask[cell_x[sel][keep], position_cell(grid, y[keep], stride),
                dir_x[sel][keep], grid.nearest_direction_index(q[keep])] = True
    return ws


# ---------------------------------------------------------------------------
# stationary phase


class CallablePhase:
    """Phase ``psi(x, x', t, theta)`` given as a vectorized callable; derivatives by differences."""

    def __init__(self, psi: Callable, dim: int, h: float = 1e-6):
        self.psi = psi
        self.dim = dim
        self.h = h

    def __call__(self, x, xp, t, theta):
        return self.psi(x, xp, t, theta)

    def _d(self, x, xp, t, theta, which, k=None):
        h = self.h
        args = [np.array(x, dtype=float), np.array(xp, dtype=float), float(t), np.array(theta, dtype=float)]
        lo, hi = list(args), list(args)
        if which == 2:
            lo[2], hi[2] = t - h, t + h
        else:
            e = np.zeros(self.dim)
            e[k] = h
            lo[which] = args[which] - e
            hi[which] = args[which] + e
        return (self.psi(*hi) - self.psi(*lo)) / (2 * h)

    def gradients(self, x, xp, t, theta):
        """``(psi_x, psi_x', psi_t, psi_theta)`` at the samples."""
        gx = np.stack([self._d(x, xp, t, theta, 0, k) for k in range(self.dim)], -1)
        gxp = np.stack([self._d(x, xp, t, theta, 1, k) for k in range(self.dim)], -1)
        gt = self._d(x, xp, t, theta, 2)
        gth = np.stack([self._d(x, xp, t, theta, 3, k) for k in range(self.dim)], -1)
        return gx, gxp, gt, gth


class GeneratingPhase:
    """``psi(x, x', t, theta) = S(x, t, theta) - theta . x'`` for the flow of ``H``.

    ``S`` is the generating function of the time-``t`` flow; ``psi_theta = 0``
    places ``x'`` at the base preimage and ``psi_t = -H(x', theta)``.
    """

    def __init__(self, hamiltonian, step: float = 0.01, t_max: float = T_MAX, dt: float = 1e-4):
        self.hamiltonian = hamiltonian
        self.dim = hamiltonian.dim
        self.step = step
        self.t_max = t_max
        self.dt = dt

    def S(self, t: float) -> GeneratingFunction:
        return GeneratingFunction(self.hamiltonian, t, step=self.step, t_max=self.t_max + 2 * self.dt)

    def __call__(self, x, xp, t, theta):
        return self.S(t).evaluate(x, theta) - np.sum(np.asarray(theta) * xp, axis=-1)

    def stationary_point(self, x, t, theta):
        """``(x', psi_x, psi_t)`` with ``x' = S_theta`` solving ``psi_theta = 0``."""
        S = self.S(t)
        xp = S.grad_p(x, theta)
        gx = S.grad_x(x, theta)
        gt = (self.S(t + self.dt).evaluate(x, theta) - self.S(t - self.dt).evaluate(x, theta)) / (2 * self.dt)
        return xp, gx, gt


def _amplitude_at(amplitude, t, grid):
    if amplitude is None:
        return np.ones((grid.size, grid.n_dirs), dtype=bool)
    if callable(amplitude):
        m = amplitude(t)
    elif isinstance(amplitude, dict):
        m = amplitude.get(t)
        if m is None:
            return np.zeros((grid.size, grid.n_dirs), dtype=bool)
    else:
        m = amplitude
    return np.asarray(m, dtype=bool).reshape(grid.size, grid.n_dirs)


def _check_homogeneous(phase, x, xp, t, theta):
    v1 = phase(x, xp, t, theta)
    v2 = phase(x, xp, t, 2.0 * theta)
    if np.max(np.abs(v2 - 2.0 * v1)) > 1e-6 * (1.0 + np.max(np.abs(v1))):
        raise UsageError("phase is not homogeneous of degree one in theta")


def _check_nondegenerate(*grads):
    norm = np.sqrt(sum(np.sum(np.abs(np.atleast_2d(g)) ** 2, axis=-1) for g in grads))
    if norm.size and np.min(norm) < 1e-6:
        raise UsageError("phase is degenerate: its (x, theta) gradient vanishes at a stationary point")


def stationary_phase_support(phase, grid: TorusGrid, t_values: Sequence[float] = (0.0,),
                             amplitude=None, tol: Optional[float] = None,
                             tol_t: float = 1e-6, stride: int = 1) -> WavefrontSet:
    """Cells ``(x, psi_x, x', -psi_x')`` where ``psi_theta`` and ``psi_t`` vanish.

    ``theta`` runs over the cosphere directions and ``t`` over ``t_values``;
    ``amplitude`` (mask over ``(x, theta)`` cells, a dict keyed by ``t`` or a
    callable of ``t``) restricts the search.  ``tol`` bounds ``|psi_theta|``
    (default: half a position cell).  For a ``GeneratingPhase`` the equation
    ``psi_theta = 0`` is solved directly; other phases are searched over all
    pairs of grid points, with ``x'`` lifted next to ``x``.
    """
    ws = empty_wavefront(grid, stride)
    if tol is None:
        tol = 0.5 * grid.spacing * stride * (1 + 1e-9)
    x_all, th_all = grid.cell_points()
    for t in t_values:
        amp = _amplitude_at(amplitude, t, grid).ravel()
        if not amp.any():
            continue
        x, th = x_all[amp], th_all[amp]
        if isinstance(phase, GeneratingPhase):
            xp, gx, gt = phase.stationary_point(x, t, th)
            _check_homogeneous(phase, x[:4], xp[:4], t, th[:4])
            ok = np.abs(gt) <= tol_t
            _check_nondegenerate(gx[ok], th[ok])
            gxp = -th
        else:
            n = grid.size
            xr = np.repeat(x, n, axis=0)
            thr = np.repeat(th, n, axis=0)
            xp = np.tile(grid.points, (x.shape[0], 1))
            xp = xr + (np.mod(xp - xr + np.pi, TWO_PI) - np.pi)
            _check_homogeneous(phase, xr[:8], xp[:8], t, thr[:8])
            gx, gxp, gt, gth = phase.gradients(xr, xp, t, thr)
            ok = (np.max(np.abs(gth), axis=-1) <= tol) & (np.abs(gt) <= tol_t)
            _check_nondegenerate(gx[ok], gxp[ok], gth[ok])
            x, xp, gx, gxp = xr, xp, gx, gxp
        ok &= (np.linalg.norm(gx, axis=-1) > 1e-9) & (np.linalg.norm(np.atleast_2d(gxp), axis=-1) > 1e-9)
        if not ok.any():
            continue
        ws.mask[position_cell(grid, x[ok], stride), position_cell(grid, xp[ok], stride),
                grid.nearest_direction_index(gx[ok]),
                grid.nearest_direction_index(-np.atleast_2d(gxp)[ok])] = True
    return ws


# ---------------------------------------------------------------------------
# smoothing


def smoothing_check(D: GridOperator, Ks: Optional[Sequence[float]] = None) -> dict:
    """Band norms ``||P_K D P_K||`` and their fitted power-law decay exponent.

    ``Ks`` defaults to ``2, 4, 8, ...`` below the dealiasing limit ``n/4``.
    The operator is "smoothing-consistent" when every step decreases the
    norm and the exponent is at least one.
    """
    grid = D.grid
    if Ks is None:
        Ks, k = [], 2
        while k < grid.n_points // 4:
            Ks.append(k)
            k *= 2
    Ks = [float(k) for k in Ks]
    norms = np.array([band_norm(D.matrix, grid, K) for K in Ks])
    if np.all(norms > 0):
        exponent = -float(np.polyfit(np.log(Ks), np.log(norms), 1)[0])
    else:
        exponent = float("inf")
    monotone = bool(np.all(np.diff(norms) < 0))
    return {"Ks": Ks, "norms": norms.tolist(), "exponent": exponent, "monotone": monotone,
            "smoothing": monotone and exponent >= 1.0}
