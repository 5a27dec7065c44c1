"""Operators on grid samples of L^2(T^d).

Conventions
-----------
Order-zero symbols are quantized by the Kohn-Nirenberg rule
``(Au)(x) = sum_xi exp(i x.xi) a(x, xi/|xi|) u_hat(xi)``.  At ``xi = 0`` the
symbol is replaced by its average over the direction grid.

"Modulo compact operators" is measured with band norms
``||P_K M P_K||`` where ``P_K`` projects onto frequencies ``K <= |xi|`` below
the dealiasing cutoff ``n_points / 4`` (per axis).  Frequencies above the
cutoff are contaminated by wrap-around of the periodic grid.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConditioningError, UsageError
from .hamflow import FlowMap, GeneratingFunction
from .phasespace import CanonicalMap, HomogeneousSymbol, TorusGrid

MAGIC = b"GOPMAT01"
UNITARIZE_FLOOR = 1e-8


@dataclass
class GridFunction:
    """Complex samples of a function on the torus grid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if self.values.size != self.grid.size:
            raise UsageError("sample count does not match the grid")

    def norm(self) -> float:
        return float(np.sqrt(self.grid.weight * np.sum(np.abs(self.values) ** 2)))


@dataclass
class GridOperator:
    """Dense matrix acting on grid samples."""

    matrix: np.ndarray
    grid: TorusGrid
    descriptor: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        n = self.grid.size
        if self.matrix.shape != (n, n):
            raise UsageError(f"matrix must be {n}x{n}, got {self.matrix.shape}")

    @classmethod
    def identity(cls, grid: TorusGrid) -> "GridOperator":
        return cls(np.eye(grid.size, dtype=complex), grid, "I")

    def _check(self, other: "GridOperator"):
        if other.grid != self.grid:
            raise UsageError("operators live on different grids")

    def __matmul__(self, other):
        if isinstance(other, GridOperator):
            self._check(other)
            return GridOperator(self.matrix @ other.matrix, self.grid,
                                f"({self.descriptor})({other.descriptor})")
        if isinstance(other, GridFunction):
            return GridFunction(self.grid, self.matrix @ other.values)
        return self.matrix @ np.asarray(other)

    def __add__(self, other):
        self._check(other)
        return GridOperator(self.matrix + other.matrix, self.grid,
                            f"{self.descriptor} + {other.descriptor}")

    def __sub__(self, other):
        self._check(other)
        return GridOperator(self.matrix - other.matrix, self.grid,
                            f"{self.descriptor} - {other.descriptor}")

    def __mul__(self, scalar):
        return GridOperator(scalar * self.matrix, self.grid, f"{scalar}*{self.descriptor}")

    __rmul__ = __mul__

    def __neg__(self):
        return -1 * self

    @property
    def H(self) -> "GridOperator":
        return GridOperator(self.matrix.conj().T, self.grid, f"({self.descriptor})*")

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def band_norm(self, K: float) -> float:
        return band_norm(self.matrix, self.grid, K)


# ---------------------------------------------------------------------------
# binary export


def write_matrix(path, matrix) -> None:
    """Row-major little-endian complex128 with a 16-byte header."""
    m = np.ascontiguousarray(np.asarray(getattr(matrix, "matrix", matrix), dtype="<c16"))
    rows, cols = m.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", rows, cols))
        fh.write(m.tobytes(order="C"))


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:8] != MAGIC:
            raise UsageError(f"{path} is not a GOPMAT01 file")
        rows, cols = struct.unpack("<II", header[8:])
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != rows * cols:
        raise UsageError(f"{path}: expected {rows * cols} entries, found {data.size}")
    return data.reshape(rows, cols).astype(complex)


# ---------------------------------------------------------------------------
# frequency bands


def band_mask(grid: TorusGrid, K: float, dealias: bool = True) -> np.ndarray:
    xi = grid.frequencies
    mask = np.linalg.norm(xi, axis=-1) >= K
    if dealias:
        mask &= np.max(np.abs(xi), axis=-1) < grid.n_points // 4
    return mask


def to_fourier(matrix: np.ndarray, grid: TorusGrid) -> np.ndarray:
    """Matrix entries in the orthonormal Fourier basis (rows/cols in FFT order)."""
    E = grid.dft_matrix
    return E.conj().T @ matrix @ E / grid.size


def band_norm(matrix, grid: TorusGrid, K: float, dealias: bool = True) -> float:
    """``||P_K M P_K||`` in the spectral norm."""
    m = np.asarray(getattr(matrix, "matrix", matrix))
    mask = band_mask(grid, K, dealias)
    if not mask.any():
        raise UsageError(f"band K={K} is empty on this grid")
    sub = to_fourier(m, grid)[np.ix_(mask, mask)]
    return float(np.linalg.norm(sub, 2))


def band_projector(grid: TorusGrid, K: float, dealias: bool = True) -> GridOperator:
    E = grid.dft_matrix
    d = band_mask(grid, K, dealias).astype(float)
    return GridOperator((E * d) @ E.conj().T / grid.size, grid, f"P_{K}")


# ---------------------------------------------------------------------------
# symbol evaluation on the frequency lattice


def _direction_weights(grid: TorusGrid):
    """For every frequency: the two bracketing direction indices and weights."""
    xi = grid.frequencies
    m = xi.shape[0]
    zero = np.all(xi == 0, axis=-1)
    if grid.dim == 1:
        k0 = np.where(xi[:, 0] > 0, 0, 1)
        return k0, k0, np.zeros(m), zero
    nd = grid.n_dirs
    theta = np.mod(np.arctan2(xi[:, 1], xi[:, 0]), 2 * np.pi) / (2 * np.pi / nd)
    k0 = np.floor(theta).astype(int) % nd
    w = theta - np.floor(theta)
    return k0, (k0 + 1) % nd, w, zero


def symbol_on_frequencies(a, grid: TorusGrid) -> np.ndarray:
    """``vals[j, m] = a(x_j, xi_m/|xi_m|)``, direction average at ``xi = 0``.

    ``a`` is a :class:`HomogeneousSymbol`, a callable ``a(x, omega)`` or ``None``
    (the constant 1).
    """
    if a is None:
        return np.ones((grid.size, grid.size), dtype=complex)
    if isinstance(a, HomogeneousSymbol):
        if a.grid != grid:
            raise UsageError("symbol sampled on a different grid")
        samples = a.samples
    else:
        x, omega = grid.cell_points()
        samples = np.reshape(np.broadcast_to(a(x, omega), (grid.n_cells,)),
                             (grid.size, grid.n_dirs)).astype(complex)
    k0, k1, w, zero = _direction_weights(grid)
    vals = samples[:, k0] * (1.0 - w) + samples[:, k1] * w
    vals[:, zero] = samples.mean(axis=1)[:, None]
    return vals


def quantize_symbol(a: HomogeneousSymbol, grid: Optional[TorusGrid] = None) -> GridOperator:
    """Kohn-Nirenberg quantization of an order-zero homogeneous symbol."""
    grid = a.grid if grid is None else grid
    if a.grid != grid:
        raise UsageError("symbol sampled on a different grid")
    E = grid.dft_matrix
    vals = symbol_on_frequencies(a, grid)
    return GridOperator((vals * E) @ E.conj().T / grid.size, grid, "Op(a)")


def multiplier(grid: TorusGrid, values) -> GridOperator:
    """Fourier multiplier with the given values on the frequencies (FFT order)."""
    E = grid.dft_matrix
    return GridOperator((E * np.asarray(values)) @ E.conj().T / grid.size, grid, "multiplier")


# ---------------------------------------------------------------------------
# shifts


def _offset_of(g, grid: TorusGrid) -> np.ndarray:
    if isinstance(g, CanonicalMap):
        if g.offset is None:
            raise UsageError("only translations of the torus are supported as shifts")
        c = g.offset
    else:
        c = np.atleast_1d(np.asarray(g, dtype=float))
    if c.size != grid.dim:
        raise UsageError("translation vector has the wrong dimension")
    return c


def shift_operator(g, grid: TorusGrid) -> GridOperator:
    """``(Phi u)(x) = u(x - c)`` as the Fourier multiplier ``exp(-i c.xi)``.

    ``g`` is a translation :class:`CanonicalMap` or the offset ``c``.
    """
    c = _offset_of(g, grid)
    op = multiplier(grid, np.exp(-1j * grid.frequencies @ c))
    op.descriptor = f"Shift({c.tolist()})"
    return op


def weighted_shift(g, volume_density, grid: TorusGrid) -> GridOperator:
    """``diag(sqrt(Vol(x - c) / Vol(x))) Shift(c)``, unitary for the ``Vol``-weighted product."""
    vol = np.asarray(volume_density, dtype=float).ravel()
    if vol.size != grid.size:
        raise UsageError("density must be sampled on the grid")
    if np.any(vol <= 0):
        from .errors import DomainError

        raise DomainError("volume density must be strictly positive")
    S = shift_operator(g, grid)
    pulled = np.real(S.matrix @ vol)
    factor = np.sqrt(pulled / vol)
    return GridOperator(factor[:, None] * S.matrix, grid, f"Weighted{S.descriptor}")


# ---------------------------------------------------------------------------
# quantized canonical transformations


@dataclass
class AmplitudeFamily:
    """Amplitudes ``a(g, x, omega)`` vanishing for ``g`` outside ``support``."""

    func: Callable
    support: tuple

    def at(self, g: float) -> Callable:
        lo, hi = self.support
        if not lo <= g <= hi:
            return lambda x, omega: np.zeros(np.shape(x)[:-1], dtype=complex)
        return lambda x, omega: self.func(g, x, omega)

    def __call__(self, g, x, omega):
        return self.at(g)(x, omega)


def _frequency_directions(grid: TorusGrid):
    """Unique primitive directions of the nonzero frequencies and the index map."""
    xi = grid.frequencies
    nonzero = np.any(xi != 0, axis=-1)
    if grid.dim == 1:
        prim = np.sign(xi[:, 0])[:, None]
    else:
        gcd = np.gcd(xi[:, 0], xi[:, 1])
        gcd[gcd == 0] = 1
        prim = xi // gcd[:, None]
    uniq, inverse = np.unique(prim[nonzero], axis=0, return_inverse=True)
    index = np.full(xi.shape[0], -1)
    index[nonzero] = inverse.ravel()
    units = uniq / np.linalg.norm(uniq, axis=-1, keepdims=True)
    return units, index


def quantize_canonical(g: FlowMap, grid: TorusGrid, S: Optional[GeneratingFunction] = None,
                       amplitude: Union[None, Callable, HomogeneousSymbol, AmplitudeFamily] = None) -> GridOperator:
    """Discretized oscillatory integral ``int int exp(i(S(x,p') - p'x')) a u(x') dp' dx'``.

    ``K[j, k] = N^-1 sum_{p'} exp(i (S(x_j, p') - p'.x_k)) a(x_j, p'/|p'|)`` over
    the frequency lattice of the grid; the ``p' = 0`` term carries the
    direction average of the amplitude.  With ``g = id`` and ``a = 1`` this is
    the identity matrix.
    """
    if S is None:
        S = GeneratingFunction(g.hamiltonian, g.time, step=g.step, t_max=g.t_max,
                               n_steps=g.n_steps)
    elif abs(S.time - g.time) > 1e-15:
        raise UsageError("generating function and flow use different times")
    if isinstance(amplitude, AmplitudeFamily):
        amplitude = amplitude.at(g.time)
    units, index = _frequency_directions(grid)
    x = grid.points
    xs = np.repeat(x, units.shape[0], axis=0)
    ps = np.tile(units, (x.shape[0], 1))
    z, _ = S.base_preimage(xs, ps)
    z = z.reshape(x.shape[0], units.shape[0], grid.dim)
    xi = grid.frequencies
    nonzero = index >= 0
    phase = np.zeros((grid.size, grid.size))
    phase[:, nonzero] = np.einsum("jmd,md->jm", z[:, index[nonzero]], xi[nonzero])
    vals = symbol_on_frequencies(amplitude, grid) * np.exp(1j * phase)
    E = grid.dft_matrix
    return GridOperator(vals @ E.conj().T / grid.size, grid, f"Phi({g.descriptor})")


def unitarize(phi: GridOperator) -> GridOperator:
    """Unitary polar factor ``(Phi Phi*)^{-1/2} Phi = W V*`` from ``Phi = W Sigma V*``."""
    W, s, Vh = np.linalg.svd(phi.matrix)
    if s[-1] < UNITARIZE_FLOOR:
        raise ConditioningError(f"smallest singular value {s[-1]:.3e} below {UNITARIZE_FLOOR}")
    return GridOperator(W @ Vh, phi.grid, f"unitarize({phi.descriptor})")


def egorov_transport(a: HomogeneousSymbol, g: CanonicalMap) -> HomogeneousSymbol:
    """``a o g^{-1}`` on the cosphere grid."""
    return a.transport(g)


def egorov_residual(phi: GridOperator, a: HomogeneousSymbol, g: CanonicalMap, K: float) -> float:
    """``||P_K (Phi Op(a) Phi^{-1} - Op(a o g^{-1})) P_K||``."""
    if K < 1:
        raise UsageError("band cutoff K must be >= 1")
    s = phi.singular_values()
    if s[0] == 0 or s[-1] < UNITARIZE_FLOOR * s[0]:
        raise ConditioningError("phi is numerically singular")
    A = quantize_symbol(a, phi.grid).matrix
    conj = phi.matrix @ A @ np.linalg.inv(phi.matrix)
    diff = conj - quantize_symbol(egorov_transport(a, g), phi.grid).matrix
    return band_norm(diff, phi.grid, K)


# ---------------------------------------------------------------------------
# G-operators


class Representation:
    """Group element index -> operator on the grid, cached."""

    def __init__(self, grid: TorusGrid, factory: Callable, descriptor: str = ""):
        self.grid = grid
        self._factory = factory
        self._cache = {}
        self.descriptor = descriptor

    def __call__(self, m) -> GridOperator:
        if m not in self._cache:
            op = self._factory(m)
            if op.grid != self.grid:
                raise UsageError("representation produced an operator on another grid")
            self._cache[m] = op
        return self._cache[m]


def shift_representation(grid: TorusGrid, group) -> Representation:
    """Shift operators for a group acting by translations."""
    return Representation(grid, lambda m: shift_operator(group.act(m), grid), "shift")


def weighted_shift_representation(grid: TorusGrid, group, volume_density) -> Representation:
    return Representation(grid, lambda m: weighted_shift(group.act(m), volume_density, grid),
                          "weighted-shift")


def flow_representation(grid: TorusGrid, group, amplitude=None) -> Representation:
    """Quantized flows ``Phi(g_t, a)`` for a line group acting by a Hamiltonian flow."""
    return Representation(
        grid,
        lambda m: quantize_canonical(FlowMap(group.hamiltonian, group.param(m), step=group.flow_step),
                                     grid, amplitude=amplitude),
        "flow")


def assemble_G_operator(elt, rep: Representation, group=None,
                        grid: Optional[TorusGrid] = None) -> GridOperator:
    """``unit I + sum_g w_g Op(a_g) Phi_g``; ``w_g`` is the Haar weight of ``group``."""
    grid = rep.grid if grid is None else grid
    if grid != rep.grid:
        raise UsageError("representation and grid differ")
    weight = 1.0 if group is None else group.haar
    D = elt.unit * np.eye(grid.size, dtype=complex)
    bound = abs(elt.unit)
    for m in elt.support:
        a = elt.coeffs[m]
        if a.grid != grid:
            raise UsageError(f"coefficient at {m} lives on another grid")
        A = quantize_symbol(a, grid)
        Phi = rep(m)
        D = D + weight * (A.matrix @ Phi.matrix)
        bound += weight * A.norm() * Phi.norm()
    op = GridOperator(D, grid, "G-operator")
    if op.norm() > bound * (1 + 1e-10) + 1e-12:
        raise AssertionError("G-operator norm exceeds the triangle-inequality bound")
    return op
