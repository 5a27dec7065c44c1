"""Flat tori, their cosphere grids, homogeneous symbols and canonical maps.

The base manifold is the flat torus T^1 or T^2 sampled on a uniform grid.
Points of the cosphere bundle are addressed by a *cell index*
``j * n_dirs + k`` where ``j`` enumerates grid points (row-major for T^2)
and ``k`` enumerates unit directions.  In dimension one the two directions
are ordered ``(+1, -1)``; in dimension two they are the equispaced angles
``2 pi k / n_dirs``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, UsageError

TWO_PI = 2.0 * np.pi
ZERO_COVECTOR_TOL = 1e-14


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return x


def _check_covectors(p):
    norms = np.linalg.norm(p, axis=-1)
    if np.any(norms < ZERO_COVECTOR_TOL):
        raise DomainError("zero covector: T*_0 M excludes the zero section")
    return norms


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on the flat torus of dimension 1 or 2.

    ``n_dirs`` is the resolution of the direction grid on the cosphere.  It is
    fixed to 2 in dimension one and defaults to 32 in dimension two.
    """

    dim: int
    n_points: int
    n_dirs: Optional[int] = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise UsageError(f"dim must be 1 or 2, got {self.dim}")
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise UsageError(f"n_points must be a power of two >= 8, got {n}")
        if self.dim == 1:
            if self.n_dirs not in (None, 2):
                raise UsageError("the cosphere of T^1 has exactly two directions")
            object.__setattr__(self, "n_dirs", 2)
        else:
            nd = 32 if self.n_dirs is None else int(self.n_dirs)
            if nd < 16:
                raise UsageError(f"n_dirs must be >= 16 in dimension 2, got {nd}")
            object.__setattr__(self, "n_dirs", nd)

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n_points

    @property
    def size(self) -> int:
        """Number of grid points, ``n_points ** dim``."""
        return self.n_points**self.dim

    @property
    def n_cells(self) -> int:
        return self.size * self.n_dirs

    @property
    def weight(self) -> float:
        """Riemann weight of one grid point."""
        return self.spacing**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_points)

    @cached_property
    def points(self) -> np.ndarray:
        if self.dim == 1:
            return self.axis[:, None]
        x1, x2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([x1.ravel(), x2.ravel()], axis=-1)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Integer frequencies in FFT order, shape ``(size, dim)``."""
        k = np.rint(np.fft.fftfreq(self.n_points) * self.n_points).astype(int)
        if self.dim == 1:
            return k[:, None]
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        return np.stack([k1.ravel(), k2.ravel()], axis=-1)

    @cached_property
    def angles(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([0.0, np.pi])
        return TWO_PI * np.arange(self.n_dirs) / self.n_dirs

    @cached_property
    def directions(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([[1.0], [-1.0]])
        return np.stack([np.cos(self.angles), np.sin(self.angles)], axis=-1)

    @cached_property
    def dft_matrix(self) -> np.ndarray:
        """``E[j, m] = exp(i x_j . xi_m)``; ``E @ E.conj().T / size`` is the identity."""
        return np.exp(1j * self.points @ self.frequencies.T)

    def cell_points(self):
        """Base points and unit covectors of every cosphere cell."""
        x = np.repeat(self.points, self.n_dirs, axis=0)
        omega = np.tile(self.directions, (self.size, 1))
        return x, omega

    def wrap(self, x):
        return np.mod(x, TWO_PI)

    def nearest_point_index(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        idx = np.rint(self.wrap(x) / self.spacing).astype(int) % self.n_points
        if self.dim == 1:
            return idx[..., 0]
        return idx[..., 0] * self.n_points + idx[..., 1]

    def nearest_direction_index(self, p) -> np.ndarray:
        p = _as_points(p, self.dim)
        if self.dim == 1:
            return np.where(p[..., 0] > 0, 0, 1)
        theta = np.arctan2(p[..., 1], p[..., 0])
        return np.rint(np.mod(theta, TWO_PI) / (TWO_PI / self.n_dirs)).astype(int) % self.n_dirs

    def nearest_cell_index(self, x, p) -> np.ndarray:
        return self.nearest_point_index(x) * self.n_dirs + self.nearest_direction_index(p)


@dataclass(frozen=True)
class CospherePoint:
    """A point ``(x, omega)`` of the cosphere bundle with ``|omega| = 1``."""

    x: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        if x.shape != omega.shape:
            raise UsageError("x and omega must have the same dimension")
        if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
            raise DomainError("cosphere covector must have unit length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "omega", omega)

    @classmethod
    def from_angle(cls, x, theta):
        return cls(x, [np.cos(theta), np.sin(theta)])


# ---------------------------------------------------------------------------
# interpolation


def _periodic_sinc_weights(y, nodes, n):
    """Trigonometric interpolation weights for ``n`` (even) equispaced nodes.

    Exact for trigonometric polynomials of degree below ``n / 2``; the
    Nyquist mode is represented by its cosine part.
    """
    d = y[:, None] - nodes[None, :]
    half = np.sin(0.5 * d)
    full = np.sin(0.5 * n * d)
    on_node = np.abs(half) < 1e-12
    full = np.where(np.abs(full) < 1e-12, 0.0, full)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = full * np.cos(0.5 * d) / (n * half)
    return np.where(on_node, 1.0, w)


def interpolation_matrix(grid: TorusGrid, x, p) -> sp.csr_matrix:
    """Sparse matrix ``W`` with ``W @ samples.ravel()`` = symbol values at ``(x, p)``.

    Dimension one uses trigonometric interpolation in ``x`` and exact direction
    selection by the sign of ``p``.  Dimension two uses bilinear interpolation
    in ``x`` and linear interpolation in the angle of ``p``.
    """
    x = _as_points(x, grid.dim).reshape(-1, grid.dim)
    p = _as_points(p, grid.dim).reshape(-1, grid.dim)
    _check_covectors(p)
    m = x.shape[0]
    nd = grid.n_dirs
    if grid.dim == 1:
        w = _periodic_sinc_weights(grid.wrap(x[:, 0]), grid.axis, grid.n_points)
        k = grid.nearest_direction_index(p)
        rows = np.repeat(np.arange(m), grid.n_points)
        cols = (np.arange(grid.n_points)[None, :] * nd + k[:, None]).ravel()
        W = sp.csr_matrix((w.ravel(), (rows, cols)), shape=(m, grid.n_cells))
        W.eliminate_zeros()
        return W
    n = grid.n_points
    s = grid.wrap(x) / grid.spacing
    i0 = np.floor(s).astype(int)
    f = s - i0
    theta = np.mod(np.arctan2(p[:, 1], p[:, 0]), TWO_PI) / (TWO_PI / nd)
    k0 = np.floor(theta).astype(int)
    g = theta - k0
    rows, cols, vals = [], [], []
    for a in (0, 1):
        wa = f[:, 0] if a else 1.0 - f[:, 0]
        ia = (i0[:, 0] + a) % n
        for b in (0, 1):
            wb = f[:, 1] if b else 1.0 - f[:, 1]
            ib = (i0[:, 1] + b) % n
            for c in (0, 1):
                wc = g if c else 1.0 - g
                kc = (k0 + c) % nd
                rows.append(np.arange(m))
                cols.append((ia * n + ib) * nd + kc)
                vals.append(wa * wb * wc)
    W = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, grid.n_cells),
    )
    W.eliminate_zeros()
    return W


# ---------------------------------------------------------------------------
# symbols


class HomogeneousSymbol:
    """Degree-0 homogeneous function on T*_0 M, sampled on the cosphere grid.

    ``samples`` has shape ``(grid.size, grid.n_dirs)``.
    """

    def __init__(self, grid: TorusGrid, samples):
        samples = np.asarray(samples, dtype=complex)
        if samples.shape != (grid.size, grid.n_dirs):
            raise UsageError(
                f"samples must have shape {(grid.size, grid.n_dirs)}, got {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise DomainError("symbol samples must be finite")
        self.grid = grid
        self.samples = samples

    @classmethod
    def from_function(cls, grid: TorusGrid, func: Callable) -> "HomogeneousSymbol":
        """Sample ``func(x, omega)`` (vectorized over leading axes) on the cells."""
        x, omega = grid.cell_points()
        vals = np.broadcast_to(func(x, omega), (grid.n_cells,))
        return cls(grid, np.reshape(vals, (grid.size, grid.n_dirs)))

    @classmethod
    def constant(cls, grid: TorusGrid, value=1.0) -> "HomogeneousSymbol":
        return cls(grid, np.full((grid.size, grid.n_dirs), value, dtype=complex))

    @classmethod
    def split(cls, grid: TorusGrid, plus: Callable, minus: Callable) -> "HomogeneousSymbol":
        """Dimension-one symbol with ``a(x, +1) = plus(x)`` and ``a(x, -1) = minus(x)``."""
        if grid.dim != 1:
            raise UsageError("split symbols exist only on T^1")
        x = grid.axis
        vals = np.stack([np.broadcast_to(plus(x), x.shape), np.broadcast_to(minus(x), x.shape)], -1)
        return cls(grid, vals)

    @property
    def flat(self) -> np.ndarray:
        return self.samples.ravel()

    def evaluate(self, x, p) -> np.ndarray:
        x = _as_points(x, self.grid.dim)
        p = _as_points(p, self.grid.dim)
        shape = np.broadcast_shapes(x.shape, p.shape)[:-1]
        x = np.broadcast_to(x, shape + (self.grid.dim,))
        p = np.broadcast_to(p, shape + (self.grid.dim,))
        W = interpolation_matrix(self.grid, x, p)
        return (W @ self.flat).reshape(shape)

    def transport(self, g: "CanonicalMap") -> "HomogeneousSymbol":
        """The transported symbol ``a o g^{-1}`` resampled on the cosphere grid."""
        return HomogeneousSymbol(self.grid, (transport_matrix(self.grid, g) @ self.flat).reshape(
            self.samples.shape))

    def pullback(self, g: "CanonicalMap") -> "HomogeneousSymbol":
        """``a o g`` resampled on the cosphere grid."""
        return self.transport(g.inverted())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def conj(self) -> "HomogeneousSymbol":
        return HomogeneousSymbol(self.grid, self.samples.conj())

    def _coerce(self, other):
        if isinstance(other, HomogeneousSymbol):
            if other.grid != self.grid:
                raise UsageError("symbols live on different grids")
            return other.samples
        return other

    def __add__(self, other):
        return HomogeneousSymbol(self.grid, self.samples + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return HomogeneousSymbol(self.grid, self.samples - self._coerce(other))

    def __rsub__(self, other):
        return HomogeneousSymbol(self.grid, self._coerce(other) - self.samples)

    def __mul__(self, other):
        return HomogeneousSymbol(self.grid, self.samples * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return HomogeneousSymbol(self.grid, self.samples / self._coerce(other))

    def __rtruediv__(self, other):
        return HomogeneousSymbol(self.grid, self._coerce(other) / self.samples)

    def __neg__(self):
        return HomogeneousSymbol(self.grid, -self.samples)

    def __repr__(self):
        return f"HomogeneousSymbol(dim={self.grid.dim}, n_points={self.grid.n_points}, max={self.max_abs():.3g})"


def transport_matrix(grid: TorusGrid, g: "CanonicalMap") -> sp.csr_matrix:
    """Linear map on flattened samples realizing ``a -> a o g^{-1}``."""
    x, omega = grid.cell_points()
    y, q = g.inverse(x, omega)
    return interpolation_matrix(grid, y, q)


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass
class Hamiltonian:
    """Degree-one homogeneous Hamiltonian with analytic gradients.

    All callables act on arrays ``x, p`` of shape ``(..., dim)``.
    ``vector_field`` is set when ``H(x, p) = p . X(x)`` comes from a vector
    field on the base.
    """

    value: Callable
    grad_x: Callable
    grad_p: Callable
    dim: int
    descriptor: str
    vector_field: Optional[Callable] = None

    def __call__(self, x, p):
        return self.value(x, p)


def linear_hamiltonian(v) -> Hamiltonian:
    """``H = v . p``, generating translation by ``v``."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return Hamiltonian(
        value=lambda x, p: np.asarray(p) @ v,
        grad_x=lambda x, p: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p))),
        grad_p=lambda x, p: np.broadcast_to(v, np.broadcast_shapes(np.shape(x), np.shape(p))).copy(),
        dim=v.size,
        descriptor="linear:" + ",".join(repr(float(c)) for c in v),
        vector_field=lambda x: np.broadcast_to(v, np.shape(x)).copy(),
    )


def quadratic_example() -> Hamiltonian:
    """``H = x1^2 p1 + x2^2 p2``, whose zero set is not a manifold."""
    return Hamiltonian(
        value=lambda x, p: np.sum(np.asarray(x) ** 2 * p, axis=-1),
        grad_x=lambda x, p: 2.0 * np.asarray(x) * p,
        grad_p=lambda x, p: np.broadcast_to(np.asarray(x) ** 2, np.broadcast_shapes(np.shape(x), np.shape(p))).copy(),
        dim=2,
        descriptor="quadratic-example",
        vector_field=lambda x: np.asarray(x) ** 2,
    )


def abs_p(dim: int = 1) -> Hamiltonian:
    """``H = |p|``: the geodesic flow of the flat metric."""

    def grad_p(x, p):
        p = np.asarray(p, dtype=float)
        return p / _check_covectors(p)[..., None]

    return Hamiltonian(
        value=lambda x, p: np.linalg.norm(p, axis=-1),
        grad_x=lambda x, p: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p))),
        grad_p=grad_p,
        dim=dim,
        descriptor="abs-p",
    )


def zero_hamiltonian(dim: int) -> Hamiltonian:
    """``H = 0``: the generator of the trivial action."""
    return Hamiltonian(
        value=lambda x, p: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p))[:-1]),
        grad_x=lambda x, p: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p))),
        grad_p=lambda x, p: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p))),
        dim=dim,
        descriptor="zero",
        vector_field=lambda x: np.zeros(np.shape(x)),
    )


def point_transformation(field: Callable, jacobian: Callable, dim: int, descriptor: str) -> Hamiltonian:
    """``H = p . X(x)`` for a vector field ``X`` with Jacobian ``dX_i/dx_k``."""
    return Hamiltonian(
        value=lambda x, p: np.sum(np.asarray(p) * field(x), axis=-1),
        grad_x=lambda x, p: np.einsum("...i,...ik->...k", np.asarray(p), jacobian(x)),
        grad_p=lambda x, p: np.broadcast_to(field(x), np.broadcast_shapes(np.shape(x), np.shape(p))).copy(),
        dim=dim,
        descriptor=descriptor,
        vector_field=field,
    )


def hamiltonian_from_name(name: str, dim: int = 2) -> Hamiltonian:
    """Built-ins: ``"linear:v1,v2"``, ``"quadratic-example"``, ``"abs-p"``, ``"zero"``."""
    if name.startswith("linear:"):
        return linear_hamiltonian([float(c) for c in name[len("linear:"):].split(",")])
    if name == "quadratic-example":
        return quadratic_example()
    if name == "abs-p":
        return abs_p(dim)
    if name == "zero":
        return zero_hamiltonian(dim)
    raise UsageError(f"unknown Hamiltonian {name!r}")


def hamiltonian_vector_field(H: Hamiltonian, x, p):
    """``V_H = (dH/dp, -dH/dx)`` at ``(x, p)``."""
    x = _as_points(x, H.dim)
    p = _as_points(p, H.dim)
    _check_covectors(p)
    return H.grad_p(x, p), -H.grad_x(x, p)


def radial_pairing(H: Hamiltonian, x, p):
    """Symplectic pairing of the radial vector ``p d/dp`` with ``V_H``, i.e. ``p . dH/dp``."""
    x = _as_points(x, H.dim)
    p = _as_points(p, H.dim)
    _check_covectors(p)
    return np.sum(p * H.grad_p(x, p), axis=-1)


# ---------------------------------------------------------------------------
# canonical maps


class CanonicalMap:
    """Homogeneous canonical transformation of T*_0 M given by forward and inverse maps.

    ``offset`` is set for translations ``(x, p) -> (x + c, p)``; such maps
    compose to translations and are quantized by exact Fourier multipliers.
    """

    def __init__(self, forward: Callable, inverse: Callable, dim: int,
                 jacobian: Optional[Callable] = None, descriptor: str = "",
                 offset=None):
        self.forward = forward
        self.inverse = inverse
        self.dim = dim
        self.jacobian = jacobian
        self.descriptor = descriptor
        self.offset = None if offset is None else np.atleast_1d(np.asarray(offset, dtype=float))

    def __call__(self, x, p):
        return self.forward(x, p)

    def inverted(self) -> "CanonicalMap":
        off = None if self.offset is None else -self.offset
        return CanonicalMap(self.inverse, self.forward, self.dim,
                            descriptor=f"inverse({self.descriptor})", offset=off)

    def compose(self, other: "CanonicalMap") -> "CanonicalMap":
        """``self o other``."""
        if self.offset is not None and other.offset is not None:
            return translation(self.offset + other.offset)
        return CanonicalMap(
            lambda x, p: self.forward(*other.forward(x, p)),
            lambda x, p: other.inverse(*self.inverse(x, p)),
            self.dim,
            descriptor=f"{self.descriptor}*{other.descriptor}",
        )

    def __repr__(self):
        return f"CanonicalMap({self.descriptor!r})"


def identity_map(dim: int) -> CanonicalMap:
    return translation(np.zeros(dim))


def translation(c) -> CanonicalMap:
    c = np.atleast_1d(np.asarray(c, dtype=float))

    def fwd(x, p):
        return _as_points(x, c.size) + c, np.array(_as_points(p, c.size), dtype=float)

    def inv(x, p):
        return _as_points(x, c.size) - c, np.array(_as_points(p, c.size), dtype=float)

    return CanonicalMap(fwd, inv, c.size, descriptor=f"translation({c.tolist()})", offset=c)


def _fd_jacobian(g: CanonicalMap, x, p, h=1e-5):
    """Central-difference Jacobian blocks of ``g`` at ``(x, p)``.

    Returns ``dgx_dx, dgx_dp, dgp_dx, dgp_dp`` of shape ``(..., d, d)`` with
    index order ``[..., j, k] = d g_j / d z_k``.  The step is ``h (1 + |p|)``.
    """
    d = g.dim
    step = h * (1.0 + np.linalg.norm(p, axis=-1))[..., None]
    blocks = {name: np.empty(x.shape + (d,)) for name in ("xx", "xp", "px", "pp")}
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        for var in ("x", "p"):
            dz = step * e
            if var == "x":
                xp_, pp_ = g.forward(x + dz, p)
                xm_, pm_ = g.forward(x - dz, p)
            else:
                xp_, pp_ = g.forward(x, p + dz)
                xm_, pm_ = g.forward(x, p - dz)
            blocks["x" + var][..., k] = (xp_ - xm_) / (2 * step)
            blocks["p" + var][..., k] = (pp_ - pm_) / (2 * step)
    return blocks["xx"], blocks["xp"], blocks["px"], blocks["pp"]


def check_homogeneous_canonical(g: CanonicalMap, x, p, h: float = 1e-5) -> dict:
    """Residuals of the conditions for ``g`` to preserve ``p dx``.

    ``momentum`` is ``max |sum_j g_pj d g_xj / d p_k|`` and ``position`` is
    ``max |sum_j g_pj d g_xj / d x_k - p_k|`` over the samples.
    """
    x = _as_points(x, g.dim).reshape(-1, g.dim)
    p = _as_points(p, g.dim).reshape(-1, g.dim)
    _check_covectors(p)
    if g.jacobian is not None:
        dxx, dxp = g.jacobian(x, p)[:2]
    else:
        dxx, dxp, _, _ = _fd_jacobian(g, x, p, h)
    _, gp = g.forward(x, p)
    momentum = np.einsum("nj,njk->nk", gp, dxp)
    position = np.einsum("nj,njk->nk", gp, dxx) - p
    res_m = float(np.max(np.abs(momentum)))
    res_x = float(np.max(np.abs(position)))
    return {"momentum": res_m, "position": res_x, "max": max(res_m, res_x)}


# ---------------------------------------------------------------------------
# transverse cotangent space


@dataclass
class TransverseSet:
    """Cells of the cosphere grid where every generating Hamiltonian vanishes."""

    grid: TorusGrid
    mask: np.ndarray
    tol: float
    hamiltonians: Sequence[Hamiltonian] = field(default_factory=tuple)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    def contains(self, x, p) -> np.ndarray:
        return self.mask.ravel()[self.grid.nearest_cell_index(x, p)]

    def cells(self):
        """Base points and directions of the marked cells."""
        x, omega = self.grid.cell_points()
        flat = self.mask.ravel()
        return x[flat], omega[flat]


def _max_abs_hamiltonians(hams, x, omega, use_pairing):
    vals = [np.abs(radial_pairing(H, x, omega) if use_pairing else H(x, omega)) for H in hams]
    return np.max(np.stack(vals), axis=0)


def transverse_zero_set(hams: Sequence[Hamiltonian], grid: TorusGrid, tol: float,
                        use_pairing: bool = False) -> TransverseSet:
    """Cells where ``max_i |H_i(x, omega)| <= tol`` on the unit cosphere.

    With ``use_pairing`` the values ``p . dH/dp`` are used instead of ``H``.
    """
    hams = list(hams)
    if not hams:
        raise UsageError("at least one Hamiltonian is required")
    if tol <= 0:
        raise UsageError("tol must be positive")
    x, omega = grid.cell_points()
    values = _max_abs_hamiltonians(hams, x, omega, use_pairing)
    mask = (values <= tol).reshape(grid.size, grid.n_dirs)
    return TransverseSet(grid, mask, tol, tuple(hams))


def check_invariance(ts: TransverseSet, g: CanonicalMap, slack: float = 1e-8) -> dict:
    """Count marked cells whose image under ``g`` leaves the zero set."""
    if g.dim != ts.grid.dim:
        raise UsageError("map and grid dimensions differ")
    x, omega = ts.cells()
    if x.shape[0] == 0:
        return {"checked": 0, "violations": 0, "fraction": 0.0}
    y, q = g.forward(x, omega)
    q = q / _check_covectors(q)[:, None]
    values = _max_abs_hamiltonians(ts.hamiltonians, y, q, False)
    bad = int(np.sum(values > ts.tol + slack))
    return {"checked": int(x.shape[0]), "violations": bad, "fraction": bad / x.shape[0]}


def conormal_orbit_check(base_vector_fields: Sequence[Callable], ts: TransverseSet) -> dict:
    """Compare ``ts`` with the covectors annihilating the orbit tangents ``X_i(x)``."""
    if any(H.vector_field is None for H in ts.hamiltonians):
        raise UsageError("transverse set was not generated by point transformations")
    if not base_vector_fields:
        raise UsageError("at least one vector field is required")
    x, omega = ts.grid.cell_points()
    vals = np.stack([np.abs(np.sum(omega * X(x), axis=-1)) for X in base_vector_fields])
    expected = (np.max(vals, axis=0) <= ts.tol).reshape(ts.mask.shape)
    mismatches = int(np.sum(expected != ts.mask))
    return {"mismatches": mismatches, "agree": mismatches == 0, "marked": int(expected.sum())}
