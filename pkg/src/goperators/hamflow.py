"""Homogeneous Hamiltonian flows and their generating functions.

Near the identity, the graph of the time-``t`` flow ``g`` is parametrized by
``(x, p')`` and generated by ``S(x, p') = z . p'`` where ``z`` solves
``x(z, t; p') = x`` for the base projection of the trajectory started at
``(z, p')``.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import CausticError, DomainError, SingularityError
from .phasespace import CanonicalMap, Hamiltonian, _as_points, _check_covectors

T_MAX = 0.25
DEFAULT_STEP = 0.01
SINGULAR_P = 1e-8


def _n_steps(t, step):
    return max(1, int(math.ceil(abs(t) / step - 1e-12))) if t != 0 else 0


def _rhs(H, x, p):
    if np.any(np.linalg.norm(p, axis=-1) < SINGULAR_P):
        raise SingularityError("trajectory reached |p| < 1e-8")
    return H.grad_p(x, p), -H.grad_x(x, p)


def integrate_flow(H: Hamiltonian, t: float, x, p, step: float = DEFAULT_STEP,
                   t_max: float = T_MAX, n_steps: Optional[int] = None):
    """Endpoint of the trajectory of ``(dx/dt, dp/dt) = (H_p, -H_x)`` after time ``t``.

    Classical fixed-step RK4; vectorized over leading axes of ``x`` and ``p``.
    ``n_steps`` overrides the step count derived from ``step``.
    """
    if abs(t) > t_max + 1e-15:
        raise DomainError(f"|t| = {abs(t)} exceeds t_max = {t_max}")
    x = np.array(_as_points(x, H.dim), dtype=float)
    p = np.array(_as_points(p, H.dim), dtype=float)
    x, p = np.broadcast_arrays(x, p)
    x, p = x.copy(), p.copy()
    _check_covectors(p)
    n = _n_steps(t, step) if n_steps is None else int(n_steps)
    if n == 0 or t == 0:
        return x, p
    dt = t / n
    for _ in range(n):
        k1x, k1p = _rhs(H, x, p)
        k2x, k2p = _rhs(H, x + 0.5 * dt * k1x, p + 0.5 * dt * k1p)
        k3x, k3p = _rhs(H, x + 0.5 * dt * k2x, p + 0.5 * dt * k2p)
        k4x, k4p = _rhs(H, x + dt * k3x, p + dt * k3p)
        x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        p = p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    _rhs(H, x, p)
    return x, p


class FlowMap(CanonicalMap):
    """Time-``t`` map of a homogeneous Hamiltonian flow."""

    def __init__(self, hamiltonian: Hamiltonian, time: float, step: float = DEFAULT_STEP,
                 t_max: float = T_MAX, n_steps: Optional[int] = None):
        self.hamiltonian = hamiltonian
        self.time = float(time)
        self.step = step
        self.t_max = t_max
        self.n_steps = _n_steps(time, step) if n_steps is None else n_steps
        super().__init__(self._forward, self._inverse, hamiltonian.dim,
                         descriptor=f"flow({hamiltonian.descriptor}, t={self.time})")

    def _forward(self, x, p):
        return integrate_flow(self.hamiltonian, self.time, x, p, t_max=self.t_max,
                              n_steps=self.n_steps)

    def _inverse(self, x, p):
        return integrate_flow(self.hamiltonian, -self.time, x, p, t_max=self.t_max,
                              n_steps=self.n_steps)


class GeneratingFunction:
    """``S(x, p')`` for the time-``t`` flow of ``H``, degree one in ``p'``.

    Evaluation solves ``x(z, t; p') = x`` for ``z`` by damped Newton iteration
    seeded at ``z = x``.  The base trajectory does not depend on ``|p'|``, so
    the solve runs on unit covectors and ``S = |p'| z . p'/|p'|``.
    """

    def __init__(self, hamiltonian: Hamiltonian, time: float, step: float = DEFAULT_STEP,
                 t_max: float = T_MAX, n_steps: Optional[int] = None,
                 tol: float = 1e-12, max_iter: int = 50):
        if abs(time) > t_max + 1e-15:
            raise DomainError(f"|t| = {abs(time)} exceeds t_max = {t_max}")
        self.hamiltonian = hamiltonian
        self.time = float(time)
        self.step = step
        self.t_max = t_max
        self.n_steps = _n_steps(time, step) if n_steps is None else n_steps
        self.tol = tol
        self.max_iter = max_iter
        self.dim = hamiltonian.dim

    def at_time(self, t: float) -> "GeneratingFunction":
        """Same Hamiltonian at another time, keeping the step count when there is one."""
        return GeneratingFunction(self.hamiltonian, t, self.step, self.t_max,
                                  self.n_steps or None, self.tol, self.max_iter)

    def _base_flow(self, z, p):
        return integrate_flow(self.hamiltonian, self.time, z, p, t_max=self.t_max,
                              n_steps=self.n_steps)[0]

    def base_preimage(self, x, p):
        """Solve ``x(z, t; p) = x`` for ``z``; returns ``(z, residual)``."""
        x = np.array(_as_points(x, self.dim), dtype=float)
        p = np.array(_as_points(p, self.dim), dtype=float)
        x, p = np.broadcast_arrays(x, p)
        shape = x.shape
        x = x.reshape(-1, self.dim)
        p = p.reshape(-1, self.dim)
        p = p / _check_covectors(p)[:, None]
        if self.time == 0.0:
            return x.reshape(shape), np.zeros(shape[:-1])
        z = x.copy()
        F = self._base_flow(z, p) - x
        res = np.linalg.norm(F, axis=-1)
        d = self.dim
        h = 1e-6
        for _ in range(self.max_iter):
            active = res > self.tol * (1.0 + np.linalg.norm(x, axis=-1))
            if not active.any():
                return z.reshape(shape), res.reshape(shape[:-1])
            za, pa, xa, Fa, ra = z[active], p[active], x[active], F[active], res[active]
            J = np.empty((za.shape[0], d, d))
            for k in range(d):
                e = np.zeros(d)
                e[k] = h
                J[:, :, k] = (self._base_flow(za + e, pa) - self._base_flow(za - e, pa)) / (2 * h)
            delta = np.linalg.solve(J, Fa[..., None])[..., 0]
            lam = np.ones(za.shape[0])
            z_new = za - delta
            F_new = self._base_flow(z_new, pa) - xa
            r_new = np.linalg.norm(F_new, axis=-1)
            for _ in range(30):
                worse = r_new > ra
                if not worse.any():
                    break
                lam[worse] *= 0.5
                z_new[worse] = za[worse] - lam[worse, None] * delta[worse]
                F_new[worse] = self._base_flow(z_new[worse], pa[worse]) - xa[worse]
                r_new[worse] = np.linalg.norm(F_new[worse], axis=-1)
            z[active], F[active], res[active] = z_new, F_new, r_new
        if np.any(res > self.tol * (1.0 + np.linalg.norm(x, axis=-1))):
            raise CausticError(
                f"Newton inversion did not converge in {self.max_iter} iterations "
                f"(max residual {res.max():.3e})")
        return z.reshape(shape), res.reshape(shape[:-1])

    def evaluate(self, x, p):
        x = np.array(_as_points(x, self.dim), dtype=float)
        p = np.array(_as_points(p, self.dim), dtype=float)
        _check_covectors(p)
        z, _ = self.base_preimage(x, p)
        return np.sum(z * p, axis=-1)

    __call__ = evaluate

    def grad_x(self, x, p, h: float = 1e-5):
        return _fd_grad(self.evaluate, x, p, 0, self.dim, h)

    def grad_p(self, x, p, h: float = 1e-5):
        return _fd_grad(self.evaluate, x, p, 1, self.dim, h)


def _fd_grad(f, x, p, which, dim, h):
    x = np.array(_as_points(x, dim), dtype=float)
    p = np.array(_as_points(p, dim), dtype=float)
    x, p = np.broadcast_arrays(x, p)
    out = np.empty(x.shape)
    base = (x, p)[which]
    scale = h * (1.0 + np.linalg.norm(base, axis=-1))
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        step = scale[..., None] * e
        if which == 0:
            out[..., k] = (f(x + step, p) - f(x - step, p)) / (2 * scale)
        else:
            out[..., k] = (f(x, p + step) - f(x, p - step)) / (2 * scale)
    return out


def generating_function(H: Hamiltonian, t: float, step: float = DEFAULT_STEP,
                        t_max: float = T_MAX) -> GeneratingFunction:
    return GeneratingFunction(H, t, step=step, t_max=t_max)


def verify_hamilton_jacobi(S: GeneratingFunction, H: Hamiltonian, x, p, dt: float = 1e-4) -> float:
    """``max |dS/dt + H(x, dS/dx)|`` over the samples.

    Central time difference; a second-order one-sided difference is used when
    the stencil would cross ``t = 0`` or leave ``[-t_max, t_max]``.
    """
    x = np.array(_as_points(x, S.dim), dtype=float)
    p = np.array(_as_points(p, S.dim), dtype=float)
    t = S.time

    def at(s):
        return S.at_time(s).evaluate(x, p)

    if t + dt > S.t_max or (t < 0.0 <= t + dt and t != 0.0):
        St = (3 * at(t) - 4 * at(t - dt) + at(t - 2 * dt)) / (2 * dt)
    elif t - dt < -S.t_max or t - dt < 0.0 <= t:
        St = (-3 * at(t) + 4 * at(t + dt) - at(t + 2 * dt)) / (2 * dt)
    else:
        St = (at(t + dt) - at(t - dt)) / (2 * dt)
    Sx = S.grad_x(x, p)
    return float(np.max(np.abs(St + H(x, Sx))))


def verify_graph_equations(S: GeneratingFunction, g: CanonicalMap, x, p) -> dict:
    """Check that ``p = S_x`` and ``x' = S_p'`` cut out the graph of ``g``.

    For samples ``(x, p')`` the point ``(x', p')`` with ``x' = S_p'(x, p')`` must
    be mapped by ``g`` to ``(x, S_x(x, p'))``.
    """
    x = np.array(_as_points(x, S.dim), dtype=float)
    p = np.array(_as_points(p, S.dim), dtype=float)
    _check_covectors(p)
    Sx = S.grad_x(x, p)
    x_prime = S.grad_p(x, p)
    gx, gp = g.forward(x_prime, p)
    res_x = float(np.max(np.abs(gx - x)))
    res_p = float(np.max(np.abs(gp - Sx)))
    return {"position": res_x, "momentum": res_p, "max": max(res_x, res_p)}


def action_integral(H: Hamiltonian, t: float, z, p, step: float = DEFAULT_STEP,
                    t_max: float = T_MAX) -> np.ndarray:
    """``int (p dx - H dt)`` along the trajectory from ``(z, p)`` over ``[0, t]``.

    Evaluated with the trapezoid rule on the RK4 nodes; vanishes identically
    for degree-one Hamiltonians by Euler's identity.
    """
    n = _n_steps(t, step)
    x = np.array(_as_points(z, H.dim), dtype=float)
    q = np.array(_as_points(p, H.dim), dtype=float)
    if n == 0:
        return np.zeros(np.broadcast_shapes(x.shape, q.shape)[:-1])
    dt = t / n

    def integrand(x, q):
        return np.sum(q * H.grad_p(x, q), axis=-1) - H(x, q)

    total = 0.5 * integrand(x, q)
    for i in range(n):
        x, q = integrate_flow(H, dt, x, q, t_max=t_max, n_steps=1)
        total = total + (integrand(x, q) if i < n - 1 else 0.5 * integrand(x, q))
    return total * dt
