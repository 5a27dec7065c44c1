"""Acceptance checks, one function per criterion.

Each ``criterion_N()`` runs its experiment at the pinned tolerances and
returns a :class:`CriterionResult`; the wall-clock budget is part of the
verdict.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

from .crossed import (CrossedElement, GroupModel, convolve, finite_section_invertibility,
                      involution, symbol_inverse, trajectory_symbol)
from .fredholm import almost_inverse, default_bases, numerical_index, winding_symbol
from .hamflow import FlowMap, GeneratingFunction, verify_graph_equations, verify_hamilton_jacobi
from .microlocal import (GeneratingPhase, compare_wavefronts, containment_report, kernel_of,
                         predicted_wavefront, smoothing_check, stationary_phase_support,
                         wavefront_estimate)
from .phasespace import (HomogeneousSymbol, TorusGrid, abs_p, check_homogeneous_canonical,
                         linear_hamiltonian, quadratic_example, radial_pairing,
                         translation, transverse_zero_set)
from .quantize import (assemble_G_operator, band_norm, egorov_residual, quantize_canonical,
                       shift_operator, shift_representation)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: Dict = field(default_factory=dict)
    runtime: float = 0.0
    budget: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} {status}  {self.title}  ({self.runtime:.2f}s / {self.budget:.0f}s)"


def _timed(number: int, title: str, budget: float):
    def wrap(fn: Callable[[], tuple]):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            ok, metrics = fn()
            dt = time.perf_counter() - t0
            metrics["within_budget"] = dt < budget
            return CriterionResult(number, title, bool(ok) and dt < budget, metrics, dt, budget)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        run.title = title
        run.budget = budget
        return run
    return wrap


# ---------------------------------------------------------------------------
# shared fixtures


def analytic_symbol(grid: TorusGrid) -> HomogeneousSymbol:
    """A dimension-one symbol with full (exponentially decaying) Fourier content."""
    return HomogeneousSymbol.split(grid, lambda x: 1.0 / (2.0 + np.sin(x)), lambda x: np.exp(np.cos(x)))


def smooth_bump(half_width: float) -> Callable:
    """``exp(-1 / (1 - (t/T)^2))`` on ``|t| < T``."""
    def phi(t):
        s = t / half_width
        return float(np.exp(-1.0 / (1.0 - s * s))) if abs(s) < 1 else 0.0
    return phi


def random_smooth_symbol(grid: TorusGrid, rng, degree: int = 8) -> HomogeneousSymbol:
    """Random dimension-one trigonometric polynomial symbol of the given degree."""
    k = np.arange(-degree, degree + 1)
    c = (rng.normal(size=(2, k.size)) + 1j * rng.normal(size=(2, k.size))) / (1.0 + np.abs(k)) ** 2
    E = np.exp(1j * np.outer(grid.axis, k))
    return HomogeneousSymbol(grid, np.stack([E @ c[0], E @ c[1]], axis=1))


def rotation_group() -> GroupModel:
    """Irrational rotation of the circle by ``2 pi / 10`` times the golden ratio."""
    return GroupModel.rotation(0.2 * np.pi * GOLDEN)


def translation_line(window: int = 80, tau: float = 0.0125) -> GroupModel:
    return GroupModel.flow(linear_hamiltonian([1.0]), tau, window=window)


# ---------------------------------------------------------------------------
# criteria


@_timed(1, "Euler identity and transverse sets", 1.0)
def criterion_1():
    rng = np.random.default_rng(1)
    th = rng.uniform(0, 2 * np.pi, 1000)
    x = rng.uniform(0, 2 * np.pi, (1000, 2))
    p = np.stack([np.cos(th), np.sin(th)], -1)
    hams = {"linear": linear_hamiltonian([1.0, 0.0]), "abs-p": abs_p(2),
            "quadratic-example": quadratic_example()}
    grid = TorusGrid(2, 16, 16)
    euler, agree = {}, {}
    for name, H in hams.items():
        euler[name] = float(np.max(np.abs(radial_pairing(H, x, p) - H(x, p))))
        a = transverse_zero_set([H], grid, 1e-9)
        b = transverse_zero_set([H], grid, 1e-9, use_pairing=True)
        agree[name] = bool(np.array_equal(a.mask, b.mask))
    ok = all(v <= 1e-10 for v in euler.values()) and all(agree.values())
    return ok, {"euler_residual": euler, "sets_agree": agree}


@_timed(2, "canonical and Hamilton-Jacobi residuals of integrated flows", 10.0)
def criterion_2():
    rng = np.random.default_rng(2)
    th = rng.uniform(0, 2 * np.pi, 64)
    # x1^2 p1 + x2^2 p2 blows up at t = 1/|x|: sample a chart around the origin
    x = rng.uniform(-1.0, 1.0, (64, 2))
    p = np.stack([np.cos(th), np.sin(th)], -1)
    hams = {"linear": linear_hamiltonian([1.0, 0.5]), "abs-p": abs_p(2),
            "quadratic-example": quadratic_example()}
    canonical, hj, graph = {}, {}, {}
    for name, H in hams.items():
        canonical[name] = check_homogeneous_canonical(FlowMap(H, 0.25, step=0.025), x, p)["max"]
        S = GeneratingFunction(H, 0.1, step=0.025)
        hj[name] = verify_hamilton_jacobi(S, H, x[:16], p[:16])
        graph[name] = verify_graph_equations(S, FlowMap(H, 0.1, step=0.025), x[:16], p[:16])["max"]
    H = quadratic_example()
    coarse = check_homogeneous_canonical(FlowMap(H, 0.25, step=0.05), x, p)["max"]
    fine = check_homogeneous_canonical(FlowMap(H, 0.25, step=0.025), x, p)["max"]
    ratio = coarse / fine
    ok = (max(canonical.values()) <= 1e-6 and max(hj.values()) <= 1e-5 and ratio >= 8.0)
    return ok, {"canonical": canonical, "hamilton_jacobi": hj, "graph": graph, "halving_ratio": ratio}


@_timed(3, "quantization calibration", 30.0)
def criterion_3():
    grid = TorusGrid(1, 128)
    ident = quantize_canonical(FlowMap(abs_p(1), 0.0), grid)
    err_id = float(np.max(np.abs(ident.matrix - np.eye(grid.size))))
    t, v = 0.2, 1.0
    phi = quantize_canonical(FlowMap(linear_hamiltonian([v]), t), grid)
    err_lin = float(np.max(np.abs(phi.matrix - shift_operator([t * v], grid).matrix)))
    return err_id <= 1e-10 and err_lin <= 1e-8, {"identity": err_id, "linear_flow": err_lin}


@_timed(4, "Egorov decay", 60.0)
def criterion_4():
    grid = TorusGrid(1, 128)
    a = analytic_symbol(grid)
    g = FlowMap(abs_p(1), 0.1)
    phi = quantize_canonical(g, grid)
    Ks = (1, 2, 4, 8, 16)
    flow = [egorov_residual(phi, a, g, K) for K in Ks]
    trans = {}
    for c in (2 * np.pi * 5 / 128, 0.3):
        trans[repr(c)] = [egorov_residual(shift_operator([c], grid), a, translation([c]), K) for K in Ks]
    worst = max(max(r) for r in trans.values())
    ratio = flow[2] / flow[4]
    return ratio >= 3.0 and worst <= 1e-8, {"flow_residuals": flow, "ratio_4_16": ratio,
                                            "translation_max": worst}


@_timed(5, "crossed-product algebra laws", 60.0)
def criterion_5():
    grid = TorusGrid(1, 128)
    G = rotation_group()
    rng = np.random.default_rng(5)

    def elt(support):
        return CrossedElement(grid, {g: random_smooth_symbol(grid, rng) for g in support},
                              complex(rng.normal()))

    a, b, c = elt([0, 1, -2]), elt([1, 2]), elt([-1, 0])
    assoc = (convolve(convolve(a, b, G), c, G) - convolve(a, convolve(b, c, G), G)).max_norm()
    inv2 = (involution(involution(a, G), G) - a).max_norm()
    star = (involution(convolve(a, b, G), G)
            - convolve(involution(b, G), involution(a, G), G)).max_norm()
    f = random_smooth_symbol(grid, rng)
    cov_elt = convolve(convolve(CrossedElement.delta(grid, 1), CrossedElement(grid, {0: f}), G),
                       CrossedElement.delta(grid, -1), G)
    cov = (cov_elt - CrossedElement(grid, {0: G.transport(f, 1)})).max_norm()
    base = default_bases(grid)[3]
    W, r = 10, 2
    prod = trajectory_symbol(a, G, base, W).matrix @ trajectory_symbol(b, G, base, W).matrix
    direct = trajectory_symbol(convolve(a, b, G), G, base, W).matrix
    inner = slice(2 * r, 2 * W + 1 - 2 * r)
    rep_err = float(np.max(np.abs(prod - direct)[inner, inner]))
    rep = shift_representation(grid, G)
    s = analytic_symbol(grid)
    A = CrossedElement(grid, {0: s, 1: s.conj() * 0.5}, 1.0)
    B = CrossedElement(grid, {1: s * s, -1: s.conj()}, 0.5)
    P = (assemble_G_operator(A, rep, G).matrix @ assemble_G_operator(B, rep, G).matrix
         - assemble_G_operator(convolve(A, B, G), rep, G).matrix)
    r4, r16 = band_norm(P, grid, 4), band_norm(P, grid, 16)
    laws = max(assoc, inv2, star, cov, rep_err)
    ok = laws <= 1e-8 and r4 >= 1.5 * r16
    return ok, {"associativity": assoc, "involution_twice": inv2, "star_of_product": star,
                "covariance": cov, "trajectory_representation": rep_err,
                "compose_K4": r4, "compose_K16": r16}


@_timed(6, "trajectory ellipticity", 30.0)
def criterion_6():
    grid = TorusGrid(1, 128)
    G = rotation_group()
    bases = default_bases(grid, 16)
    windows = [8, 16, 32, 64]
    good = CrossedElement(grid, {1: HomogeneousSymbol.constant(grid, 0.5)}, 1.0)
    bad = CrossedElement(grid, {1: HomogeneousSymbol.constant(grid, -1.0)}, 1.0)
    rg = finite_section_invertibility(good, G, bases, windows)
    rb = finite_section_invertibility(bad, G, bases, windows)
    ratios = rb.sigma_min[:, -1] / rb.sigma_min[:, 0]
    ok = rg.sigma_min.min() >= 0.45 and np.all(ratios <= 0.5)
    return ok, {"elliptic_min_sigma": float(rg.sigma_min.min()), "elliptic_verdict": rg.verdict,
                "degenerate_max_ratio": float(ratios.max()), "degenerate_verdict": rb.verdict}


@_timed(7, "Fredholm evidence", 120.0)
def criterion_7():
    sizes = (64, 128, 256)
    ops = []
    for n in sizes:
        grid = TorusGrid(1, n)
        ops.append(assemble_G_operator(CrossedElement(grid, {0: winding_symbol(grid)}),
                                       shift_representation(grid, GroupModel.rotation(0.0))))
    report = numerical_index(ops)
    G = rotation_group()
    residuals = {}
    decreasing = True
    for n in (128, 256):
        grid = TorusGrid(1, n)
        x = CrossedElement(grid, {1: HomogeneousSymbol.constant(grid, 0.5)}, 1.0)
        b, _ = symbol_inverse(x, G, support_cap=8)
        rep = shift_representation(grid, G)
        ai = almost_inverse(assemble_G_operator(x, rep, G), b, rep, 8, G)
        residuals[n] = {"left": ai["left"], "right": ai["right"]}
        decreasing &= ai["decreasing"]
    ok = (report.stable and report.index == -1 and min(report.gap_ratios) >= 10 and decreasing)
    return ok, {"indices": report.indices, "gap_ratios": report.gap_ratios,
                "almost_inverse": residuals, "residuals_decrease": decreasing}


def _containment_cases(n: int):
    grid = TorusGrid(1, n)
    G = rotation_group()
    L = translation_line()
    a = analytic_symbol(grid)
    ts = transverse_zero_set([L.hamiltonian], grid, 1e-9)
    return {
        "identity": (CrossedElement.scalar(grid, 1.0), G, shift_representation(grid, G), None),
        "rotation": (CrossedElement(grid, {1: a}), G, shift_representation(grid, G), None),
        "translation-flow": (CrossedElement.from_profile(grid, L, smooth_bump(0.25), a, unit=1.0),
                             L, shift_representation(grid, L), ts),
    }


@_timed(8, "wavefront containment", 300.0)
def criterion_8():
    fractions = {}
    for n in (128, 256):
        for name, (elt, G, rep, ts) in _containment_cases(n).items():
            est = wavefront_estimate(kernel_of(assemble_G_operator(elt, rep, G)))
            pred = predicted_wavefront(elt, G, ts, stride=est.stride)
            fractions.setdefault(name, {})[n] = containment_report(est, pred, 2)["outside_mass_fraction"]
    ok = all(f[128] <= 0.05 and f[256] <= f[128] for f in fractions.values())
    return ok, {"outside_mass_fraction": fractions}


@_timed(9, "smoothing of averaged operators", 300.0)
def criterion_9():
    out = {}
    for n in (128, 256):
        grid = TorusGrid(1, n)
        L = translation_line()
        elt = CrossedElement.from_profile(grid, L, smooth_bump(1.0), analytic_symbol(grid))
        D = assemble_G_operator(elt, shift_representation(grid, L), L)
        out[n] = smoothing_check(D, Ks=[2, 4, 8, 16])
    e1, e2 = out[128]["exponent"], out[256]["exponent"]
    ok = out[128]["monotone"] and e1 >= 1.0 and abs(e1 - e2) <= 0.3
    return ok, {"exponent_128": e1, "exponent_256": e2, "norms_128": out[128]["norms"]}


@_timed(10, "stationary-phase consistency", 30.0)
def criterion_10():
    grid = TorusGrid(2, 16, 16)
    H = linear_hamiltonian([1.0, 1.0])
    L = GroupModel.flow(H, 0.1, window=2)
    elt = CrossedElement.from_profile(grid, L, smooth_bump(0.25), 1.0)
    ts = transverse_zero_set([H], grid, 1e-9)
    pred = predicted_wavefront(elt, L, ts, pad=0)
    amp = {L.param(m): np.abs(elt.coeffs[m].samples) > 1e-12 for m in elt.support}
    stat = stationary_phase_support(GeneratingPhase(H), grid, list(amp), amp)
    cmp = compare_wavefronts(pred, stat, slack_cells=2)
    return cmp["agree"] and cmp["count_a"] > 0, cmp


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 11)}


def run_all(numbers=None):
    return [CRITERIA[n]() for n in (numbers or sorted(CRITERIA))]


def main(argv=None) -> int:
    import sys
    nums = [int(a) for a in (sys.argv[1:] if argv is None else argv)] or None
    results = run_all(nums)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 2


if __name__ == "__main__":
    raise SystemExit(main())
