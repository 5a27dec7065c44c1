"""Scenario runner: ``goperators run <file|builtin>`` and ``goperators list``.

A scenario is a JSON document (schema in ``docs/scenarios.md``).  Each
experiment writes one CSV into the output directory and the run ends with
``summary.json``.  Exit status: 0 when every experiment passes, 2 when one
fails, 1 on usage errors.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List

import numpy as np

from . import acceptance
from .crossed import CrossedElement, GroupModel, finite_section_invertibility
from .errors import GOperatorError, UsageError
from .fredholm import default_bases, winding_symbol
from .hamflow import FlowMap, GeneratingFunction, verify_graph_equations, verify_hamilton_jacobi
from .microlocal import (containment_report, dilate, kernel_of, predicted_wavefront, smoothing_check,
                         wavefront_estimate)
from .phasespace import (HomogeneousSymbol, TorusGrid, check_homogeneous_canonical,
                         check_invariance, conormal_orbit_check, hamiltonian_from_name,
                         transverse_zero_set)
from .quantize import (assemble_G_operator, egorov_residual, flow_representation,
                       quantize_canonical, shift_representation, weighted_shift_representation)

GOLDEN = acceptance.GOLDEN

# ---------------------------------------------------------------------------
# schema

TOP_KEYS = {"name", "description", "manifold", "group", "hamiltonians", "element",
            "experiments", "tolerances", "outputs"}
MANIFOLD_KEYS = {"dim", "n_points", "n_dirs"}
GROUP_KEYS = {"kind", "order", "action", "representation", "density"}
ACTION_KEYS = {"rotation", "hamiltonian", "tau", "window", "step"}
ELEMENT_KEYS = {"unit", "coeffs", "profile"}
COEFF_KEYS = {"g", "symbol"}
PROFILE_KEYS = {"half_width", "symbol"}
SYMBOL_KEYS = {"constant", "builtin", "trig", "scale"}
OUTPUT_KEYS = {"dir"}
EXPERIMENT_KEYS = {
    "egorov": {"type", "hamiltonian", "time", "Ks", "symbol", "min_ratio", "abs_tol", "n_points"},
    "wavefront": {"type", "element", "window_width", "threshold", "slack", "max_fraction"},
    "ellipticity": {"type", "element", "windows", "n_bases", "threshold", "expect"},
    "smoothing": {"type", "element", "Ks", "min_exponent"},
    "hamjac": {"type", "hamiltonians", "times", "step", "n_samples", "radius",
               "canonical_tol", "hj_tol"},
    "transverse": {"type", "tol", "time", "step", "use_pairing"},
    "acceptance": {"type", "criterion"},
}
TOLERANCE_KEYS = {"egorov_min_ratio", "canonical", "hamilton_jacobi", "containment", "smoothing_exponent",
                  "section_threshold"}
DEFAULT_TOLERANCES = {"egorov_min_ratio": 3.0, "canonical": 1e-6, "hamilton_jacobi": 1e-5,
                      "containment": 0.05, "smoothing_exponent": 1.0, "section_threshold": 1e-3}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise UsageError(f"{where} must be an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise UsageError(f"unknown keys in {where}: {sorted(unknown)}")


def validate(sc: dict) -> dict:
    """Reject unknown keys and missing required fields; return the scenario with defaults."""
    _check_keys(sc, TOP_KEYS, "scenario")
    for req in ("name", "manifold", "experiments"):
        if req not in sc:
            raise UsageError(f"scenario is missing {req!r}")
    _check_keys(sc["manifold"], MANIFOLD_KEYS, "manifold")
    if "group" in sc:
        _check_keys(sc["group"], GROUP_KEYS, "group")
        _check_keys(sc["group"].get("action", {}), ACTION_KEYS, "group.action")
    if "element" in sc:
        _check_element(sc["element"], "element")
    _check_keys(sc.get("tolerances", {}), TOLERANCE_KEYS, "tolerances")
    _check_keys(sc.get("outputs", {}), OUTPUT_KEYS, "outputs")
    if not isinstance(sc["experiments"], list) or not sc["experiments"]:
        raise UsageError("experiments must be a non-empty list")
    for i, ex in enumerate(sc["experiments"]):
        if not isinstance(ex, dict) or ex.get("type") not in EXPERIMENT_KEYS:
            raise UsageError(f"experiment {i} has unknown type {ex.get('type') if isinstance(ex, dict) else ex!r}")
        _check_keys(ex, EXPERIMENT_KEYS[ex["type"]], f"experiment {i} ({ex['type']})")
        if "element" in ex:
            _check_element(ex["element"], f"experiment {i} element")
        if "symbol" in ex:
            _check_symbol(ex["symbol"], f"experiment {i} symbol")
    out = copy.deepcopy(sc)
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(sc.get("tolerances", {}))
    out["tolerances"] = tol
    return out


def _check_element(el, where):
    _check_keys(el, ELEMENT_KEYS, where)
    for c in el.get("coeffs", []):
        _check_keys(c, COEFF_KEYS, f"{where}.coeffs")
        _check_symbol(c.get("symbol", 1.0), f"{where}.coeffs.symbol")
    if "profile" in el:
        _check_keys(el["profile"], PROFILE_KEYS, f"{where}.profile")
        _check_symbol(el["profile"].get("symbol", 1.0), f"{where}.profile.symbol")


def _check_symbol(s, where):
    if isinstance(s, (int, float)):
        return
    _check_keys(s, SYMBOL_KEYS, where)


# ---------------------------------------------------------------------------
# builders


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def build_grid(spec) -> TorusGrid:
    return TorusGrid(int(spec["dim"]), int(spec["n_points"]), spec.get("n_dirs"))


def build_symbol(spec, grid: TorusGrid) -> HomogeneousSymbol:
    if isinstance(spec, (int, float)):
        return HomogeneousSymbol.constant(grid, spec)
    scale = _complex(spec.get("scale", 1.0))
    if "constant" in spec:
        a = HomogeneousSymbol.constant(grid, _complex(spec["constant"]))
    elif "builtin" in spec:
        name = spec["builtin"]
        if name == "analytic":
            a = acceptance.analytic_symbol(grid)
        elif name == "winding":
            a = winding_symbol(grid)
        elif name == "one":
            a = HomogeneousSymbol.constant(grid, 1.0)
        else:
            raise UsageError(f"unknown builtin symbol {name!r}")
    elif "trig" in spec:
        if grid.dim != 1:
            raise UsageError("trig symbols are defined on T^1")
        parts = []
        for side in ("plus", "minus"):
            terms = spec["trig"].get(side, [])
            vals = np.zeros(grid.n_points, dtype=complex)
            for k, re, im in terms:
                vals += complex(re, im) * np.exp(1j * int(k) * grid.axis)
            parts.append(vals)
        a = HomogeneousSymbol(grid, np.stack(parts, axis=1))
    else:
        raise UsageError("symbol needs one of 'constant', 'builtin' or 'trig'")
    return a * scale


def build_group(spec, grid: TorusGrid) -> GroupModel:
    if spec is None:
        return GroupModel.rotation(np.zeros(grid.dim), kind="cyclic", order=1)
    kind = spec.get("kind", "integers")
    action = spec.get("action", {})
    if kind == "line":
        H = hamiltonian_from_name(action.get("hamiltonian", "zero"), grid.dim)
        if H.dim != grid.dim:
            raise UsageError("Hamiltonian and manifold dimensions differ")
        return GroupModel.flow(H, float(action.get("tau", 0.0125)), int(action.get("window", 8)),
                               float(action.get("step", 0.01)))
    alpha = np.atleast_1d(np.asarray(action.get("rotation", 0.0), dtype=float))
    if alpha.size != grid.dim:
        raise UsageError("rotation vector and manifold dimensions differ")
    return GroupModel.rotation(alpha, kind=kind, order=spec.get("order"))


def _density(name, grid):
    if name in (None, "uniform"):
        return np.ones(grid.size)
    if name == "cosine":
        return 1.0 + 0.5 * np.cos(grid.points[:, 0])
    raise UsageError(f"unknown density {name!r}")


def build_representation(spec, group: GroupModel, grid: TorusGrid):
    kind = (spec or {}).get("representation", "shift")
    if kind == "shift":
        return shift_representation(grid, group)
    if kind == "weighted-shift":
        return weighted_shift_representation(grid, group, _density(spec.get("density"), grid))
    if kind == "flow":
        return flow_representation(grid, group)
    raise UsageError(f"unknown representation {kind!r}")


def build_element(spec, grid: TorusGrid, group: GroupModel) -> CrossedElement:
    if spec is None:
        raise UsageError("experiment needs a crossed element")
    unit = _complex(spec.get("unit", 0.0))
    if "profile" in spec:
        prof = spec["profile"]
        elt = CrossedElement.from_profile(grid, group, acceptance.smooth_bump(float(prof["half_width"])),
                                          build_symbol(prof.get("symbol", 1.0), grid), unit)
    else:
        elt = CrossedElement(grid, {}, unit)
    for c in spec.get("coeffs", []):
        g = group.normalize(int(c["g"]))
        a = build_symbol(c.get("symbol", 1.0), grid)
        elt.coeffs[g] = elt.coeffs[g] + a if g in elt.coeffs else a
    return elt


# ---------------------------------------------------------------------------
# experiments


class Context:
    def __init__(self, sc: dict, seed: int):
        self.sc = sc
        self.seed = seed
        self.tol = sc["tolerances"]
        self.grid = build_grid(sc["manifold"])
        self.group = build_group(sc.get("group"), self.grid)
        self.rep = build_representation(sc.get("group"), self.group, self.grid)

    def element(self, ex):
        return build_element(ex.get("element", self.sc.get("element")), self.grid, self.group)

    def hamiltonians(self):
        names = self.sc.get("hamiltonians")
        if not names:
            if self.group.hamiltonian is None:
                raise UsageError("scenario names no Hamiltonians")
            return [self.group.hamiltonian]
        return [hamiltonian_from_name(n, self.grid.dim) for n in names]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def exp_egorov(ctx: Context, ex):
    grid = ctx.grid if "n_points" not in ex else TorusGrid(ctx.grid.dim, int(ex["n_points"]), ctx.grid.n_dirs)
    name = ex.get("hamiltonian", "abs-p")
    H = hamiltonian_from_name(name, grid.dim)
    t = float(ex.get("time", 0.1))
    g = FlowMap(H, t)
    phi = quantize_canonical(g, grid)
    a = build_symbol(ex.get("symbol", {"builtin": "analytic"}), grid)
    Ks = [float(k) for k in ex.get("Ks", [1, 2, 4, 8, 16])]
    res = [egorov_residual(phi, a, g, K) for K in Ks]
    abs_tol = ex.get("abs_tol")
    ratio = res[0] / res[-1] if res[-1] > 0 else float("inf")
    if abs_tol is not None:
        ok = max(res) <= float(abs_tol)
    else:
        ok = ratio >= float(ex.get("min_ratio", ctx.tol["egorov_min_ratio"]))
    rows = [(K, r) for K, r in zip(Ks, res)]
    return ok, {"residuals": res, "ratio_first_last": ratio}, (["K", "residual"], rows)


def exp_wavefront(ctx: Context, ex):
    elt = ctx.element(ex)
    D = assemble_G_operator(elt, ctx.rep, ctx.group)
    est = wavefront_estimate(kernel_of(D), int(ex.get("window_width", 8)),
                             float(ex.get("threshold", 0.1)))
    ts = None
    if ctx.group.kind == "line":
        ts = transverse_zero_set(ctx.hamiltonians(), ctx.grid, 1e-9)
    pred = predicted_wavefront(elt, ctx.group, ts, stride=est.stride)
    rep = containment_report(est, pred, int(ex.get("slack", 2)),
                             max_fraction=float(ex.get("max_fraction", ctx.tol["containment"])))
    dil = dilate(pred, int(ex.get("slack", 2)))
    w = est.weights()
    rows = [(c, cp, d, dp, w[c, cp, d, dp], int(dil[c, cp, d, dp])) for c, cp, d, dp in est.cells()]
    return rep["pass"], rep, (["cell", "cell_prime", "dir", "dir_prime", "weight", "predicted"], rows)


def exp_ellipticity(ctx: Context, ex):
    elt = ctx.element(ex)
    bases = default_bases(ctx.grid, int(ex.get("n_bases", 16)), ctx.seed)
    windows = [int(w) for w in ex.get("windows", [8, 16, 32, 64])]
    r = finite_section_invertibility(elt, ctx.group, bases, windows,
                                     float(ex.get("threshold", ctx.tol["section_threshold"])))
    expect = ex.get("expect", "elliptic")
    rows = []
    for i, b in enumerate(bases):
        for j, W in enumerate(windows):
            rows.append((i, " ".join(_fmt(v) for v in b.x), " ".join(_fmt(v) for v in b.omega),
                         W, r.sigma_min[i, j], r.verdicts[i]))
    metrics = {"verdict": r.verdict, "expect": expect, "sigma_min": float(r.sigma_min.min())}
    return r.verdict == expect, metrics, (["base", "x", "omega", "window", "sigma_min", "verdict"], rows)


def exp_smoothing(ctx: Context, ex):
    D = assemble_G_operator(ctx.element(ex), ctx.rep, ctx.group)
    rep = smoothing_check(D, ex.get("Ks"))
    ok = rep["monotone"] and rep["exponent"] >= float(ex.get("min_exponent", ctx.tol["smoothing_exponent"]))
    rows = list(zip(rep["Ks"], rep["norms"]))
    return ok, {"exponent": rep["exponent"], "monotone": rep["monotone"]}, (["K", "band_norm"], rows)


def exp_hamjac(ctx: Context, ex):
    rng = np.random.default_rng(ctx.seed)
    dim = ctx.grid.dim
    n = int(ex.get("n_samples", 32))
    radius = float(ex.get("radius", 1.0))
    x = rng.uniform(-radius, radius, (n, dim))
    if dim == 1:
        p = rng.choice([-1.0, 1.0], (n, 1))
    else:
        th = rng.uniform(0, 2 * np.pi, n)
        p = np.stack([np.cos(th), np.sin(th)], -1)
    step = float(ex.get("step", 0.025))
    hom_tol = float(ex.get("canonical_tol", ctx.tol["canonical"]))
    hj_tol = float(ex.get("hj_tol", ctx.tol["hamilton_jacobi"]))
    names = ex.get("hamiltonians") or ctx.sc.get("hamiltonians") or ["abs-p"]
    rows, ok = [], True
    for name in names:
        H = hamiltonian_from_name(name, dim)
        for t in ex.get("times", [0.1, 0.25]):
            g = FlowMap(H, float(t), step=step)
            hom = check_homogeneous_canonical(g, x, p)["max"]
            S = GeneratingFunction(H, float(t), step=step)
            hj = verify_hamilton_jacobi(S, H, x, p)
            gr = verify_graph_equations(S, g, x, p)["max"]
            ok &= hom <= hom_tol and hj <= hj_tol
            rows.append((name, t, hom, hj, gr))
    worst = {"canonical": max(r[2] for r in rows), "hamilton_jacobi": max(r[3] for r in rows)}
    return ok, worst, (["hamiltonian", "time", "canonical", "hamilton_jacobi", "graph"], rows)


def exp_transverse(ctx: Context, ex):
    hams = ctx.hamiltonians()
    ts = transverse_zero_set(hams, ctx.grid, float(ex.get("tol", 1e-9)), bool(ex.get("use_pairing", False)))
    t = float(ex.get("time", 0.1))
    step = float(ex.get("step", 0.025))
    violations = 0
    inv = []
    for H in hams:
        r = check_invariance(ts, FlowMap(H, t, step=step))
        inv.append(r)
        violations += r["violations"]
    metrics = {"marked": ts.count, "invariance": inv, "violations": violations}
    if all(H.vector_field is not None for H in hams):
        metrics["conormal"] = conormal_orbit_check([H.vector_field for H in hams], ts)
    x, omega = ctx.grid.cell_points()
    flat = ts.mask.ravel()
    angles = np.arctan2(omega[:, -1], omega[:, 0]) if ctx.grid.dim == 2 else omega[:, 0]
    rows = [(i, " ".join(_fmt(v) for v in x[i]), angles[i], int(flat[i])) for i in range(flat.size)]
    ok = violations == 0 and metrics.get("conormal", {"agree": True})["agree"]
    return ok, metrics, (["cell", "x", "direction", "in_set"], rows)


def exp_acceptance(ctx: Context, ex):
    n = int(ex["criterion"])
    if n not in acceptance.CRITERIA:
        raise UsageError(f"no acceptance criterion {n}")
    r = acceptance.CRITERIA[n]()
    rows = _flatten(r.metrics)
    rows.append(("runtime", r.runtime))
    return r.passed, {"title": r.title, "runtime": r.runtime}, (["metric", "value"], rows)


def _flatten(d, prefix=""):
    rows = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            rows.append((key, " ".join(_fmt(x) for x in v)))
        else:
            rows.append((key, v))
    return rows


EXPERIMENTS = {"egorov": exp_egorov, "wavefront": exp_wavefront, "ellipticity": exp_ellipticity,
               "smoothing": exp_smoothing, "hamjac": exp_hamjac, "transverse": exp_transverse,
               "acceptance": exp_acceptance}


# ---------------------------------------------------------------------------
# builtin scenarios

ROTATION_ALPHA = 0.2 * np.pi * GOLDEN

BUILTINS: Dict[str, dict] = {
    "rotation-algebra": {
        "name": "rotation-algebra",
        "description": "weighted shifts along an irrational rotation of the circle",
        "manifold": {"dim": 1, "n_points": 128},
        "group": {"kind": "integers", "action": {"rotation": ROTATION_ALPHA},
                  "representation": "weighted-shift", "density": "cosine"},
        "element": {"unit": 1.0, "coeffs": [{"g": 1, "symbol": {"constant": 0.5}}]},
        "experiments": [
            {"type": "ellipticity", "expect": "elliptic"},
            {"type": "ellipticity", "expect": "degenerate",
             "element": {"unit": 1.0, "coeffs": [{"g": 1, "symbol": {"constant": -1.0}}]}},
            {"type": "wavefront", "element": {"coeffs": [{"g": 1, "symbol": {"builtin": "analytic"}}]}},
        ],
    },
    "translation-flow": {
        "name": "translation-flow",
        "description": "averaged translation flow: transversal symbols, smoothing along orbits",
        "manifold": {"dim": 1, "n_points": 128},
        "group": {"kind": "line", "action": {"hamiltonian": "linear:1", "tau": 0.0125, "window": 80}},
        "experiments": [
            {"type": "wavefront", "element": {"unit": 1.0, "profile": {"half_width": 0.25,
                                                                       "symbol": {"builtin": "analytic"}}}},
            {"type": "smoothing", "Ks": [2, 4, 8, 16],
             "element": {"profile": {"half_width": 1.0, "symbol": {"builtin": "analytic"}}}},
        ],
    },
    "singular-hamiltonian": {
        "name": "singular-hamiltonian",
        "description": "zero set of x1^2 p1 + x2^2 p2, which is not a manifold",
        "manifold": {"dim": 2, "n_points": 32, "n_dirs": 32},
        "hamiltonians": ["quadratic-example"],
        "experiments": [
            {"type": "transverse", "tol": 1e-9, "time": 0.1},
            {"type": "hamjac", "times": [0.1, 0.25]},
        ],
    },
}

ACCEPTANCE = {
    f"acceptance-{n}": {
        "name": f"acceptance-{n}",
        "description": f"acceptance criterion {n}: {acceptance.CRITERIA[n].title}",
        "manifold": {"dim": 1, "n_points": 8},
        "experiments": [{"type": "acceptance", "criterion": n}],
    }
    for n in acceptance.CRITERIA
}


def load_scenario(ref: str) -> dict:
    if ref in BUILTINS:
        return copy.deepcopy(BUILTINS[ref])
    if ref in ACCEPTANCE:
        return copy.deepcopy(ACCEPTANCE[ref])
    if not os.path.exists(ref):
        raise UsageError(f"no scenario file or builtin named {ref!r}")
    with open(ref) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{ref}: invalid JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# running


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    return v


def run_scenario(sc: dict, out_dir: str, seed: int = 0, parallel: bool = False) -> dict:
    """Validate and execute a scenario; returns the summary written to ``summary.json``."""
    sc = validate(sc)
    ctx = Context(sc, seed)
    os.makedirs(out_dir, exist_ok=True)

    def one(i, ex):
        label = f"{i:02d}-{ex['type']}"
        try:
            ok, metrics, (header, rows) = EXPERIMENTS[ex["type"]](ctx, ex)
        except UsageError:
            raise
        except GOperatorError as exc:
            ok, metrics, header, rows = False, {"error": f"{type(exc).__name__}: {exc}"}, ["error"], [(str(exc),)]
        _atomic_write(os.path.join(out_dir, label + ".csv"), _csv_text(header, rows))
        return {"experiment": label, "type": ex["type"], "pass": bool(ok), "metrics": _jsonable(metrics)}

    exps = sc["experiments"]
    if parallel and len(exps) > 1:
        with ThreadPoolExecutor(max_workers=len(exps)) as pool:
            results = list(pool.map(lambda a: one(*a), enumerate(exps)))
    else:
        results = [one(i, ex) for i, ex in enumerate(exps)]
    summary = {"scenario": sc["name"], "seed": seed, "pass": all(r["pass"] for r in results),
               "experiments": results}
    _atomic_write(os.path.join(out_dir, "summary.json"), json.dumps(summary, indent=2) + "\n")
    return summary


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="goperators", description="Run G-operator scenarios.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    r = sub.add_parser("run", help="run a scenario file or builtin scenario")
    r.add_argument("scenario")
    r.add_argument("--out-dir", default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--parallel", action="store_true")
    ls = sub.add_parser("list", help="list builtin scenarios")
    ls.add_argument("--verbose", action="store_true")
    ls.add_argument("--acceptance", action="store_true", help="include the acceptance scenarios")
    return p


def list_scenarios(verbose: bool = False, include_acceptance: bool = False) -> List[str]:
    table = dict(BUILTINS)
    if include_acceptance:
        table.update(ACCEPTANCE)
    lines = []
    for name, sc in table.items():
        line = f"{name:22s} {sc['description']}"
        if verbose:
            line += "  [" + ", ".join(ex["type"] for ex in sc["experiments"]) + "]"
        lines.append(line)
    return lines


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    if args.command == "list":
        print("\n".join(list_scenarios(args.verbose, args.acceptance)))
        return 0
    try:
        sc = load_scenario(args.scenario)
        out_dir = args.out_dir or (sc.get("outputs", {}).get("dir") if isinstance(sc, dict) else None) \
            or os.path.join("runs", str(sc.get("name", "scenario")))
        summary = run_scenario(sc, out_dir, args.seed, args.parallel)
    except UsageError as exc:
        print(f"goperators: usage error: {exc}", file=sys.stderr)
        return 1
    for r in summary["experiments"]:
        print(f"{r['experiment']:20s} {'PASS' if r['pass'] else 'FAIL'}")
    print(f"summary written to {os.path.join(out_dir, 'summary.json')}")
    return 0 if summary["pass"] else 2


if __name__ == "__main__":
    sys.exit(main())
