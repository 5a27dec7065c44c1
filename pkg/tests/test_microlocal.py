import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from goperators.acceptance import GOLDEN, analytic_symbol, smooth_bump
from goperators.crossed import CrossedElement, GroupModel
from goperators.errors import UsageError
from goperators.microlocal import (
    CallablePhase, GeneratingPhase, GridKernel, WavefrontSet, compare_wavefronts,
    containment_report, dilate, empty_wavefront, essential_support, kernel_of, position_cell,
    predicted_wavefront, smoothing_check, stationary_phase_support, wavefront_estimate,
)
from goperators.phasespace import (HomogeneousSymbol, TorusGrid, linear_hamiltonian,
                                   transverse_zero_set)
from goperators.quantize import (GridOperator, assemble_G_operator, multiplier, shift_operator,
                                 shift_representation)

G = TorusGrid(1, 128)


def blur(grid, s=0.3):
    return multiplier(grid, np.exp(-0.5 * (s * grid.frequencies[:, 0]) ** 2))


# -- kernels -------------------------------------------------------------------

def test_kernel_examples():
    K = kernel_of(GridOperator.identity(G)).values
    assert np.allclose(K, np.eye(128) / G.spacing)
    u = np.exp(1j * G.axis)
    v = np.cos(G.axis) + 2
    P = GridOperator(np.outer(u, v.conj()) * G.weight, G)
    assert np.allclose(kernel_of(P).values, np.outer(u, v.conj()))
    # the multiplier of a grid-aligned shift is a delta ridge
    S = kernel_of(shift_operator(5 * G.spacing, G)).values
    j, k = np.nonzero(np.abs(S) > 1e-9)
    assert np.all((j - k) % 128 == 5)


# -- estimates -----------------------------------------------------------------

def test_smooth_kernel_has_empty_estimate():
    assert wavefront_estimate(kernel_of(blur(G))).is_empty


def test_identity_estimate_lies_on_the_diagonal():
    ws = wavefront_estimate(kernel_of(GridOperator.identity(G)))
    cells = ws.cells()
    assert len(cells) > 0
    # overlapping patches blur the ridge by at most one cell
    off = (cells[:, 0] - cells[:, 1]) % ws.cells_per_axis
    assert set(off) <= {0, 1, ws.cells_per_axis - 1} and np.all(cells[:, 2] == cells[:, 3])
    on = cells[off == 0]
    assert len({(c, d) for c, _, d, _ in on}) == 2 * ws.cells_per_axis


def test_shift_estimate_lies_on_the_graph():
    alpha = 2 * np.pi * GOLDEN
    grp = GroupModel.rotation(alpha)
    est = wavefront_estimate(kernel_of(shift_operator(alpha, G)))
    pred = predicted_wavefront(CrossedElement.delta(G, 1), grp, stride=est.stride)
    rep = containment_report(est, pred, 2)
    assert rep["outside_mass_fraction"] == 0.0 and rep["marked"] > 0


def _coarsen(ws):
    c = ws.cells_per_axis
    return ws.mask.reshape(c // 2, 2, c // 2, 2, 2, 2).any(axis=(1, 3))


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2 * np.pi * GOLDEN])
def test_estimate_is_resolution_consistent(alpha):
    coarse = wavefront_estimate(kernel_of(shift_operator(alpha, TorusGrid(1, 64))))
    fine = wavefront_estimate(kernel_of(shift_operator(alpha, TorusGrid(1, 128))))
    down = WavefrontSet(coarse.grid, _coarsen(fine), coarse.stride)
    rep = containment_report(coarse, down, 1)
    assert rep["outside_mass_fraction"] <= 0.1


def test_estimate_usage_errors():
    k = kernel_of(GridOperator.identity(G))
    for kwargs in ({"window_width": 3}, {"window_width": 7}, {"threshold": 1.5}):
        with pytest.raises(UsageError):
            wavefront_estimate(k, **kwargs)
    with pytest.raises(UsageError):
        wavefront_estimate(kernel_of(GridOperator.identity(TorusGrid(2, 8, 16))))


def test_zero_kernel_has_empty_estimate():
    assert wavefront_estimate(GridKernel(np.zeros((128, 128)), G)).is_empty


# -- predictions ---------------------------------------------------------------

def test_prediction_of_single_shift_is_its_graph():
    grp = GroupModel.rotation(10 * G.spacing)
    ws = predicted_wavefront(CrossedElement.delta(G, 1), grp)
    cells = ws.cells()
    assert ws.count == 256
    assert np.all((cells[:, 0] - cells[:, 1]) % 128 == 10) and np.all(cells[:, 2] == cells[:, 3])


def test_prediction_over_essential_support():
    grp = GroupModel.rotation(10 * G.spacing)
    a = HomogeneousSymbol.split(G, lambda x: ((x > 0) & (x < 1)).astype(float), lambda x: 0 * x)
    ws = predicted_wavefront(CrossedElement.delta(G, 1, a), grp, pad=0)
    rows = np.unique(ws.cells()[:, 0])
    assert set(rows) == set(np.flatnonzero((G.axis > 0) & (G.axis < 1)))
    assert np.all(ws.cells()[:, 2] == 0)


def test_unit_contributes_the_diagonal():
    ws = predicted_wavefront(CrossedElement.scalar(G, 1.0), GroupModel.rotation(1.0))
    cells = ws.cells()
    assert ws.count == 256 and np.all(cells[:, 0] == cells[:, 1])


def test_prediction_for_translation_flow_keeps_transverse_directions():
    # enumerate the cells: only omega perpendicular to v survive
    grid = TorusGrid(2, 16, 16)
    H = linear_hamiltonian([1.0, 0.0])
    L = GroupModel.flow(H, 0.1, window=2)
    elt = CrossedElement.from_profile(grid, L, smooth_bump(0.25), 1.0)
    ts = transverse_zero_set([H], grid, 1e-9)
    ws = predicted_wavefront(elt, L, ts, pad=0)
    cells = ws.cells()
    assert set(cells[:, 2]) == {4, 12} and np.all(cells[:, 2] == cells[:, 3])
    shifts = {(int(c) // 16 - int(cp) // 16) % 16 for c, cp in cells[:, :2]}
    assert shifts <= {15, 0, 1} and np.all(cells[:, 0] % 16 == cells[:, 1] % 16)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_prediction_is_monotone(seed):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(2, 8, 16)
    H = linear_hamiltonian([0.0, 1.0])
    L = GroupModel.flow(H, 0.2, window=2)
    big = rng.random((64, 16)) < 0.5
    small = big & (rng.random((64, 16)) < 0.5)
    ts_big = transverse_zero_set([H], grid, 0.5)
    ts_small = transverse_zero_set([H], grid, 0.1)
    elt = lambda m: CrossedElement(grid, {1: HomogeneousSymbol(grid, m.astype(float))})
    p_big = predicted_wavefront(elt(big), L, ts_big, pad=0).mask
    assert not np.any(predicted_wavefront(elt(small), L, ts_big, pad=0).mask & ~p_big)
    assert not np.any(predicted_wavefront(elt(big), L, ts_small, pad=0).mask & ~p_big)


def test_essential_support_padding():
    a = np.zeros((128, 2))
    a[10, 0] = 1.0
    m = essential_support(HomogeneousSymbol(G, a), pad=1)
    assert set(np.flatnonzero(m[:, 0])) == {9, 10, 11} and not m[:, 1].any()


# -- containment -----------------------------------------------------------------

def test_containment_examples():
    pred = predicted_wavefront(CrossedElement.delta(G, 1), GroupModel.rotation(0.5), stride=4)
    assert containment_report(pred, pred)["outside_mass_fraction"] == 0.0
    empty = empty_wavefront(G, 4)
    rep = containment_report(empty, pred)
    assert rep["outside_mass_fraction"] == 0.0 and rep["pass"]
    far = predicted_wavefront(CrossedElement.delta(G, 1), GroupModel.rotation(0.5 + np.pi), stride=4)
    assert not containment_report(far, pred)["pass"]
    with pytest.raises(UsageError):
        containment_report(empty_wavefront(G, 8), pred)


def test_dilation_wraps_around():
    ws = empty_wavefront(G, 4)
    ws.mask[0, 31, 1, 1] = True
    d = dilate(ws, 1)
    assert d[31, 0, 1, 1] and d[1, 30, 1, 1] and not d[0, 31, 0, 1]
    cmp = compare_wavefronts(ws, WavefrontSet(G, d, 4), slack_cells=1)
    assert cmp["agree"]


# -- export ----------------------------------------------------------------------

def test_bitset_and_csv(tmp_path):
    ws = wavefront_estimate(kernel_of(shift_operator(1.0, G)))
    path = tmp_path / "wf.bin"
    ws.to_bitset(path)
    back = WavefrontSet.from_bitset(path)
    assert back.grid == ws.grid and back.stride == ws.stride
    assert np.array_equal(back.mask, ws.mask)
    ws.to_csv(tmp_path / "wf.csv")
    lines = (tmp_path / "wf.csv").read_text().splitlines()
    assert lines[0] == "cell,cell_prime,dir,dir_prime,weight" and len(lines) == ws.count + 1
    (tmp_path / "bad.bin").write_bytes(b"XXXXXXXX" + path.read_bytes()[8:])
    with pytest.raises(UsageError):
        WavefrontSet.from_bitset(tmp_path / "bad.bin")


def test_position_cell_is_periodic():
    assert position_cell(G, [2 * np.pi + 0.45 * G.spacing], 1)[0] == 0
    assert position_cell(G, [-4 * G.spacing], 4)[0] == 31


# -- stationary phase ----------------------------------------------------------

def test_delta_phase_gives_the_diagonal_conormal():
    grid = TorusGrid(1, 32)
    phase = CallablePhase(lambda x, xp, t, th: np.sum((x - xp) * th, axis=-1), 1)
    ws = stationary_phase_support(phase, grid)
    cells = ws.cells()
    assert ws.count == 64
    assert np.all(cells[:, 0] == cells[:, 1]) and np.all(cells[:, 2] == cells[:, 3])


def test_translation_phase_reduces_to_the_zero_set():
    # psi_t = -v . theta vanishes only for theta perpendicular to v
    grid = TorusGrid(2, 16, 16)
    H = linear_hamiltonian([1.0, 0.0])
    ws = stationary_phase_support(GeneratingPhase(H), grid, [0.0, 0.1, 0.2])
    cells = ws.cells()
    assert set(cells[:, 2]) == {4, 12} and np.all(cells[:, 2] == cells[:, 3])
    L = GroupModel.flow(H, 0.1, window=2)
    elt = CrossedElement(grid, {m: HomogeneousSymbol.constant(grid) for m in (0, 1, 2)})
    pred = predicted_wavefront(elt, L, transverse_zero_set([H], grid, 1e-9), pad=0)
    assert compare_wavefronts(pred, ws, slack_cells=2)["agree"]


def test_empty_amplitude_gives_empty_set():
    grid = TorusGrid(1, 32)
    phase = CallablePhase(lambda x, xp, t, th: np.sum((x - xp) * th, axis=-1), 1)
    assert stationary_phase_support(phase, grid, amplitude=np.zeros((32, 2))).is_empty


def test_phase_preconditions():
    grid = TorusGrid(1, 16)
    inhomogeneous = CallablePhase(lambda x, xp, t, th: np.sum((x - xp) * th * np.abs(th), axis=-1), 1)
    with pytest.raises(UsageError):
        stationary_phase_support(inhomogeneous, grid)
    flat = CallablePhase(lambda x, xp, t, th: 0.0 * np.sum(th, axis=-1), 1)
    with pytest.raises(UsageError):
        stationary_phase_support(flat, grid)


# -- smoothing -------------------------------------------------------------------

def test_smoothing_examples():
    rep = smoothing_check(blur(G))
    assert rep["smoothing"] and rep["exponent"] >= 4
    rep = smoothing_check(GridOperator.identity(G))
    assert not rep["smoothing"] and abs(rep["exponent"]) <= 1e-12
    assert rep["Ks"] == [2.0, 4.0, 8.0, 16.0]


def test_averaged_translations_are_smoothing():
    # two resolutions give the same decay exponent
    L = GroupModel.flow(linear_hamiltonian([1.0]), 0.0125, window=80)
    ex = []
    for n in (64, 128):
        grid = TorusGrid(1, n)
        elt = CrossedElement.from_profile(grid, L, smooth_bump(1.0), analytic_symbol(grid))
        D = assemble_G_operator(elt, shift_representation(grid, L), L)
        rep = smoothing_check(D, Ks=[2, 4, 8])
        assert rep["smoothing"]
        ex.append(rep["exponent"])
    assert abs(ex[0] - ex[1]) <= 0.3
