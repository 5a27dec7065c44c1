import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from goperators.crossed import CrossedElement, GroupModel
from goperators.errors import ConditioningError, DomainError, UsageError
from goperators.hamflow import FlowMap
from goperators.phasespace import (HomogeneousSymbol, TorusGrid, abs_p, identity_map,
                                   linear_hamiltonian, translation)
from goperators.quantize import (
    AmplitudeFamily, GridOperator, band_norm, egorov_residual, egorov_transport, multiplier,
    quantize_canonical, quantize_symbol, read_matrix, shift_operator, shift_representation,
    assemble_G_operator, unitarize, weighted_shift, write_matrix,
)

G64 = TorusGrid(1, 64)


def analytic(grid):
    return HomogeneousSymbol.split(grid, lambda x: 1 / (2 + np.sin(x)), lambda x: np.exp(np.cos(x)))


# -- quantize_symbol -----------------------------------------------------------

def test_constant_symbol_is_identity():
    for grid in (G64, TorusGrid(2, 8, 16)):
        assert np.allclose(quantize_symbol(HomogeneousSymbol.constant(grid)).matrix, np.eye(grid.size),
                           atol=1e-12)


def test_direction_free_symbol_is_multiplication():
    grid = TorusGrid(2, 8, 16)
    f = lambda x, om: np.cos(x[..., 0]) + 1j * np.sin(2 * x[..., 1])
    a = HomogeneousSymbol.from_function(grid, f)
    expected = np.diag(f(grid.points, None))
    assert np.allclose(quantize_symbol(a).matrix, expected, atol=1e-12)


def test_sign_symbol_is_hardy_projection():
    # oracle: projection assembled directly from the DFT
    a = HomogeneousSymbol.split(G64, lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    k = np.arange(64)
    k[k >= 32] -= 64
    E = np.exp(1j * np.outer(G64.axis, k))
    d = np.where(k > 0, 1.0, np.where(k == 0, 0.5, 0.0))
    P = (E * d) @ E.conj().T / 64
    assert np.allclose(quantize_symbol(a).matrix, P, atol=1e-12)


def test_quantization_grid_mismatch():
    with pytest.raises(UsageError):
        quantize_symbol(HomogeneousSymbol.constant(G64), TorusGrid(1, 32))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_quantization_is_linear(seed, c):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(1, 16)
    a = HomogeneousSymbol(grid, rng.normal(size=(16, 2)))
    b = HomogeneousSymbol(grid, rng.normal(size=(16, 2)) + 1j * rng.normal(size=(16, 2)))
    lhs = quantize_symbol(a + c * b).matrix
    rhs = quantize_symbol(a).matrix + c * quantize_symbol(b).matrix
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_composition_defect_decays():
    grid = TorusGrid(1, 128)
    a = analytic(grid)
    b = HomogeneousSymbol.split(grid, lambda x: np.exp(1j * np.sin(x)), lambda x: 2 + np.cos(x))
    defect = (quantize_symbol(a) @ quantize_symbol(b) - quantize_symbol(a * b)).matrix
    r = [band_norm(defect, grid, K) for K in (4, 8)]
    assert r[0] / r[1] >= 1.5


# -- shifts --------------------------------------------------------------------

def test_grid_aligned_shift_is_cyclic_permutation():
    S = shift_operator(G64.spacing, G64).matrix
    assert np.allclose(S, np.roll(np.eye(64), 1, axis=0), atol=1e-12)
    assert np.allclose(shift_operator(0.0, G64).matrix, np.eye(64), atol=1e-14)


def test_irrational_shift_has_no_period():
    alpha = 2 * np.pi * (np.sqrt(5) - 1) / 2
    S = shift_operator(alpha, G64).matrix
    assert np.allclose(S.conj().T @ S, np.eye(64), atol=1e-12)
    P = np.eye(64, dtype=complex)
    for _ in range(64):
        P = S @ P
        assert np.linalg.norm(P - np.eye(64), 2) >= 0.1


def test_shift_accepts_only_translations():
    with pytest.raises(UsageError):
        shift_operator(FlowMap(abs_p(1), 0.1), G64)
    with pytest.raises(UsageError):
        shift_operator([0.1, 0.2], G64)


@settings(max_examples=20, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_shifts_form_a_representation(c1, c2):
    grid = TorusGrid(1, 32)
    S1, S2 = shift_operator(c1, grid), shift_operator(c2, grid)
    assert np.allclose((S1 @ S2).matrix, shift_operator(c1 + c2, grid).matrix, atol=1e-10)
    assert np.allclose(S1.matrix.conj().T @ S1.matrix, np.eye(32), atol=1e-12)


def test_weighted_shift_examples():
    vol1 = np.ones(64)
    assert np.allclose(weighted_shift(0.3, vol1, G64).matrix, shift_operator(0.3, G64).matrix)
    vol = 2 + np.sin(G64.axis)
    assert np.allclose(weighted_shift(0.0, vol, G64).matrix, np.eye(64), atol=1e-12)
    # direct evaluation of the density ratio
    W = weighted_shift(np.pi / 2, vol, G64).matrix
    factor = np.sqrt((2 + np.sin(G64.axis - np.pi / 2)) / vol)
    assert np.allclose(W, factor[:, None] * shift_operator(np.pi / 2, G64).matrix, atol=1e-12)
    gram = W.conj().T @ np.diag(vol) @ W
    assert np.max(np.abs(gram - np.diag(vol))) <= 1e-10


def test_weighted_shift_needs_positive_density():
    with pytest.raises(DomainError):
        weighted_shift(0.1, np.zeros(64), G64)


# -- quantized flows -----------------------------------------------------------

def test_quantized_identity():
    Phi = quantize_canonical(FlowMap(abs_p(1), 0.0), G64)
    assert np.allclose(Phi.matrix, np.eye(64), atol=1e-10)
    grid = TorusGrid(2, 8, 16)
    Phi2 = quantize_canonical(FlowMap(linear_hamiltonian([1.0, 0.0]), 0.0), grid)
    assert np.allclose(Phi2.matrix, np.eye(64), atol=1e-10)


def test_quantized_translation_is_shift():
    # S = (x - t v) p' turns the sum into a shifted inverse DFT
    for grid, v in ((G64, [1.0]), (TorusGrid(2, 8, 16), [0.5, -1.0])):
        Phi = quantize_canonical(FlowMap(linear_hamiltonian(v), 0.3, t_max=0.5), grid)
        expected = shift_operator(0.3 * np.asarray(v), grid)
        assert np.max(np.abs(Phi.matrix - expected.matrix)) <= 1e-8


def test_quantized_abs_p_shifts_each_half_line():
    # positive frequencies move by +t and negative ones by -t
    Phi = quantize_canonical(FlowMap(abs_p(1), 0.1), G64)
    k = G64.frequencies[:, 0]
    assert np.max(np.abs(Phi.matrix - multiplier(G64, np.exp(-0.1j * np.abs(k))).matrix)) <= 1e-10
    pos = band_norm(Phi - shift_operator(0.1, G64), G64, 1)
    assert pos > 0.1  # the naive shift misses the negative half-line


def test_amplitude_family_outside_support_vanishes():
    amp = AmplitudeFamily(lambda g, x, om: np.ones(np.shape(x)[:-1]), (0.0, 0.05))
    Phi = quantize_canonical(FlowMap(abs_p(1), 0.1), G64, amplitude=amp)
    assert np.allclose(Phi.matrix, 0)
    amp_in = AmplitudeFamily(lambda g, x, om: np.ones(np.shape(x)[:-1]), (0.0, 0.2))
    Phi_in = quantize_canonical(FlowMap(abs_p(1), 0.1), G64, amplitude=amp_in)
    assert np.allclose(Phi_in.matrix, quantize_canonical(FlowMap(abs_p(1), 0.1), G64).matrix)


# -- unitarize -----------------------------------------------------------------

def test_unitarize_examples():
    S = shift_operator(0.37, G64)
    assert np.allclose(unitarize(S).matrix, S.matrix, atol=1e-12)
    assert np.allclose(unitarize(S * 2.0).matrix, S.matrix, atol=1e-12)
    D = GridOperator(np.diag(np.arange(1.0, 65.0)) @ S.matrix, G64)
    U = unitarize(D).matrix
    assert np.max(np.abs(U @ U.conj().T - np.eye(64))) <= 1e-10
    # W V* from the SVD
    W, _, Vh = np.linalg.svd(D.matrix)
    assert np.allclose(U, W @ Vh, atol=1e-12)


def test_unitarize_idempotent_and_conditioning():
    rng = np.random.default_rng(0)
    A = GridOperator(rng.normal(size=(16, 16)) + 4 * np.eye(16), TorusGrid(1, 16))
    U = unitarize(A)
    assert np.allclose(unitarize(U).matrix, U.matrix, atol=1e-10)
    sing = GridOperator(np.diag(np.r_[np.ones(15), 0.0]), TorusGrid(1, 16))
    with pytest.raises(ConditioningError):
        unitarize(sing)


# -- Egorov --------------------------------------------------------------------

def test_egorov_transport_examples():
    a = HomogeneousSymbol.split(G64, np.sin, np.cos)
    assert np.allclose(egorov_transport(a, identity_map(1)).samples, a.samples)
    b = egorov_transport(a, translation(0.3))
    assert np.allclose(b.samples[:, 0], np.sin(G64.axis - 0.3), atol=1e-12)
    c = HomogeneousSymbol.split(G64, lambda x: np.exp(1j * x), lambda x: np.ones_like(x))
    d = egorov_transport(c, FlowMap(abs_p(1), 0.2))
    assert np.allclose(d.samples[:, 0], np.exp(1j * (G64.axis - 0.2)), atol=1e-10)
    assert np.allclose(d.samples[:, 1], 1.0, atol=1e-10)


def test_egorov_residual_exact_for_translations():
    a = analytic(TorusGrid(1, 128))
    phi = shift_operator(0.3, a.grid)
    for K in (1, 8, 16):
        assert egorov_residual(phi, a, translation(0.3), K) <= 1e-8
    one = HomogeneousSymbol.constant(a.grid)
    assert egorov_residual(phi, one, translation(0.3), 4) <= 1e-12


def test_egorov_residual_decays_for_abs_p_flow():
    grid = TorusGrid(1, 128)
    g = FlowMap(abs_p(1), 0.1)
    phi = quantize_canonical(g, grid)
    a = analytic(grid)
    r4, r16 = egorov_residual(phi, a, g, 4), egorov_residual(phi, a, g, 16)
    assert r4 / max(r16, 1e-300) >= 3


def test_egorov_residual_usage():
    with pytest.raises(UsageError):
        egorov_residual(shift_operator(0.1, G64), analytic(G64), translation(0.1), 0.5)
    with pytest.raises(ConditioningError):
        egorov_residual(GridOperator(np.zeros((64, 64)), G64), analytic(G64), translation(0.1), 2)


# -- G-operators ---------------------------------------------------------------

def test_assemble_examples():
    grid = TorusGrid(1, 128)
    alpha = 2 * np.pi * (np.sqrt(5) - 1) / 2
    group = GroupModel.rotation(alpha)
    rep = shift_representation(grid, group)
    assert np.allclose(assemble_G_operator(CrossedElement.delta(grid, 0), rep, group).matrix,
                       np.eye(128), atol=1e-12)
    assert np.allclose(assemble_G_operator(CrossedElement.delta(grid, 1), rep, group).matrix,
                       shift_operator(alpha, grid).matrix, atol=1e-12)
    c = 0.7 - 0.2j
    D = assemble_G_operator(CrossedElement.delta(grid, 0) + CrossedElement.delta(grid, 1, c), rep, group)
    assert np.allclose(D.matrix, np.eye(128) + c * shift_operator(alpha, grid).matrix, atol=1e-12)
    assert D.norm() <= 1 + abs(c) + 1e-12


def test_assemble_is_additive():
    grid = TorusGrid(1, 32)
    group = GroupModel.rotation(1.0)
    rep = shift_representation(grid, group)
    rng = np.random.default_rng(4)
    a = CrossedElement(grid, {1: HomogeneousSymbol(grid, rng.normal(size=(32, 2)))}, 0.5)
    b = CrossedElement(grid, {1: HomogeneousSymbol(grid, rng.normal(size=(32, 2))),
                              -2: HomogeneousSymbol(grid, rng.normal(size=(32, 2)))})
    lhs = assemble_G_operator(a + b, rep, group).matrix
    rhs = assemble_G_operator(a, rep, group).matrix + assemble_G_operator(b, rep, group).matrix
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_assemble_grid_mismatch():
    grid = TorusGrid(1, 32)
    group = GroupModel.rotation(1.0)
    rep = shift_representation(TorusGrid(1, 64), group)
    with pytest.raises(UsageError):
        assemble_G_operator(CrossedElement.delta(grid, 1), rep, group)


# -- matrix files --------------------------------------------------------------

def test_matrix_file_round_trip(tmp_path):
    M = np.random.default_rng(5).normal(size=(6, 4)) + 1j
    path = tmp_path / "m.bin"
    write_matrix(path, M)
    raw = path.read_bytes()
    assert raw[:8] == b"GOPMAT01" and len(raw) == 16 + 16 * 24
    assert np.array_equal(read_matrix(path), M)
    path.write_bytes(b"NOTMAT00" + raw[8:])
    with pytest.raises(UsageError):
        read_matrix(path)
    path.write_bytes(raw[:-16])
    with pytest.raises(UsageError):
        read_matrix(path)
