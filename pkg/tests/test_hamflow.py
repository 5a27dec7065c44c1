import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from goperators.errors import CausticError, DomainError, SingularityError
from goperators.hamflow import (
    FlowMap, action_integral, generating_function, integrate_flow, verify_graph_equations,
    verify_hamilton_jacobi,
)
from goperators.phasespace import (
    Hamiltonian, abs_p, check_homogeneous_canonical, identity_map, linear_hamiltonian,
    quadratic_example, translation,
)


def _box(n=30, seed=0, dim=2):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (n, dim))
    p = rng.normal(size=(n, dim))
    return x, p / np.linalg.norm(p, axis=-1, keepdims=True)


# -- integrate_flow ------------------------------------------------------------

def test_translation_flow_is_exact():
    v = np.array([0.4, -1.0])
    x, p = _box()
    y, q = integrate_flow(linear_hamiltonian(v), 0.3, x, p, t_max=0.5)
    assert np.allclose(y, x + 0.3 * v, atol=1e-14) and np.allclose(q, p)


def test_abs_p_rotates_the_circle():
    y, q = integrate_flow(abs_p(1), 0.1, [0.7], [1.0])
    assert y[0] == pytest.approx(0.8, abs=1e-14) and q[0] == pytest.approx(1.0)
    y, q = integrate_flow(abs_p(1), 0.1, [0.7], [-3.0])
    assert y[0] == pytest.approx(0.6, abs=1e-14) and q[0] == pytest.approx(-3.0)


def test_quadratic_flow_conserves_energy():
    # endpoint matches a refined-step integration; H = 0 preserved
    H = quadratic_example()
    x0, p0 = np.array([1.0, 1.0]), np.array([1.0, -1.0])
    y, q = integrate_flow(H, 0.05, x0, p0)
    y_ref, q_ref = integrate_flow(H, 0.05, x0, p0, step=0.001)
    assert abs(H(y, q)) <= 1e-10
    assert np.allclose(y, y_ref, atol=1e-9) and np.allclose(q, q_ref, atol=1e-9)


def test_time_limit_and_zero_covector():
    with pytest.raises(DomainError):
        integrate_flow(abs_p(1), 0.3, [0.0], [1.0])
    with pytest.raises(DomainError):
        integrate_flow(abs_p(1), 0.1, [0.0], [0.0])


def test_trajectory_reaching_zero_covector():
    # dp/dt = -1 drives p from 0.02 to zero
    H = Hamiltonian(value=lambda x, p: (x + p)[..., 0], grad_x=lambda x, p: np.ones_like(x),
                    grad_p=lambda x, p: np.ones_like(p), dim=1, descriptor="test")
    with pytest.raises(SingularityError):
        integrate_flow(H, 0.25, [0.0], [0.02], step=0.001)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["quadratic", "abs", "linear"]), st.integers(0, 1000),
       st.floats(0.1, 10.0))
def test_flow_is_homogeneous_and_reversible(which, seed, lam):
    H = {"quadratic": quadratic_example(), "abs": abs_p(2),
         "linear": linear_hamiltonian([1.0, 0.5])}[which]
    x, p = _box(10, seed)
    y, q = integrate_flow(H, 0.2, x, p)
    y2, q2 = integrate_flow(H, 0.2, x, lam * p)
    assert np.max(np.abs(y2 - y)) <= 1e-8 and np.max(np.abs(q2 - lam * q)) <= 1e-8 * lam
    xb, pb = integrate_flow(H, -0.2, y, q)
    assert np.max(np.abs(xb - x)) <= 1e-8 and np.max(np.abs(pb - p)) <= 1e-8
    assert np.all(np.abs(H(y, q) - H(x, p)) <= 1e-8 * (1 + np.abs(H(x, p))))


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.12, 0.12), st.floats(-0.12, 0.12), st.integers(0, 1000))
def test_flow_group_property(t1, t2, seed):
    H = quadratic_example()
    x, p = _box(10, seed)
    a = integrate_flow(H, t1, *integrate_flow(H, t2, x, p, step=0.002), step=0.002)
    b = integrate_flow(H, t1 + t2, x, p, step=0.002)
    assert np.max(np.abs(a[0] - b[0])) <= 1e-7 and np.max(np.abs(a[1] - b[1])) <= 1e-7


def test_canonical_residual_order():
    # halving the step must cut the residual by at least 2^3
    H = quadratic_example()
    x, p = _box()
    r1 = check_homogeneous_canonical(FlowMap(H, 0.2, step=0.1), x, p)["max"]
    r2 = check_homogeneous_canonical(FlowMap(H, 0.2, step=0.05), x, p)["max"]
    assert r1 / r2 >= 8


# -- generating functions ----------------------------------------------------

def test_generating_function_at_time_zero():
    # the identity is generated by x . p'
    x, p = _box()
    S = generating_function(quadratic_example(), 0.0)
    assert np.array_equal(S(x, p), np.sum(x * p, axis=-1))


def test_generating_function_of_translation():
    # characteristics z = x - t v
    v = np.array([0.5, -0.25])
    x, p = _box()
    S = generating_function(linear_hamiltonian(v), 0.2)
    assert np.allclose(S(x, 3 * p), np.sum((x - 0.2 * v) * 3 * p, axis=-1), atol=1e-12)


def test_generating_function_of_abs_p():
    S = generating_function(abs_p(1), 0.1)
    x = np.linspace(0, 2 * np.pi, 9)[:, None]
    assert np.allclose(S(x, [2.0]), 2.0 * (x[:, 0] - 0.1), atol=1e-12)
    assert np.allclose(S(x, [-1.0]), -(x[:, 0] + 0.1), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([0.5, 2.0, 10.0]), st.integers(0, 1000))
def test_generating_function_is_homogeneous(lam, seed):
    S = generating_function(quadratic_example(), 0.1)
    x, p = _box(10, seed)
    assert np.allclose(S(x, lam * p), lam * S(x, p), atol=1e-8)


def test_newton_failure_is_a_caustic():
    S = generating_function(quadratic_example(), 0.25)
    S.max_iter = 1
    with pytest.raises(CausticError):
        S(np.array([[0.9, -0.8]]), np.array([[1.0, 1.0]]))


def test_base_preimage_residual():
    S = generating_function(quadratic_example(), 0.1)
    x, p = _box()
    z, res = S.base_preimage(x, p)
    assert res.max() <= 1e-10
    y, _ = integrate_flow(quadratic_example(), 0.1, z, p)
    assert np.allclose(y, x, atol=1e-10)


# -- Hamilton-Jacobi and graph equations -------------------------------------

def test_hamilton_jacobi_translation():
    S = generating_function(linear_hamiltonian([1.0, 2.0]), 0.1)
    x, p = _box()
    assert verify_hamilton_jacobi(S, linear_hamiltonian([1.0, 2.0]), x, p) <= 1e-8


def test_hamilton_jacobi_at_time_zero():
    H = quadratic_example()
    x, p = _box()
    assert verify_hamilton_jacobi(generating_function(H, 0.0), H, x, p) <= 1e-6


def test_hamilton_jacobi_near_time_limit():
    H = quadratic_example()
    x, p = _box()
    assert verify_hamilton_jacobi(generating_function(H, 0.25), H, x, p) <= 1e-5


def test_hamilton_jacobi_quadratic_refines():
    # oracle: refining the integrator step does not make the residual worse
    H = quadratic_example()
    x, p = _box()
    r1 = verify_hamilton_jacobi(generating_function(H, 0.05, step=0.025), H, x, p)
    r2 = verify_hamilton_jacobi(generating_function(H, 0.05, step=0.0125), H, x, p)
    assert r1 <= 1e-5 and r2 <= 1e-5


def test_graph_equations():
    x, p = _box()
    S0 = generating_function(quadratic_example(), 0.0)
    assert verify_graph_equations(S0, identity_map(2), x, p)["max"] <= 1e-9
    v = np.array([0.3, 0.1])
    St = generating_function(linear_hamiltonian(v), 0.2)
    assert verify_graph_equations(St, translation(0.2 * v), x, p)["max"] <= 1e-9
    xs = np.linspace(0.1, 6.0, 12)[:, None]
    ps = np.where(np.arange(12) % 2, 1.0, -1.0)[:, None]
    Sa = generating_function(abs_p(1), 0.1)
    assert verify_graph_equations(Sa, FlowMap(abs_p(1), 0.1), xs, ps)["max"] <= 1e-6
    H = quadratic_example()
    assert verify_graph_equations(generating_function(H, 0.1), FlowMap(H, 0.1), x, p)["max"] <= 1e-5


def test_action_integral_vanishes():
    x, p = _box()
    for H in (quadratic_example(), abs_p(2), linear_hamiltonian([1.0, -1.0])):
        assert np.max(np.abs(action_integral(H, 0.2, x, p))) <= 1e-8
