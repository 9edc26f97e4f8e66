import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from phasewave.core import ComplexField, GridSpec
from phasewave.errors import QuadratureError, ResolutionError, StalenessError, UnsupportedError
from phasewave.exact import error_norms, exact_field, initial_Psi
from phasewave.hamiltonian import builtin, polynomial
from phasewave.propagator import (
    QuadratureSpec,
    apply_kernel_points,
    apply_phase_space_hamiltonian,
    bergmann_kernel,
    build_source_cache,
    kernel_KZ,
    pde_residual,
    propagate_aga,
    propagate_frozen,
)

H = 0.1
TARGETS = GridSpec(-2.5, 2.5, -2.5, 2.5, 21, 21)


def _psi0(Q, P):
    return initial_Psi(Q, P, H)


@pytest.mark.parametrize("X,Y", [((0.3, -0.4), (0.1, 0.2)), ((1.0, 0.5), (0.8, 0.9)), ((0.0, 0.0), (0.0, 0.0))])
def test_bergmann_kernel_is_coherent_state_overlap(X, Y):
    assert abs(bergmann_kernel(np.array(X), np.array(Y), H) - oracles.bergmann(X, Y, H)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_kernel_at_time_zero_is_bergmann(q, p, eta, xi):
    m = builtin("harmonic")
    k = kernel_KZ([q, p], [eta, xi], 0.0, m, H)
    assert abs(k.value - bergmann_kernel(np.array([q, p]), np.array([eta, xi]), H)) < 1e-12


def test_kernel_hermitian_at_time_zero():
    m = builtin("free")
    X, Y = np.array([0.4, 0.1]), np.array([-0.2, 0.7])
    a = kernel_KZ(X, Y, 0.0, m, H).value
    b = kernel_KZ(Y, X, 0.0, m, H).value
    assert abs(a - np.conj(b)) < 1e-14


def test_kernel_cache_consistency():
    m = builtin("linear_field")
    Y = np.array([[0.1, 0.2], [0.5, -0.3]])
    cache = build_source_cache(m, Y, 0.4)
    a = kernel_KZ([0.7, 0.1], Y[1], 0.4, m, H, cache=cache)
    b = kernel_KZ([0.7, 0.1], Y[1], 0.4, m, H)
    assert abs(a.value - b.value) < 1e-15
    assert set(a.components) == {"action", "midpoint", "symplectic", "quadratic"}
    with pytest.raises(StalenessError):
        kernel_KZ([0.7, 0.1], [9.0, 9.0], 0.4, m, H, cache=cache)
    with pytest.raises(StalenessError):
        kernel_KZ([0.7, 0.1], Y[1], 0.5, m, H, cache=cache)


@pytest.mark.parametrize("kind,t", [("free", 0.5), ("linear_field", 0.5), ("harmonic", 0.4), ("harmonic", 1.3)])
def test_aga_reproduces_exact_fields(kind, t):
    f = propagate_aga(_psi0, TARGETS, t, builtin(kind), H)
    assert f.method == "aga"
    assert error_norms(f, exact_field(kind, TARGETS, t, H)).rel_l2 < 1e-8


def test_aga_at_frozen_oracle_point():
    # linear field, t = 1, X = (1, 0): value from the brute-force oracle
    v = apply_kernel_points(_psi0, [[1.0, 0.0]], 1.0, builtin("linear_field"), H)[0]
    assert abs(v - (0.2544458999124468 - 0.08957913849786697j)) < 1e-8


def test_sampled_initial_field_route():
    g = QuadratureSpec().grid(H)
    Q, P = g.mesh()
    init = ComplexField(g, initial_Psi(Q, P, H), H, 0.0, "exact")
    a = propagate_aga(init, TARGETS, 0.5, builtin("free"), H)
    b = propagate_aga(_psi0, TARGETS, 0.5, builtin("free"), H)
    assert np.max(np.abs(a.values - b.values)) < 1e-14


def test_frozen_agrees_at_zero_and_drifts_later():
    m = builtin("free")
    ref0 = exact_field("free", TARGETS, 0.0, H)
    assert error_norms(propagate_frozen(_psi0, TARGETS, 0.0, m, H), ref0).rel_l2 < 1e-8
    err = error_norms(propagate_frozen(_psi0, TARGETS, 0.5, m, H), exact_field("free", TARGETS, 0.5, H)).rel_l2
    assert 0.05 < err < 0.5


def test_quadrature_box_guard():
    with pytest.raises(QuadratureError) as exc:
        propagate_aga(_psi0, TARGETS, 0.1, builtin("free"), H, QuadratureSpec(box=(-1, 1, -1, 1)))
    assert exc.value.suggested_box == (-2.0, 2.0, -2.0, 2.0)


def test_phase_space_hamiltonian_on_simple_fields():
    g = GridSpec(-1, 1, -1, 1, 41, 41)
    ones = ComplexField(g, np.ones(g.shape), H, 0.0, "exact")
    out = apply_phase_space_hamiltonian(ones, builtin("free"))
    Q, P = out.grid.mesh()
    assert np.allclose(out.values, P**2 / 4, atol=1e-13)
    out = apply_phase_space_hamiltonian(ones, builtin("harmonic"))
    assert np.allclose(out.values, P**2 / 4 + Q**2 / 4, atol=1e-13)
    with pytest.raises(UnsupportedError):
        apply_phase_space_hamiltonian(ones, polynomial([0, 0, 0, 1.0]))
    coarse = ComplexField(GridSpec(-1, 1, -1, 1, 5, 5), np.ones(25), H, 0.0, "exact")
    with pytest.raises(ResolutionError):
        apply_phase_space_hamiltonian(coarse, builtin("free"))


def test_pde_residual_small_for_exact_and_large_for_wrong_dynamics():
    g = GridSpec(-3, 3, -3, 3, 301, 301)
    field_at = lambda s: exact_field("free", g, s, H)  # noqa: E731
    assert pde_residual(field_at, 0.5, builtin("free"), H) < 1e-4
    assert pde_residual(field_at, 0.5, builtin("harmonic"), H) > 1e-1
