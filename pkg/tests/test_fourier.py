import numpy as np
import pytest

from phasewave.core import GridSpec
from phasewave.errors import DomainError, OutsideNeighborhoodError
from phasewave.exact import error_norms, exact_Psi, exact_field, manifold_point
from phasewave.fourier import (
    eval_fourier_integral,
    eval_fourier_points,
    fourier_phase,
    leading_term_on_manifold,
    solve_stationary_point,
)
from phasewave.hamiltonian import builtin
from phasewave.propagator import apply_kernel_points
from phasewave.wavepacket import chirped_gaussian, prepare_wkb_initial

DATA = chirped_gaussian()


def test_phase_vanishes_at_diagonal_time_zero():
    ev = fourier_phase([1.0, 1.0], [1.0, 1.0], 0.0, builtin("free"), DATA)
    assert abs(ev.value) < 1e-12
    assert np.max(np.abs(ev.gradY)) < 1e-8
    assert np.allclose(ev.hessY, ev.hessY.T)


def test_phase_stationary_on_transported_manifold():
    ev = fourier_phase([2.0, 1.0], [1.0, 1.0], 0.5, builtin("free"), DATA)
    assert np.max(np.abs(ev.gradY)) < 1e-7


@pytest.mark.parametrize(
    "kind,t,X,Y",
    [
        ("free", 0.5, [2.0, 1.0], [1.0, 1.0]),
        ("linear_field", 0.5, [1.75, 0.5], [1.0, 1.0]),
        ("harmonic", np.pi / 8, [np.sqrt(2.0), 0.0], [1.0, 1.0]),
    ],
)
def test_stationary_point_on_manifold_is_real(kind, t, X, Y):
    Ys = solve_stationary_point(X, t, builtin(kind), DATA)
    assert np.allclose(Ys, Y, atol=1e-8)


def test_stationary_point_off_manifold_is_complex():
    Ys = solve_stationary_point([2.0, 1.3], 0.5, builtin("free"), DATA)
    assert np.max(np.abs(Ys.imag)) > 0.05
    assert np.max(np.abs(Ys.imag)) < 0.5


def test_stationary_point_far_away_is_rejected():
    with pytest.raises(OutsideNeighborhoodError):
        solve_stationary_point([0.0, 3.0], 0.5, builtin("free"), DATA)


def test_dual_route_against_kernel_superposition():
    h = 0.1
    m = builtin("linear_field")
    pts = np.array([[0.3, 0.2], [1.5, 0.4], [-1.0, -1.2]])
    a = eval_fourier_points(pts, 0.5, m, DATA, h)
    b = apply_kernel_points(lambda Q, P: prepare_wkb_initial(DATA, np.stack([Q, P], -1), h).value, pts, 0.5, m, h)
    assert np.max(np.abs(a - b)) / np.max(np.abs(b)) < 1e-12


@pytest.mark.parametrize("kind,t", [("free", 0.0), ("free", 0.5), ("linear_field", 0.5), ("harmonic", 0.4)])
def test_fourier_integral_is_first_order_in_hbar(kind, t):
    g = GridSpec(-3, 3, -3, 3, 31, 31)
    m = builtin(kind)
    errs = []
    for h in (0.1, 0.05):
        f = eval_fourier_integral(g, t, m, DATA, h)
        errs.append(error_norms(f, exact_field(kind, g, t, h)).rel_l2)
    assert errs[0] < 4e-2
    assert 0.4 < errs[1] / errs[0] < 0.6


def test_leading_term_at_time_zero_is_prepared_data():
    h = 0.1
    v = leading_term_on_manifold([1.0, 1.0], 0.0, builtin("free"), DATA, h)
    ref = prepare_wkb_initial(DATA, np.array([[1.0, 1.0]]), h).value[0]
    assert abs(v - ref) < 1e-10 * abs(ref)


@pytest.mark.parametrize("kind,t", [("free", 0.5), ("linear_field", 0.5), ("harmonic", 0.3)])
def test_leading_term_converges_at_first_order(kind, t):
    m = builtin(kind)
    hs = np.array([0.1, 0.05])
    rel = []
    for x in manifold_point(kind, np.linspace(-2, 2, 5), t):
        lead = leading_term_on_manifold(x, t, m, DATA, hs)
        rel.append(np.abs(lead / exact_Psi(kind, x[0], x[1], t, hs) - 1))
    sup = np.max(rel, axis=0)
    assert sup[0] < 0.1
    assert 0.4 < sup[1] / sup[0] < 0.6


def test_leading_term_off_manifold():
    with pytest.raises(DomainError):
        leading_term_on_manifold([2.0, 1.3], 0.5, builtin("free"), DATA, 0.1)
