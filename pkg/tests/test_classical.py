import numpy as np
import pytest

from phasewave.classical import (
    EXCEEDS_HORIZON,
    VariationalState,
    anisotropy_Q,
    anisotropy_Q_batch,
    anisotropy_Z,
    ehrenfest_time,
    flow_bundle,
    integrate_flow,
    integrate_variational,
)
from phasewave.errors import CausticError, StepSizeError, ValidationError
from phasewave.hamiltonian import builtin


def test_harmonic_orbit_and_action():
    # H = p^2 + q^2 moves on circles with frequency 2
    m = builtin("harmonic")
    tr = integrate_flow(m, [1.0, 0.0], 1.0)
    assert np.allclose(tr.final_point, [np.cos(2.0), -np.sin(2.0)], atol=1e-12)
    # action int (p dq - H dt), checked against quadrature of the sampled orbit
    t = tr.t_samples
    q, p = tr.points[:, 0], tr.points[:, 1]
    integrand = p * np.gradient(q, t) - (p**2 + q**2)
    assert abs(tr.action[-1] - np.trapezoid(integrand, t)) < 1e-5


def test_linear_field_orbit():
    # H = p^2 + q: q(t) = q0 + 2 p0 t - t^2, p(t) = p0 - t
    tr = integrate_flow(builtin("linear_field"), [0.5, 1.0], 0.8)
    assert np.allclose(tr.final_point, [0.5 + 1.6 - 0.64, 0.2], atol=1e-13)


def test_backward_flow_inverts_forward():
    m = builtin("harmonic")
    X0 = np.array([[0.3, -0.7], [1.0, 2.0]])
    fwd = flow_bundle(m, X0, 0.7, variational=False)
    back = flow_bundle(m, fwd.X, -0.7, variational=False)
    assert np.allclose(back.X, X0, atol=1e-12)


def test_variational_matches_linearised_flow_free():
    tr = integrate_variational(builtin("free"), [0.0, 0.0], 0.5)
    st = tr.final
    assert np.allclose(st.A, [[1 + 1j * 1.0]], atol=1e-12)
    assert np.allclose(st.B, [[1j]], atol=1e-12)
    assert np.isclose(np.exp(st.log_det_AmiB), 2 + 2j * 0.5)


def test_anisotropy_Q_matches_batch():
    tr = integrate_variational(builtin("harmonic"), [0.2, 0.1], 0.6)
    st = tr.final
    Z = anisotropy_Z(st)
    Qb = anisotropy_Q_batch(st.A[None], st.B[None])[0]
    assert np.allclose(anisotropy_Q(Z), Qb, atol=1e-13)


def test_caustic_is_reported():
    st = VariationalState(0.0, np.zeros((1, 1), complex), np.eye(1) * 1j, 0j, 0j, True)
    with pytest.raises(CausticError):
        anisotropy_Z(st)


def test_step_size_guard():
    # det(A - iB) turns by 2t for the harmonic model, so dt = 1 is far too coarse
    with pytest.raises(StepSizeError):
        integrate_variational(builtin("harmonic"), [0.0, 0.0], 3.0, dt=1.0)


def test_negative_time_rejected():
    with pytest.raises(ValidationError):
        integrate_flow(builtin("free"), [0.0, 0.0], -1.0)


def test_ehrenfest_free_and_harmonic():
    h = 0.01
    n = h**-0.5
    expected = (n - 1 / n) / 2
    assert abs(ehrenfest_time(builtin("free"), [0.0, 0.0], h, 20.0) - expected) < 1e-6
    assert ehrenfest_time(builtin("harmonic"), [0.0, 1.0], h, 10.0, dt=1e-2) == EXCEEDS_HORIZON
