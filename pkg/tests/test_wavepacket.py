import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from phasewave.classical import integrate_flow, integrate_variational
from phasewave.core import ComplexField, GridSpec
from phasewave.errors import QuadratureError, ResolutionError, StalenessError
from phasewave.exact import exact_field, psi_config
from phasewave.hamiltonian import builtin
from phasewave.wavepacket import (
    chirped_gaussian,
    eval_anisotropic_packet,
    eval_isotropic_packet,
    fock_bargmann_residual,
    inverse_wave_packet_transform,
    prepare_wkb_initial,
    stationary_z,
    wave_packet_transform,
)

H = 0.1


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_isotropic_packet_matches_oracle_and_is_normalised(q, p):
    x = np.linspace(-8, 8, 8001)
    G = eval_isotropic_packet(np.array([q, p]), x[:, None], H)
    assert np.allclose(G, oracles.coherent_state((q, p), x, H), rtol=1e-12, atol=1e-14)
    assert abs(np.trapezoid(np.abs(G) ** 2, x) - 1) < 1e-10


def test_chirped_gaussian_data():
    data = chirped_gaussian()
    assert data.validate()
    x = np.linspace(-3, 3, 13)
    assert np.allclose(data.psi(x[:, None], H).ravel(), oracles.psi_free(x, 0.0, H), atol=1e-14)


def test_transform_matches_brute_force_oracle():
    g = GridSpec(-1.0, 1.0, -1.0, 1.0, 5, 5)
    F = wave_packet_transform(lambda x: psi_config("free", x, 0.5, H), g, H)
    for (i, j) in [(0, 0), (2, 3), (4, 1)]:
        q, p = g.q[i], g.p[j]
        ref = oracles.brute_transform(lambda x: oracles.psi_free(x, 0.5, H), q, p, H)
        assert abs(F.values[i, j] - ref) < 1e-10


def test_transform_preserves_norm():
    g = GridSpec(-6, 6, -6, 6, 121, 121)
    F = wave_packet_transform(lambda x: psi_config("harmonic", x, 0.4, H), g, H)
    assert abs(F.norm() - 1.0) < 1e-8


def test_inverse_transform_reconstructs():
    g = GridSpec(-6, 6, -6, 6, 161, 161)
    F = exact_field("free", g, 0.0, H)
    x = np.linspace(-1.5, 1.5, 7)
    rec = inverse_wave_packet_transform(F, x)
    assert np.max(np.abs(rec - oracles.psi_free(x, 0.0, H))) < 1e-6


def test_sampled_input_route_agrees_with_callable():
    g = GridSpec(-1, 1, -1, 1, 9, 9)
    x = np.linspace(-10, 10, 20001)
    a = wave_packet_transform((x, oracles.psi_free(x, 0.0, H)), g, H)
    b = wave_packet_transform(lambda y: oracles.psi_free(y, 0.0, H), g, H)
    assert np.max(np.abs(a.values - b.values)) < 1e-10


def test_transform_tail_guard():
    g = GridSpec(-1, 1, -1, 1, 5, 5)
    with pytest.raises(QuadratureError) as exc:
        wave_packet_transform(lambda x: oracles.psi_free(x, 0.0, H), g, H, box=(-0.5, 0.5))
    assert exc.value.suggested_box is not None


def test_resolution_guard():
    g = GridSpec(-4, 4, -4, 4, 9, 9)
    with pytest.raises(ResolutionError):
        fock_bargmann_residual(exact_field("free", g, 0.5, H))


def test_fock_bargmann_rejects_non_analytic_field():
    g = GridSpec(-4, 4, -4, 4, 201, 201)
    F = exact_field("free", g, 0.0, H)
    assert fock_bargmann_residual(F) < 1e-4
    bad = ComplexField(g, np.abs(F.values), H, 0.0, "exact")
    assert fock_bargmann_residual(bad) > 1e-1


def _schrodinger_residual(psi, x, t, V, h, dx=1e-3, dt=1e-4):
    dpsi_t = (psi(x, t + dt) - psi(x, t - dt)) / (2 * dt)
    lap = (psi(x + dx, t) - 2 * psi(x, t) + psi(x - dx, t)) / dx**2
    res = 1j * h * dpsi_t - (-(h**2) * lap + V(x) * psi(x, t))
    return np.max(np.abs(res)) / np.max(np.abs(psi(x, t)))


@pytest.mark.parametrize("kind,V", [("free", lambda x: 0 * x), ("harmonic", lambda x: x**2)])
def test_anisotropic_packet_solves_schrodinger(kind, V):
    m = builtin(kind)
    X0 = np.array([0.4, -0.3])

    def psi(x, t):
        tr = integrate_flow(m, X0, t)
        var = integrate_variational(m, X0, t)
        return eval_anisotropic_packet(X0, tr, var, x[:, None], H)

    x = np.linspace(-1.0, 1.0, 21)
    assert _schrodinger_residual(psi, x, 0.5, V, H) < 1e-4


def test_anisotropic_packet_at_time_zero_is_isotropic():
    m = builtin("harmonic")
    X0 = np.array([0.4, -0.3])
    tr = integrate_flow(m, X0, 0.0)
    var = integrate_variational(m, X0, 0.0)
    x = np.linspace(-1, 1, 5)[:, None]
    assert np.allclose(eval_anisotropic_packet(X0, tr, var, x, H), eval_isotropic_packet(X0, x, H))
    with pytest.raises(StalenessError):
        eval_anisotropic_packet(X0 + 1, tr, var, x, H)


def test_wkb_preparation_is_leading_order():
    data = chirped_gaussian()
    X = np.array([[0.5, 0.5], [-1.0, -1.0], [0.3, 0.1]])
    z, _ = stationary_z(data, X)
    # the critical point of the transform integrand
    q, p = X[:, 0], X[:, 1]
    assert np.allclose(data.dS0(z)[:, 0] - p + 1j * (z[:, 0] - q), 0, atol=1e-10)
    errs = []
    for h in (0.1, 0.05):
        rec = prepare_wkb_initial(data, X, h)
        ref = np.array([oracles.brute_transform(lambda x: oracles.psi_free(x, 0.0, h), a, b, h) for a, b in X])
        errs.append(np.max(np.abs(rec.value - ref) / np.abs(ref)))
    assert errs[0] < 0.1
    assert 0.4 < errs[1] / errs[0] < 0.6
