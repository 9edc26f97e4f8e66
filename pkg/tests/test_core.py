import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasewave.core import (
    ComplexField,
    GridSpec,
    canonical_J,
    check_scaled_symplectic,
    check_siegel,
    continuous_log,
)
from phasewave.errors import DimensionError, ValidationError


@pytest.mark.parametrize("d", [1, 2, 3])
def test_canonical_J_is_symplectic_form(d):
    J = canonical_J(d)
    assert np.array_equal(J @ J, -np.eye(2 * d))
    assert np.array_equal(J.T, -J)
    assert np.array_equal(J[:d, d:], np.eye(d))


def test_canonical_J_rejects_bad_dim():
    with pytest.raises(DimensionError):
        canonical_J(0)


def test_check_siegel_accepts_and_rejects():
    assert check_siegel(np.array([[1j]]))
    assert check_siegel(np.array([[0.3 + 2j, 0.1], [0.1, 1j]]))
    assert not check_siegel(np.array([[-1j]]))
    rep = check_siegel(np.array([[1j, 0.2], [0.0, 1j]]))
    assert not rep and rep.reason == "not symmetric"
    with pytest.raises(DimensionError):
        check_siegel(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.05, 3))
def test_free_riccati_closed_form_stays_siegel(a, b):
    # Z(t) = Z0 / (1 + 2 t Z0) stays in the upper half plane for Im Z0 > 0
    z0 = a + 1j * b
    for t in (0.0, 0.5, 2.0):
        assert check_siegel(np.array([[z0 / (1 + 2 * t * z0)]]))


def test_check_scaled_symplectic():
    t = 0.3
    Q = 1j / (2 * (1 + 1j * t)) * np.array([[1, -t], [-t, 1 + 2j * t]])
    assert check_scaled_symplectic(Q)
    assert not check_scaled_symplectic(2 * Q)


def test_continuous_log_follows_the_winding():
    s = np.linspace(0, 4 * np.pi, 400)
    v = 2.0 * np.exp(1j * s)
    lg = continuous_log(v)
    assert np.allclose(lg.imag, s, atol=1e-12)
    assert np.allclose(lg.real, np.log(2.0))


def test_grid_layout_and_weights():
    g = GridSpec(-1, 1, 0, 2, 5, 3)
    Q, P = g.mesh()
    assert Q.shape == (5, 3)
    assert g.points()[1].tolist() == [-1.0, 1.0]
    assert np.isclose(g.trapezoid_weights().sum(), 4.0)
    inner = GridSpec(-1, 1, 0, 2, 5, 5).interior(1)
    assert inner.as_tuple() == (-0.5, 0.5, 0.5, 1.5, 3, 3)
    with pytest.raises(ValidationError):
        g.interior(1)
    with pytest.raises(ValidationError):
        GridSpec(1, -1, 0, 1, 4, 4)


def test_complex_field_validation_and_norm():
    g = GridSpec(-1, 1, -1, 1, 3, 3)
    f = ComplexField(g, np.ones(9), 0.1, 0.0, "exact")
    assert f.values.shape == (3, 3)
    assert not f.values.flags.writeable
    assert np.isclose(f.norm(), 2.0)
    with pytest.raises(DimensionError):
        ComplexField(g, np.ones(8), 0.1, 0.0, "exact")
    with pytest.raises(ValidationError):
        ComplexField(g, np.ones(9), 0.1, 0.0, "nonsense")
    with pytest.raises(ValidationError):
        ComplexField(g, np.full(9, np.nan), 0.1, 0.0, "exact")
    with pytest.raises(ValidationError):
        ComplexField(g, np.ones(9), -0.1, 0.0, "exact")
