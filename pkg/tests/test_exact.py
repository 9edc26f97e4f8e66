import numpy as np
import pytest

import oracles
from phasewave.core import ComplexField, GridSpec
from phasewave.errors import ValidationError
from phasewave.exact import (
    beam_phase_closed,
    distance_to_manifold,
    error_norms,
    exact_Psi,
    exact_field,
    exact_theta,
    manifold_point,
    nearest_alpha,
    psi_config,
)

H = 0.1

# Phase-space values obtained by a dense Riemann-sum transform of the
# configuration-space solutions in tests/oracles.py (accurate to about 6e-13).
FROZEN = [
    ("free", 0.5, 0.3, 0.2, 0.6440582228697136 + 0.0817775474191969j),
    ("free", 0.5, 1.0, 0.0, -0.12116446522778021 + 0.1945821229793085j),
    ("harmonic", 0.4, 1.0, 0.4, -0.0899621853154712 - 0.2753954940280501j),
    ("harmonic", 0.4, 1.0, 0.0, 0.646070165630317 - 0.05560006132947796j),
    ("linear_field", 0.5, 0.3, 0.2, 0.004391056803325631 - 0.3078569604353657j),
    ("linear_field", 0.5, 1.0, 0.4, -0.38478031438830784 + 0.0907466522564679j),
    ("linear_field", 1.0, 1.0, 0.0, 0.2544458999124468 - 0.08957913849786697j),
    ("linear_field", 1.0, 0.3, 0.2, -0.00942113592116139 + 0.03499326592672517j),
]


@pytest.mark.parametrize("kind,t,q,p,value", FROZEN)
def test_closed_forms_against_frozen_values(kind, t, q, p, value):
    assert abs(exact_Psi(kind, q, p, t, H) - value) < 2e-12


@pytest.mark.parametrize(
    "kind,oracle",
    [("free", oracles.psi_free), ("harmonic", oracles.psi_harmonic), ("linear_field", oracles.psi_linear)],
)
@pytest.mark.parametrize("t", [0.3, 0.7])
def test_configuration_space_solutions(kind, oracle, t):
    x = np.linspace(-3, 3, 9)
    assert np.max(np.abs(psi_config(kind, x, t, H) - oracle(x, t, H))) < 1e-10


def test_harmonic_solution_is_continuous_through_focal_times():
    # the closed form has removable singularities where sin 2t = 0
    ts = np.linspace(1.5, 1.65, 31)
    vals = np.array([exact_Psi("harmonic", 0.5, 0.2, t, H) for t in ts])
    assert np.max(np.abs(np.diff(vals))) < 0.05


def test_time_zero_is_the_same_for_all_kinds():
    Q, P = np.meshgrid(np.linspace(-2, 2, 5), np.linspace(-2, 2, 5), indexing="ij")
    ref = exact_Psi("free", Q, P, 0.0, H)
    for kind in ("linear_field", "harmonic"):
        assert np.allclose(exact_Psi(kind, Q, P, 0.0, H), ref, atol=1e-14)


@pytest.mark.parametrize("kind", ["free", "linear_field", "harmonic"])
def test_manifold_geometry(kind):
    alpha = np.linspace(-1.5, 1.5, 7)
    X = manifold_point(kind, alpha, 0.4)
    assert np.allclose(distance_to_manifold(kind, X[:, 0], X[:, 1], 0.4), 0, atol=1e-12)
    assert np.allclose(nearest_alpha(kind, X[:, 0], X[:, 1], 0.4), alpha, atol=1e-10)
    phi = beam_phase_closed(kind, X[:, 0], X[:, 1], 0.4)
    assert np.max(np.abs(np.imag(phi))) < 1e-12


@pytest.mark.parametrize("kind", ["free", "linear_field", "harmonic"])
def test_theta_carries_all_point_dependence(kind):
    q = np.array([0.7, -0.3, 1.2])
    p = np.array([-0.2, 0.4, 0.9])
    c = exact_Psi(kind, q, p, 0.5, H) / np.exp(1j * exact_theta(kind, q, p, 0.5, H) / H)
    assert np.allclose(c, c[0], rtol=1e-12)


def test_unknown_kind():
    with pytest.raises(ValidationError):
        exact_Psi("quartic", 0.0, 0.0, 0.1, H)


def test_error_norms():
    g = GridSpec(-1, 1, -1, 1, 3, 3)
    a = ComplexField(g, np.ones(9), H, 0.0, "aga")
    b = ComplexField(g, np.ones(9) * 1j, H, 0.0, "exact")
    rep = error_norms(a, b)
    assert np.isclose(rep.rel_l2, np.sqrt(2))
    assert np.isclose(rep.sup, np.sqrt(2))
    assert np.isclose(rep.phase_sup, np.pi / 2)
    mask = np.zeros((3, 3), bool)
    mask[1, 1] = True
    assert set(error_norms(a, b, mask).as_dict()) == {"rel_l2", "sup", "phase_sup"}


def test_exact_field_method_tag():
    g = GridSpec(-1, 1, -1, 1, 3, 3)
    assert exact_field("harmonic", g, 0.2, H).method == "exact"
