"""Closed-form solutions for the chirped Gaussian under the three builtins.

The initial state is ``psi0(x) = pi^(-1/4) exp(-x^2/2) exp(i x^2 / (2 hbar))``.
For each Hamiltonian ``free`` (p^2), ``linear_field`` (p^2 + q) and
``harmonic`` (p^2 + q^2) this module evaluates the configuration-space
solution, its wave packet transform, the transported Lagrangian line and
the narrow beam phase and amplitude, all in closed form.  The phase-space
fields are written as ``prefactor * exp(i Theta / hbar)`` so that the phase
part can be compared directly with a narrow beam phase.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import ComplexField, GridSpec
from .errors import ChartError, ConfigurationError, DimensionError, ValidationError

log = logging.getLogger(__name__)

KINDS = ("free", "linear_field", "harmonic")
PI14 = np.pi ** -0.25


def _check_kind(kind):
    if kind not in KINDS:
        raise ConfigurationError(f"no closed form for kind {kind!r}")


def _continuous_sqrt(fn, t, samples_per_unit=400):
    """``sqrt(fn(t))`` with the branch followed continuously from ``fn(0)``."""
    n = int(np.ceil(abs(t) * samples_per_unit)) + 2
    path = np.linspace(0.0, t, n)
    w = fn(path)
    arg = np.unwrap(np.angle(w))
    return np.sqrt(np.abs(w[-1])) * np.exp(0.5j * arg[-1])


def initial_psi(x):
    """The chirped Gaussian at ``hbar``-independent amplitude (phase needs hbar)."""
    return PI14 * np.exp(-0.5 * np.asarray(x) ** 2)


def psi_config(kind, x, t, hbar):
    """Configuration-space solution ``psi(x, t)``.

    Parameters
    ----------
    kind : {"free", "linear_field", "harmonic"}
    x : array_like
    t : float
        Time, ``t >= 0``.
    hbar : float

    Returns
    -------
    ndarray of complex
    """
    _check_kind(kind)
    x = np.asarray(x, dtype=float)
    a0 = 1 + 1j * hbar
    if kind == "free":
        u = 1 + 2 * a0 * t
        return PI14 / np.sqrt(u) * np.exp(1j / hbar * (a0 / u) * x**2 / 2)
    if kind == "linear_field":
        u = 1 + 2 * a0 * t
        a = a0 / u
        b = -t * (1 + a0 * t) / u
        c = (
            (hbar / 1j) * np.log(PI14)
            + 0.5j * hbar * np.log(u)
            - (u**3 / 3 - 2 * u - 1 / u + 8.0 / 3) / (32 * a0**3)
        )
        return np.exp(1j / hbar * (a * x**2 / 2 + b * x + c))
    c2, s2 = np.cos(2 * t), np.sin(2 * t)
    root = _continuous_sqrt(lambda s: np.cos(2 * s) + a0 * np.sin(2 * s), t)
    coef = (a0 * c2 - s2) / (a0 * s2 + c2)
    return PI14 / root * np.exp(1j / hbar * coef * x**2 / 2)


def _theta_and_prefactor(kind, q, p, t, hbar):
    """Split the exact phase-space field into ``prefactor`` and ``Theta``."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    w = q - 1j * p
    base = p * q / 2 + 0.5j * q**2
    norm = PI14 * (np.pi * hbar) ** -0.25
    a0 = 1 + 1j * hbar
    if kind == "free":
        den = 1 - 1j + hbar + 2 * a0 * t
        theta = base - 0.5j * (1 + 2 * a0 * t) / den * w**2
        pref = norm / np.sqrt(den)
    elif kind == "linear_field":
        br = (
            t**2 * (0.5 + (1 + 1j + 1j * hbar) / 3 * t + (1j - hbar) / 6 * t**2)
            + t * (1j + (1j - hbar) * t) * w
            - (1 + 2 * t + 2j * hbar * t) / 2 * w**2
        )
        theta = base + br / (-1 - 1j - 1j * hbar + 2 * (hbar - 1j) * t)
        pref = norm / np.sqrt(1 - 1j + 2 * t + (1 + 2j * t) * hbar)
    else:
        c2, s2 = np.cos(2 * t), np.sin(2 * t)
        coef = (a0 * s2 + c2) / ((1 + 1j + 1j * hbar) * (1j * s2 + c2))
        theta = base + coef * w**2 / 2
        pref = norm / np.sqrt(1 - 1j + hbar) * np.exp(-1j * t)
    return pref, theta


def exact_Psi(kind, q, p, t, hbar):
    """Wave packet transform of :func:`psi_config`, in closed form."""
    _check_kind(kind)
    pref, theta = _theta_and_prefactor(kind, q, p, t, hbar)
    return pref * np.exp(1j * theta / hbar)


def exact_theta(kind, q, p, t, hbar):
    """Phase function ``Theta`` of the exact field, ``Psi = c exp(i Theta/hbar)``."""
    _check_kind(kind)
    return _theta_and_prefactor(kind, q, p, t, hbar)[1]


def initial_Psi(q, p, hbar):
    """Transform of the chirped Gaussian."""
    return exact_Psi("free", q, p, 0.0, hbar)


def manifold_point(kind, alpha, t):
    """Point ``X_t(alpha)`` of the transported line, ``X_0(alpha) = (alpha, alpha)``."""
    _check_kind(kind)
    a = np.asarray(alpha, dtype=float)
    if kind == "free":
        return np.stack([(1 + 2 * t) * a, a + 0 * t], axis=-1)
    if kind == "linear_field":
        return np.stack([(1 + 2 * t) * a - t**2, a - t], axis=-1)
    c2, s2 = np.cos(2 * t), np.sin(2 * t)
    return np.stack([(c2 + s2) * a, (c2 - s2) * a], axis=-1)


def manifold_p(kind, q, t):
    """Momentum on the transported line above ``q``."""
    _check_kind(kind)
    q = np.asarray(q, dtype=float)
    if kind == "free":
        return q / (1 + 2 * t)
    if kind == "linear_field":
        return (q - t * (t + 1)) / (1 + 2 * t)
    c2, s2 = np.cos(2 * t), np.sin(2 * t)
    if abs(c2 + s2) < 1e-12:
        raise ChartError("the line is vertical; its q-projection is degenerate")
    return q * (c2 - s2) / (c2 + s2)


def nearest_alpha(kind, q, p, t):
    """Parameter of the closest point of the transported line to ``(q, p)``."""
    _check_kind(kind)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if kind == "free":
        return ((1 + 2 * t) * q + p) / (1 + (1 + 2 * t) ** 2)
    if kind == "linear_field":
        return (t + (1 + 2 * t) * t**2 + (1 + 2 * t) * q + p) / (1 + (1 + 2 * t) ** 2)
    c2, s2 = np.cos(2 * t), np.sin(2 * t)
    return 0.5 * ((c2 + s2) * q + (c2 - s2) * p)


def distance_to_manifold(kind, q, p, t):
    """Euclidean distance ``epsilon`` from ``(q, p)`` to the transported line."""
    a = nearest_alpha(kind, q, p, t)
    X = manifold_point(kind, a, t)
    return np.hypot(np.asarray(q) - X[..., 0], np.asarray(p) - X[..., 1])


def beam_phase_closed(kind, q, p, t):
    """Narrow beam phase ``Phi(q, p, t)`` in closed form."""
    _check_kind(kind)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    w = q - 1j * p
    if kind == "free":
        return -(1 + 1j) / 4 * (p - q + 2 * t * p) / (1 + (1 + 1j) * t) * w
    if kind == "linear_field":
        lead = (3 * (-1 + 1j) - 4 * t - (1 + 1j) * t**2) * t**2
        mid = -6 * (1 + 1j) * (p / (1 + 1j) + (1 + p) * t + t**2) * w
        return (lead + mid + 3 * (1 + 1j) * w**2) / (12 * (1 + (1 + 1j) * t))
    return 0.25 * (1j * (p**2 + q**2) + np.exp(-4j * t) * w**2)


def beam_amplitude_closed(kind, q, p, t, hbar):
    """Narrow beam amplitude ``chi = chi0(X_0(alpha*)) / sqrt(det C)``.

    ``det C`` is ``1 + (1+i)t`` for the free and linear cases and
    ``exp(2it)`` for the harmonic case.
    """
    _check_kind(kind)
    a = nearest_alpha(kind, q, p, t)
    norm = PI14 * (np.pi * hbar) ** -0.25 * np.exp(-0.5 * a**2)
    if kind == "harmonic":
        return norm / np.sqrt(1 - 1j) * np.exp(-1j * t)
    return norm / np.sqrt(1 - 1j + 2 * t)


@dataclass(frozen=True)
class ScenarioOracle:
    """Bundle of closed forms for one builtin Hamiltonian."""

    kind: str

    def __post_init__(self):
        _check_kind(self.kind)

    def psi(self, x, t, hbar):
        return psi_config(self.kind, x, t, hbar)

    def Psi(self, q, p, t, hbar):
        return exact_Psi(self.kind, q, p, t, hbar)

    def theta(self, q, p, t, hbar):
        return exact_theta(self.kind, q, p, t, hbar)

    def manifold_point(self, alpha, t):
        return manifold_point(self.kind, alpha, t)

    def manifold_p(self, q, t):
        return manifold_p(self.kind, q, t)

    def alpha_star(self, q, p, t):
        return nearest_alpha(self.kind, q, p, t)

    def epsilon(self, q, p, t):
        return distance_to_manifold(self.kind, q, p, t)

    def phi(self, q, p, t):
        return beam_phase_closed(self.kind, q, p, t)

    def chi(self, q, p, t, hbar):
        return beam_amplitude_closed(self.kind, q, p, t, hbar)


def exact_field(kind, targets, t, hbar):
    """Exact phase-space field on a grid.

    Returns
    -------
    ComplexField
        Method tag ``exact``.
    """
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    Q, P = targets.mesh()
    return ComplexField(targets, exact_Psi(kind, Q, P, t, hbar), hbar, t, "exact")


@dataclass(frozen=True)
class ErrorReport:
    rel_l2: float
    sup: float
    phase_sup: float

    def as_dict(self):
        return {"rel_l2": self.rel_l2, "sup": self.sup, "phase_sup": self.phase_sup}


def error_norms(a, b, mask=None):
    """Compare field ``a`` against reference ``b``.

    Parameters
    ----------
    a, b : ComplexField
        Same grid, hbar and time.
    mask : ndarray of bool, optional
        Restricts every norm to these samples (defaults to ``a.mask`` when set).

    Returns
    -------
    ErrorReport
        ``rel_l2 = ||a - b|| / ||b||`` with trapezoid weights, ``sup`` the
        largest absolute difference and ``phase_sup`` the largest
        ``|arg(a/b)|`` over samples where both moduli exceed 1e-3 of their
        maxima.
    """
    if not isinstance(a, ComplexField) or not isinstance(b, ComplexField):
        raise ValidationError("error_norms compares ComplexField instances")
    if a.grid != b.grid:
        raise DimensionError("fields live on different grids")
    if a.hbar != b.hbar or a.time != b.time:
        raise ValidationError("fields have different hbar or time")
    if mask is None:
        mask = a.mask if a.mask is not None else b.mask
    sel = np.ones(a.grid.shape, bool) if mask is None else np.asarray(mask, bool)
    w = a.grid.trapezoid_weights() * sel
    diff = a.values - b.values
    ref = np.sqrt(np.sum(w * np.abs(b.values) ** 2))
    rel = float(np.sqrt(np.sum(w * np.abs(diff) ** 2)) / ref) if ref > 0 else float("inf")
    sup = float(np.max(np.abs(diff[sel]), initial=0.0))
    ma, mb = np.abs(a.values), np.abs(b.values)
    big = sel & (ma > 1e-3 * ma[sel].max(initial=0.0)) & (mb > 1e-3 * mb[sel].max(initial=0.0))
    phase = float(np.max(np.abs(np.angle(a.values[big] / b.values[big])), initial=0.0))
    return ErrorReport(rel, sup, phase)
