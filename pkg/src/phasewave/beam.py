"""Narrow beam asymptotic solution in phase space.

The initial Lagrangian manifold ``X_0(alpha) = (alpha, S0'(alpha))`` is
moved by the classical flow.  Along every orbit the double phase space
variational pair ``(C, D)`` obeys

    d/dt (C; D) = [[J H/2, -J H J], [-H/4, H J/2]] (C; D),   H = d2H/dX2

with ``C(0) = I`` and ``D(0)`` the Hessian of ``theta0``.  The beam is

    Psi_B = chi exp(i Phi / hbar),
    Phi   = theta0(X_0) + (J X_t / 2).(X - X_t) + A_w + (X - X_t).Q (X - X_t) / 2
    chi   = chi0(X_0) / sqrt(det C),  Q = D C^{-1}

evaluated at the orbit whose end point ``X_t(alpha*)`` is nearest to ``X``.
The conjugate double phase variable is fixed to ``P = J X / 2``, a
conserved constraint, instead of being integrated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .classical import DEFAULT_DT, n_steps
from .core import ComplexField, canonical_J
from .errors import (
    ChartError,
    DivergenceError,
    InvariantError,
    OutsideNeighborhoodError,
    StalenessError,
    StepSizeError,
    ValidationError,
)
from .wavepacket import initial_amplitude, initial_phase, initial_phase_hessian, stationary_z

log = logging.getLogger(__name__)

TUBE_RADIUS = 0.5
N_SEED = 512
NEWTON_TOL = 1e-10
NEWTON_MAXIT = 50
DET_C_TOL = 1e-12


@dataclass(frozen=True)
class LagrangianChart:
    """Parametrisation of the initial Lagrangian manifold (d = 1).

    Attributes
    ----------
    parametrize : callable
        ``alpha (N,) -> X_0 (N, 2)``.
    tangent : callable
        ``alpha (N,) -> dX_0/dalpha (N, 2)``.
    alpha_box : (float, float)
        Range sampled when seeding nearest-point searches.
    """

    parametrize: Callable = field(repr=False)
    tangent: Callable = field(repr=False)
    alpha_box: tuple = (-4.0, 4.0)

    def validate(self, data=None, n=N_SEED):
        a = np.linspace(*self.alpha_box, n)
        T = self.tangent(a)
        if np.min(np.linalg.norm(T, axis=-1)) < 1e-12:
            raise ChartError("chart tangent vanishes: rank condition fails")
        if data is not None:
            X = self.parametrize(a)
            miss = np.max(np.abs(X[:, 1] - data.dS0(X[:, :1])[:, 0]))
            if miss > 1e-10:
                raise ChartError(f"chart leaves the graph of dS0 by {miss:.2e}")
        return True


def chart_from_wkb(data, alpha_box=(-4.0, 4.0)):
    """Graph chart ``alpha -> (alpha, S0'(alpha))`` of WKB data."""
    if data.dim != 1:
        raise ValidationError("narrow beams are implemented for d = 1")

    def parametrize(a):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        return np.stack([a, data.dS0(a[:, None])[:, 0]], axis=-1)

    def tangent(a):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        return np.stack([np.ones_like(a), data.d2S0(a[:, None])[:, 0, 0]], axis=-1)

    chart = LagrangianChart(parametrize, tangent, tuple(alpha_box))
    chart.validate(data)
    return chart


@dataclass(frozen=True)
class BeamOrbits:
    """End state of beam orbits at one time.

    ``M`` is the ordinary linearised flow, used for the tangent
    ``dX_t/dalpha = M dX_0/dalpha``.
    """

    alphas: np.ndarray
    X0: np.ndarray
    X: np.ndarray
    Aw: np.ndarray
    theta0: np.ndarray
    chi0_unit: np.ndarray
    C: np.ndarray
    D: np.ndarray
    M: np.ndarray
    log_det_C: np.ndarray

    @property
    def P(self):
        return 0.5 * self.X @ canonical_J(1).T

    @property
    def Q(self):
        return self.D @ np.linalg.inv(self.C)


def _mm(A, B):
    """Product of stacked 2x2 matrices stored as arrays of shape (2, 2, N)."""
    return np.stack(
        [
            np.stack([A[0, 0] * B[0, 0] + A[0, 1] * B[1, 0], A[0, 0] * B[0, 1] + A[0, 1] * B[1, 1]]),
            np.stack([A[1, 0] * B[0, 0] + A[1, 1] * B[1, 0], A[1, 0] * B[0, 1] + A[1, 1] * B[1, 1]]),
        ]
    )


def _J_left(A):
    return np.stack([A[1], -A[0]])


def _J_right(A):
    return np.stack([-A[:, 1], A[:, 0]], axis=1)


def integrate_orbits(model, data, chart, alphas, t, dt=DEFAULT_DT):
    """Integrate ``X``, ``A_w``, ``M`` and ``(C, D)`` for each ``alpha``.

    Matrices are carried as ``(2, 2, N)`` arrays so every product is a
    handful of vectorised multiplications.
    """
    if model.dim != 1:
        raise ValidationError("narrow beams are implemented for d = 1")
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    X0 = chart.parametrize(alphas)
    N = len(alphas)
    z, _ = stationary_z(data, X0)
    theta0 = np.real(initial_phase(data, X0, z))
    chi0_unit = initial_amplitude(data, z, 1.0 / np.pi)
    D0 = initial_phase_hessian(data, X0, z)
    steps = n_steps(t, dt)
    h = float(t) / steps if steps else 0.0

    X = X0.copy()
    aw = np.zeros(N)
    eye = np.broadcast_to(np.eye(2)[:, :, None], (2, 2, N))
    M = eye.astype(float)
    C = eye.astype(complex)
    D = np.moveaxis(D0, 0, -1).astype(complex)

    def rhs(X, M, C, D):
        g = model.grad(X)
        Xdot = np.stack([g[:, 1], -g[:, 0]], axis=1)
        awdot = 0.5 * (X[:, 1] * Xdot[:, 0] - X[:, 0] * Xdot[:, 1]) - model.value(X)
        H = np.moveaxis(model.hess(X), 0, -1)
        JH = _J_left(H)
        HJD = _mm(_J_right(H), D)
        Cdot = 0.5 * _mm(JH, C) - _J_left(HJD)
        Ddot = -0.25 * _mm(H, C) + 0.5 * HJD
        return Xdot, awdot, _mm(JH, M), Cdot, Ddot

    detC = np.ones(N, dtype=complex)
    logC = np.zeros(N, dtype=complex)
    for k in range(steps):
        k1 = rhs(X, M, C, D)
        k2 = rhs(*(y + 0.5 * h * dy for y, dy in zip((X, M, C, D), k1[:1] + k1[2:])))
        k3 = rhs(*(y + 0.5 * h * dy for y, dy in zip((X, M, C, D), k2[:1] + k2[2:])))
        k4 = rhs(*(y + h * dy for y, dy in zip((X, M, C, D), k3[:1] + k3[2:])))
        w = h / 6.0
        X, aw, M, C, D = (
            y + w * (a + 2 * b + 2 * c + e)
            for y, a, b, c, e in zip((X, aw, M, C, D), k1, k2, k3, k4)
        )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(C)) and np.all(np.isfinite(D))):
            raise DivergenceError(f"non-finite beam state at t={(k + 1) * h:g}", last_valid_time=k * h)
        new = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
        if np.min(np.abs(new)) < DET_C_TOL:
            raise InvariantError(f"det C vanished at t={(k + 1) * h:g}; the chart is not admissible")
        inc = np.log(new / detC)
        if np.any(np.abs(inc.imag) >= np.pi / 2):
            raise StepSizeError(f"det C argument jump >= pi/2 at t={(k + 1) * h:g}; reduce dt")
        logC = logC + inc
        detC = new
    last = lambda A: np.ascontiguousarray(np.moveaxis(A, -1, 0))  # noqa: E731
    return BeamOrbits(alphas, X0, X, aw, theta0, chi0_unit, last(C), last(D), last(M), logC)


@dataclass(frozen=True)
class BeamCache:
    """Beam orbits on a dense ``alpha`` sample together with what is needed
    to integrate further orbits on demand."""

    t: float
    dt: float
    model: object = field(repr=False)
    data: object = field(repr=False)
    chart: LagrangianChart = field(repr=False)
    orbits: BeamOrbits = field(repr=False)
    spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.spline is None:
            o = self.orbits
            T = np.einsum("nij,nj->ni", o.M, self.chart.tangent(o.alphas))
            object.__setattr__(self, "spline", CubicSpline(o.alphas, np.concatenate([o.X, T], axis=1)))

    def orbits_at(self, alphas):
        return integrate_orbits(self.model, self.data, self.chart, alphas, self.t, self.dt)

    def _check_time(self, t):
        if t is not None and abs(t - self.t) > 1e-14:
            raise StalenessError(f"cache holds t={self.t}, asked for t={t}")


def build_beam_cache(chart, alphas, t_final, dt, model, data):
    """Integrate the beam orbits for ``alphas`` up to ``t_final``.

    Parameters
    ----------
    chart : LagrangianChart
    alphas : array_like
        Dense sample used to seed nearest-point searches.
    t_final, dt : float
    model : HamiltonianModel
    data : WKBInitialData

    Returns
    -------
    BeamCache
    """
    if model.dim != 1:
        raise ValidationError("narrow beams are implemented for d = 1")
    orbits = integrate_orbits(model, data, chart, alphas, t_final, dt)
    return BeamCache(float(t_final), float(dt), model, data, chart, orbits)


def beam_Q(cache, alpha, t=None):
    """Beam anisotropy matrix ``D C^{-1}`` at ``alpha``."""
    cache._check_time(t)
    orb = cache.orbits_at(alpha)
    Q = orb.Q
    return Q[0] if np.ndim(alpha) == 0 else Q


@dataclass(frozen=True)
class NearestPoint:
    """Nearest-point data; ``orbits`` rows correspond to ``active`` targets."""

    alpha: np.ndarray
    epsilon: np.ndarray
    converged: np.ndarray
    active: np.ndarray
    orbits: BeamOrbits = field(repr=False)


def _seed(cache, X):
    """Closest dense-sample parameter, its distance and an ambiguity flag."""
    Xs = cache.orbits.X
    alpha = np.empty(len(X))
    dist = np.empty(len(X))
    ambiguous = np.zeros(len(X), bool)
    for lo in range(0, len(X), 2048):
        blk = X[lo : lo + 2048]
        d2 = np.sum((blk[:, None, :] - Xs[None, :, :]) ** 2, axis=-1)
        k = np.argmin(d2, axis=1)
        rows = np.arange(len(blk))
        alpha[lo : lo + 2048] = cache.orbits.alphas[k]
        dist[lo : lo + 2048] = np.sqrt(d2[rows, k])
        local = np.zeros_like(d2, dtype=bool)
        local[:, 1:-1] = (d2[:, 1:-1] <= d2[:, :-2]) & (d2[:, 1:-1] <= d2[:, 2:])
        near = local & (np.sqrt(d2) - dist[lo : lo + 2048, None] < 1e-6)
        near[rows, k] = False
        far = np.abs(np.arange(d2.shape[1])[None, :] - k[:, None]) > 2
        ambiguous[lo : lo + 2048] = np.any(near & far, axis=1)
    return alpha, dist, ambiguous


def _gauss_newton_step(T, r):
    return np.sum(T * r, axis=1) / np.sum(T * T, axis=1)


def nearest_points(cache, X, max_distance=None):
    """Solve the orthogonality condition for a batch of points ``X`` (N, 2).

    Gauss-Newton on ``alpha`` is run first on a cubic spline of the dense
    sample, then polished with freshly integrated orbits until the update
    falls below 1e-10.  Points whose seed distance exceeds
    ``max_distance`` are skipped.

    Returns
    -------
    NearestPoint
        ``converged`` is False where the iteration failed, the point was
        skipped, or the nearest point is ambiguous.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    alpha, dist, ambiguous = _seed(cache, X)
    active = np.ones(len(X), bool) if max_distance is None else dist < max_distance
    a = alpha[active]
    Xa = X[active]
    for _ in range(NEWTON_MAXIT):
        v = cache.spline(a)
        step = _gauss_newton_step(v[:, 2:], v[:, :2] - Xa)
        a = a - step
        if np.all(np.abs(step) <= NEWTON_TOL * (1 + np.abs(a))) or not np.all(np.isfinite(a)):
            break
    conv = np.zeros(len(a), bool)
    for _ in range(5):
        good = np.isfinite(a)
        orb = cache.orbits_at(np.where(good, a, 0.0))
        T = np.einsum("nij,nj->ni", orb.M, cache.chart.tangent(orb.alphas))
        step = _gauss_newton_step(T, orb.X - Xa)
        conv = good & (np.abs(step) <= NEWTON_TOL * (1 + np.abs(a)))
        if np.all(conv | ~good):
            break
        a = np.where(conv, a, a - step)
    alpha[active] = a
    eps = np.full(len(X), np.inf)
    eps[active] = np.linalg.norm(Xa - orb.X, axis=1)
    converged = np.zeros(len(X), bool)
    converged[active] = conv
    return NearestPoint(alpha, eps, converged & ~ambiguous, active, orb)


def nearest_point(cache, X, t=None):
    """Nearest point on the transported manifold: ``(alpha*, epsilon)``.

    Raises
    ------
    OutsideNeighborhoodError
        When Gauss-Newton fails or two candidates are equally close.
    """
    cache._check_time(t)
    res = nearest_points(cache, X)
    if not res.converged[0]:
        raise OutsideNeighborhoodError("no unique nearest point on the transported manifold")
    return float(res.alpha[0]), float(res.epsilon[0])


def _phase_from(orb, X):
    J = canonical_J(1)
    dX = X - orb.X
    Pt = 0.5 * orb.X @ J.T
    quad = 0.5 * np.einsum("ni,nij,nj->n", dX, orb.Q, dX)
    return orb.theta0 + np.sum(Pt * dX, axis=1) + orb.Aw + quad


def _amp_from(orb, hbar):
    return (np.pi * hbar) ** -0.25 * orb.chi0_unit * np.exp(-0.5 * orb.log_det_C)


def beam_phase(cache, X, t=None):
    """Complex beam phase ``Phi(X, t)``."""
    cache._check_time(t)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    res = nearest_points(cache, X)
    if not np.all(res.converged):
        raise OutsideNeighborhoodError("no unique nearest point on the transported manifold")
    phi = _phase_from(res.orbits, X)
    return phi[0] if len(phi) == 1 else phi


def beam_amplitude(cache, X, t=None, hbar=None):
    """Beam amplitude ``chi0(X_0(alpha*)) / sqrt(det C)``."""
    cache._check_time(t)
    if hbar is None or not hbar > 0:
        raise ValidationError("hbar must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    res = nearest_points(cache, X)
    if not np.all(res.converged):
        raise OutsideNeighborhoodError("no unique nearest point on the transported manifold")
    chi = _amp_from(res.orbits, hbar)
    return chi[0] if len(chi) == 1 else chi


@dataclass(frozen=True)
class BeamEvaluation:
    phase: np.ndarray
    amplitude: np.ndarray
    alpha: np.ndarray
    epsilon: np.ndarray
    inside: np.ndarray


def beam_points(cache, X, hbar, tube_radius=TUBE_RADIUS):
    """Phase, amplitude and tube membership at arbitrary points.

    Points outside the tube get phase and amplitude zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    res = nearest_points(cache, X, max_distance=tube_radius + 0.1)
    phi = np.zeros(len(X), dtype=complex)
    chi = np.zeros(len(X), dtype=complex)
    phi[res.active] = _phase_from(res.orbits, X[res.active])
    chi[res.active] = _amp_from(res.orbits, hbar)
    inside = res.converged & (res.epsilon < tube_radius)
    phi[~inside] = 0.0
    chi[~inside] = 0.0
    return BeamEvaluation(phi, chi, res.alpha, res.epsilon, inside)


def beam_field(cache, targets, t, hbar, tube_radius=TUBE_RADIUS):
    """Narrow beam on a grid; samples outside the tube are zero and masked.

    Returns
    -------
    ComplexField
        Method tag ``beam`` with ``mask`` marking in-tube samples.
    """
    cache._check_time(t)
    ev = beam_points(cache, targets.points(), hbar, tube_radius)
    values = np.where(ev.inside, ev.amplitude * np.exp(1j * ev.phase / hbar), 0.0)
    mask = ev.inside.reshape(targets.shape)
    return ComplexField(targets, values, hbar, t, "beam", mask=mask)


def on_manifold_restriction(cache, q, t, hbar):
    """Phase ``S`` and amplitude ``R`` on the transported manifold above ``q``.

    Returns
    -------
    (S, R, p) : ndarrays
        ``S`` is real (its imaginary part is checked to be below 1e-10) and
        ``p`` is the manifold momentum above ``q``.

    Raises
    ------
    ChartError
        When the q-projection of the manifold is not one-to-one.
    """
    cache._check_time(t)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    qs = cache.orbits.X[:, 0]
    dq = np.diff(qs)
    if not (np.all(dq > 0) or np.all(dq < 0)):
        raise ChartError("the transported manifold is not a graph over q")
    order = np.argsort(qs)
    alpha = np.interp(q, qs[order], cache.orbits.alphas[order])
    for _ in range(NEWTON_MAXIT):
        orb = cache.orbits_at(alpha)
        dqa = np.einsum("nj,nj->n", orb.M[:, 0, :], cache.chart.tangent(alpha))
        step = (orb.X[:, 0] - q) / dqa
        alpha = alpha - step
        if np.all(np.abs(step) <= NEWTON_TOL * (1 + np.abs(alpha))):
            break
    orb = cache.orbits_at(alpha)
    S = _phase_from(orb, orb.X)
    if np.max(np.abs(S.imag)) > 1e-10:
        raise InvariantError("phase is not real on the manifold")
    R = _amp_from(orb, hbar)
    return S.real, R, orb.X[:, 1]


def closed_form_CD(model, data, alpha, t, M):
    """``(C, D)`` from the ordinary linearised flow ``M`` at ``alpha``.

    ``C = J K + M (I/2 - J N)`` and ``D = J C / 2 + K`` with
    ``N = D(0)`` and ``K = N - J/2``; valid for quadratic Hamiltonians where
    the Hessian is constant along orbits.
    """
    X0 = np.atleast_2d(np.array([[alpha, data.dS0(np.array([alpha]))[0]]]))
    N = initial_phase_hessian(data, X0)[0]
    J = canonical_J(1)
    K = N - 0.5 * J
    C = J @ K + M @ (0.5 * np.eye(2) - J @ N)
    D = 0.5 * J @ C + K
    return C, D
