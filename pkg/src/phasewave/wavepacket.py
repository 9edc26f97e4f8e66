"""Gaussian wave packets, the wave packet transform and WKB initial data.

Conventions: a phase point is ``X = (q, p)``; the isotropic packet centred
at ``X`` is

    G_X(x) = (pi hbar)^(-d/4) exp{(i/hbar)(p.q/2 + p.(x - q) + (i/2)|x - q|^2)}

and the transform of ``psi`` is ``(2 pi hbar)^(-d/2) <G_X, psi>``.  Fields
on grids are one dimensional in configuration space (d = 1).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .core import ComplexField, GridSpec
from .errors import (
    DimensionError,
    QuadratureError,
    ResolutionError,
    StalenessError,
    StationarySolveError,
    ValidationError,
)

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
TAIL_TOL = 1e-8
NODES_PER_PERIOD = 10
PANEL_ORDER = 20


def eval_isotropic_packet(X, x, hbar):
    """Evaluate ``G_X(x)``.

    Parameters
    ----------
    X : array_like, shape (..., 2d)
        Packet centre; broadcasts against ``x``.
    x : array_like, shape (..., d)
        Configuration points.
    hbar : float

    Returns
    -------
    complex or ndarray
    """
    X = np.asarray(X, dtype=float)
    x = np.asarray(x, dtype=float)
    d = X.shape[-1] // 2
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != d:
        raise DimensionError(f"x must have last axis {d}")
    q, p = X[..., :d], X[..., d:]
    dx = x - q
    phase = np.sum(p * q, axis=-1) / 2 + np.sum(p * dx, axis=-1) + 0.5j * np.sum(dx * dx, axis=-1)
    return (np.pi * hbar) ** (-d / 4) * np.exp(1j * phase / hbar)


def eval_anisotropic_packet(X0, traj, var, x, hbar):
    """Evaluate the propagated anisotropic packet at the end of ``traj``.

    Parameters
    ----------
    X0 : array_like, shape (2d,)
        Initial centre; must match ``traj.points[0]``.
    traj : TrajectoryRecord
    var : VariationalTrack or VariationalState
        Variational data at the final time of ``traj``.
    x : array_like, shape (..., d)
    hbar : float
    """
    from .classical import CAUSTIC_TOL, anisotropy_Z

    X0 = np.asarray(X0, dtype=float).ravel()
    if not np.array_equal(X0, traj.points[0]):
        raise StalenessError("trajectory does not start at X0")
    state = var.final if hasattr(var, "final") else var
    if abs(state.t - traj.final_time) > 1e-12:
        raise StalenessError("variational state and trajectory are at different times")
    d = X0.size // 2
    detA = np.linalg.det(np.atleast_2d(state.A))
    if state.caustic or abs(detA) < CAUSTIC_TOL:
        from .errors import CausticError

        raise CausticError("det A vanishes; the anisotropic packet is undefined here")
    Z = anisotropy_Z(state)
    q0, p0 = X0[:d], X0[d:]
    qt, pt = traj.final_point[:d], traj.final_point[d:]
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    dx = x - qt
    quad = np.einsum("...i,ij,...j->...", dx, Z, dx)
    phase = q0 @ p0 / 2 + traj.action[-1] + dx @ pt + 0.5 * quad
    amp = (np.pi * hbar) ** (-d / 4) * np.exp(-0.5 * state.log_det_A)
    return amp * np.exp(1j * phase / hbar)


@dataclass(frozen=True)
class WKBInitialData:
    """Analytic WKB data ``psi0 = R0 exp(i S0 / hbar)``.

    Every callable takes arrays of shape ``(..., d)`` (real or complex) and
    must be entire so that it can be continued to complex arguments.
    ``dS0`` returns shape ``(..., d)`` and ``d2S0`` shape ``(..., d, d)``.
    """

    dim: int
    S0: Callable = field(repr=False)
    dS0: Callable = field(repr=False)
    d2S0: Callable = field(repr=False)
    R0: Callable = field(repr=False)
    support_radius: float = 6.0
    name: str = "custom"

    def validate(self, n_nodes=400):
        """Check the unit normalisation of R0 and non-degeneracy of S0''."""
        if self.dim != 1:
            raise DimensionError("normalisation check is implemented for d = 1")
        L = self.support_radius
        x, w = _composite_gauss(-L, L, max(2, n_nodes // PANEL_ORDER))
        mass = float(np.sum(w * np.abs(self.R0(x[:, None])) ** 2))
        if abs(mass - 1.0) > 1e-8:
            raise ValidationError(f"R0 is not normalised: integral of R0^2 = {mass:.12g}")
        det = np.linalg.det(np.asarray(self.d2S0(x[:, None]), dtype=complex))
        if np.min(np.abs(det)) < 1e-12:
            raise ValidationError("det S0'' vanishes on the support grid")
        return True

    def psi(self, x, hbar):
        x = np.asarray(x, dtype=float)
        xx = x[..., None] if self.dim == 1 else x
        return self.R0(xx) * np.exp(1j * self.S0(xx) / hbar)


def chirped_gaussian():
    """``S0 = x^2/2`` and ``R0 = pi^(-1/4) exp(-x^2/2)`` in one dimension."""

    def S0(x):
        return 0.5 * np.sum(x * x, axis=-1)

    def dS0(x):
        return np.asarray(x) * 1.0

    def d2S0(x):
        x = np.asarray(x)
        return np.ones(x.shape + (1,), dtype=x.dtype)

    def R0(x):
        return np.pi ** -0.25 * np.exp(-0.5 * np.sum(x * x, axis=-1))

    return WKBInitialData(dim=1, S0=S0, dS0=dS0, d2S0=d2S0, R0=R0, support_radius=9.0, name="chirped_gaussian")


@dataclass(frozen=True)
class WKBRecord:
    """Stationary point and derived quantities at phase points ``X``."""

    z: np.ndarray
    theta0: np.ndarray
    chi0: np.ndarray
    value: np.ndarray
    iterations: int


def _newton_stationary(data, q, p, z0):
    d = data.dim
    eye = np.eye(d)
    z = z0.astype(complex)
    for it in range(1, NEWTON_MAXIT + 1):
        F = data.dS0(z) - p + 1j * (z - q)
        Jm = data.d2S0(z) + 1j * eye
        dz = np.linalg.solve(Jm, F[..., None])[..., 0]
        z = z - dz
        if not np.all(np.isfinite(z)):
            return z, it, False
        if np.max(np.abs(dz), initial=0.0) <= NEWTON_TOL * (1.0 + np.max(np.abs(z), initial=0.0)):
            return z, it, True
    return z, NEWTON_MAXIT, False


def stationary_z(data, X):
    """Solve ``S0'(z) - p + i(z - q) = 0`` by Newton from ``z = q``.

    Works for complex ``X`` as well; the first-order estimate
    ``q - i(I - iS0''(q))^{-1}(p - S0'(q))`` is the fallback initial guess.
    """
    X = np.asarray(X)
    d = data.dim
    if X.shape[-1] != 2 * d:
        raise DimensionError(f"phase points must have last axis {2 * d}")
    q, p = X[..., :d].astype(complex), X[..., d:].astype(complex)
    z, it, ok = _newton_stationary(data, q, p, q)
    if not ok:
        eye = np.eye(d)
        lhs = eye - 1j * data.d2S0(q)
        guess = q - 1j * np.linalg.solve(lhs, (p - data.dS0(q))[..., None])[..., 0]
        z, it, ok = _newton_stationary(data, q, p, guess)
    if not ok:
        raise StationarySolveError("Newton iteration for z(q, p) did not converge in 50 iterations")
    return z, it


def initial_phase(data, X, z=None):
    """``theta0(X) = S0(z) - p.(z - q) + (i/2)(z - q)^2 - p.q/2``."""
    X = np.asarray(X)
    d = data.dim
    if z is None:
        z, _ = stationary_z(data, X)
    q, p = X[..., :d], X[..., d:]
    dz = z - q
    return data.S0(z) - np.sum(p * dz, axis=-1) + 0.5j * np.sum(dz * dz, axis=-1) - np.sum(p * q, axis=-1) / 2


def initial_phase_gradient(data, X, z=None):
    """Gradient of ``theta0``: ``(p/2 - i(z - q), -(z - q) - q/2)``."""
    X = np.asarray(X)
    d = data.dim
    if z is None:
        z, _ = stationary_z(data, X)
    q, p = X[..., :d], X[..., d:]
    dz = z - q
    return np.concatenate([p / 2 - 1j * dz, -dz - q / 2], axis=-1)


def initial_phase_hessian(data, X, z=None):
    """Hessian of ``theta0``.

    With ``K = (S0''(z) + iI)^{-1}`` it is
    ``[[iI + K, I/2 - iK], [I/2 - iK, -K]]``.
    """
    X = np.asarray(X)
    d = data.dim
    if z is None:
        z, _ = stationary_z(data, X)
    eye = np.eye(d)
    K = np.linalg.inv(data.d2S0(z) + 1j * eye)
    top = np.concatenate([1j * eye + K, 0.5 * eye - 1j * K], axis=-1)
    bottom = np.concatenate([0.5 * eye - 1j * K, -K], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def initial_amplitude(data, z, hbar):
    """``chi0 = (pi hbar)^(-d/4) R0(z) / sqrt(det(I - i S0''(z)))``."""
    d = data.dim
    det = np.linalg.det(np.eye(d) - 1j * data.d2S0(z))
    if np.min(np.abs(det), initial=np.inf) < 1e-12:
        raise StationarySolveError("det(I - i S0'') is degenerate")
    return (np.pi * hbar) ** (-d / 4) * data.R0(z) / np.sqrt(det)


def prepare_wkb_initial(data, X, hbar):
    """Stationary-phase approximation of the transform of WKB data.

    Parameters
    ----------
    data : WKBInitialData
    X : array_like, shape (..., 2d)
    hbar : float

    Returns
    -------
    WKBRecord
        ``value = chi0 * exp(i theta0 / hbar)`` together with ``z``,
        ``theta0`` and ``chi0``.
    """
    X = np.asarray(X)
    z, it = stationary_z(data, X)
    theta = initial_phase(data, X, z)
    chi = initial_amplitude(data, z, hbar)
    return WKBRecord(z=z, theta0=theta, chi0=chi, value=chi * np.exp(1j * theta / hbar), iterations=it)


def _composite_gauss(a, b, panels, order=PANEL_ORDER):
    t, w = leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return x, wt


def _momentum_content(psi, a, b, hbar):
    """Largest local momentum ``hbar |d arg psi / dx|`` where psi matters."""
    x = np.arange(a, b + hbar / 16, hbar / 16)
    v = psi(x)
    big = np.abs(v) > 1e-6 * np.max(np.abs(v))
    ph = np.unwrap(np.angle(v))
    k = np.abs(np.gradient(ph, x))
    return float(np.max(k[big], initial=0.0)) * hbar


def _tail_fraction(psi, a, b, probe, lo, hi, hbar):
    """Squared integrand mass outside ``[a, b]`` relative to inside.

    The integrand is ``psi`` times the packet envelope of the nearest
    target, so mass is weighted by ``exp(-dist(x, [lo, hi])^2 / hbar)``.
    """
    xin, win = _composite_gauss(a, b, 64)
    xl, wl = _composite_gauss(a - probe, a, 16)
    xr, wr = _composite_gauss(b, b + probe, 16)

    def envelope(x):
        dist = np.maximum(0.0, np.maximum(lo - x, x - hi))
        return np.exp(-(dist**2) / hbar)

    inside = np.sum(win * envelope(xin) * np.abs(psi(xin)) ** 2)
    outside = np.sum(wl * envelope(xl) * np.abs(psi(xl)) ** 2) + np.sum(wr * envelope(xr) * np.abs(psi(xr)) ** 2)
    return float(outside / inside) if inside > 0 else np.inf


def wave_packet_transform(psi, grid, hbar, box=None, nodes=None):
    """Wave packet transform of a one-dimensional wavefunction.

    Parameters
    ----------
    psi : callable or tuple
        ``psi(x)`` for arrays ``x``, or ``(x, values)`` samples on a uniform
        grid (trapezoid weights are used then).
    grid : GridSpec
        Target phase-space grid.
    hbar : float
    box : (float, float), optional
        Quadrature interval; defaults to the target q-range widened by
        ``8 sqrt(hbar)`` on each side.
    nodes : int, optional
        Number of Gauss-Legendre nodes; by default chosen so the fastest
        oscillation of the integrand gets at least 10 nodes per period.

    Returns
    -------
    ComplexField
        Method tag ``transform``.

    Raises
    ------
    QuadratureError
        When more than 1e-8 of the squared integrand mass (``psi`` times the
        envelope of the nearest target packet) lies outside the box.
    """
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    s = np.sqrt(hbar)
    if callable(psi):
        if box is None:
            box = (grid.qmin - 8 * s, grid.qmax + 8 * s)
        a, b = map(float, box)
        tail = _tail_fraction(psi, a, b, 8 * s, grid.qmin, grid.qmax, hbar)
        if tail > TAIL_TOL:
            grow = b - a
            suggested = (a - grow / 2, b + grow / 2)
            raise QuadratureError(
                f"{tail:.2e} of the L2 mass lies outside the box [{a:g}, {b:g}]; try {suggested}",
                suggested_box=suggested,
            )
        if nodes is None:
            pmax = max(abs(grid.pmin), abs(grid.pmax)) + _momentum_content(psi, a, b, hbar)
            period = 2 * np.pi * hbar / max(pmax, 1e-12)
            spacing = min(period / NODES_PER_PERIOD, s / 4)
            panels = max(1, int(np.ceil((b - a) / (spacing * PANEL_ORDER))))
        else:
            panels = max(1, int(np.ceil(nodes / PANEL_ORDER)))
        x, w = _composite_gauss(a, b, panels)
        values = psi(x)
    else:
        x, values = (np.asarray(v) for v in psi)
        w = np.full(x.size, x[1] - x[0])
        w[[0, -1]] *= 0.5
    q, p = grid.q, grid.p
    gq = np.exp(-((x[None, :] - q[:, None]) ** 2) / (2 * hbar)) * (w * values)[None, :]
    ep = np.exp(-1j * np.outer(x, p) / hbar)
    out = gq @ ep
    out *= np.exp(0.5j * np.outer(q, p) / hbar)
    out *= (2 * np.pi * hbar) ** -0.5 * (np.pi * hbar) ** -0.25
    return ComplexField(grid, out, hbar, 0.0, "transform")


def inverse_wave_packet_transform(field, x):
    """Reconstruct ``psi(x)`` from a phase-space field by trapezoid quadrature."""
    hbar = field.hbar
    x = np.atleast_1d(np.asarray(x, dtype=float))
    Q, P = field.grid.mesh()
    weighted = field.grid.trapezoid_weights() * field.values * np.exp(-0.5j * Q * P / hbar)
    q, p = field.grid.q, field.grid.p
    gauss = np.exp(-((x[:, None] - q[None, :]) ** 2) / (2 * hbar))
    osc = np.exp(1j * np.outer(p, x) / hbar)
    out = np.einsum("xi,ij,jx->x", gauss, weighted, osc)
    return (2 * np.pi * hbar) ** -0.5 * (np.pi * hbar) ** -0.25 * out


_D1 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def check_resolution(field, points_per_period=4):
    """Raise ResolutionError when neighbouring samples differ in phase too much.

    Only samples above 1e-3 of the peak modulus take part.
    """
    v = field.values
    limit = 2 * np.pi / points_per_period
    floor = 1e-3 * np.max(np.abs(v))
    for axis in (0, 1):
        a = np.take(v, np.arange(v.shape[axis] - 1), axis=axis)
        b = np.take(v, np.arange(1, v.shape[axis]), axis=axis)
        both = (np.abs(a) > floor) & (np.abs(b) > floor)
        jumps = np.abs(np.angle(b[both] / a[both]))
        if jumps.size and np.max(jumps) > limit:
            raise ResolutionError(
                f"phase advances {np.max(jumps):.2f} rad per sample along axis {axis}; "
                f"need at least {points_per_period} points per oscillation"
            )


def fock_bargmann_residual(field):
    """Relative L2 residual of the Fock-Bargmann constraint.

    The operator ``(q - ip)/2 + hbar(d/dq - i d/dp)`` is applied in the form
    ``hbar exp(-f)(d/dq - i d/dp)(exp(f) Psi)`` with ``f = |X|^2/(4 hbar)``,
    so the fourth-order central differences act on an analytic function.
    Two samples at each edge are excluded.

    Returns
    -------
    float
        ``||residual|| / ||Psi||`` over the interior.
    """
    check_resolution(field, 4)
    v = field.values
    hbar = field.hbar
    g = field.grid
    q, p = g.q, g.p
    n, m = v.shape
    if n < 5 or m < 5:
        raise ResolutionError("need at least 5 samples per axis")
    core = v[2:-2, 2:-2]
    qc = q[2:-2, None]
    pc = p[None, 2:-2]
    res = np.zeros_like(core)
    for k, c in _D1:
        fq = (2 * qc * k * g.dq + (k * g.dq) ** 2) / (4 * hbar)
        fp = (2 * pc * k * g.dp + (k * g.dp) ** 2) / (4 * hbar)
        res += hbar * c / g.dq * np.exp(fq) * v[2 + k : n - 2 + k, 2:-2]
        res -= 1j * hbar * c / g.dp * np.exp(fp) * v[2:-2, 2 + k : m - 2 + k]
    return float(np.linalg.norm(res) / np.linalg.norm(core))
