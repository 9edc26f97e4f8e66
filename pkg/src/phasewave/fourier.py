"""Fourier integral representation of the propagated WKB state.

With ``Y = (eta, xi)`` the source point and ``X = (q, p)`` the target,

    Psi(X, t) = (2 pi hbar)^(-d) int phi(Y, t) exp(i F(X, Y, t) / hbar) dY

    F = theta0(Y) + A(Y, t) + (xi.eta - xi_t.eta_t)/2
        + (q.xi_t - p.eta_t)/2 + D.Q D / 2,       D = X - Y_t

    phi = (det(A - iB) / 2^d)^(-1/2) chi0(Y).

Derivatives in ``Y`` of the flow-dependent part of ``F`` are taken by
central differences with one Richardson step; the ``theta0`` part is
differentiated analytically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .classical import DEFAULT_DT, anisotropy_Q_batch, flow_bundle
from .core import ComplexField
from .errors import DomainError, OutsideNeighborhoodError, QuadratureError, ValidationError
from .propagator import DROP_TOL, EDGE_TOL, PAIR_CHUNK, QuadratureSpec
from .wavepacket import (
    initial_amplitude,
    initial_phase,
    initial_phase_gradient,
    initial_phase_hessian,
    stationary_z,
)

log = logging.getLogger(__name__)

GRAD_STEP = 1e-4
HESS_STEP = 1e-3
NEWTON_TOL = 1e-10
NEWTON_MAXIT = 50
TUBE_IMAG = 0.5
MANIFOLD_TOL = 1e-8


@dataclass(frozen=True)
class FourierPhaseEval:
    """``F(X, Y, t)`` with its first and second derivatives in ``Y``."""

    value: complex
    gradY: np.ndarray
    hessY: np.ndarray


def _flow_part(X, Ys, t, model, dt):
    """Flow-dependent part of F for a batch of sources ``Ys`` (N, 2d).

    Returns the phase and ``log det(A - iB)``.
    """
    d = model.dim
    b = flow_bundle(model, Ys, t, dt, variational=True)
    A, B = b.AB
    Q = anisotropy_Q_batch(A, B)
    Yt = b.X
    mid = 0.5 * (np.sum(Ys[:, :d] * Ys[:, d:], axis=-1) - np.sum(Yt[:, :d] * Yt[:, d:], axis=-1))
    sympl = 0.5 * (Yt[:, d:] @ X[:d] - Yt[:, :d] @ X[d:])
    D = X[None, :] - Yt
    quad = 0.5 * np.einsum("si,sij,sj->s", D, Q, D)
    return b.action + mid + sympl + quad, b.log_det_AmiB


def _fd_stencil(n, s):
    E = np.eye(n) * s
    pts = [np.zeros(n)]
    for i in range(n):
        pts += [E[i], -E[i]]
    for i in range(n):
        for j in range(i + 1, n):
            pts += [E[i] + E[j], E[i] - E[j], -E[i] + E[j], -E[i] - E[j]]
    return np.array(pts)


def _fd_derivs(vals, n, s):
    f0 = vals[0]
    g = np.empty(n, dtype=complex)
    H = np.empty((n, n), dtype=complex)
    for i in range(n):
        fp, fm = vals[1 + 2 * i], vals[2 + 2 * i]
        g[i] = (fp - fm) / (2 * s)
        H[i, i] = (fp - 2 * f0 + fm) / s**2
    k = 1 + 2 * n
    for i in range(n):
        for j in range(i + 1, n):
            pp, pm, mp, mm = vals[k : k + 4]
            H[i, j] = H[j, i] = (pp - pm - mp + mm) / (4 * s**2)
            k += 4
    return g, H


def _flow_derivatives(X, Y, t, model, dt):
    """Value, gradient and Hessian of the flow part at a (possibly complex) Y."""
    n = Y.size
    steps = (GRAD_STEP, GRAD_STEP / 2, HESS_STEP, HESS_STEP / 2)
    offsets = [_fd_stencil(n, s) for s in steps]
    pts = Y[None, :] + np.concatenate(offsets)
    vals, _ = _flow_part(X, pts, t, model, dt)
    size = len(offsets[0])
    parts = [vals[k * size : (k + 1) * size] for k in range(4)]
    g1, _ = _fd_derivs(parts[0], n, steps[0])
    g2, _ = _fd_derivs(parts[1], n, steps[1])
    _, H1 = _fd_derivs(parts[2], n, steps[2])
    _, H2 = _fd_derivs(parts[3], n, steps[3])
    return parts[0][0], (4 * g2 - g1) / 3, (4 * H2 - H1) / 3


def fourier_phase(target, source, t, model, data, dt=DEFAULT_DT):
    """Evaluate ``F`` and its ``Y``-derivatives.

    Parameters
    ----------
    target : array_like, shape (2d,)
        Real target point ``X``.
    source : array_like, shape (2d,)
        Source point ``Y``; complex values evaluate the analytic continuation.
    t : float
    model : HamiltonianModel
    data : WKBInitialData

    Returns
    -------
    FourierPhaseEval
    """
    X = np.asarray(target, dtype=float).ravel()
    Y = np.asarray(source).ravel()
    if X.size != 2 * model.dim or Y.size != 2 * model.dim:
        raise ValidationError("target and source must have length 2d")
    z, _ = stationary_z(data, Y)
    th = initial_phase(data, Y, z)
    thg = initial_phase_gradient(data, Y, z)
    thH = initial_phase_hessian(data, Y, z)
    fv, fg, fH = _flow_derivatives(X, Y.astype(complex), t, model, dt)
    H = thH + fH
    return FourierPhaseEval(complex(th + fv), thg + fg, 0.5 * (H + H.T))


def solve_stationary_point(target, t, model, data, initial_guess=None, dt=DEFAULT_DT):
    """Newton solve of ``dF/dY = 0`` in complex ``Y``.

    Parameters
    ----------
    target : array_like, shape (2d,)
    t : float
    model : HamiltonianModel
    data : WKBInitialData
    initial_guess : array_like, optional
        Defaults to the backward flow of ``target``.

    Returns
    -------
    ndarray of complex, shape (2d,)

    Raises
    ------
    OutsideNeighborhoodError
        When Newton fails within 50 iterations or ``|Im Y| >= 0.5``.
    """
    X = np.asarray(target, dtype=float).ravel()
    if initial_guess is None:
        initial_guess = np.real(flow_bundle(model, X[None, :], -t, dt, variational=False).X[0])
    Y = np.asarray(initial_guess, dtype=complex).ravel()
    for _ in range(NEWTON_MAXIT):
        ev = fourier_phase(X, Y, t, model, data, dt)
        try:
            step = np.linalg.solve(ev.hessY, ev.gradY)
        except np.linalg.LinAlgError as exc:
            raise OutsideNeighborhoodError("singular Hessian in the stationary point solve") from exc
        Y = Y - step
        if not np.all(np.isfinite(Y)):
            break
        if np.max(np.abs(step)) <= NEWTON_TOL * (1 + np.max(np.abs(Y))):
            if np.max(np.abs(Y.imag)) >= TUBE_IMAG:
                raise OutsideNeighborhoodError("stationary point lies outside the tube |Im Y| < 0.5")
            return Y
    raise OutsideNeighborhoodError("Newton iteration for the stationary point did not converge")


def _sources(data, hbar, quad):
    quad = quad or QuadratureSpec()
    g = quad.grid(hbar)
    Y = g.points()
    z, _ = stationary_z(data, Y)
    theta = initial_phase(data, Y, z)
    chi = initial_amplitude(data, z, hbar)
    mod = np.abs(chi * np.exp(-theta.imag / hbar)).reshape(g.shape)
    edge = np.concatenate([mod[0], mod[-1], mod[:, 0], mod[:, -1]])
    tail = float(np.sum(edge**2) / np.sum(mod**2))
    if tail > EDGE_TOL:
        raise QuadratureError(f"integrand carries {tail:.2e} of its mass on the box edge", suggested_box=None)
    keep = mod.ravel() > DROP_TOL * mod.max()
    return Y[keep], g.trapezoid_weights().ravel()[keep], theta[keep], chi[keep]


def eval_fourier_points(points, t, model, data, hbar, quad=None, dt=DEFAULT_DT):
    """Quadrature of ``phi exp(iF/hbar)`` at target points (M, 2d)."""
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    d = model.dim
    Y, w, theta, chi = _sources(data, hbar, quad)
    b = flow_bundle(model, Y, t, dt, variational=True)
    A, B = b.AB
    Q = anisotropy_Q_batch(A, B)
    Yt = np.real(b.X)
    phi = np.exp(-0.5 * (b.log_det_AmiB - d * np.log(2.0))) * chi
    mid = 0.5 * (np.sum(Y[:, :d] * Y[:, d:], axis=-1) - np.sum(Yt[:, :d] * Yt[:, d:], axis=-1))
    F_src = theta + np.real(b.action) + mid
    coef = (2 * np.pi * hbar) ** (-d) * w * phi
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(len(points), dtype=complex)
    step = max(1, PAIR_CHUNK // len(Y))
    for lo in range(0, len(points), step):
        X = points[lo : lo + step]
        D = X[:, None, :] - Yt[None, :, :]
        F = F_src[None, :] + 0.5 * np.einsum("tsi,sij,tsj->ts", D, Q, D)
        F += 0.5 * (X[:, None, :d] * Yt[None, :, d:] - X[:, None, d:] * Yt[None, :, :d]).sum(-1)
        out[lo : lo + step] = np.exp(1j * F / hbar) @ coef
    return out


def eval_fourier_integral(targets, t, model, data, hbar, quad=None, dt=DEFAULT_DT):
    """Evaluate the Fourier integral on a grid.

    Returns
    -------
    ComplexField
        Method tag ``fourier``.
    """
    values = eval_fourier_points(targets.points(), t, model, data, hbar, quad, dt)
    return ComplexField(targets, values, hbar, t, "fourier")


def _det_minus_i_hess(X, Y, t, model, data, dt):
    return np.linalg.det(-1j * fourier_phase(X, Y, t, model, data, dt).hessY)


def leading_term_on_manifold(target, t, model, data, hbar, dt=DEFAULT_DT, n_branch=None):
    """Leading stationary-phase term at a point of the transported manifold.

    The value is

        (pi hbar)^(-d/4) R0(eta) exp{(i/hbar)(S0(eta) + A(Y, t) - p.q/2)}
        / [ (det(A - iB)/2^d)^(1/2) det(I - i S0''(eta))^(1/2)
            det(-i d2F/dY2)^(1/2) ]

    with ``Y = (eta, xi)`` the backward flow of the target.  The branch of
    the last root follows ``s -> X_s = g_s(Y)`` continuously from ``s = 0``.
    ``hbar`` may be an array; the geometric part is then computed once.

    Raises
    ------
    DomainError
        When the backward flow of ``target`` misses the initial manifold.
    """
    d = model.dim
    X = np.asarray(target, dtype=float).ravel()
    back = flow_bundle(model, X[None, :], -t, dt, variational=False)
    Y = np.real(back.X[0])
    eta, xi = Y[:d], Y[d:]
    miss = float(np.max(np.abs(xi - np.asarray(data.dS0(eta)))))
    if miss > MANIFOLD_TOL:
        raise DomainError(f"target is {miss:.2e} away from the transported manifold")
    fwd = flow_bundle(model, Y[None, :], t, dt, variational=True)
    action = float(np.real(fwd.action[0]))
    log_det = fwd.log_det_AmiB[0] - d * np.log(2.0)
    n = n_branch or max(8, int(np.ceil(abs(t) * 16)))
    svals = np.linspace(0.0, t, n + 1)
    dets = []
    for s in svals:
        Xs = np.real(flow_bundle(model, Y[None, :], s, dt, variational=False).X[0]) if s else Y
        dets.append(_det_minus_i_hess(Xs, Y, s, model, data, dt))
    dets = np.array(dets)
    arg = np.unwrap(np.angle(dets))
    root_hess = np.sqrt(np.abs(dets[-1])) * np.exp(0.5j * arg[-1])
    s0dd = np.linalg.det(np.eye(d) - 1j * np.asarray(data.d2S0(eta)).reshape(d, d))
    phase = float(data.S0(eta)) + action - X[:d] @ X[d:] / 2
    hb = np.asarray(hbar, dtype=float)
    amp = (np.pi * hb) ** (-d / 4) * float(data.R0(eta))
    out = amp * np.exp(-0.5 * log_det) / np.sqrt(s0dd) / root_hess * np.exp(1j * phase / hb)
    return complex(out) if out.ndim == 0 else out
