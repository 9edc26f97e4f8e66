"""Hamiltonian flow, actions, variational system and anisotropy matrices.

One fixed-step RK4 integrator drives everything here.  It advances, for a
batch of initial points, the phase point ``X``, the action ``A``, the
symmetrised action ``A_w`` and the real linearised flow ``M`` (with
``M(0) = I``).  The complex variational pair follows as
``(A; B) = M (I; iI)``, so the Ehrenfest diagnostic and the Gaussian
anisotropy share one integration.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .core import canonical_J, check_siegel, symmetrize
from .errors import CausticError, DivergenceError, InvariantError, StepSizeError, ValidationError

log = logging.getLogger(__name__)

EXCEEDS_HORIZON = "exceeds-horizon"
CAUSTIC_TOL = 1e-12
DEFAULT_DT = 1e-3


def n_steps(t_final, dt):
    """Number of equal RK4 steps covering ``[0, t_final]`` with step <= dt."""
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    span = abs(float(t_final))
    if span == 0.0:
        return 0
    return max(1, math.ceil(span / dt - 1e-9))


def _split_AB(M, d):
    A = M[..., :d, :d] + 1j * M[..., :d, d:]
    B = M[..., d:, :d] + 1j * M[..., d:, d:]
    return A, B


def _det(M):
    if M.shape[-1] == 1:
        return M[..., 0, 0]
    return np.linalg.det(M)


@dataclass(frozen=True)
class FlowBundle:
    """Batched end state of the flow from ``X0`` over time ``t``.

    Attributes
    ----------
    X0, X : ndarray, shape (N, 2d)
        Initial and final phase points (complex for complex initial data).
    action, sym_action : ndarray, shape (N,)
    M : ndarray, shape (N, 2d, 2d) or None
        Linearised flow; None when the variational system was skipped.
    log_det_A, log_det_AmiB : ndarray, shape (N,)
        Continuously tracked logarithms of ``det A`` and ``det(A - iB)``.
    caustic : ndarray of bool, shape (N,)
        True where ``|det A|`` dropped below 1e-12 at some step.
    """

    t: float
    dt: float
    X0: np.ndarray
    X: np.ndarray
    action: np.ndarray
    sym_action: np.ndarray
    M: np.ndarray | None
    log_det_A: np.ndarray | None
    log_det_AmiB: np.ndarray | None
    caustic: np.ndarray | None

    @property
    def dim(self):
        return self.X.shape[-1] // 2

    @property
    def AB(self):
        return _split_AB(self.M, self.dim)


def _steps(model, X0, t_final, dt=DEFAULT_DT, variational=True):
    """Generator over RK4 steps for a batch of initial points.

    Yields ``(t, X, a, aw, M, logA, logAB, caustic)`` after every step,
    starting with the initial state.  ``t_final`` may be negative.
    """
    X0 = np.asarray(X0)
    if X0.ndim != 2 or X0.shape[1] != 2 * model.dim:
        raise ValidationError(f"initial points must have shape (N, {2 * model.dim})")
    d = model.dim
    J = canonical_J(d)
    dtype = np.result_type(X0.dtype, float)
    N = X0.shape[0]
    steps = n_steps(t_final, dt)
    h = float(t_final) / steps if steps else 0.0

    def rhs(X, M):
        g = model.grad(X)
        Xdot = np.concatenate([g[:, d:], -g[:, :d]], axis=1)
        Hval = model.value(X)
        q, p = X[:, :d], X[:, d:]
        pqdot = np.sum(p * Xdot[:, :d], axis=1)
        qpdot = np.sum(q * Xdot[:, d:], axis=1)
        adot = pqdot - Hval
        awdot = 0.5 * (pqdot - qpdot) - Hval
        Mdot = (J @ model.hess(X)) @ M if M is not None else None
        return Xdot, adot, awdot, Mdot

    X = X0.astype(dtype, copy=True)
    a = np.zeros(N, dtype=dtype)
    aw = np.zeros(N, dtype=dtype)
    M = np.broadcast_to(np.eye(2 * d, dtype=dtype), (N, 2 * d, 2 * d)).copy() if variational else None
    if variational:
        A, B = _split_AB(M, d)
        detA = _det(A)
        detAB = _det(A - 1j * B)
        logA = np.log(detA.astype(complex))
        logAB = np.log(detAB.astype(complex))
        caustic = np.abs(detA) < CAUSTIC_TOL
    else:
        logA = logAB = caustic = None
    yield 0.0, X, a, aw, M, logA, logAB, caustic
    for k in range(steps):
        k1 = rhs(X, M)
        k2 = rhs(X + 0.5 * h * k1[0], None if M is None else M + 0.5 * h * k1[3])
        k3 = rhs(X + 0.5 * h * k2[0], None if M is None else M + 0.5 * h * k2[3])
        k4 = rhs(X + h * k3[0], None if M is None else M + h * k3[3])
        w = h / 6.0
        X_new = X + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        a_new = a + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        aw_new = aw + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if not (np.all(np.isfinite(X_new)) and np.all(np.isfinite(a_new))):
            raise DivergenceError(f"non-finite state at t={(k + 1) * h:g}", last_valid_time=k * h)
        X, a, aw = X_new, a_new, aw_new
        if variational:
            M = M + w * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
            if not np.all(np.isfinite(M)):
                raise DivergenceError(f"non-finite variational state at t={(k + 1) * h:g}", last_valid_time=k * h)
            A, B = _split_AB(M, d)
            newA = _det(A)
            newAB = _det(A - 1j * B)
            incAB = np.log(newAB / detAB)
            if np.any(np.abs(incAB.imag) >= np.pi / 2):
                raise StepSizeError(f"det(A - iB) argument jump >= pi/2 at t={(k + 1) * h:g}; reduce dt")
            logAB = logAB + incAB
            near = np.abs(newA) < CAUSTIC_TOL
            with np.errstate(divide="ignore", invalid="ignore"):
                incA = np.log(newA / detA)
            bad = ~near & ~caustic & (np.abs(incA.imag) >= np.pi / 2)
            if np.any(bad):
                raise StepSizeError(f"det A argument jump >= pi/2 at t={(k + 1) * h:g}; reduce dt")
            logA = np.where(near | caustic, np.nan, logA + incA)
            caustic = caustic | near
            detA, detAB = newA, newAB
        yield (k + 1) * h, X, a, aw, M, logA, logAB, caustic


def _integrate(model, X0, t_final, dt=DEFAULT_DT, variational=True, record=False):
    """Advance a batch of initial points; see :class:`FlowBundle`.

    With ``record`` the per-step history is returned as a second value.
    """
    X0 = np.asarray(X0)
    history = []
    state = None
    for state in _steps(model, X0, t_final, dt, variational):
        if record:
            history.append(state)
    _, X, a, aw, M, logA, logAB, caustic = state
    bundle = FlowBundle(float(t_final), float(dt), X0, X, a, aw, M, logA, logAB, caustic)
    if record:
        return bundle, history
    return bundle


def flow_bundle(model, X0, t, dt=DEFAULT_DT, variational=True):
    """Integrate a batch of points to time ``t`` (negative for backward)."""
    X0 = np.atleast_2d(np.asarray(X0))
    return _integrate(model, X0, t, dt, variational=variational)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled orbit of one initial point with its actions."""

    t_samples: np.ndarray
    points: np.ndarray
    action: np.ndarray
    sym_action: np.ndarray

    @property
    def final_point(self):
        return self.points[-1]

    @property
    def final_time(self):
        return float(self.t_samples[-1])


@dataclass(frozen=True)
class VariationalState:
    """Complex variational pair at one time."""

    t: float
    A: np.ndarray
    B: np.ndarray
    log_det_A: complex
    log_det_AmiB: complex
    caustic: bool


class VariationalTrack(Sequence):
    """Sequence of :class:`VariationalState` along one orbit."""

    def __init__(self, X0, t, A, B, log_det_A, log_det_AmiB, caustic, M):
        self.X0 = X0
        self.t = t
        self.A = A
        self.B = B
        self.log_det_A = log_det_A
        self.log_det_AmiB = log_det_AmiB
        self.caustic = caustic
        self.M = M

    def __len__(self):
        return len(self.t)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(*k.indices(len(self)))]
        return VariationalState(
            float(self.t[k]),
            self.A[k],
            self.B[k],
            complex(self.log_det_A[k]),
            complex(self.log_det_AmiB[k]),
            bool(self.caustic[k]),
        )

    @property
    def final(self):
        return self[-1]


def _single(model, X0):
    X0 = np.asarray(X0, dtype=float).ravel()
    if X0.size != 2 * model.dim:
        raise ValidationError(f"initial point must have length {2 * model.dim}")
    return X0[None, :]


def integrate_flow(model, X0, t_final, dt=DEFAULT_DT):
    """Integrate Hamilton's equations with RK4 and accumulate the actions.

    Parameters
    ----------
    model : HamiltonianModel
    X0 : array_like, shape (2d,)
    t_final : float
        Non-negative final time.
    dt : float
        Maximal step; the step actually used divides ``t_final`` evenly.

    Returns
    -------
    TrajectoryRecord
    """
    if t_final < 0:
        raise ValidationError("t_final must be non-negative")
    _, hist = _integrate(model, _single(model, X0), t_final, dt, variational=False, record=True)
    return TrajectoryRecord(
        t_samples=np.array([h[0] for h in hist]),
        points=np.array([h[1][0] for h in hist]),
        action=np.array([h[2][0] for h in hist]),
        sym_action=np.array([h[3][0] for h in hist]),
    )


def integrate_variational(model, X0, t_final, dt=DEFAULT_DT):
    """Integrate the complex variational system ``(A, B)`` along the orbit.

    ``A(0) = I`` and ``B(0) = iI``.  Logarithms of ``det A`` and
    ``det(A - iB)`` are continued step by step; an argument increment of
    pi/2 or more raises :class:`StepSizeError`.

    Returns
    -------
    VariationalTrack
    """
    if t_final < 0:
        raise ValidationError("t_final must be non-negative")
    _, hist = _integrate(model, _single(model, X0), t_final, dt, variational=True, record=True)
    d = model.dim
    M = np.array([h[4][0] for h in hist])
    A, B = _split_AB(M, d)
    return VariationalTrack(
        X0=np.asarray(X0, dtype=float).ravel(),
        t=np.array([h[0] for h in hist]),
        A=A,
        B=B,
        log_det_A=np.array([h[5][0] for h in hist]),
        log_det_AmiB=np.array([h[6][0] for h in hist]),
        caustic=np.array([h[7][0] for h in hist]),
        M=M,
    )


def anisotropy_Z(state):
    """Return ``Z = B A^{-1}`` for a :class:`VariationalState`.

    Raises
    ------
    CausticError
        When ``det A`` is below 1e-12.
    InvariantError
        When the result is not in the Siegel upper half-space.
    """
    A = np.asarray(state.A)
    B = np.asarray(state.B)
    if state.caustic or abs(_det(A)) < CAUSTIC_TOL:
        raise CausticError("A is singular; use the det(A - iB) forms of the kernel instead")
    Z = np.linalg.solve(A.T, B.T).T
    report = check_siegel(Z)
    if not report:
        raise InvariantError(f"anisotropy matrix left the Siegel half-space: {report.reason}")
    return symmetrize(Z)


def anisotropy_Q(Z):
    """Double phase space anisotropy matrix built from ``Z``.

    With ``K = (I - iZ)^{-1}`` the result is
    ``[[iI - iK, I/2 - K], [I/2 - K, iK]]``.
    """
    Z = np.asarray(Z, dtype=complex)
    d = Z.shape[-1]
    eye = np.eye(d)
    lhs = eye - 1j * Z
    if np.linalg.cond(lhs) > 1e12:
        raise InvariantError("I - iZ is singular; the anisotropy matrix is corrupted")
    K = np.linalg.inv(lhs)
    top = np.concatenate([1j * eye - 1j * K, 0.5 * eye - K], axis=-1)
    bottom = np.concatenate([0.5 * eye - K, 1j * K], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def anisotropy_Q_batch(A, B):
    """Vectorised ``anisotropy_Q(B A^{-1})`` for stacks of ``(A, B)``.

    Uses ``(I - iZ)^{-1} = A (A - iB)^{-1}`` so ``A`` need not be invertible.
    """
    d = A.shape[-1]
    eye = np.eye(d)
    K = A @ np.linalg.inv(A - 1j * B)
    top = np.concatenate([1j * eye - 1j * K, 0.5 * eye - K], axis=-1)
    bottom = np.concatenate([0.5 * eye - K, 1j * K], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def ehrenfest_time(model, X0, hbar, horizon, dt=DEFAULT_DT):
    """First time the linearised flow reaches spectral norm ``hbar**-0.5``.

    The crossing is located by linear interpolation of the norm between
    the two bracketing steps.

    Returns
    -------
    float or str
        The crossing time, or ``"exceeds-horizon"``.
    """
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    target = hbar ** -0.5
    prev_t, prev_n = 0.0, 1.0
    for t, _, _, _, M, _, _, _ in _steps(model, _single(model, X0), horizon, dt):
        nrm = float(np.linalg.norm(M[0].real, 2))
        if nrm >= target:
            if t == 0.0:
                return 0.0
            return prev_t + (target - prev_n) * (t - prev_t) / (nrm - prev_n)
        prev_t, prev_n = t, nrm
    log.debug("linearised flow norm stayed below %g up to t=%g", target, horizon)
    return EXCEEDS_HORIZON
