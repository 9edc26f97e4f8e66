"""Phase-space propagator kernels and their application by quadrature.

The anisotropic kernel from source ``Y = (eta, xi)`` to target
``X = (q, p)`` is

    K(X, Y, t) = (2 pi hbar)^(-d) (det(A - iB) / 2^d)^(-1/2)
                 exp{(i/hbar)[A(Y,t) + (xi.eta - xi_t.eta_t)/2
                              + (q.xi_t - p.eta_t)/2 + D.Q D / 2]}

with ``D = X - Y_t`` and ``Q`` the double phase space anisotropy matrix.
At ``t = 0`` it reduces to the Bergmann kernel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .classical import DEFAULT_DT, anisotropy_Q_batch, flow_bundle
from .core import ComplexField, GridSpec
from .errors import (
    QuadratureError,
    ResolutionError,
    StalenessError,
    UnsupportedError,
    ValidationError,
)

log = logging.getLogger(__name__)

DROP_TOL = 1e-14
EDGE_TOL = 1e-8
PAIR_CHUNK = 4_000_000


def bergmann_kernel(target, source, hbar):
    """Reproducing kernel ``(2 pi hbar)^(-d) <G_target, G_source>``.

    Parameters
    ----------
    target, source : array_like, shape (..., 2d)
    hbar : float

    Returns
    -------
    complex or ndarray
        ``(2 pi hbar)^(-d) exp{(i/2hbar)(q.xi - p.eta) - |X - Y|^2/(4 hbar)}``.
    """
    X = np.asarray(target, dtype=float)
    Y = np.asarray(source, dtype=float)
    d = X.shape[-1] // 2
    q, p = X[..., :d], X[..., d:]
    eta, xi = Y[..., :d], Y[..., d:]
    phase = 0.5 * (np.sum(q * xi, axis=-1) - np.sum(p * eta, axis=-1))
    dist2 = np.sum((X - Y) ** 2, axis=-1)
    return (2 * np.pi * hbar) ** (-d) * np.exp(1j * phase / hbar - dist2 / (4 * hbar))


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor trapezoid rule over a rectangular source box.

    ``spacing`` defaults to ``0.6 sqrt(hbar)``; ``nodes_per_axis`` overrides
    it when given.
    """

    box: tuple = (-6.0, 6.0, -6.0, 6.0)
    spacing: float | None = None
    nodes_per_axis: int | None = None

    def grid(self, hbar):
        qmin, qmax, pmin, pmax = map(float, self.box)
        if self.nodes_per_axis is not None:
            n = m = int(self.nodes_per_axis)
        else:
            h = self.spacing if self.spacing is not None else 0.6 * np.sqrt(hbar)
            n = int(np.ceil((qmax - qmin) / h)) + 1
            m = int(np.ceil((pmax - pmin) / h)) + 1
        return GridSpec(qmin, qmax, pmin, pmax, n, m)


@dataclass(frozen=True)
class SourceCache:
    """Per-source flow data at one time, shared by every target.

    Attributes
    ----------
    sources : ndarray, shape (N, 2d)
    weights : ndarray, shape (N,)
        Quadrature weight times initial value (all ones for a bare cache).
    Yt : ndarray, shape (N, 2d)
    action : ndarray, shape (N,)
    log_det_AmiB : ndarray, shape (N,)
    Q : ndarray, shape (N, 2d, 2d)
    """

    t: float
    dt: float
    model_kind: str
    sources: np.ndarray
    weights: np.ndarray
    Yt: np.ndarray
    action: np.ndarray
    log_det_AmiB: np.ndarray
    Q: np.ndarray
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self):
        return self.sources.shape[-1] // 2

    def index(self, source):
        key = tuple(np.asarray(source, dtype=float).ravel())
        if not self._index:
            self._index.update({tuple(s): i for i, s in enumerate(self.sources)})
        if key not in self._index:
            raise StalenessError("source point is not in the cache")
        return self._index[key]


def build_source_cache(model, sources, t, dt=DEFAULT_DT, weights=None):
    """Integrate every source once up to time ``t``."""
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    bundle = flow_bundle(model, sources, t, dt, variational=True)
    A, B = bundle.AB
    Q = anisotropy_Q_batch(A, B)
    if weights is None:
        weights = np.ones(len(sources), dtype=complex)
    return SourceCache(
        t=float(t),
        dt=float(dt),
        model_kind=model.kind,
        sources=sources,
        weights=np.asarray(weights, dtype=complex),
        Yt=np.real(bundle.X),
        action=np.real(bundle.action),
        log_det_AmiB=bundle.log_det_AmiB,
        Q=Q,
    )


@dataclass(frozen=True)
class KernelEvaluation:
    """Kernel value with its pieces.

    ``components`` holds the action term, the midpoint term
    ``(xi.eta - xi_t.eta_t)/2``, the symplectic term
    ``(q.xi_t - p.eta_t)/2`` and the quadratic form ``D.Q D / 2``.
    """

    value: complex
    prefactor_branch: complex
    components: dict


def _per_source_phase(cache):
    d = cache.dim
    Y, Yt = cache.sources, cache.Yt
    mid = 0.5 * (np.sum(Y[:, :d] * Y[:, d:], axis=-1) - np.sum(Yt[:, :d] * Yt[:, d:], axis=-1))
    return cache.action, mid


def _prefactor(cache, hbar):
    d = cache.dim
    return (2 * np.pi * hbar) ** (-d) * np.exp(-0.5 * (cache.log_det_AmiB - d * np.log(2.0)))


def kernel_KZ(target, source, t, model, hbar, cache=None, dt=DEFAULT_DT):
    """Evaluate the anisotropic kernel for one target/source pair.

    Parameters
    ----------
    target, source : array_like, shape (2d,)
    t : float
    model : HamiltonianModel
    hbar : float
    cache : SourceCache, optional
        Must contain ``source`` at time ``t``; built on the fly otherwise.

    Returns
    -------
    KernelEvaluation
    """
    X = np.asarray(target, dtype=float).ravel()
    if cache is None:
        cache = build_source_cache(model, source, t, dt)
    if abs(cache.t - t) > 1e-14 or cache.model_kind != model.kind:
        raise StalenessError("cache was built for a different time or model")
    k = cache.index(source)
    d = cache.dim
    action, mid = _per_source_phase(cache)
    Yt = cache.Yt[k]
    sympl = 0.5 * (X[:d] @ Yt[d:] - X[d:] @ Yt[:d])
    D = X - Yt
    quad = 0.5 * D @ cache.Q[k] @ D
    pref = _prefactor(cache, hbar)[k]
    total = action[k] + mid[k] + sympl + quad
    return KernelEvaluation(
        value=complex(pref * np.exp(1j * total / hbar)),
        prefactor_branch=complex(pref * (2 * np.pi * hbar) ** d),
        components={"action": float(action[k]), "midpoint": float(mid[k]), "symplectic": float(sympl), "quadratic": complex(quad)},
    )


def _apply_aga(cache, targets, hbar):
    """``sum_s K(X, Y_s) w_s`` for target points of shape (M, 2d)."""
    d = cache.dim
    action, mid = _per_source_phase(cache)
    amp = _prefactor(cache, hbar) * np.exp(1j * (action + mid) / hbar) * cache.weights
    Yt, Q = cache.Yt, cache.Q
    out = np.empty(len(targets), dtype=complex)
    step = max(1, PAIR_CHUNK // max(1, len(Yt)))
    for lo in range(0, len(targets), step):
        X = targets[lo : lo + step]
        if d == 1:
            dq = X[:, 0, None] - Yt[None, :, 0]
            dp = X[:, 1, None] - Yt[None, :, 1]
            expo = (Q[:, 0, 0] * dq + 2 * Q[:, 0, 1] * dp) * dq + Q[:, 1, 1] * dp * dp
            expo += X[:, 0, None] * Yt[None, :, 1] - X[:, 1, None] * Yt[None, :, 0]
        else:
            D = X[:, None, :] - Yt[None, :, :]
            expo = np.einsum("tsi,sij,tsj->ts", D, Q, D)
            expo += (X[:, None, :d] * Yt[None, :, d:] - X[:, None, d:] * Yt[None, :, :d]).sum(-1)
        out[lo : lo + step] = np.exp((0.5j / hbar) * expo) @ amp
    return out


def _apply_frozen(cache, targets, hbar):
    action, mid = _per_source_phase(cache)
    amp = np.exp(1j * (action + mid) / hbar) * cache.weights
    out = np.empty(len(targets), dtype=complex)
    step = max(1, PAIR_CHUNK // max(1, len(cache.Yt)))
    for lo in range(0, len(targets), step):
        X = targets[lo : lo + step]
        out[lo : lo + step] = bergmann_kernel(X[:, None, :], cache.Yt[None, :, :], hbar) @ amp
    return out


def _initial_sources(initial, hbar, quad):
    """Quadrature nodes, weights times values, and a tail check."""
    if isinstance(initial, ComplexField):
        g = initial.grid
        values = np.asarray(initial.values)
        w = g.trapezoid_weights()
    else:
        if quad is None:
            quad = QuadratureSpec()
        g = quad.grid(hbar)
        Q, P = g.mesh()
        values = np.asarray(initial(Q, P), dtype=complex)
        w = g.trapezoid_weights()
    mod = np.abs(values)
    peak = mod.max()
    if not peak > 0:
        raise ValidationError("initial field vanishes on the quadrature box")
    edge = np.concatenate([mod[0], mod[-1], mod[:, 0], mod[:, -1]])
    tail = float(np.sum(edge**2) / np.sum(mod**2))
    if tail > EDGE_TOL:
        qmin, qmax, pmin, pmax = g.qmin, g.qmax, g.pmin, g.pmax
        cq, cp = 0.5 * (qmin + qmax), 0.5 * (pmin + pmax)
        suggested = (cq - (qmax - qmin), cq + (qmax - qmin), cp - (pmax - pmin), cp + (pmax - pmin))
        raise QuadratureError(
            f"initial field carries {tail:.2e} of its mass on the box edge; try box {suggested}",
            suggested_box=suggested,
        )
    keep = (mod > DROP_TOL * peak).ravel()
    return g.points()[keep], (w * values).ravel()[keep]


def _propagate(apply, tag, initial, targets, t, model, hbar, quad, dt):
    if not hbar > 0:
        raise ValidationError("hbar must be positive")
    sources, weights = _initial_sources(initial, hbar, quad)
    cache = build_source_cache(model, sources, t, dt, weights)
    values = apply(cache, targets.points(), hbar)
    log.debug("%s: %d sources, %d targets", tag, len(sources), targets.nq * targets.np)
    return ComplexField(targets, values, hbar, t, tag)


def propagate_aga(initial, targets, t, model, hbar, quad=None, dt=DEFAULT_DT):
    """Superpose anisotropic kernels over the initial field.

    Parameters
    ----------
    initial : ComplexField or callable
        Initial phase-space field, either sampled (its grid is the
        quadrature grid) or a callable ``Psi0(q, p)`` sampled on ``quad``.
    targets : GridSpec
    t : float
    model : HamiltonianModel
    hbar : float
    quad : QuadratureSpec, optional
    dt : float
        Integrator step.

    Returns
    -------
    ComplexField
        Method tag ``aga``.
    """
    return _propagate(_apply_aga, "aga", initial, targets, t, model, hbar, quad, dt)


def propagate_frozen(initial, targets, t, model, hbar, quad=None, dt=DEFAULT_DT):
    """Superpose rigid packets ``exp(iA/hbar)`` moved along the flow.

    The kernel is ``exp{(i/hbar)(A + (xi.eta - xi_t.eta_t)/2)} b(X, Y_t)``,
    which equals the anisotropic kernel at ``t = 0``.
    """
    return _propagate(_apply_frozen, "frozen", initial, targets, t, model, hbar, quad, dt)


def apply_kernel_points(initial, points, t, model, hbar, quad=None, dt=DEFAULT_DT):
    """Anisotropic superposition evaluated at arbitrary target points (M, 2d)."""
    sources, weights = _initial_sources(initial, hbar, quad)
    cache = build_source_cache(model, sources, t, dt, weights)
    return _apply_aga(cache, np.atleast_2d(np.asarray(points, dtype=float)), hbar)


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _stencil(v, coeffs, axis, h, power):
    n = v.shape[axis]
    out = 0
    for k, c in zip(range(-2, 3), coeffs):
        if c:
            out = out + c * np.take(v, np.arange(2 + k, n - 2 + k), axis=axis)
    other = 1 - axis
    trimmed = np.take(out, np.arange(2, v.shape[other] - 2), axis=other)
    return trimmed / h**power


def apply_phase_space_hamiltonian(field, model, hbar=None):
    """Apply the phase-space Hamiltonian for a potential of degree <= 2.

    With ``V(x) = c0 + c1 x + c2 x^2`` the operator is

        p^2/4 - i hbar p d_q - hbar^2 d_q^2
        + c0 + c1 (q/2 + i hbar d_p) + c2 (q^2/4 + i hbar q d_p - hbar^2 d_p^2)

    discretised with fourth-order central differences; two samples are
    trimmed from every edge.

    Returns
    -------
    ComplexField
        On ``field.grid.interior(2)``.
    """
    hbar = field.hbar if hbar is None else hbar
    if model.polynomial_degree == "nonpolynomial" or model.polynomial_degree > 2 or model.dim != 1:
        raise UnsupportedError("the phase-space operator is differential only for polynomial degree <= 2 in d = 1")
    g = field.grid
    step = 2 * np.pi * hbar / 8
    if g.dq > step or g.dp > step:
        raise ResolutionError(f"grid spacing must be at most 2 pi hbar / 8 = {step:.4g}")
    c = tuple(model.coefficients) + (0.0, 0.0, 0.0)
    c0, c1, c2 = c[:3]
    v = field.values
    inner = g.interior(2)
    Q, P = inner.mesh()
    core = v[2:-2, 2:-2]
    dq1 = _stencil(v, _D1, 0, g.dq, 1)
    dq2 = _stencil(v, _D2, 0, g.dq, 2)
    dp1 = _stencil(v, _D1, 1, g.dp, 1)
    dp2 = _stencil(v, _D2, 1, g.dp, 2)
    out = P**2 / 4 * core - 1j * hbar * P * dq1 - hbar**2 * dq2
    out = out + c0 * core + c1 * (Q / 2 * core + 1j * hbar * dp1)
    out = out + c2 * (Q**2 / 4 * core + 1j * hbar * Q * dp1 - hbar**2 * dp2)
    return ComplexField(inner, out, hbar, field.time, field.method)


def pde_residual(field_at, t, model, hbar, delta=1e-3):
    """Relative residual of ``i hbar dPsi/dt = H Psi`` for a family of fields.

    Parameters
    ----------
    field_at : callable
        ``field_at(t)`` returns a ComplexField on a fixed grid.
    t : float
    model : HamiltonianModel
    hbar : float
    delta : float
        Time step of the fourth-order central difference in ``t``.

    Returns
    -------
    float
        ``||i hbar dPsi/dt - H Psi|| / ||Psi||`` over the trimmed interior.
    """
    f0 = field_at(t)
    HPsi = apply_phase_space_hamiltonian(f0, model, hbar).values
    fm2, fm1, fp1, fp2 = (np.asarray(field_at(t + k * delta).values) for k in (-2, -1, 1, 2))
    dt = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * delta)
    lhs = 1j * hbar * dt[2:-2, 2:-2]
    core = np.asarray(f0.values)[2:-2, 2:-2]
    return float(np.linalg.norm(lhs - HPsi) / np.linalg.norm(core))
