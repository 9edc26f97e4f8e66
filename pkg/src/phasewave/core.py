"""Shared domain types, symplectic helpers, grids and validation predicates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

METHODS = ("exact", "aga", "frozen", "fourier", "beam", "transform")

SYMMETRY_TOL = 1e-12
POSITIVITY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-10


def canonical_J(dim):
    """Return the canonical symplectic matrix ``[[0, I], [-I, 0]]``.

    Parameters
    ----------
    dim : int
        Configuration-space dimension ``d``.

    Returns
    -------
    ndarray, shape (2d, 2d)
    """
    dim = int(dim)
    if dim < 1:
        raise DimensionError(f"dim must be >= 1, got {dim}")
    eye = np.eye(dim)
    zero = np.zeros((dim, dim))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class SiegelReport:
    """Outcome of :func:`check_siegel`.  Truthy iff the matrix is Siegel."""

    ok: bool
    asymmetry: float
    min_imag_eig: float
    reason: str = ""

    def __bool__(self):
        return self.ok


def _square(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    return M


def check_siegel(M):
    """Test membership in the Siegel upper half-space.

    A matrix qualifies when it is symmetric to 1e-12 (relative to its
    largest entry) and the symmetrised imaginary part has all eigenvalues
    above 1e-12.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Complex square matrix.

    Returns
    -------
    SiegelReport
    """
    M = _square(M)
    scale = max(1.0, float(np.max(np.abs(M))))
    asym = float(np.max(np.abs(M - M.T))) / scale
    im = 0.5 * (M.imag + M.imag.T)
    min_eig = float(np.min(np.linalg.eigvalsh(im)))
    if asym > SYMMETRY_TOL:
        return SiegelReport(False, asym, min_eig, "not symmetric")
    if min_eig <= POSITIVITY_TOL:
        return SiegelReport(False, asym, min_eig, "imaginary part not positive definite")
    return SiegelReport(True, asym, min_eig)


def check_scaled_symplectic(M, tol=SYMPLECTIC_TOL):
    """Return True when ``(2/i) M`` is a complex symplectic matrix.

    Parameters
    ----------
    M : array_like, shape (2d, 2d)
    tol : float
        Entrywise tolerance on ``S^T J S - J``.
    """
    M = _square(M)
    n = M.shape[0]
    if n % 2:
        raise DimensionError(f"expected even dimension, got {n}")
    J = canonical_J(n // 2)
    S = (2.0 / 1j) * M
    return bool(np.max(np.abs(S.T @ J @ S - J)) <= tol)


def symmetrize(M):
    M = np.asarray(M)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def branch_log_increment(new, old):
    """Principal logarithm of ``new / old``, elementwise."""
    return np.log(np.asarray(new) / np.asarray(old))


def continuous_log(values):
    """Continuous complex logarithm along a sampled path.

    The first sample uses the principal branch; each later sample adds the
    principal logarithm of the ratio to its predecessor.
    """
    values = np.asarray(values, dtype=complex)
    out = np.empty_like(values)
    out[0] = np.log(values[0])
    out[1:] = out[0] + np.cumsum(np.log(values[1:] / values[:-1]), axis=0)
    return out


@dataclass(frozen=True)
class SemiclassicalConfig:
    hbar: float
    dim: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.hbar) and self.hbar > 0):
            raise ValidationError(f"hbar must be positive, got {self.hbar}")
        if int(self.dim) < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise DimensionError("q and p must be vectors of equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValidationError("phase point has non-finite entries")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self):
        return self.q.size

    @property
    def X(self):
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_X(cls, X):
        X = np.asarray(X, dtype=float).ravel()
        if X.size % 2:
            raise DimensionError("phase-space vector must have even length")
        d = X.size // 2
        return cls(X[:d], X[d:])


@dataclass(frozen=True)
class DoublePhasePoint:
    X: np.ndarray
    P: np.ndarray
    on_plane: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).ravel()
        P = np.asarray(self.P, dtype=float).ravel()
        if X.shape != P.shape or X.size % 2:
            raise DimensionError("X and P must be vectors of equal even length")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(P))):
            raise ValidationError("double phase point has non-finite entries")
        if self.on_plane:
            J = canonical_J(X.size // 2)
            if not np.array_equal(P, 0.5 * (J @ X)):
                raise ValidationError("on-plane point requires P = J X / 2")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "P", P)

    @classmethod
    def on_symplectic_plane(cls, X):
        X = np.asarray(X, dtype=float).ravel()
        J = canonical_J(X.size // 2)
        return cls(X, 0.5 * (J @ X), on_plane=True)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular sampling grid of the (q, p) plane (d = 1)."""

    qmin: float
    qmax: float
    pmin: float
    pmax: float
    nq: int
    np: int

    def __post_init__(self):
        for name in ("qmin", "qmax", "pmin", "pmax"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"grid bound {name} is not finite")
            object.__setattr__(self, name, v)
        if int(self.nq) < 2 or int(self.np) < 2:
            raise ValidationError("grid needs at least 2 samples per axis")
        object.__setattr__(self, "nq", int(self.nq))
        object.__setattr__(self, "np", int(self.np))
        if not (self.qmax > self.qmin and self.pmax > self.pmin):
            raise ValidationError("grid bounds must satisfy max > min on each axis")

    @property
    def q(self):
        return np.linspace(self.qmin, self.qmax, self.nq)

    @property
    def p(self):
        return np.linspace(self.pmin, self.pmax, self.np)

    @property
    def dq(self):
        return (self.qmax - self.qmin) / (self.nq - 1)

    @property
    def dp(self):
        return (self.pmax - self.pmin) / (self.np - 1)

    @property
    def shape(self):
        return (self.nq, self.np)

    def mesh(self):
        """Return ``(Q, P)`` arrays of shape ``(nq, np)`` (ij indexing)."""
        return np.meshgrid(self.q, self.p, indexing="ij")

    def points(self):
        """Grid points as an array of shape ``(nq*np, 2)``."""
        Q, P = self.mesh()
        return np.stack([Q.ravel(), P.ravel()], axis=-1)

    def trapezoid_weights(self):
        wq = np.full(self.nq, self.dq)
        wq[[0, -1]] *= 0.5
        wp = np.full(self.np, self.dp)
        wp[[0, -1]] *= 0.5
        return np.outer(wq, wp)

    def interior(self, k):
        """Grid with ``k`` samples trimmed from each edge."""
        q, p = self.q, self.p
        if self.nq <= 2 * k + 1 or self.np <= 2 * k + 1:
            raise DomainError("grid too small to trim")
        return GridSpec(q[k], q[-k - 1], p[k], p[-k - 1], self.nq - 2 * k, self.np - 2 * k)

    def as_tuple(self):
        return (self.qmin, self.qmax, self.pmin, self.pmax, self.nq, self.np)


@dataclass(frozen=True)
class ComplexField:
    """Complex samples of a phase-space wavefunction on a grid.

    ``values[i, j]`` is the sample at ``(grid.q[i], grid.p[j])``.  ``mask``
    is optional and marks samples that carry a meaningful value (used by
    the narrow beam for its tube).
    """

    grid: GridSpec
    values: np.ndarray
    hbar: float
    time: float
    method: str
    mask: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.size != self.grid.nq * self.grid.np:
            raise DimensionError(
                f"values have {values.size} entries, grid expects {self.grid.nq * self.grid.np}"
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValidationError("field values must be finite")
        if self.method not in METHODS:
            raise ValidationError(f"unknown method tag {self.method!r}")
        if not self.hbar > 0:
            raise ValidationError("hbar must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "hbar", float(self.hbar))
        object.__setattr__(self, "time", float(self.time))

    def norm(self):
        """L2 norm over the grid with trapezoid weights."""
        w = self.grid.trapezoid_weights()
        return float(np.sqrt(np.sum(w * np.abs(self.values) ** 2)))

    def same_layout(self, other):
        return self.grid == other.grid and self.hbar == other.hbar and self.time == other.time
