"""Hamiltonian models with derivatives and complex evaluation.

All evaluators take arrays whose last axis holds the phase-space vector
``X = (q, p)`` of length ``2d`` and broadcast over leading axes.  Complex
arguments are accepted wherever the model is analytic, which is the case
for every polynomial model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .core import canonical_J
from .errors import ConfigurationError, DimensionError, ValidationError

BUILTIN_COEFFICIENTS = {
    "free": (0.0,),
    "linear_field": (0.0, 1.0),
    "harmonic": (0.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class HamiltonianModel:
    """Autonomous Hamiltonian ``H(q, p)``.

    Attributes
    ----------
    kind : str
        One of ``free``, ``linear_field``, ``harmonic``, ``polynomial`` or
        ``custom``.
    dim : int
        Configuration dimension ``d``.
    value, grad, hess : callable
        ``H``, ``dH/dX`` and ``d2H/dX2`` on arrays of shape ``(..., 2d)``.
    complex_value : callable
        Evaluation at complex arguments.
    polynomial_degree : int or "nonpolynomial"
    coefficients : tuple of float
        Potential coefficients ``c_k`` of ``V(x) = sum c_k x**k`` for the
        polynomial kinds, empty for custom models.
    """

    kind: str
    dim: int
    value: Callable = field(repr=False)
    grad: Callable = field(repr=False)
    hess: Callable = field(repr=False)
    complex_value: Callable = field(repr=False)
    polynomial_degree: int | str = "nonpolynomial"
    coefficients: tuple = ()

    def split(self, X):
        X = np.asarray(X)
        if X.shape[-1] != 2 * self.dim:
            raise DimensionError(f"expected last axis {2 * self.dim}, got {X.shape[-1]}")
        return X[..., : self.dim], X[..., self.dim :]


def _horner(x, c):
    out = c[-1] + 0 * x
    for ck in c[-2::-1]:
        out = out * x + ck
    return out


def _polynomial_model(kind, coefficients, dim):
    c = np.trim_zeros(np.asarray(coefficients, dtype=float), "b")
    if c.size == 0:
        c = np.zeros(1)
    dc = npoly.polyder(c) if c.size > 1 else np.zeros(1)
    d2c = npoly.polyder(c, 2) if c.size > 2 else np.zeros(1)
    degree = max(2, c.size - 1)
    c, dc, d2c = (tuple(float(v) for v in arr) for arr in (c, dc, d2c))

    def value(X):
        X = np.asarray(X)
        q, p = X[..., :dim], X[..., dim:]
        return np.sum(p * p, axis=-1) + np.sum(_horner(q, c), axis=-1)

    def grad(X):
        X = np.asarray(X)
        q, p = X[..., :dim], X[..., dim:]
        dq = _horner(q, dc)
        return np.concatenate([dq, 2.0 * p], axis=-1)

    def hess(X):
        X = np.asarray(X)
        q = X[..., :dim]
        out = np.zeros(X.shape + (2 * dim,), dtype=np.result_type(X, float))
        idx = np.arange(dim)
        out[..., idx, idx] = _horner(q, d2c)
        out[..., dim + idx, dim + idx] = 2.0
        return out

    return HamiltonianModel(
        kind=kind,
        dim=dim,
        value=value,
        grad=grad,
        hess=hess,
        complex_value=value,
        polynomial_degree=int(degree),
        coefficients=tuple(float(v) for v in c),
    )


def builtin(kind, dim=1):
    """Return one of the three exactly solvable models.

    ``free`` is ``|p|^2``, ``linear_field`` adds ``sum q_j`` and
    ``harmonic`` adds ``|q|^2``.
    """
    if kind not in BUILTIN_COEFFICIENTS:
        raise ConfigurationError(f"unsupported builtin kind {kind!r}")
    if int(dim) < 1:
        raise ConfigurationError("dim must be >= 1")
    return _polynomial_model(kind, BUILTIN_COEFFICIENTS[kind], int(dim))


def polynomial(coefficients, dim=1):
    """Model ``|p|^2 + sum_j V(q_j)`` with ``V(x) = sum_k c_k x**k``."""
    coefficients = list(coefficients)
    if not coefficients or not all(np.isfinite(coefficients)):
        raise ConfigurationError("polynomial potential needs finite coefficients")
    return _polynomial_model("polynomial", coefficients, int(dim))


def custom(value, grad, hess, complex_value, dim, polynomial_degree="nonpolynomial", check=True):
    """Wrap user supplied evaluators.

    The derivative contract is verified at a few deterministic probe points
    unless ``check`` is False.
    """
    model = HamiltonianModel(
        kind="custom",
        dim=int(dim),
        value=value,
        grad=grad,
        hess=hess,
        complex_value=complex_value,
        polynomial_degree=polynomial_degree,
    )
    if check:
        check_derivatives(model)
    return model


def check_derivatives(model, n_probes=8, seed=0, scale=1.5):
    """Compare gradient and Hessian with central differences.

    Raises
    ------
    ValidationError
        If the gradient misses by more than 1e-6 relative, the Hessian by
        more than 1e-5 relative, the Hessian is asymmetric, or the complex
        evaluator disagrees with the real one on real input.
    """
    rng = np.random.default_rng(seed)
    n = 2 * model.dim
    h = 1e-5
    for X in rng.uniform(-scale, scale, size=(n_probes, n)):
        g = np.asarray(model.grad(X), dtype=float)
        H = np.asarray(model.hess(X), dtype=float)
        E = np.eye(n) * h
        g_fd = np.array([(model.value(X + e) - model.value(X - e)) / (2 * h) for e in E])
        H_fd = np.array([(model.grad(X + e) - model.grad(X - e)) / (2 * h) for e in E])
        if np.max(np.abs(g - g_fd)) > 1e-6 * max(1.0, np.max(np.abs(g))):
            raise ValidationError("gradient does not match finite differences")
        if np.max(np.abs(H - H.T)) > 1e-12 * max(1.0, np.max(np.abs(H))):
            raise ValidationError("Hessian is not symmetric")
        if np.max(np.abs(H - H_fd)) > 1e-5 * max(1.0, np.max(np.abs(H))):
            raise ValidationError("Hessian does not match finite differences")
        hz = model.complex_value(X.astype(complex))
        if abs(hz - model.value(X)) > 1e-14 * max(1.0, abs(model.value(X))):
            raise ValidationError("complex evaluator disagrees with real evaluator")
    return True


def double_phase_symbol(model, X, P):
    """Evaluate the double phase space symbol ``H(X/2 - J P)``."""
    X = np.asarray(X)
    P = np.asarray(P)
    if X.shape != P.shape or X.shape[-1] != 2 * model.dim:
        raise DimensionError("X and P must both have last axis 2d")
    J = canonical_J(model.dim)
    return model.value(0.5 * X - P @ J.T)
