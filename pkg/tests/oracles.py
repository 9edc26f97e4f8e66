"""Independent reference formulas for the three solvable scenarios.

These are written from scratch in configuration space and pushed to phase
space by brute-force quadrature, so they share no code with the package.
"""

import numpy as np
from scipy.integrate import quad

PI = np.pi


def psi_free(x, t, h):
    a0 = 1 + 1j * h
    return PI**-0.25 / np.sqrt(1 + 2 * a0 * t) * np.exp(1j / h * a0 / (1 + 2 * a0 * t) * x**2 / 2)


def psi_harmonic(x, t, h):
    c, s = np.cos(2 * t), np.sin(2 * t)
    cot, csc2 = c / s, 1 / s**2
    return PI**-0.25 / np.sqrt(c + (1 + 1j * h) * s) * np.exp(1j / h * (cot - csc2 / (1 + 1j * h + cot)) * x**2 / 2)


def psi_linear(x, t, h):
    """Gaussian ansatz exp(i/h (a x^2/2 + b x + c)) with c integrated by quadrature."""
    a0 = 1 + 1j * h
    a = a0 / (1 + 2 * a0 * t)
    b = -t * (1 + a0 * t) / (1 + 2 * a0 * t)

    def cdot(s):
        return 1j * h * a0 / (1 + 2 * a0 * s) - (s * (1 + a0 * s) / (1 + 2 * a0 * s)) ** 2

    cr = quad(lambda s: cdot(s).real, 0, t, epsabs=1e-14)[0]
    ci = quad(lambda s: cdot(s).imag, 0, t, epsabs=1e-14)[0]
    c = (h / 1j) * np.log(PI**-0.25) + cr + 1j * ci
    return np.exp(1j / h * (a * x**2 / 2 + b * x + c))


def brute_transform(psi, q, p, h, half_width=12.0, n=24001):
    """Phase-space transform at one point by a dense Riemann sum."""
    x = np.linspace(-half_width, half_width, n)
    dx = x[1] - x[0]
    return (2 * PI * h) ** -0.5 * np.sum(np.conj(coherent_state((q, p), x, h)) * psi(x)) * dx


def coherent_state(X, x, h):
    q, p = X
    return (PI * h) ** -0.25 * np.exp(1j / h * (p * q / 2 + p * (x - q) + 0.5j * (x - q) ** 2))


def bergmann(X, Y, h, half_width=12.0, n=24001):
    """Reproducing kernel as the overlap of two coherent states."""
    x = np.linspace(-half_width, half_width, n)
    dx = x[1] - x[0]
    return (2 * PI * h) ** -1 * np.sum(np.conj(coherent_state(X, x, h)) * coherent_state(Y, x, h)) * dx
