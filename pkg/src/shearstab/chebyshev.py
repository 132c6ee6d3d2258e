"""Dense Chebyshev collocation spectra on a mapped half line.

Used to seed root finders with global eigenvalue estimates and as an
independent check of the shooting solvers. The map
``y = a (1 - x) / (1 + x + 2a/L)`` sends ``x in [-1, 1]`` to ``y in [0, L]``
with half the nodes inside ``y < a``.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sl

from .profile import ShearProfile, eval_profile


def cheb(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto nodes ``cos(pi j / n)`` and the differentiation matrix."""
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.hstack([2.0, np.ones(n - 1), 2.0]) * (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return x, d


def mapped_nodes(n: int, length: float, a: float = 1.0):
    x, dx = cheb(n)
    b = 2.0 * a / length
    y = a * (1.0 - x) / (1.0 + x + b)
    dydx = -a * (2.0 + b) / (1.0 + x + b) ** 2
    d1 = dx / dydx[:, None]
    return y, d1


def orr_spectrum(profile: ShearProfile, alpha: float, nu: float, n: int = 160, length: float | None = None,
                 a: float = 1.0) -> np.ndarray:
    """Orr-Sommerfeld eigenvalues ``c`` with ``|c| < 2 |U_+|``, most unstable first."""
    length = length or 20.0 / abs(alpha)
    y, d1 = mapped_nodes(n, length, a)
    d2 = d1 @ d1
    d4 = d2 @ d2
    u, _, upp = eval_profile(profile, y)
    eye = np.eye(n + 1)
    lap = d2 - alpha**2 * eye
    bilap = d4 - 2 * alpha**2 * d2 + alpha**4 * eye
    rey = 1.0 / nu
    amat = bilap - 1j * alpha * rey * (u[:, None] * lap - np.diag(upp))
    bmat = -1j * alpha * rey * lap
    for k, row in ((0, eye[0]), (1, d1[0]), (n, eye[n]), (n - 1, d1[n])):
        amat[k] = row
        bmat[k] = 0.0
    w = sl.eigvals(amat, bmat)
    w = w[np.isfinite(w) & (np.abs(w) < 2 * abs(profile.u_plus))]
    return w[np.argsort(-w.imag)]


def rayleigh_spectrum(profile: ShearProfile, alpha: float, n: int = 160, length: float | None = None,
                      a: float = 1.0) -> np.ndarray:
    """Eigenvalues of ``(U - c)(D^2 - alpha^2) psi - U'' psi = 0`` with ``psi(0) = psi(L) = 0``."""
    length = length or max(12.0, 24.0 / abs(alpha))
    y, d1 = mapped_nodes(n, length, a)
    d2 = d1 @ d1
    u, _, upp = eval_profile(profile, y)
    eye = np.eye(n + 1)
    lap = d2 - alpha**2 * eye
    # interior rows only; Dirichlet at both ends removes the first and last unknown
    amat = (u[:, None] * lap - np.diag(upp))[1:-1, 1:-1]
    bmat = lap[1:-1, 1:-1]
    w = sl.eigvals(amat, bmat)
    w = w[np.isfinite(w)]
    return w[np.argsort(-w.imag)]
