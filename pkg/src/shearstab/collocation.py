"""Finite-difference collocation on a stretched half-line grid.

The grid is geometric, ``y = h0 (exp(kappa s) - 1)`` for uniform ``s`` in
``[0, 1]``: spacing grows in proportion to ``y``, so a thin wall layer, the
O(1) shear layer and a far field hundreds of units long are all resolved
with a couple of thousand points. Derivatives use 9-point Fornberg stencils
(one-sided near the ends), giving at least fifth order up to the fourth
derivative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, eigs, splu

from .errors import DegenerateEigenvalueError, NearSingularSolveError
from .profile import ShearProfile, eval_profile

STENCIL = 9


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights at ``z`` on nodes ``x`` for derivatives 0..m.

    Returns an array of shape ``(m + 1, len(x))``.
    """
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c.T


@dataclass(frozen=True)
class Grid:
    y: np.ndarray
    s: np.ndarray
    h0: float
    kappa: float
    d: tuple  # sparse D1..D4 (csr)

    @property
    def n(self) -> int:
        return self.y.size

    def integrate(self, f: np.ndarray) -> complex:
        """High-order quadrature of samples ``f`` over ``[0, y_max]``."""
        jac = self.h0 * self.kappa * np.exp(self.kappa * self.s)
        return simpson(f * jac, x=self.s)

    def deriv(self, f: np.ndarray, order: int = 1) -> np.ndarray:
        return self.d[order - 1] @ f


def make_grid(thin: float, y_max: float, n: int = 2000) -> Grid:
    """Grid resolving a wall layer of width ``thin`` out to ``y_max``."""
    h0 = thin / 8.0
    kappa = np.log1p(y_max / h0)
    s = np.linspace(0.0, 1.0, n)
    y = h0 * np.expm1(kappa * s)
    half = STENCIL // 2
    rows, cols, vals = [], [], [[], [], [], []]
    for i in range(n):
        lo = min(max(i - half, 0), n - STENCIL)
        idx = np.arange(lo, lo + STENCIL)
        w = fornberg_weights(y[i], y[idx], 4)
        rows.extend([i] * STENCIL)
        cols.extend(idx)
        for k in range(4):
            vals[k].extend(w[k + 1])
    mats = tuple(sparse.csr_matrix((vals[k], (rows, cols)), shape=(n, n)) for k in range(4))
    return Grid(y, s, h0, kappa, mats)


def grid_with_wall_spacing(spacing: float, y_max: float, n: int = 1600) -> Grid:
    """Geometric grid whose first interval is ``spacing`` (rather than its ``h0``)."""
    target = spacing * (n - 1)
    h0 = brentq(lambda h: h * np.log1p(y_max / h) - target, 1e-300, y_max)
    return make_grid(8.0 * h0, y_max, n)


def wall_scale(alpha: float, nu: float, c: complex = 0.0, u_prime0: float = 1.0) -> float:
    """Thinnest viscous length: the critical-layer width or the wall-layer width."""
    crit = (nu / (abs(alpha) * abs(u_prime0))) ** (1.0 / 3.0)
    if abs(c) > 0:
        crit = min(crit, np.sqrt(nu / (abs(alpha) * abs(c))))
    return crit


def grid_for(profile: ShearProfile, alpha: float, nu: float, c: complex = 0.0, n: int = 2000, far: float = 30.0) -> Grid:
    y_max = max(far / abs(alpha), 40.0 / profile.decay_rate)
    _, up0, _ = eval_profile(profile, 0.0)
    return make_grid(wall_scale(alpha, nu, c, float(up0)), y_max, n)


# --------------------------------------------------------------------------
# Orr-Sommerfeld operators


@dataclass(frozen=True)
class OrrOperator:
    """``Orr_c psi = (U - c) L psi - U'' psi - (nu / (i alpha)) L^2 psi`` with ``L = D^2 - alpha^2``.

    Stored as ``A0 - c B`` where ``B = L``. With ``adjoint=True`` the
    transposed operator ``L((U - c) psi) - U'' psi - (nu / (i alpha)) L^2 psi`` is built
    instead. Boundary rows: ``psi(0) = psi'(0) = 0``, and at ``y_max``
    ``psi' + |alpha| psi = 0`` and ``psi'' - alpha^2 psi = 0``.
    """

    grid: Grid
    alpha: float
    nu: float
    a0: sparse.csr_matrix
    b: sparse.csr_matrix
    bc_rows: tuple
    adjoint: bool = False

    def matrix(self, c: complex) -> sparse.csc_matrix:
        return (self.a0 - c * self.b).tocsc()

    def apply(self, psi: np.ndarray, c: complex) -> np.ndarray:
        """Operator rows (boundary rows included) applied to ``psi``."""
        return self.a0 @ psi - c * (self.b @ psi)

    def backward_error(self, psi: np.ndarray, c: complex, rhs: np.ndarray | None = None) -> float:
        """Row-scaled relative residual ``max_i |r_i| / (sum_j |M_ij| max|psi| + |f_i|)``.

        Stencil entries grow like ``nu h^-4``, so the plain residual is
        dominated by rounding in the matrix-vector product; scaling each row
        by its own magnitude makes the measure independent of the grid.
        """
        mat = (self.a0 - c * self.b).tocsr()
        f = np.zeros(self.grid.n, dtype=complex) if rhs is None else rhs
        r = mat @ psi - f
        scale = np.asarray(abs(mat).sum(axis=1)).ravel() * np.max(np.abs(psi)) + np.abs(f)
        return float(np.max(np.abs(r) / np.maximum(scale, 1e-300)))

    def interior(self) -> np.ndarray:
        mask = np.ones(self.grid.n, dtype=bool)
        mask[list(self.bc_rows)] = False
        return mask


def orr_operator(profile: ShearProfile, grid: Grid, alpha: float, nu: float, adjoint: bool = False) -> OrrOperator:
    n = grid.n
    d1, d2, d3, d4 = grid.d
    eye = sparse.identity(n, format="csr")
    u, up, upp = (np.asarray(v, dtype=float) for v in eval_profile(profile, grid.y))
    lap = (d2 - alpha**2 * eye).tocsr()
    bilap = (d4 - 2 * alpha**2 * d2 + alpha**4 * eye).tocsr()
    visc = nu / (1j * alpha)
    if adjoint:
        a0 = sparse.diags(u) @ lap + 2 * sparse.diags(up) @ d1 - visc * bilap
    else:
        a0 = sparse.diags(u) @ lap - sparse.diags(upp) - visc * bilap
    a0 = sparse.lil_matrix(a0.astype(complex))
    b = sparse.lil_matrix(lap.astype(complex))
    bc = {0: eye.getrow(0), 1: d1.getrow(0), n - 2: d2.getrow(n - 1) - alpha**2 * eye.getrow(n - 1),
          n - 1: d1.getrow(n - 1) + abs(alpha) * eye.getrow(n - 1)}
    for r, row in bc.items():
        a0[r, :] = row.toarray()
        b[r, :] = 0.0
    return OrrOperator(grid, float(alpha), float(nu), a0.tocsr(), b.tocsr(), tuple(bc), adjoint)


def nearest_eigenpairs(op: OrrOperator, sigma: complex, k: int = 2):
    """The ``k`` discrete eigenvalues closest to ``sigma`` with their vectors."""
    lu = splu(op.matrix(sigma))
    n = op.grid.n
    shifted = LinearOperator((n, n), matvec=lambda v: lu.solve(op.b @ v), dtype=complex)
    v0 = np.ones(n, dtype=complex)
    theta, vecs = eigs(shifted, k=k, which="LM", v0=v0, tol=1e-14, maxiter=5000)
    order = np.argsort(-np.abs(theta))
    theta, vecs = theta[order], vecs[:, order]
    return sigma + 1.0 / theta, vecs


def refine_eigenpair(op: OrrOperator, c: complex, vec: np.ndarray, iters: int = 3):
    """Inverse iteration with a fixed shift, then a Rayleigh-type update of ``c``."""
    lu = splu(op.matrix(c))
    x = vec / np.linalg.norm(vec)
    for _ in range(iters):
        y = lu.solve(op.b @ x)
        x_new = y / np.linalg.norm(y)
        # (A - cB) y = B x  =>  eigenvalue shift 1 / theta with theta = <x, y>
        theta = np.vdot(x, y) / np.vdot(x, x)
        x = x_new
    c_new = c + 1.0 / theta
    return c_new, x


def solve_checked(op: OrrOperator, c: complex, rhs: np.ndarray, cond_limit: float = 1e13) -> np.ndarray:
    """Sparse solve of ``Orr_c psi = rhs`` with a cheap growth check on the solution."""
    mat = op.matrix(c)
    lu = splu(mat)
    psi = lu.solve(rhs)
    scale = np.max(np.abs(rhs)) * max(1.0, abs(1.0 / op.alpha)) ** 2
    if not np.all(np.isfinite(psi)) or np.max(np.abs(psi)) > cond_limit * max(scale, 1e-300):
        raise NearSingularSolveError(
            f"Orr solve at c = {c} is numerically singular; use project_kernel_range / the deflated solve"
        )
    return psi


def separate_from_neighbour(cs: np.ndarray, tol: float = 1e-6) -> None:
    if len(cs) > 1 and abs(cs[1] - cs[0]) < tol * max(1.0, abs(cs[0])):
        raise DegenerateEigenvalueError(f"two discrete eigenvalues within {tol:g}: {cs[0]} and {cs[1]}")
