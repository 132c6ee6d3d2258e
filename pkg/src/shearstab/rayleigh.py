"""Inviscid (Rayleigh) stability: ``(U - c)(psi'' - alpha^2 psi) - U'' psi = 0``.

Eigenvalues are zeros of the *miss function*: integrate the decaying
solution ``exp(-alpha y)`` from ``y_max`` down to the wall and return
``psi(0)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .dispersion import _A, _B, _C, _E, _profile_u_upp
from .errors import DomainError, SingularIntegrationError
from .profile import ShearProfile
from .roots import MullerResult, muller

IM_C_FLOOR = 1e-8


@numba.njit(cache=True)
def _ray_rhs(y, z, alpha, c, kind, p, breaks, coeffs, out):
    u, u2 = _profile_u_upp(kind, p, breaks, coeffs, y)
    out[0] = z[1]
    out[1] = (alpha * alpha + u2 / (u - c)) * z[0]


@numba.njit(cache=True)
def _ray_integrate(z0, y0, y1, alpha, c, kind, p, breaks, coeffs, rtol, ys, cc, aa, ee):
    """DOPRI5 from ``y0`` to ``y1``; records the state at the stations ``ys`` (in travel order)."""
    n = 2
    z = z0.copy()
    k = np.zeros((7, n), dtype=np.complex128)
    zt = np.zeros(n, dtype=np.complex128)
    rec = np.zeros((ys.shape[0], n), dtype=np.complex128)
    direction = 1.0 if y1 > y0 else -1.0
    y = y0
    h = direction * min(0.01, abs(y1 - y0))
    _ray_rhs(y, z, alpha, c, kind, p, breaks, coeffs, k[0])
    j = 0
    while j < ys.shape[0] and direction * (ys[j] - y) <= 0.0:
        rec[j] = z
        j += 1
    steps = 0
    while direction * (y1 - y) > 0.0:
        if steps > 2_000_000:
            return z, rec, 1
        target = y1
        if j < ys.shape[0]:
            target = ys[j]
        if direction * (y + h - target) > 0.0:
            h = target - y
        for s in range(1, 7):
            for i in range(n):
                acc = z[i]
                for m in range(s):
                    acc += h * aa[s, m] * k[m, i]
                zt[i] = acc
            _ray_rhs(y + cc[s] * h, zt, alpha, c, kind, p, breaks, coeffs, k[s])
        err = 0.0
        for i in range(n):
            e = 0.0j
            for m in range(7):
                e += h * ee[m] * k[m, i]
            sc = rtol * (max(abs(z[i]), abs(zt[i])) + 1e-300)
            r = abs(e) / sc
            if r > err:
                err = r
        if not np.isfinite(err):
            h *= 0.2
            if abs(h) < 1e-15 * (1.0 + abs(y)):
                return z, rec, 2
            continue
        if err <= 1.0:
            y = y + h
            for i in range(n):
                z[i] = zt[i]
                k[0, i] = k[6, i]
            steps += 1
            while j < ys.shape[0] and direction * (ys[j] - y) <= 1e-14 * (1.0 + abs(y)):
                rec[j] = z
                j += 1
            h *= min(5.0, max(0.2, 0.9 * err ** (-0.2) if err > 0 else 5.0))
        else:
            h *= max(0.2, 0.9 * err ** (-0.25))
            if abs(h) < 1e-15 * (1.0 + abs(y)):
                return z, rec, 2
    return z, rec, 0


def matching_point(alpha: float) -> float:
    return max(12.0, 12.0 / abs(alpha))


def _kernel_args(profile: ShearProfile):
    return (profile.kind, profile.param_array, np.ascontiguousarray(profile.breaks, dtype=float),
            np.ascontiguousarray(profile.coeffs, dtype=float))


def _shoot(profile, alpha, c, rtol, stations):
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    c = complex(c)
    if abs(c.imag) < IM_C_FLOOR:
        raise SingularIntegrationError(f"Im c = {c.imag:.3g}: U - c vanishes on the real axis (critical-layer singularity)")
    y_max = matching_point(alpha)
    tail = math.exp(-alpha * y_max)
    z0 = np.array([tail, -alpha * tail], dtype=complex)
    z, rec, status = _ray_integrate(z0, y_max, 0.0, float(alpha), c, *_kernel_args(profile), rtol, stations,
                                    _C, _A, _E)
    if status != 0:
        raise SingularIntegrationError(f"Rayleigh integration step size underflow at alpha = {alpha}, c = {c}")
    return z, rec


def rayleigh_miss(profile: ShearProfile, alpha: float, c: complex, rtol: float = 1e-10) -> complex:
    """``psi(0)`` of the solution that equals ``exp(-alpha y)`` beyond ``y_max = max(12, 12/alpha)``."""
    z, _ = _shoot(profile, alpha, c, rtol, np.zeros(0))
    return complex(z[0])


@dataclass
class RayleighMode:
    alpha: float
    c: complex
    y: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    miss_residual: complex

    @property
    def unstable(self) -> bool:
        return self.c.imag > 0


def rayleigh_mode_on(profile: ShearProfile, alpha: float, c: complex, y: np.ndarray, rtol: float = 1e-10):
    """``(psi, psi')`` at the stations ``y`` (unnormalized), integrated downward from ``y_max``."""
    y = np.asarray(y, dtype=float)
    order = np.argsort(-y)
    _, rec = _shoot(profile, alpha, c, rtol, y[order])
    psi = np.empty(y.size, dtype=complex)
    dpsi = np.empty(y.size, dtype=complex)
    psi[order], dpsi[order] = rec[:, 0], rec[:, 1]
    beyond = y > matching_point(alpha)
    if beyond.any():
        y_max = matching_point(alpha)
        scale = np.exp(-alpha * (y[beyond] - y_max)) * np.exp(-alpha * y_max)
        psi[beyond] = scale
        dpsi[beyond] = -alpha * scale
    return psi, dpsi


def find_rayleigh_mode(profile: ShearProfile, alpha: float, c_guess: complex, rtol: float = 1e-10,
                       n_points: int = 401, diagnostics: list | None = None) -> RayleighMode | None:
    """Muller search for an unstable Rayleigh mode near ``c_guess``.

    Returns ``None`` when the iteration fails or leaves ``Im c > 0``; the
    Muller record is appended to ``diagnostics`` if a list is given.
    """
    if complex(c_guess).imag <= 0:
        raise DomainError("c_guess must have Im c > 0")
    bound = 2.0 * abs(profile.u_plus)

    def inside(c):
        return c.imag > IM_C_FLOOR and abs(c) < bound

    def f(c):
        return rayleigh_miss(profile, alpha, c, rtol)

    c_guess = complex(c_guess)
    d = 1e-2 * max(abs(c_guess.imag), 1e-3)
    try:
        res: MullerResult = muller(f, c_guess, c_guess + d, c_guess + 1j * d, ftol=1e-11, max_iter=50, inside=inside)
    except SingularIntegrationError as exc:
        res = MullerResult(c_guess, np.nan, False, 0, [], f"integration failed: {exc}")
    if diagnostics is not None:
        diagnostics.append(res)
    if not res.converged or not inside(res.root):
        return None
    y = np.linspace(0.0, matching_point(alpha), n_points)
    psi, dpsi = rayleigh_mode_on(profile, alpha, res.root, y, rtol)
    k = np.argmax(np.abs(psi))
    norm = psi[k]
    return RayleighMode(float(alpha), complex(res.root), y, psi / norm, dpsi / norm, complex(res.value))


def guess_grid(profile: ShearProfile, n: int = 20) -> np.ndarray:
    """``n x n`` starting points spanning the upper half of the semicircle ``|c - U_+/2| < U_+/2``."""
    up = abs(profile.u_plus)
    re = np.linspace(0.05, 0.95, n) * up
    im = np.linspace(0.01, 0.5, n) * up
    return (re[:, None] + 1j * im[None, :]).ravel()


def rayleigh_scan(profile: ShearProfile, alphas, guesses=None):
    """Per ``alpha`` the most unstable converged root, continuing the guess between wavenumbers.

    Returns rows ``(alpha, Re c, Im c, converged)``.
    """
    from .chebyshev import rayleigh_spectrum

    rows = []
    prev = None
    for alpha in alphas:
        cands = [] if prev is None else [prev]
        if guesses is not None:
            cands += list(guesses)
        cands += [w for w in rayleigh_spectrum(profile, alpha)[:3] if w.imag > 1e-6]
        mode = None
        for g in cands:
            mode = find_rayleigh_mode(profile, alpha, g, n_points=3)
            if mode is not None:
                break
        if mode is None:
            rows.append((float(alpha), np.nan, np.nan, False))
        else:
            rows.append((float(alpha), mode.c.real, mode.c.imag, True))
            prev = mode.c
    return rows
