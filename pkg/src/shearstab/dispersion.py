"""Orr-Sommerfeld dispersion function by the compound-matrix method.

The two solutions decaying at infinity are carried as their six 2x2 minors
``(m12, m13, m14, m23, m24, m34)`` and integrated from the far field down to
the wall. The wall value of ``m12`` is the boundary determinant
``phi_s(0) phi_f'(0) - phi_s'(0) phi_f(0)``, which vanishes at eigenvalues.

The minors grow like ``exp(int (|alpha| + beta))`` towards the wall with
``beta ~ sqrt(alpha R (U - c))``, far beyond double range at small viscosity.
The integration therefore carries ``m * exp(-int_y^{y_far} sigma)`` with the
local rate ``sigma = |alpha| + sqrt(alpha^2 + i alpha R (U - c))`` (principal
root), and starts from the far-field minors divided by ``m12(y_far)``. With a
constant profile the returned value is exactly 1.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .errors import DomainError, IntegrationError
from .profile import KIND_ERF, KIND_EXP, KIND_INFLECTION, ShearProfile

# --------------------------------------------------------------------------
# jitted profile evaluation (U and U'')


@numba.njit(cache=True)
def _profile_u_upp(kind, p, breaks, coeffs, y):
    up = p[0]
    if kind == KIND_EXP:
        e = math.exp(-p[1] * y)
        return up * (1.0 - e), -up * p[1] * p[1] * e
    if kind == KIND_ERF:
        w = p[1]
        u1 = up * 2.0 / (math.sqrt(math.pi) * w) * math.exp(-((y / w) ** 2))
        return up * math.erf(y / w), -2.0 * y / (w * w) * u1
    if kind == KIND_INFLECTION:
        y0 = p[1]
        d = p[2]
        norm = 1.0 + math.tanh(y0 / d)
        th = math.tanh((y - y0) / d)
        sech2 = 1.0 - th * th
        return up * (th + math.tanh(y0 / d)) / norm, -2.0 * up * th * sech2 / (d * d * norm)
    # tabulated cubic
    n = breaks.shape[0]
    if y >= breaks[n - 1]:
        return up, 0.0
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if breaks[mid] <= y:
            lo = mid
        else:
            hi = mid
    d = y - breaks[lo]
    c3 = coeffs[0, lo]
    c2 = coeffs[1, lo]
    c1 = coeffs[2, lo]
    c0 = coeffs[3, lo]
    return ((c3 * d + c2) * d + c1) * d + c0, 6.0 * c3 * d + 2.0 * c2


# --------------------------------------------------------------------------
# compound system


@numba.njit(cache=True)
def _rhs(y, z, alpha, c, rey, kind, p, breaks, coeffs, out):
    u, u2 = _profile_u_upp(kind, p, breaks, coeffs, y)
    ia_r = 1j * alpha * rey
    a2 = 2.0 * alpha * alpha + ia_r * (u - c)
    a0 = -(alpha**4) - ia_r * (alpha * alpha * (u - c) + u2)
    sigma = abs(alpha) + np.sqrt(alpha * alpha + ia_r * (u - c))
    out[0] = z[1] + sigma * z[0]
    out[1] = z[2] + z[3] + sigma * z[1]
    out[2] = z[4] + a2 * z[1] + sigma * z[2]
    out[3] = z[4] + sigma * z[3]
    out[4] = z[5] + a2 * z[3] - a0 * z[0] + sigma * z[4]
    out[5] = -a0 * z[1] + sigma * z[5]


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
        [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = _B - np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@numba.njit(cache=True)
def _integrate(z0, y_start, y_end, alpha, c, rey, kind, p, breaks, coeffs, rtol, max_steps, cc, aa, bb, ee):
    """Adaptive DOPRI5 from ``y_start`` to ``y_end``; returns (z, n_steps, status, y_reached)."""
    n = 6
    z = z0.copy()
    k = np.zeros((7, n), dtype=np.complex128)
    ztmp = np.zeros(n, dtype=np.complex128)
    weight = np.zeros(n)
    for i in range(n):
        weight[i] = abs(z0[i]) + 1e-300
    y = y_start
    direction = 1.0 if y_end > y_start else -1.0
    span = abs(y_end - y_start)
    u, _ = _profile_u_upp(kind, p, breaks, coeffs, y)
    rate = abs(np.sqrt(alpha * alpha + 1j * alpha * rey * (u - c))) + abs(alpha) + 1.0
    h = direction * min(0.05 / rate, span)
    _rhs(y, z, alpha, c, rey, kind, p, breaks, coeffs, k[0])
    steps = 0
    while direction * (y_end - y) > 0.0:
        if steps >= max_steps:
            return z, steps, 1, y
        if direction * (y + h - y_end) > 0.0:
            h = y_end - y
        for s in range(1, 7):
            for i in range(n):
                acc = z[i]
                for j in range(s):
                    acc += h * aa[s, j] * k[j, i]
                ztmp[i] = acc
            _rhs(y + cc[s] * h, ztmp, alpha, c, rey, kind, p, breaks, coeffs, k[s])
        err = 0.0
        for i in range(n):
            e = 0.0j
            for j in range(7):
                e += h * ee[j] * k[j, i]
            sc = rtol * (max(abs(z[i]), abs(ztmp[i])) + 1e-3 * weight[i])
            r = abs(e) / sc
            if r > err:
                err = r
        if not np.isfinite(err):
            h *= 0.2
            if abs(h) < 1e-16 * (1.0 + abs(y)):
                return z, steps, 2, y
            continue
        if err <= 1.0:
            y = y + h
            for i in range(n):
                z[i] = ztmp[i]
                k[0, i] = k[6, i]
            steps += 1
            fac = 0.9 * err ** (-0.2) if err > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.2, 0.9 * err ** (-0.25))
            if abs(h) < 1e-16 * (1.0 + abs(y)):
                return z, steps, 2, y
    return z, steps, 0, y


@numba.njit(cache=True)
def _far_field_minors(alpha, c, rey, u_plus):
    a = abs(alpha)
    b = np.sqrt(alpha * alpha + 1j * alpha * rey * (u_plus - c))
    z = np.empty(6, dtype=np.complex128)
    z[0] = 1.0
    z[1] = -(a + b)
    z[2] = a * a + a * b + b * b
    z[3] = a * b
    z[4] = -a * b * (a + b)
    z[5] = a * a * b * b
    return z


@numba.njit(cache=True)
def _dispersion_batch(cs, alpha, rey, y_far, kind, p, breaks, coeffs, rtol, max_steps, cc, aa, bb, ee):
    m = cs.shape[0]
    out = np.empty(m, dtype=np.complex128)
    status = np.zeros(m, dtype=np.int64)
    where = np.zeros(m)
    for j in range(m):
        z0 = _far_field_minors(alpha, cs[j], rey, p[0])
        z, _, st, yr = _integrate(z0, y_far, 0.0, alpha, cs[j], rey, kind, p, breaks, coeffs, rtol, max_steps, cc, aa, bb, ee)
        out[j] = z[0]
        status[j] = st
        where[j] = yr
    return out, status, where


@numba.njit(cache=True)
def _minor_profile(c, alpha, rey, y_far, ys, kind, p, breaks, coeffs, rtol, max_steps, cc, aa, bb, ee):
    """Normalized minors at the (descending) stations ``ys``."""
    out = np.empty((ys.shape[0], 6), dtype=np.complex128)
    z = _far_field_minors(alpha, c, rey, p[0])
    y = y_far
    for j in range(ys.shape[0]):
        z, _, st, _ = _integrate(z, y, ys[j], alpha, c, rey, kind, p, breaks, coeffs, rtol, max_steps, cc, aa, bb, ee)
        out[j] = z
        y = ys[j]
    return out


# --------------------------------------------------------------------------
# public API


class DispersionFunction:
    """``c -> D(alpha, c, nu)`` for a fixed profile, wavenumber and viscosity.

    Building the object once fixes the far-field start; calls are cheap
    after the first JIT compilation.
    """

    def __init__(self, profile: ShearProfile, alpha: float, nu: float, rtol: float = 1e-11, max_steps: int = 5_000_000):
        if alpha == 0:
            raise DomainError("alpha must be nonzero")
        if nu <= 0:
            raise DomainError(f"nu must be positive, got {nu}")
        self.profile = profile
        self.alpha = float(alpha)
        self.nu = float(nu)
        self.rtol = rtol
        self.max_steps = max_steps
        self.y_far = profile.far_field_start(1e-15)
        self._args = (profile.kind, profile.param_array, np.ascontiguousarray(profile.breaks, dtype=float),
                      np.ascontiguousarray(profile.coeffs, dtype=float))

    def __call__(self, c):
        cs = np.atleast_1d(np.asarray(c, dtype=complex))
        vals, status, where = _dispersion_batch(
            cs, self.alpha, 1.0 / self.nu, self.y_far, *self._args, self.rtol, self.max_steps, _C, _A, _B, _E
        )
        bad = np.nonzero(status)[0]
        if bad.size:
            j = bad[0]
            raise IntegrationError(
                f"compound-matrix integration failed at y = {where[j]:.6g} for c = {cs[j]} "
                f"(alpha = {self.alpha}, nu = {self.nu})",
                location=float(where[j]),
            )
        if np.ndim(c) == 0:
            return complex(vals[0])
        return vals

    def minors(self, c: complex, ys: np.ndarray) -> np.ndarray:
        """Normalized minors at ``ys`` (any order); rows follow ``ys``."""
        ys = np.asarray(ys, dtype=float)
        order = np.argsort(-ys)
        out = _minor_profile(complex(c), self.alpha, 1.0 / self.nu, self.y_far, ys[order], *self._args,
                             self.rtol, self.max_steps, _C, _A, _B, _E)
        res = np.empty_like(out)
        res[order] = out
        return res


def os_dispersion(profile: ShearProfile, alpha: float, c: complex, nu: float) -> complex:
    """Normalized Orr-Sommerfeld boundary determinant ``D(alpha, c, nu)``."""
    return DispersionFunction(profile, alpha, nu)(c)
