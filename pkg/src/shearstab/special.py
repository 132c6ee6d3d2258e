"""Complex Airy functions, the Langer map and the fast Orr-Sommerfeld mode.

Airy evaluation combines three representations:

* Maclaurin series where its cancellation costs less than ~1e-11 relative,
* the large-|z| asymptotic series for |z| >= 9, rotated through the
  connection formula ``Ai(z) + w Ai(wz) + w^2 Ai(w^2 z) = 0`` beyond the
  Stokes lines ``|arg z| = 2 pi / 3``,
* Taylor re-expansion of ``w'' = z w`` stepped inward from |z| = 9 along the
  ray through ``z`` for the remaining annulus (Ai is recessive there, so the
  inward recursion is stable).

All three produce the scaled pair ``(Ai, Ai') * exp(zeta)``, with
``zeta = (2/3) z^{3/2}``, so large arguments never overflow.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from .errors import AiryOverflowError, BranchError, DomainError, NormalizationError
from .profile import ShearProfile, critical_layer, eval_profile

AI0 = 0.35502805388781723926
AIP0 = -0.25881940379280679840
_OMEGA = np.exp(2j * np.pi / 3)
_R_ASYMP = 9.0
_MAX_ABS = 1e4

# coefficients u_k, v_k of the asymptotic series
_U = [1.0]
_V = [1.0]
for _k in range(1, 40):
    _U.append(_U[-1] * (6 * _k - 5) * (6 * _k - 3) * (6 * _k - 1) / ((2 * _k - 1) * 216 * _k))
    _V.append(-(6 * _k + 1) / (6 * _k - 1) * _U[-1])


def _zeta(z: complex) -> complex:
    return (2.0 / 3.0) * z * np.sqrt(z)


def _maclaurin(z: complex) -> tuple[complex, complex]:
    z3 = z * z * z
    f, fp = 1.0 + 0j, 0j
    g, gp = z, 1.0 + 0j
    tf, tg = 1.0 + 0j, z
    pf, qg = z * z / 2.0, 1.0 + 0j
    fp = pf
    k = 0
    while True:
        tf = tf * z3 / ((3 * k + 2) * (3 * k + 3))
        tg = tg * z3 / ((3 * k + 3) * (3 * k + 4))
        if k > 0:
            pf = pf * z3 / ((3 * k) * (3 * k + 2))
            fp += pf
        qg = qg * z3 / ((3 * k + 3) * (3 * k + 1))
        f += tf
        g += tg
        gp += qg
        k += 1
        if k > 4 and abs(tf) + abs(tg) + abs(pf) + abs(qg) < 1e-18 * (abs(f) + abs(g) + abs(fp) + abs(gp)):
            break
        if k > 400:
            break
    return AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp


def _asymptotic_scaled(z: complex) -> tuple[complex, complex]:
    """Scaled (Ai, Ai') from the principal-sector series, valid for |arg z| <= 2 pi / 3."""
    zeta = _zeta(z)
    inv = 1.0 / zeta
    s_u, s_v = 0j, 0j
    term = 1.0 + 0j
    last = np.inf
    for k in range(len(_U)):
        tu = _U[k] * term
        tv = _V[k] * term
        if abs(tu) > last:
            break
        s_u += tu
        s_v += tv
        last = abs(tu)
        if last < 1e-17 * abs(s_u):
            break
        term = -term * inv
    z14 = np.sqrt(np.sqrt(z))
    pref = 1.0 / (2.0 * np.sqrt(np.pi))
    return pref / z14 * s_u, -pref * z14 * s_v


def _large_scaled(z: complex) -> tuple[complex, complex]:
    if z.imag < 0 or (z.imag == 0 and z.real < 0 and np.signbit(z.imag)):
        a, ap = _large_scaled(np.conj(z))
        return np.conj(a), np.conj(ap)
    if np.angle(z) <= 2 * np.pi / 3:
        return _asymptotic_scaled(z)
    # 2pi/3 < arg z <= pi: rotate into the principal sectors
    a1, ap1 = _asymptotic_scaled(_OMEGA * z)
    a2, ap2 = _asymptotic_scaled(_OMEGA**2 * z)
    e2 = np.exp(2.0 * _zeta(z))
    return -_OMEGA * a1 - _OMEGA**2 * a2 * e2, -(_OMEGA**2) * ap1 - _OMEGA * ap2 * e2


def _taylor_step(z0: complex, w: complex, wp: complex, h: complex) -> tuple[complex, complex]:
    # w'' = z w about z0: (k+2)(k+1) a_{k+2} = z0 a_k + a_{k-1}
    coeffs = [w, wp]
    val, der = w + wp * h, wp + 0j
    hp = h
    for k in range(200):
        a_next = (z0 * coeffs[k] + (coeffs[k - 1] if k >= 1 else 0.0)) / ((k + 2) * (k + 1))
        coeffs.append(a_next)
        der += (k + 2) * a_next * hp
        hp = hp * h
        val += a_next * hp
        if k > 8 and abs(a_next * hp) < 1e-18 * abs(val) and abs(a_next * hp / h) * (k + 2) < 1e-18 * abs(der):
            break
    return val, der


def _cancellation_log(z: complex) -> float:
    # log of (largest Maclaurin term) / |Ai(z)|, both estimated from zeta
    r15 = abs(z) ** 1.5
    return (2.0 / 3.0) * r15 + (_zeta(z)).real


def airy_scaled(z: complex) -> tuple[complex, complex, complex]:
    """Return ``(Ai(z) e^zeta, Ai'(z) e^zeta, zeta)`` with ``zeta = (2/3) z^{3/2}`` (principal branch)."""
    z = complex(z)
    if not np.isfinite(z) or abs(z) >= _MAX_ABS:
        raise DomainError(f"airy argument |z| = {abs(z):.3g} outside |z| < {_MAX_ABS:g}")
    zeta = _zeta(z)
    r = abs(z)
    if r >= _R_ASYMP:
        a, ap = _large_scaled(z)
        return a, ap, zeta
    if _cancellation_log(z) < 11.5:
        a, ap = _maclaurin(z)
        e = np.exp(zeta)
        return a * e, ap * e, zeta
    # inward Taylor stepping from the ray point at |z| = 9
    z_far = z * (_R_ASYMP / r)
    a_s, ap_s = _large_scaled(z_far)
    # keep a running exponential scale to stay in range
    scale_zeta = _zeta(z_far)
    n = int(np.ceil((_R_ASYMP - r) / 0.5))
    h = (z - z_far) / n
    w, wp = a_s, ap_s
    zc = z_far
    for _ in range(n):
        w, wp = _taylor_step(zc, w, wp, h)
        zc = zc + h
    # w, wp currently equal Ai * exp(scale_zeta); convert to exp(zeta(z))
    fac = np.exp(zeta - scale_zeta)
    return w * fac, wp * fac, zeta


def airy(z: complex) -> tuple[complex, complex]:
    """``(Ai(z), Ai'(z))`` for complex ``z`` with ``|z| < 1e4``.

    Raises :class:`AiryOverflowError` when the unscaled values leave double
    range; use :func:`airy_scaled` there.
    """
    a, ap, zeta = airy_scaled(z)
    if abs(zeta.real) > 700.0:
        raise AiryOverflowError(
            f"Ai({complex(z)}) is outside double range (|Re zeta| = {abs(zeta.real):.1f}); use airy_scaled"
        )
    e = np.exp(-zeta)
    return a * e, ap * e


# --------------------------------------------------------------------------
# Langer transformation


@dataclass(frozen=True)
class LangerFrame:
    """Critical layer data for ``(profile, alpha, c, nu)``.

    ``gamma`` is the principal cube root of ``i alpha U'(y_c) / nu``, which
    always has positive real part.
    """

    profile: ShearProfile
    alpha: float
    nu: float
    c: complex
    y_c: complex
    u_prime_c: complex
    gamma: complex
    branch_record: dict = field(default_factory=dict)
    n_quad: int = 48

    def g(self, y):
        return langer_g(self, y)


def langer_frame(profile: ShearProfile, alpha: float, c: complex, nu: float, n_quad: int = 48) -> LangerFrame:
    if not profile.analytic:
        raise BranchError("the Langer map needs an analytic profile (tabulated profiles are not continued)")
    cl = critical_layer(profile, c)
    gamma = (1j * alpha * cl.u_prime_at_yc / nu) ** (1.0 / 3.0)
    record = {"sqrt": "principal at y_c, tracked along the segment", "two_thirds": "principal near 1", "gamma": "principal cube root"}
    return LangerFrame(profile, float(alpha), float(nu), complex(c), cl.y_c, cl.u_prime_at_yc, complex(gamma), record, n_quad)


def _quad_nodes(n: int):
    # Gauss-Jacobi on [0, 1] with weight sqrt(t)
    x, w = roots_jacobi(n, 0.0, 0.5)
    t = 0.5 * (x + 1.0)
    return t, w * 0.5**1.5


def _ratio_q(frame: LangerFrame, z):
    """``(U(z) - c) / (U'(y_c) (z - y_c))``, equal to 1 at the critical layer."""
    u, _, _ = eval_profile(frame.profile, z)
    dz = z - frame.y_c
    small = np.abs(dz) < 1e-12
    with np.errstate(invalid="ignore", divide="ignore"):
        q = (u - frame.c) / (frame.u_prime_c * np.where(small, 1.0, dz))
    return np.where(small, 1.0 + 0j, q)


def _tracked_sqrt(q: np.ndarray) -> np.ndarray:
    r = np.sqrt(q.astype(complex))
    for i in range(1, len(r)):
        if abs(r[i] + r[i - 1]) < abs(r[i] - r[i - 1]):
            r[i] = -r[i]
    return r


def _langer_parts(frame: LangerFrame, y: complex):
    """Return ``(J, sqrt(Q(y)))`` with ``g - y_c = (y - y_c) J^{2/3}``."""
    t, w = _quad_nodes(frame.n_quad)
    z = frame.y_c + t * (y - frame.y_c)
    q = _ratio_q(frame, np.concatenate([[frame.y_c], z, [y]]))
    if np.min(np.abs(q)) < 1e-8:
        raise BranchError(f"segment from y_c to y = {y} passes a second turning point of U - c")
    sq = _tracked_sqrt(q)
    if abs(sq[0] - 1.0) > 1e-6:
        sq = -sq
    j = 1.5 * np.sum(w * sq[1:-1])
    if j.real <= 0 and abs(j.imag) < 1e-14:
        raise BranchError(f"Langer integral reaches the negative real axis at y = {y}")
    return j, sq[-1]


def langer_g(frame: LangerFrame, y):
    """Langer map ``g(y) = y_c + (3/(2 sqrt(U'(y_c))) int_{y_c}^y sqrt(U - c))^{2/3}``.

    Written as ``g = y_c + (y - y_c) J^{2/3}`` with ``J -> 1`` at the critical
    layer, which fixes every branch by continuity from ``y_c``.
    """
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    out = np.empty_like(ys)
    for k, yk in enumerate(ys):
        if abs(yk - frame.y_c) < 1e-14:
            out[k] = frame.y_c
            continue
        j, _ = _langer_parts(frame, yk)
        out[k] = frame.y_c + (yk - frame.y_c) * j ** (2.0 / 3.0)
    return complex(out[0]) if np.ndim(y) == 0 else out


def langer_g_prime(frame: LangerFrame, y):
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    out = np.empty_like(ys)
    for k, yk in enumerate(ys):
        if abs(yk - frame.y_c) < 1e-14:
            out[k] = 1.0
            continue
        j, sq = _langer_parts(frame, yk)
        out[k] = sq / j ** (1.0 / 3.0)
    return complex(out[0]) if np.ndim(y) == 0 else out


@dataclass(frozen=True)
class FastMode:
    y: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    mu: np.ndarray
    frame: LangerFrame


def fast_mode(frame: LangerFrame, grid) -> FastMode:
    """Leading-order decaying fast mode ``Ai(gamma (g(y) - y_c)) / Ai(gamma (g(0) - y_c))``.

    ``mu`` is the logarithmic derivative ``d/dy log Ai_a``.
    """
    if abs(frame.gamma) < 5:
        warnings.warn(f"|gamma| = {abs(frame.gamma):.2f} < 5: the Airy approximation is not asymptotic here", stacklevel=2)
    y = np.asarray(grid, dtype=float)
    pts = np.concatenate([[0.0], y])
    gv = langer_g(frame, pts.astype(complex))
    gp = langer_g_prime(frame, pts.astype(complex))
    zarg = frame.gamma * (gv - frame.y_c)
    scaled = [airy_scaled(zk) for zk in zarg]
    a = np.array([s[0] for s in scaled])
    ap = np.array([s[1] for s in scaled])
    zeta = np.array([s[2] for s in scaled])
    if abs(a[0]) < 1e-300:
        raise NormalizationError("Ai_a(0) vanishes: the fast mode cannot be normalized at the wall")
    phi = a[1:] / a[0] * np.exp(zeta[0] - zeta[1:])
    mu = frame.gamma * gp[1:] * ap[1:] / a[1:]
    return FastMode(y, phi, phi * mu, mu, frame)
