"""Localized linear instability: a band of unstable modes around the carrier.

    Psi(t, x, y) = nu^-beta int chi((a - a0) / nu^beta) psi_a(y) exp(i a nu^(1/4) x + nu^(1/2) lam(a) t) da

with rescaled wavenumbers ``a`` and rates ``lam`` (``alpha = a nu^(1/4)``,
``lambda = nu^(1/2) lam``). The integral is a Gauss-Legendre sum over the
window ``[a0 - nu^beta, a0 + nu^beta]``; the physical field adds the complex
conjugate, ``2 Re Psi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import BarycentricInterpolator
from scipy.optimize import minimize_scalar

from . import collocation as col
from .errors import DomainError, InvalidCarrierError
from .orrsolver import BranchTracker, eigenmode, find_eigenvalue
from .profile import ShearProfile

DEFAULT_BETA = 0.26


def _bump_raw(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _bump_mass(n: int = 200) -> float:
    u, w = np.polynomial.legendre.leggauss(n)
    return float(np.sum(w * _bump_raw(u)))


_BUMP_MASS = _bump_mass()
QUAD_NODES = 256


def chi(u):
    """Smooth bump ``exp(-1/(1-u^2))`` on ``(-1, 1)`` normalized to unit integral."""
    return _bump_raw(u) / _BUMP_MASS


@dataclass
class ModeFamily:
    """Rates and mode shapes sampled on the Gauss-Legendre nodes of the carrier window.

    ``psi[j]`` is the mode at ``alphas[j]`` normalized by its value at a fixed
    height, so that it varies smoothly with the wavenumber.
    """

    nu: float
    alpha0: float
    beta: float
    alphas: np.ndarray
    weights: np.ndarray
    lam: np.ndarray
    y: np.ndarray
    psi: np.ndarray = field(repr=False)
    lam_fn: Callable[[float], complex] | None = field(default=None, repr=False)

    @property
    def width(self) -> float:
        return self.nu**self.beta

    def lam_at(self, a: float) -> complex:
        if self.lam_fn is not None:
            return complex(self.lam_fn(a))
        return complex(BarycentricInterpolator(self.alphas, self.lam)(a))

    def resample(self, n_nodes: int, y_index=slice(None)) -> ModeFamily:
        """Same family on ``n_nodes`` Gauss-Legendre nodes by polynomial interpolation in ``a``.

        Rates and modes are analytic in ``a`` and the window is narrow, so a
        few dozen samples determine them to rounding level.
        """
        if n_nodes == len(self.alphas) and isinstance(y_index, slice) and y_index == slice(None):
            return self
        u, w = np.polynomial.legendre.leggauss(n_nodes)
        a = self.alpha0 + self.width * u
        lam = BarycentricInterpolator(self.alphas, self.lam)(a)
        psi = BarycentricInterpolator(self.alphas, self.psi[:, y_index])(a)
        return ModeFamily(self.nu, self.alpha0, self.beta, a, w * self.width, lam, self.y[y_index], psi, self.lam_fn)


def gauss_window(nu: float, alpha0: float, beta: float, n_nodes: int):
    if n_nodes < 33:
        raise DomainError("the carrier window needs at least 33 quadrature nodes")
    u, w = np.polynomial.legendre.leggauss(n_nodes)
    width = nu**beta
    return alpha0 + width * u, w * width


def synthetic_family(nu: float, alpha0: float, lam_fn, psi_fn, y, beta: float = DEFAULT_BETA,
                     n_nodes: int = 33) -> ModeFamily:
    """Family from closed-form ``lam_fn(a)`` and ``psi_fn(a, y)``."""
    a, w = gauss_window(nu, alpha0, beta, n_nodes)
    y = np.asarray(y, dtype=float)
    lam = np.array([complex(lam_fn(v)) for v in a])
    psi = np.array([np.asarray(psi_fn(v, y), dtype=complex) for v in a])
    return ModeFamily(nu, alpha0, beta, a, w, lam, y, psi, lam_fn)


def mode_family(profile: ShearProfile, nu: float, alpha0: float, beta: float = DEFAULT_BETA, n_nodes: int = 33,
                n: int = 1200, with_modes: bool = True) -> ModeFamily:
    """Orr-Sommerfeld eigenmodes on the window around the rescaled carrier ``alpha0``.

    ``with_modes=False`` keeps only the rates (enough for the group velocity).
    """
    q = nu**0.25
    start = find_eigenvalue(profile, alpha0 * q, nu)
    if start is None or start.c.imag <= 0:
        raise InvalidCarrierError(f"no unstable eigenvalue at rescaled wavenumber {alpha0:g}, nu = {nu:g}")
    tracker = BranchTracker(profile, nu, start)
    a, w = gauss_window(nu, alpha0, beta, n_nodes)
    lam_fn = lambda v: tracker.at(v * q).lambda_tilde  # noqa: E731
    if not with_modes:
        lams = np.array([lam_fn(float(v)) for v in a])
        return ModeFamily(nu, alpha0, beta, a, w, lams, np.zeros(0), np.zeros((n_nodes, 0), complex), lam_fn)
    grid = col.grid_for(profile, alpha0 * q, nu, start.c, n=n)
    ref = None
    psis, lams = [], []
    for av in a:
        pt = tracker.at(float(av) * q)
        m = eigenmode(pt, profile, grid=grid)
        if ref is None:
            ref = int(np.argmax(np.abs(m.psi)))
        psis.append(m.psi / m.psi[ref])
        lams.append(pt.lambda_tilde)
    return ModeFamily(nu, alpha0, beta, a, w, np.array(lams), grid.y, np.array(psis), lam_fn)


@dataclass
class WavePacket:
    alpha0: float
    beta: float
    nu: float
    t: float
    x: np.ndarray
    y: np.ndarray
    field: np.ndarray = field(repr=False)  # complex Psi, shape (len(x), len(y))

    @property
    def real_field(self) -> np.ndarray:
        """The physical stream function ``Psi + conj(Psi)``."""
        return 2.0 * self.field.real


def _check_carrier(family: ModeFamily, alpha0: float) -> None:
    if abs(alpha0 - family.alpha0) > 1e-12 * max(1.0, abs(alpha0)):
        raise InvalidCarrierError(f"family is centred at {family.alpha0:g}, not {alpha0:g}")
    if family.lam_at(alpha0).real <= 0:
        raise InvalidCarrierError(f"carrier {alpha0:g} is outside the unstable band")


def packet_weights(family: ModeFamily, t: float) -> np.ndarray:
    """``w_j nu^-beta chi(u_j) exp(nu^(1/2) lam_j t)``: the amplitude carried by each node."""
    u = (family.alphas - family.alpha0) / family.width
    return family.weights * chi(u) / family.width * np.exp(family.nu**0.5 * family.lam * t)


def packet_field(family: ModeFamily, t: float, x, y_index=slice(None), n_quad: int = QUAD_NODES,
                 chunk: int = 4096) -> np.ndarray:
    """Complex ``Psi(t, x, y)`` on ``x`` and the family's ``y[y_index]``.

    The quadrature uses ``n_quad`` nodes. A sum over ``n`` nodes repeats
    itself after about ``n nu^(-beta - 1/4)`` in ``x``, so the 33 sampled
    modes alone would only describe the packet near its centre.
    """
    if isinstance(y_index, (int, np.integer)):
        y_index = [int(y_index)]
    quadf = family.resample(n_quad, y_index)
    q = family.nu**0.25
    amp = packet_weights(quadf, t)
    x = np.asarray(x, dtype=float)
    out = np.empty((x.size, quadf.psi.shape[1]), dtype=complex)
    for k in range(0, x.size, chunk):
        phase = np.exp(1j * q * np.outer(x[k:k + chunk], quadf.alphas))
        out[k:k + chunk] = (phase * amp) @ quadf.psi
    return out


def build_wavepacket(family: ModeFamily, alpha0: float, beta: float, t: float, grid_x, grid_y=None,
                     n_quad: int = QUAD_NODES) -> WavePacket:
    """Sample the packet at time ``t``; ``grid_y`` (if given) must be a subset of the family's heights."""
    _check_carrier(family, alpha0)
    if abs(beta - family.beta) > 1e-14:
        raise DomainError("beta differs from the one the family was sampled with")
    if family.nu**0.5 * t > 3.0 * math.log(1.0 / family.nu):
        raise DomainError("nu^(1/2) t exceeds the 3 log(1/nu) validity window")
    if grid_y is None:
        idx = slice(None)
        y = family.y
    else:
        idx = np.searchsorted(family.y, np.asarray(grid_y, dtype=float))
        idx = np.clip(idx, 0, family.y.size - 1)
        y = family.y[idx]
    x = np.asarray(grid_x, dtype=float)
    return WavePacket(alpha0, beta, family.nu, float(t), x, y, packet_field(family, t, x, idx, n_quad))


def envelope_scale(nu: float, beta: float) -> float:
    """Horizontal size ``nu^(-beta - 1/4)`` of the packet."""
    return nu ** (-beta - 0.25)


# --------------------------------------------------------------------------
# group velocity and growth


def group_velocity(family: ModeFamily, alpha0: float, h: float | None = None, retries: int = 5) -> float:
    """``-nu^(1/4) Im lam'(a0)`` with a fourth-order central difference."""
    h = h or 0.25 * family.width
    for _ in range(retries + 1):
        pts = [alpha0 + k * h for k in (-2, -1, 1, 2)]
        vals = [family.lam_at(p) for p in pts]
        if all(v.real > 0 for v in vals):
            d = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
            return float(-family.nu**0.25 * d.imag)
        h /= 2
    raise InvalidCarrierError(f"difference stencil around {alpha0:g} keeps leaving the unstable band")


@dataclass
class Growth:
    t: np.ndarray
    max_amp: np.ndarray
    argmax_x: np.ndarray
    C: float  # fitted constant of max|Psi| ~ C exp(nu^(1/2) Re lam t) / sqrt(nu^(1/2) t)
    ratio: np.ndarray  # max|Psi| / [exp(nu^(1/2) Re lam t) / sqrt(nu^(1/2) t)]


def _peak(family: ModeFamily, t: float, x_centre: float, half: float, y_ref: int, n_x: int = 801):
    xs = np.linspace(x_centre - half, x_centre + half, n_x)
    amp = np.abs(packet_field(family, t, xs, [y_ref])[:, 0])
    k = int(np.argmax(amp))
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, n_x - 1)]
    res = minimize_scalar(lambda v: -abs(packet_field(family, t, [v], [y_ref])[0, 0]), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10 * max(1.0, abs(x_centre) + half)})
    return float(res.x), float(-res.fun)


def packet_growth(family: ModeFamily, alpha0: float, t_list, y_ref: int | None = None,
                  single_mode: bool = False) -> Growth:
    """``max_x |Psi(t, x, y_ref)|`` and its location for each ``t``.

    ``single_mode`` replaces the band by the carrier alone (the zero-width
    limit), for which the growth is exactly ``exp(nu^(1/2) Re lam t)``.
    """
    _check_carrier(family, alpha0)
    nu = family.nu
    y_ref = int(np.argmax(np.abs(family.psi[len(family.alphas) // 2]))) if y_ref is None else y_ref
    lam0 = family.lam_at(alpha0)
    c_sigma = group_velocity(family, alpha0)
    width = envelope_scale(nu, family.beta)
    ts = np.asarray(t_list, dtype=float)
    amps, xs = [], []
    for t in ts:
        s = nu**0.5 * t
        if not 0.5 - 1e-12 <= s <= 10 + 1e-12:
            raise DomainError(f"nu^(1/2) t = {s:.3g} outside [0.5, 10]")
        if single_mode:
            psi0 = BarycentricInterpolator(family.alphas, family.psi[:, y_ref])(alpha0)
            amps.append(abs(psi0) * math.exp(nu**0.5 * lam0.real * t))
            xs.append(0.0)
            continue
        x0, a0 = _peak(family, t, c_sigma * t, 3.0 * width, y_ref)
        amps.append(a0)
        xs.append(x0)
    amps, xs = np.array(amps), np.array(xs)
    s = nu**0.5 * ts
    law = np.exp(s * lam0.real) / np.sqrt(s)
    ratio = amps / law
    return Growth(ts, amps, xs, float(np.exp(np.mean(np.log(ratio)))), ratio)
