"""Half-plane shear profiles U(y) with U(0) = 0 and U -> U_+ as y -> infinity.

Closed-form profiles carry a numeric ``kind`` code and a parameter vector so
that the jitted integrators in :mod:`shearstab.dispersion` can evaluate them
without calling back into Python. Tabulated profiles are interpolated with a
cubic spline and cannot be continued into the complex plane.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.sparse.linalg import splu
from scipy.special import erf

from .errors import DomainError, RootNotFoundError, UnsupportedEvaluationError

KIND_EXP = 0
KIND_ERF = 1
KIND_INFLECTION = 2
KIND_TABLE = 3

_KIND_NAMES = {"exp": KIND_EXP, "erf": KIND_ERF, "inflection": KIND_INFLECTION, "table": KIND_TABLE}


@dataclass(frozen=True)
class ShearProfile:
    """A base flow ``U(y)`` on ``y >= 0``.

    ``params`` holds the kind-specific parameters (see the constructors
    below). For tabulated profiles ``breaks``/``coeffs`` are the piecewise
    cubic representation used both here and in the jitted kernels.
    """

    kind: int
    u_plus: float
    decay_rate: float
    label: str
    params: tuple[float, ...] = ()
    breaks: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False, compare=False)
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros((4, 0)), repr=False, compare=False)

    @property
    def analytic(self) -> bool:
        return self.kind != KIND_TABLE

    @property
    def param_array(self) -> np.ndarray:
        """Parameters in the layout expected by the jitted kernels."""
        return np.array([self.u_plus, *self.params], dtype=float)

    def __call__(self, y):
        return eval_profile(self, y)

    def far_field_start(self, tol: float = 1e-13) -> float:
        """Smallest y (on a coarse scan) past which U and U'' sit at their limits to ``tol``."""
        y = np.linspace(0.0, 200.0 / self.decay_rate, 20001)
        u, _, u2 = eval_profile(self, y)
        bad = (np.abs(u - self.u_plus) > tol * abs(self.u_plus)) | (np.abs(u2) > tol * abs(self.u_plus))
        idx = np.nonzero(bad)[0]
        return float(y[idx[-1] + 1]) if idx.size else 0.0


def exponential_profile(u_plus: float = 1.0, rate: float = 1.0) -> ShearProfile:
    """``U = U_+ (1 - exp(-rate y))``; concave, no inflection point."""
    return ShearProfile(KIND_EXP, float(u_plus), float(rate), "exp", (float(rate),))


def erf_profile(u_plus: float = 1.0, four_nu_t: float = 1.0) -> ShearProfile:
    """Heat-evolved constant flow, ``U = U_+ erf(y / sqrt(4 nu t))``."""
    width = float(np.sqrt(four_nu_t))
    return ShearProfile(KIND_ERF, float(u_plus), 1.0 / width, "erf", (width,))


def inflection_profile(u_plus: float = 1.0, center: float = 2.0, thickness: float = 1.0) -> ShearProfile:
    """Wall-bounded tanh shear layer with an inflection point at ``center``.

    ``U = U_+ (tanh((y - center)/thickness) + tanh(center/thickness)) / (1 + tanh(center/thickness))``.
    U' peaks at the inflection point, so the Fjortoft condition holds and the
    profile is inviscidly unstable.
    """
    return ShearProfile(
        KIND_INFLECTION, float(u_plus), 2.0 / float(thickness), "inflection", (float(center), float(thickness))
    )


def table_profile(samples: Sequence[Sequence[float]], decay_rate: float = 1.0, label: str = "table") -> ShearProfile:
    """Profile from ``[[y, U], ...]`` samples; the last sample fixes ``U_+``."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise ValueError("table profile needs at least four [y, U] samples")
    y, u = arr[:, 0], arr[:, 1]
    if y[0] != 0.0 or abs(u[0]) > 1e-14:
        raise ValueError("table profile must start at y = 0 with U = 0")
    spline = CubicSpline(y, u, bc_type=("not-a-knot", (1, 0.0)))
    return ShearProfile(
        KIND_TABLE, float(u[-1]), float(decay_rate), label, (), np.asarray(spline.x), np.asarray(spline.c)
    )


def profile_from_config(spec: dict[str, Any]) -> ShearProfile:
    """Build a profile from ``{kind, u_plus, params, samples}``."""
    kind = spec.get("kind")
    if kind not in _KIND_NAMES:
        raise ValueError(f"profile.kind must be one of {sorted(_KIND_NAMES)}, got {kind!r}")
    u_plus = float(spec.get("u_plus", 1.0))
    params = dict(spec.get("params") or {})
    if kind == "exp":
        return exponential_profile(u_plus, **params)
    if kind == "erf":
        return erf_profile(u_plus, **params)
    if kind == "inflection":
        return inflection_profile(u_plus, **params)
    samples = spec.get("samples")
    if not samples:
        raise ValueError("profile.kind = 'table' requires samples")
    return table_profile(samples, **params)


def _table_eval(profile: ShearProfile, y: np.ndarray):
    x, c = profile.breaks, profile.coeffs
    y_clip = np.clip(y, x[0], x[-1])
    idx = np.clip(np.searchsorted(x, y_clip, side="right") - 1, 0, len(x) - 2)
    d = y_clip - x[idx]
    c3, c2, c1, c0 = c[0, idx], c[1, idx], c[2, idx], c[3, idx]
    u = ((c3 * d + c2) * d + c1) * d + c0
    u1 = (3 * c3 * d + 2 * c2) * d + c1
    u2 = 6 * c3 * d + 2 * c2
    beyond = y > x[-1]
    u = np.where(beyond, profile.u_plus, u)
    u1 = np.where(beyond, 0.0, u1)
    u2 = np.where(beyond, 0.0, u2)
    return u, u1, u2


def eval_profile(profile: ShearProfile, y):
    """Return ``(U, U', U'')`` at ``y`` (scalar or array, complex allowed for analytic kinds)."""
    y_arr = np.asarray(y)
    if np.iscomplexobj(y_arr) and not profile.analytic:
        raise UnsupportedEvaluationError(
            f"profile {profile.label!r} is tabulated; complex evaluation would need extrapolation"
        )
    up = profile.u_plus
    if profile.kind == KIND_EXP:
        (k,) = profile.params
        e = np.exp(-k * y_arr)
        out = (up * (1.0 - e), up * k * e, -up * k * k * e)
    elif profile.kind == KIND_ERF:
        (w,) = profile.params
        u1 = up * 2.0 / (np.sqrt(np.pi) * w) * np.exp(-((y_arr / w) ** 2))
        out = (up * erf(y_arr / w), u1, -2.0 * y_arr / w**2 * u1)
    elif profile.kind == KIND_INFLECTION:
        y0, d = profile.params
        norm = 1.0 + np.tanh(y0 / d)
        th = np.tanh((y_arr - y0) / d)
        sech2 = 1.0 - th**2
        out = (
            up * (th + np.tanh(y0 / d)) / norm,
            up * sech2 / (d * norm),
            -2.0 * up * th * sech2 / (d * d * norm),
        )
    else:
        out = _table_eval(profile, np.asarray(y_arr, dtype=float))
    if np.ndim(y) == 0:
        return tuple(v[()] if isinstance(v, np.ndarray) else v for v in out)
    return out


# --------------------------------------------------------------------------
# heat evolution


def _heat_grid(profile: ShearProfile, n: int = 1601) -> np.ndarray:
    # geometric clustering at the wall, far boundary where the tail is below 1e-13
    y_max = 30.0 / profile.decay_rate
    s = np.linspace(0.0, 1.0, n)
    h0 = 2e-3 / profile.decay_rate
    kappa = np.log1p(y_max / h0)
    return h0 * np.expm1(kappa * s)


def _laplacian(y: np.ndarray) -> sparse.csr_matrix:
    """Second-order three-point second derivative on a nonuniform grid (interior rows)."""
    n = len(y)
    hm = y[1:-1] - y[:-2]
    hp = y[2:] - y[1:-1]
    lo = 2.0 / (hm * (hm + hp))
    di = -2.0 / (hm * hp)
    up = 2.0 / (hp * (hm + hp))
    rows = np.repeat(np.arange(1, n - 1), 3)
    cols = np.stack([np.arange(0, n - 2), np.arange(1, n - 1), np.arange(2, n)], axis=1).ravel()
    vals = np.stack([lo, di, up], axis=1).ravel()
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def evolve_heat(profile: ShearProfile, nu: float, t: float, steps_per_unit: int = 4000) -> ShearProfile:
    """Evolve ``dU/dt = nu U_yy`` with ``U(0) = 0`` and ``U -> U_+`` for a time ``t``.

    Crank-Nicolson in time on a wall-clustered grid, started with two
    backward-Euler half steps to damp the corner incompatibility at y = 0,
    then Richardson-extrapolated in the time step. Constant initial data
    (``kind='erf'`` with zero width is not representable, so the erf family
    is advanced in closed form) keep their exact form.
    """
    if t < 0:
        raise DomainError(f"evolve_heat needs t >= 0, got {t}")
    if nu <= 0:
        raise DomainError(f"evolve_heat needs nu > 0, got {nu}")
    if t == 0:
        return profile
    if profile.kind == KIND_ERF:
        (w,) = profile.params
        return erf_profile(profile.u_plus, w * w + 4.0 * nu * t)

    y = _heat_grid(profile)
    if profile.kind == KIND_TABLE and len(profile.breaks) == len(y) and np.allclose(profile.breaks, y, rtol=0, atol=0):
        u0 = profile.coeffs[3].copy()
        u0 = np.append(u0, profile.u_plus)
    else:
        u0 = np.asarray(eval_profile(profile, y)[0], dtype=float)
    u0[0] = 0.0
    u0[-1] = profile.u_plus

    tau = nu * t
    n_steps = max(8, int(np.ceil(tau * steps_per_unit)))
    coarse = _crank_nicolson(y, u0, tau, n_steps, profile.u_plus)
    fine = _crank_nicolson(y, u0, tau, 2 * n_steps, profile.u_plus)
    u = (4.0 * fine - coarse) / 3.0
    u[0], u[-1] = 0.0, profile.u_plus
    return _sampled_profile(y, u, profile, label=f"{profile.label}@nu*t={tau:g}")


def _crank_nicolson(y: np.ndarray, u0: np.ndarray, tau: float, n_steps: int, u_plus: float) -> np.ndarray:
    n = len(y)
    lap = _laplacian(y)
    eye = sparse.identity(n, format="csr")
    dt = tau / n_steps
    bc = np.zeros(n)
    bc[-1] = u_plus

    def _pin(mat):
        mat = mat.tolil()
        mat[0, :] = 0.0
        mat[-1, :] = 0.0
        mat[0, 0] = 1.0
        mat[-1, -1] = 1.0
        return mat.tocsc()

    u = u0.copy()
    # Rannacher start: two implicit Euler steps of dt/2
    be = splu(_pin(eye - 0.5 * dt * lap))
    for _ in range(2):
        rhs = u.copy()
        rhs[0], rhs[-1] = 0.0, u_plus
        u = be.solve(rhs)
    lhs = splu(_pin(eye - 0.5 * dt * lap))
    rhs_op = (eye + 0.5 * dt * lap).tocsr()
    for _ in range(n_steps - 1):
        rhs = rhs_op @ u
        rhs[0], rhs[-1] = 0.0, u_plus
        u = lhs.solve(rhs)
    return u


def _sampled_profile(y: np.ndarray, u: np.ndarray, parent: ShearProfile, label: str) -> ShearProfile:
    spline = CubicSpline(y, u, bc_type=("not-a-knot", (1, 0.0)))
    return ShearProfile(
        KIND_TABLE, parent.u_plus, parent.decay_rate, label, (), np.asarray(spline.x), np.asarray(spline.c)
    )


# --------------------------------------------------------------------------
# critical layer


@dataclass(frozen=True)
class CriticalLayer:
    y_c: complex
    c: complex
    u_prime_at_yc: complex


def critical_layer(profile: ShearProfile, c: complex, max_iter: int = 60, tol: float = 1e-13) -> CriticalLayer:
    """Solve ``U(y_c) = c`` by Newton's method started from ``c / U'(0)``."""
    if abs(c) >= abs(profile.u_plus):
        raise DomainError(f"|c| = {abs(c):.3g} must be below |U_+| = {abs(profile.u_plus):.3g}")
    c = complex(c)
    if c.imag != 0.0 and not profile.analytic:
        raise UnsupportedEvaluationError("complex critical layer needs an analytic profile")
    if c == 0:
        _, u1, _ = eval_profile(profile, 0.0)
        return CriticalLayer(0j, 0j, complex(u1))
    _, u1_0, _ = eval_profile(profile, 0.0)
    starts = [c / u1_0]
    if 0.0 < c.real < profile.u_plus:
        # fallback for strongly curved profiles: the real root of U(y) = Re c
        hi = 1.0
        while eval_profile(profile, hi)[0] < c.real and hi < 1e6:
            hi *= 2.0
        starts.append(complex(brentq(lambda t: eval_profile(profile, t)[0] - c.real, 0.0, hi)))
    y = starts[0]
    for y in starts:
        if not profile.analytic:
            y = y.real
        with np.errstate(all="ignore"):
            for _ in range(max_iter):
                u, u1, _ = eval_profile(profile, y)
                step = (u - c) / u1
                if not np.isfinite(step):
                    break
                y = y - step
                if abs(step) < tol * max(1.0, abs(y)):
                    u, u1, _ = eval_profile(profile, y)
                    if abs(u - c) < 1e-12:
                        return CriticalLayer(complex(y), c, complex(u1))
                    break
    raise RootNotFoundError(f"critical layer Newton iteration did not converge for c = {c}", last=complex(y))
