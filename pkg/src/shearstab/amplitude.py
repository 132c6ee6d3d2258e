"""Weakly nonlinear amplitude dynamics of the most unstable mode.

The amplitude obeys the cubic Landau equation ``phi' = lam phi + A |phi|^2 phi``.
Its modulus satisfies ``r' = Re(lam) r + Re(A) r^3``, so for ``Re A < 0`` it
saturates at ``sqrt(-Re lam / Re A)`` and for ``Re A > 0`` it blows up in
finite time. With ``Re lam ~ nu^(1/2)`` the saturated amplitude is ``nu^(1/4)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, InfeasibleError

BLOW_UP = 10.0
QUINTIC_DOUBT = 0.3


@dataclass(frozen=True)
class LandauModel:
    lam: complex
    A: complex
    phi0: complex

    def __post_init__(self):
        if abs(self.phi0) == 0:
            raise DomainError("initial amplitude must be nonzero")


@dataclass
class Trajectory:
    t: np.ndarray
    phi: np.ndarray
    blew_up: bool
    quintic_doubt_time: float | None  # first time |phi| > 0.3, where dropping O(phi^5) is doubtful

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.phi)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.phi)


def _rhs(lam: complex, a: complex):
    # polar form: (log r)' = Re lam + Re A r^2, theta' = Im lam + Im A r^2
    def f(_t, z):
        r2 = math.exp(2.0 * z[0])
        return [lam.real + a.real * r2, lam.imag + a.imag * r2]

    return f


def _level_event(level: float, terminal: bool = True):
    log_level = math.log(level)

    def ev(_t, z):
        return z[0] - log_level

    ev.terminal = terminal
    ev.direction = 1
    return ev


def _start(phi0: complex) -> list:
    phi0 = complex(phi0)
    return [math.log(abs(phi0)), math.atan2(phi0.imag, phi0.real)]


def integrate_landau(model: LandauModel, T: float, dt: float, rtol: float = 1e-12) -> Trajectory:
    """Cubic Landau trajectory sampled every ``dt`` on ``[0, T]``; stops at ``|phi| = 10``.

    The equation is integrated for ``(log |phi|, arg phi)``, which it decouples
    into a radial equation and a phase driven by the radius.
    """
    lam, a = complex(model.lam), complex(model.A)
    if dt <= 0 or T <= 0:
        raise DomainError("T and dt must be positive")
    if dt * abs(lam) >= 0.1:
        raise DomainError(f"sampling step dt |lambda| = {dt * abs(lam):.3g} must stay below 0.1")
    n = int(math.floor(T / dt + 1e-9))
    t_eval = dt * np.arange(n + 1)
    sol = solve_ivp(_rhs(lam, a), (0.0, t_eval[-1]), _start(model.phi0), method="DOP853", t_eval=t_eval,
                    rtol=rtol, atol=1e-13, events=[_level_event(BLOW_UP), _level_event(QUINTIC_DOUBT, False)])
    phi = np.exp(sol.y[0] + 1j * sol.y[1])
    blew = sol.status == 1 and len(sol.t_events[0]) > 0
    doubt = float(sol.t_events[1][0]) if len(sol.t_events[1]) else None
    return Trajectory(sol.t, phi, bool(blew), doubt)


@dataclass(frozen=True)
class Saturates:
    amplitude: float


@dataclass(frozen=True)
class Escapes:
    time_to_o1: float


@dataclass(frozen=True)
class Stable:
    re_lambda: float


def first_passage_time(model: LandauModel, level: float = 1.0, rtol: float = 1e-12) -> float:
    """Time at which ``|phi|`` first reaches ``level`` (``inf`` if it never does)."""
    lam = complex(model.lam)
    horizon = 4.0 * max(math.log(level / abs(model.phi0)), 1.0) / max(lam.real, 1e-300)
    sol = solve_ivp(_rhs(lam, complex(model.A)), (0.0, horizon), _start(model.phi0), method="DOP853", rtol=rtol,
                    atol=1e-13, events=[_level_event(level)])
    return float(sol.t_events[0][0]) if len(sol.t_events[0]) else math.inf


def classify_saturation(model: LandauModel):
    """``Saturates``, ``Escapes`` (first passage to ``|phi| = 1``) or ``Stable`` when ``Re lam <= 0``."""
    lam, a = complex(model.lam), complex(model.A)
    if lam.real <= 0:
        return Stable(lam.real)
    if a.real < 0:
        return Saturates(math.sqrt(-lam.real / a.real))
    if a.real == 0:
        return Escapes(math.log(1.0 / abs(model.phi0)) / lam.real)
    return Escapes(first_passage_time(model, 1.0))


def saturation_amplitude(model: LandauModel, periods: float = 40.0) -> float:
    """``|phi|`` after ``periods`` e-folding times, measured on the integrated trajectory."""
    lam = complex(model.lam)
    t_end = periods / lam.real + math.log(1.0 / abs(model.phi0)) / lam.real
    traj = integrate_landau(model, t_end, t_end / 2000.0)
    return float(traj.amplitude[-1])


# --------------------------------------------------------------------------
# instability time


@dataclass(frozen=True)
class InstabilityTime:
    T: float
    ratio: float  # T nu^(1/2) / log(1/nu)
    limit_ratio: float  # (N - 1/4 - theta) / Re lambda~
    residual: float


def instability_time(nu: float, N: float, theta: float, re_lambda_tilde: float) -> InstabilityTime:
    """Solve ``nu^N exp(nu^(1/2) Re lam~ T) / sqrt(nu^(1/2) T) = nu^(1/4 + theta)`` for the later root.

    With ``s = nu^(1/2) T`` the condition reads ``Re lam~ s - log(s)/2 = K``,
    ``K = (N - 1/4 - theta) log(1/nu)``; Newton runs on ``u = log s``.
    """
    if not 0 < nu < 1:
        raise DomainError("nu must lie in (0, 1)")
    if N <= 0.25 + theta:
        raise DomainError("need N > 1/4 + theta")
    if re_lambda_tilde <= 0:
        raise DomainError("re_lambda_tilde must be positive")
    lr, big_l = re_lambda_tilde, math.log(1.0 / nu)
    k = (N - 0.25 - theta) * big_l
    s_min = 1.0 / (2.0 * lr)
    if lr * s_min - 0.5 * math.log(s_min) > k:
        raise InfeasibleError(f"the seed nu^{N} cannot reach nu^{0.25 + theta}: growth term never balances")

    def g(u):
        return lr * math.exp(u) - 0.5 * u - k

    u = math.log(max(2.0 * s_min, (k + 0.5 * math.log(max(k / lr, 1.0))) / lr))
    for _ in range(100):
        step = g(u) / (lr * math.exp(u) - 0.5)
        u -= step
        if abs(step) < 1e-15 * max(1.0, abs(u)):
            break
    s = math.exp(u)
    T = s / math.sqrt(nu)
    # residual of the defining equation in logarithmic form, relative to its size
    lhs = N * math.log(nu) + math.sqrt(nu) * lr * T - 0.5 * math.log(math.sqrt(nu) * T)
    rhs = (0.25 + theta) * math.log(nu)
    return InstabilityTime(T, s / big_l, (N - 0.25 - theta) / lr, abs(lhs - rhs) / abs(rhs))


# --------------------------------------------------------------------------
# resonant kernel

SWITCH = 1e-3


def _expm1(z: complex) -> complex:
    """``exp(z) - 1`` without cancellation for small complex ``z``."""
    x, y = z.real, z.imag
    return complex(math.expm1(x) * math.cos(y) - 2.0 * math.sin(0.5 * y) ** 2, math.exp(x) * math.sin(y))


def resonant_kernel(lam: complex, eps: complex, t: float) -> complex:
    """``(exp(lam t) - exp(eps t)) / (lam - eps)``, continuous through ``lam = eps``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    lam, eps = complex(lam), complex(eps)
    d = lam - eps
    if abs(d) * t > 1.0:
        return (np.exp(lam * t) - np.exp(eps * t)) / d
    if abs(d) * t > SWITCH:
        # same difference, factored so the two exponentials do not cancel
        return np.exp(eps * t) * _expm1(d * t) / d
    # t e^{eps t} sum_{n>=1} (d t)^{n-1} / n!
    x = d * t
    term, total, n = 1.0 + 0j, 0j, 1
    while True:
        total += term
        n += 1
        term *= x / n
        if abs(term) <= 1e-17 * abs(total) or n > 60:
            break
    return t * np.exp(eps * t) * total
