"""The twelve acceptance checks, shared by ``shearstab verify`` and the test suite.

Each check runs its measurement and compares it with a fixed tolerance; the
result records the measured numbers either way.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import cascade, wavepacket
from . import collocation as col
from .amplitude import LandauModel, instability_time, saturation_amplitude
from .chebyshev import rayleigh_spectrum
from .orrsolver import (adjoint_eigenmode, eigenmode, find_eigenvalue, most_unstable, neutral_curves,
                        normalized_pairing, pairing, resolvent_solve, unstable_band)
from .profile import exponential_profile, inflection_profile
from .rayleigh import find_rayleigh_mode, guess_grid


@dataclass
class Check:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        vals = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {vals} ({self.seconds:.1f} s)"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


CARRIER = 2.7  # rescaled wavenumber inside the lower-branch band at every nu used here


def neutral_exponents(nus=(1e-4, 1e-5, 1e-6, 1e-7)) -> Check:
    nc = neutral_curves(exponential_profile(), nus)
    em, ep = nc.fitted_exponents
    ok = abs(em - 0.25) <= 0.03 and abs(ep - 1 / 6) <= 0.03
    return Check(1, "neutral-curve exponents", ok,
                 {"e_minus": em, "e_plus": ep, "stable_nus": nc.stable_nus})


def growth_rate_scaling(nus=(1e-5, 1e-6, 1e-7, 1e-8)) -> Check:
    p = exponential_profile()
    pts = [most_unstable(p, nu) for nu in nus]
    slope = _slope(nus, [pt.lam.real for pt in pts])
    at = np.array([pt.alpha_tilde for pt in pts])
    spread = float((at.max() - at.min()) / at.mean())
    ok = abs(slope - 0.5) <= 0.03 and spread < 0.05
    return Check(2, "growth-rate scaling", ok, {"slope": slope, "alpha0_tilde": at.tolist(), "spread": spread})


def conjugation_symmetry(nus=(1e-5, 1e-6), per_nu: int = 10) -> Check:
    p = exponential_profile()
    worst = 0.0
    for nu in nus:
        band = unstable_band(p, nu)
        for a in np.geomspace(band.alpha_minus * 0.8, band.alpha_plus * 1.2, per_nu):
            pt = band.tracker.at(float(a))
            neg = find_eigenvalue(p, -float(a), nu, np.conj(pt.c))
            worst = max(worst, abs(neg.lam - np.conj(pt.lam)) / abs(pt.lam))
    return Check(3, "conjugation symmetry", worst <= 1e-8, {"points": len(nus) * per_nu, "max_rel_diff": worst})


def three_scale_structure(nus=(1e-5, 1e-6, 1e-7)) -> Check:
    p = exponential_profile()
    lengths, omega_outer = [], []
    for nu in nus:
        pt = find_eigenvalue(p, CARRIER * nu**0.25, nu)
        fit = eigenmode(pt, p).scale_fit
        lengths.append(fit.lengths)
        amps = np.array(fit.omega_amplitudes)
        omega_outer.append(float(amps[0] / amps.max()))
    lengths = np.array(lengths)
    exps = [_slope(nus, lengths[:, k]) for k in range(3)]
    # length nu^(-1/4), 1, nu^(1/4)  <=>  scale exponents -1/4, 0, 1/4
    ok_exp = all(abs(e - t) <= 0.05 for e, t in zip(exps, (-0.25, 0.0, 0.25)))
    ok_omega = max(omega_outer) < 1e-3
    return Check(4, "three-scale eigenmode structure", ok_exp and ok_omega,
                 {"exponents": exps, "omega_outer_rel": max(omega_outer)})


def biorthogonality(nu: float = 1e-6) -> Check:
    p = exponential_profile()
    pt = find_eigenvalue(p, CARRIER * nu**0.25, nu)
    d = eigenmode(pt, p)
    a = adjoint_eigenmode(pt, p, grid=d.grid)
    same = abs(normalized_pairing(d, a))
    # adjoint mode of the next discrete eigenvalue on the same grid
    op = col.orr_operator(p, d.grid, pt.alpha, nu)
    cs, _ = col.nearest_eigenpairs(op, pt.c, k=4)
    opa = col.orr_operator(p, d.grid, pt.alpha, nu, adjoint=True)
    _, va = col.nearest_eigenpairs(opa, cs[1], k=1)
    other = np.conj(va[:, 0])
    g = d.grid
    cross = abs(pairing(g, d.psi, other, pt.alpha)) / math.sqrt(
        pairing(g, d.psi, d.psi, pt.alpha).real * pairing(g, other, other, pt.alpha).real)
    ok = 1e-2 <= same <= 1.0 + 1e-12 and cross < 1e-6
    return Check(5, "direct/adjoint biorthogonality", ok, {"same": same, "cross": cross})


def resolvent_exponents(nu: float = 1e-6, gain_nus=(1e-5, 1e-6, 1e-7)) -> Check:
    p = exponential_profile()

    def src(y):
        return np.exp(-y)

    pt = find_eigenvalue(p, CARRIER * nu**0.25, nu)
    dists = np.geomspace(1e-2, 1e-4, 5)
    grid = col.grid_for(p, pt.alpha, nu, pt.c, n=1200)
    norms = [np.max(np.abs(resolvent_solve(p, pt.alpha, pt.c + d * (1 + 1j) / math.sqrt(2), nu, src,
                                           grid=grid).psi)) for d in dists]
    sing = _slope(dists, norms)
    gains = []
    for v in gain_nus:
        q = find_eigenvalue(p, CARRIER * v**0.25, v)
        r = resolvent_solve(p, q.alpha, q.c + 1j * v**0.25, v, src)
        gains.append(np.max(np.abs(r.psi)) / np.max(np.abs(r.rhs)))
    gain = _slope(gain_nus, gains)
    ok = abs(sing + 1) <= 0.1 and abs(gain + 0.25) <= 0.05
    return Check(6, "resolvent singularity exponents", ok, {"distance_slope": sing, "gain_exponent": gain})


def packet_envelope(nu: float = 1e-6) -> Check:
    p = exponential_profile()
    pt = most_unstable(p, nu)
    fam = wavepacket.mode_family(p, nu, pt.alpha_tilde)
    ts = np.linspace(2.0, 8.0, 7) / nu**0.5
    g = wavepacket.packet_growth(fam, pt.alpha_tilde, ts)
    dev = float(np.max(np.abs(g.ratio / g.C - 1)))
    cs = wavepacket.group_velocity(fam, pt.alpha_tilde)
    drift = float(np.polyfit(ts, g.argmax_x, 1)[0])
    ok = dev <= 0.10 and abs(drift / cs - 1) <= 0.15
    return Check(7, "wave-packet envelope law", ok,
                 {"ratio_range": [float(g.ratio.min() / g.C), float(g.ratio.max() / g.C)], "max_dev": dev,
                  "drift/c_sigma": drift / cs})


def landau_saturation(nus=(1e-4, 1e-5, 1e-6, 1e-7, 1e-8)) -> Check:
    amps = [saturation_amplitude(LandauModel(v**0.5, -1.0, 1e-3 * v**0.25)) for v in nus]
    rel = max(abs(a / v**0.25 - 1) for a, v in zip(amps, nus))
    slope = _slope(nus, amps)
    ok = rel <= 1e-3 and abs(slope - 0.25) <= 0.01
    return Check(8, "Landau saturation", ok, {"max_rel_err": rel, "slope": slope})


def instability_time_limit(nu: float = 1e-8, N: float = 3.0, theta: float = 0.0, re_lt: float = 1.0) -> Check:
    r = instability_time(nu, N, theta, re_lt)
    dev = abs(r.ratio / r.limit_ratio - 1)
    return Check(9, "instability time", dev <= 0.05, {"ratio": r.ratio, "limit": r.limit_ratio, "rel_dev": dev})


EXPECTED_LEDGERS = {
    "thm1": {"-1/4", "0", "1/4"},
    "thm2": {"0", "1/2", "3/8", "5/8"},
    "thm3": {"0", "1/2", "3/4", "11/16", "13/16"},
    "thm4": {"0", "1/2", "3/8", "5/8"},
}


def cascade_ledgers() -> Check:
    from fractions import Fraction

    got = {k: cascade.named_scenario(k).scales for k in EXPECTED_LEDGERS}
    ok = all(got[k] == {Fraction(s) for s in v} for k, v in EXPECTED_LEDGERS.items())
    return Check(10, "cascade ledgers", ok, {k: sorted(str(s) for s in v) for k, v in got.items()})


def viscous_expansion(nus=(1e-4, 1e-5), alpha: float = 0.5, n_orders: int = 2) -> Check:
    p = inflection_profile()
    mode = find_rayleigh_mode(p, alpha, rayleigh_spectrum(p, alpha)[0])
    bc, slopes = 0.0, []
    for nu in nus:
        ex = cascade.viscous_mode_from_rayleigh(mode, p, nu, n_orders=n_orders)
        res = []
        for k in range(1, n_orders + 1):
            v, s = ex.wall_values(k)
            bc = max(bc, abs(v), abs(s))
            res.append(ex.orr_residual(k))
        per_order = np.polyfit(np.arange(1, n_orders + 1), np.log(res), 1)[0]
        slopes.append(float(per_order / (0.5 * math.log(nu))))
    ok = bc <= 1e-8 and all(abs(s - 1) <= 0.2 for s in slopes)
    return Check(11, "Rayleigh-to-viscous expansion", ok, {"wall_bc": bc, "slope_over_half_log_nu": slopes})


def rayleigh_oracle(alpha: float = 0.8) -> Check:
    infl = inflection_profile()
    oracle = rayleigh_spectrum(infl, alpha, n=200)[0]
    mode = find_rayleigh_mode(infl, alpha, oracle)
    diff = abs(mode.c - oracle) if mode else math.inf
    concave = exponential_profile()
    found = sum(find_rayleigh_mode(concave, alpha, g, n_points=3) is not None for g in guess_grid(concave))
    return Check(12, "Rayleigh oracle equivalence", diff <= 1e-4 and found == 0,
                 {"c": complex(mode.c) if mode else None, "oracle_diff": diff, "concave_roots": found})


CHECKS = {
    1: neutral_exponents, 2: growth_rate_scaling, 3: conjugation_symmetry, 4: three_scale_structure,
    5: biorthogonality, 6: resolvent_exponents, 7: packet_envelope, 8: landau_saturation,
    9: instability_time_limit, 10: cascade_ledgers, 11: viscous_expansion, 12: rayleigh_oracle,
}
FAST = (3, 5, 8, 9, 10, 12)

# wall-clock budgets in seconds; a check that overruns fails
BUDGET = {1: 600, 2: 300, 3: 60, 4: 300, 5: 60, 6: 600, 7: 600, 8: 60, 9: 60, 10: 1, 11: 300, 12: 120}


def run_check(number: int) -> Check:
    t0 = time.perf_counter()
    res = CHECKS[number]()
    res.seconds = time.perf_counter() - t0
    if res.seconds > BUDGET[number]:
        res.passed = False
        res.measured["over_budget_s"] = BUDGET[number]
    return res


def run_tier(tier: str = "full") -> list[Check]:
    numbers = FAST if tier == "fast" else sorted(CHECKS)
    return [run_check(k) for k in numbers]
