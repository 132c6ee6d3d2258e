"""Instability cascades: exact scale ledgers and the Rayleigh-to-viscous mode expansion.

Scale bookkeeping
-----------------
A length scale ``nu^q`` is stored as the exact rational ``q``. An instability
living in a layer of thickness ``nu^s`` is studied after the parabolic
rescaling ``(t, x, y) -> (t, x, y) / nu^s``, which turns the viscosity ``nu^e``
into ``nu^(e - s)``. In the rescaled flow

* a *slow* (viscous, lower-branch) instability adds the scales
  ``-e/4, 0, e/4`` around the layer and needs a time ``nu^(-e/2) log(1/nu)``;
* a *fast* (inviscid, Rayleigh) instability adds a viscous sublayer
  ``e/2`` below the layer and needs a time ``log(1/nu)``.

Undoing the rescaling multiplies times by ``nu^s``. The time of a scenario is
the longest of its steps, i.e. the smallest exponent.

Viscous mode from a Rayleigh mode
---------------------------------
With ``eps = nu^(1/2)`` the Orr-Sommerfeld mode is sought as

    psi = sum_k eps^k ( I_k(y) + B_k(y / eps) ),     c = sum_k eps^k c_k,

``I_0`` the Rayleigh mode and ``B_0 = 0``. Collecting powers of ``eps``:

* interior: ``R I_k = sum_{j=1..k} c_j L I_{k-j} + (1 / (i alpha)) L^2 I_{k-2}``
  where ``R = (U - c_0) L - U''``; the solvability condition fixes ``c_k``;
* boundary layer, ``Y = y / eps``:
  ``-c_0 B_k'' - (1 / (i alpha)) B_k'''' = G_k`` where ``G_k`` collects the Taylor
  expansion of ``U`` at the wall and the lower orders. With
  ``mu^2 = -i alpha c_0`` every ``B_k`` is ``P_k(Y) exp(-mu Y)``, ``P_k`` a polynomial;
* wall conditions: ``B_k'(0) = -I_{k-1}'(0)`` (slope) and ``I_k(0) = -B_k(0)`` (value).

``B_1 = (I_0'(0) / mu) exp(-mu Y)`` differs from the textbook form
``-(I_0'(0) / mu)(1 - exp(-mu Y))`` by a constant, which here is carried by the
decaying interior corrector instead. The slope left over at the last order is
removed by ``eps^(N+1) (-I_N'(0) / mu)(1 - exp(-mu Y))``, which vanishes at the
wall, so both wall conditions hold exactly for the assembled mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import sparse
from scipy.sparse.linalg import splu

from . import collocation as col
from .errors import DomainError, ExpansionTruncationError, InconsistentScenarioError, SuperViscousError
from .profile import ShearProfile, eval_profile
from .rayleigh import RayleighMode

# --------------------------------------------------------------------------
# exact scale ledgers


def _q(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("scale exponents must be exact (int, Fraction or 'p/q' string), not float")
    return Fraction(x)


def rescale_flow(nu_exponent, s) -> Fraction:
    """Viscosity exponent after the parabolic rescaling by ``nu^s``."""
    e, s = _q(nu_exponent), _q(s)
    if s < 0:
        raise DomainError(f"rescale exponent must be non-negative, got {s}")
    if s > e:
        raise SuperViscousError(f"rescaling by nu^{s} would leave viscosity nu^{e - s}: Reynolds number shrinks")
    return e - s


@dataclass(frozen=True)
class Template:
    kind: str
    relative_scales: tuple
    growth_exponent: Fraction
    wavenumber_exponent: Fraction | None = None


def slow_instability_template(e) -> Template:
    """Lower-branch viscous instability at viscosity ``nu^e``."""
    e = _q(e)
    if e <= 0:
        raise DomainError("viscosity exponent must be positive")
    return Template("slow", (-e / 4, Fraction(0), e / 4), e / 2, e / 4)


def fast_instability_template(e) -> Template:
    """Inviscid instability at viscosity ``nu^e``: an O(1) layer and its viscous sublayer."""
    e = _q(e)
    if e <= 0:
        raise DomainError("viscosity exponent must be positive")
    return Template("fast", (Fraction(0), e / 2), Fraction(0))


_TEMPLATES = {"slow": slow_instability_template, "fast": fast_instability_template}


@dataclass
class ScaleLedger:
    scales: set
    history: list = field(default_factory=list)
    time_exponent: Fraction | None = None

    def sorted_scales(self) -> list:
        return sorted(self.scales)

    def as_json(self) -> dict:
        return {"scales": [str(q) for q in self.sorted_scales()],
                "time_exponent": None if self.time_exponent is None else str(self.time_exponent),
                "history": [{"kind": k, "attach": str(a), "nu_exponent": str(e), "time_exponent": str(t)}
                            for k, a, e, t in self.history]}


def run_scenario(steps, initial=(0,), nu_exponent=1) -> ScaleLedger:
    """Apply ``(attach_scale, kind)`` steps to a ledger that starts with ``initial``.

    Each step rescales the flow to the layer ``nu^attach`` and adds the
    template's scales shifted by ``attach``.
    """
    ledger = ScaleLedger({_q(q) for q in initial})
    times = []
    for attach, kind in steps:
        a = _q(attach)
        if a not in ledger.scales:
            raise InconsistentScenarioError(f"no layer at scale nu^{a} to attach a {kind} instability to "
                                            f"(present: {sorted(str(q) for q in ledger.scales)})")
        if kind not in _TEMPLATES:
            raise InconsistentScenarioError(f"unknown instability kind {kind!r}")
        e = rescale_flow(nu_exponent, a)
        tpl = _TEMPLATES[kind](e)
        ledger.scales.update(a + r for r in tpl.relative_scales)
        t = a - tpl.growth_exponent
        times.append(t)
        ledger.history.append((kind, a, e, t))
    ledger.time_exponent = min(times) if times else None
    return ledger


PRANDTL = (Fraction(0), Fraction(1, 2))

SCENARIOS = {
    # slow instability of the O(1) shear layer
    "thm1": ((0,), [(0, "slow")]),
    # fast instability of the O(1) layer, then slow instability of its sublayer
    "thm2": ((0,), [(0, "fast"), (Fraction(1, 2), "slow")]),
    # fast instability of the Prandtl layer, then slow instability of its sublayer
    "thm3": (PRANDTL, [(Fraction(1, 2), "fast"), (Fraction(3, 4), "slow")]),
    # slow instability of the Prandtl layer
    "thm4": (PRANDTL, [(Fraction(1, 2), "slow")]),
}


def named_scenario(name: str) -> ScaleLedger:
    if name not in SCENARIOS:
        raise InconsistentScenarioError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    initial, steps = SCENARIOS[name]
    return run_scenario(steps, initial)


# --------------------------------------------------------------------------
# Rayleigh-to-viscous expansion


def taylor_coefficients(profile: ShearProfile, order: int, radius: float = 0.2, n: int = 64) -> np.ndarray:
    """``U^(m)(0) / m!`` for ``m = 0..order`` from a Cauchy integral on ``|y| = radius``."""
    if not profile.analytic:
        raise DomainError("wall Taylor coefficients need an analytic profile")
    theta = 2 * np.pi * np.arange(n) / n
    z = radius * np.exp(1j * theta)
    u = np.asarray(eval_profile(profile, z)[0], dtype=complex)
    coef = np.fft.fft(u) / n
    return np.array([coef[m] / radius**m for m in range(order + 1)])


def _dexp(p: np.ndarray, mu: complex) -> np.ndarray:
    """Coefficients of ``d/dY [P(Y) e^{-mu Y}] / e^{-mu Y} = P' - mu P``."""
    return npoly.polysub(npoly.polyder(p), mu * p) if p.size > 1 else -mu * p


def _dexp_n(p: np.ndarray, mu: complex, k: int) -> np.ndarray:
    for _ in range(k):
        p = _dexp(p, mu)
    return p


def _solve_layer(q: np.ndarray, mu: complex, alpha: float) -> np.ndarray:
    """Particular ``P`` with ``-c0 (P e)'' - (1/(i alpha)) (P e)'''' = Q e`` where ``e = exp(-mu Y)``.

    On ``P`` the operator is ``-(1/(i alpha)) (d - mu)^2 (d - 2 mu) d``; the
    first three factors are invertible on polynomials, ``d`` is undone by
    integration (constant of integration left to the wall condition).
    """
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    m = q.size
    dm = np.diag(np.arange(1, m), 1).astype(complex)  # d on coefficient vectors
    eye = np.eye(m)
    s = (dm - mu * eye) @ (dm - mu * eye) @ (dm - 2 * mu * eye)
    r = np.linalg.solve(s, -1j * alpha * q)
    return npoly.polyint(r)


@dataclass
class ViscousModeExpansion:
    """Truncated two-scale expansion of an Orr-Sommerfeld mode around a Rayleigh mode.

    ``orders[k] = (I_k on grid, P_k coefficients, c_k, I_k'(0))`` with ``B_k(Y) = P_k(Y) exp(-mu Y)``.
    ``closure`` is the amplitude ``-I_N'(0) / mu`` of the slope-fixing term at the full depth.
    """

    profile: ShearProfile = field(repr=False)
    alpha0: float
    nu: float
    mu: complex
    orders: list = field(repr=False)
    grid: col.Grid = field(repr=False)
    closure: complex

    @property
    def eps(self) -> float:
        return self.nu**0.5

    @property
    def n_orders(self) -> int:
        return len(self.orders) - 1

    @property
    def c_ray(self) -> complex:
        return self.orders[0][2]

    def c_orr(self, order: int | None = None) -> complex:
        order = self.n_orders if order is None else order
        return sum(self.eps**k * self.orders[k][2] for k in range(order + 1))

    def boundary_layer(self, k: int, y: np.ndarray, derivative: int = 0) -> np.ndarray:
        """``d^j/dy^j B_k(y / eps)``."""
        p = _dexp_n(self.orders[k][1], self.mu, derivative)
        big_y = np.asarray(y) / self.eps
        return npoly.polyval(big_y, p) * np.exp(-self.mu * big_y) / self.eps**derivative

    def phi(self, order: int | None = None, derivative: int = 0, y: np.ndarray | None = None) -> np.ndarray:
        """Assembled ``phi_Orr`` through ``order`` (with the closure term) on the grid or at ``y``."""
        order = self.n_orders if order is None else order
        y = self.grid.y if y is None else np.asarray(y)
        on_grid = y is self.grid.y
        out = np.zeros(y.shape, dtype=complex)
        for k in range(order + 1):
            if on_grid:
                ik = self.orders[k][0] if derivative == 0 else self.grid.deriv(self.orders[k][0], derivative)
            else:
                if derivative:
                    raise DomainError("interior derivatives are only available on the grid")
                ik = np.interp(y, self.grid.y, self.orders[k][0].real) + 1j * np.interp(y, self.grid.y,
                                                                                         self.orders[k][0].imag)
            out += self.eps**k * (ik + self.boundary_layer(k, y, derivative))
        clos = _closure_amplitude(self, order)
        big_y = y / self.eps
        if derivative == 0:
            out += self.eps ** (order + 1) * clos * (1 - np.exp(-self.mu * big_y))
        else:
            out += -self.eps ** (order + 1) * clos * (-self.mu) ** derivative * np.exp(-self.mu * big_y) \
                / self.eps**derivative
        return out

    def wall_values(self, order: int | None = None) -> tuple[complex, complex]:
        """``(phi(0), phi'(0))`` evaluated from the exact wall data of each term."""
        order = self.n_orders if order is None else order
        val = slope = 0j
        for k in range(order + 1):
            val += self.eps**k * (self.orders[k][0][0] + self.boundary_layer(k, np.array([0.0]))[0])
            slope += self.eps**k * (_wall_slope(self, k) + self.boundary_layer(k, np.array([0.0]), 1)[0])
        clos = _closure_amplitude(self, order)
        slope += self.eps ** (order + 1) * clos * self.mu / self.eps
        return complex(val), complex(slope)

    def orr_residual(self, order: int | None = None) -> float:
        """``max |Orr_c phi| / max |phi|`` over interior rows, with ``c`` the truncated phase speed."""
        order = self.n_orders if order is None else order
        op = col.orr_operator(self.profile, self.grid, self.alpha0, self.nu)
        ph = self.phi(order)
        r = op.apply(ph, self.c_orr(order))
        return float(np.max(np.abs(r[op.interior()])) / np.max(np.abs(ph)))


def _wall_slope(exp: ViscousModeExpansion, k: int) -> complex:
    return exp.orders[k][3]


def _closure_amplitude(exp: ViscousModeExpansion, order: int) -> complex:
    """``-I_N'(0) / mu`` for the expansion truncated at ``N = order``."""
    return -_wall_slope(exp, order) / exp.mu


def _rayleigh_pencil(profile: ShearProfile, grid: col.Grid, alpha: float):
    n = grid.n
    _, d2, _, _ = grid.d
    eye = sparse.identity(n, format="csr")
    u, _, upp = (np.asarray(v, dtype=float) for v in eval_profile(profile, grid.y))
    lap = (d2 - alpha**2 * eye).tocsr()
    a = sparse.lil_matrix((sparse.diags(u) @ lap - sparse.diags(upp)).astype(complex))
    b = sparse.lil_matrix(lap.astype(complex))
    d1 = grid.d[0]
    for r, row in ((0, eye.getrow(0)), (n - 1, d1.getrow(n - 1) + abs(alpha) * eye.getrow(n - 1))):
        a[r, :] = row.toarray()
        b[r, :] = 0.0
    return a.tocsr(), b.tocsr(), lap


def viscous_mode_from_rayleigh(mode: RayleighMode, profile: ShearProfile, nu: float, n_orders: int = 2,
                               n: int = 1600, points_per_layer: float = 30.0) -> ViscousModeExpansion:
    """Expand the Orr-Sommerfeld mode near an unstable Rayleigh mode in powers of ``nu^(1/2)``."""
    if mode.c.imag <= 0:
        raise DomainError(f"Rayleigh mode must be unstable (Im c = {mode.c.imag:.3g})")
    u0 = float(eval_profile(profile, 0.0)[0])
    if abs(u0) > 1e-12:
        raise DomainError(f"the boundary-layer expansion assumes U(0) = 0, got {u0:g}")
    alpha = float(mode.alpha)
    eps = nu**0.5
    c0 = complex(mode.c)
    mu = np.sqrt(-1j * alpha * c0)
    if mu.real <= 0:
        mu = -mu
    if eps / abs(mu) > 0.1:
        raise DomainError(f"boundary layer too thick: nu^(1/2)/|mu| = {eps / abs(mu):.3g}")

    # the wall layer gets ~30 intervals; a finer grid only raises the rounding floor of nu D^4
    y_max = max(30.0 / alpha, 40.0 / profile.decay_rate)
    grid = col.grid_with_wall_spacing(eps / abs(mu) / points_per_layer, y_max, n)
    a, b, _ = _rayleigh_pencil(profile, grid, alpha)

    # order 0: discrete Rayleigh eigenpair polished by inverse iteration from the shooting value
    i0 = np.interp(grid.y, mode.y, mode.psi.real) + 1j * np.interp(grid.y, mode.y, mode.psi.imag)
    c_fd = c0
    for _ in range(6):
        lu = splu((a - c_fd * b).tocsc())
        x = lu.solve(b @ i0)
        theta = np.vdot(i0, x) / np.vdot(i0, i0)
        c_fd = c_fd + 1.0 / theta
        i0 = x / x[np.argmax(np.abs(x))]
    c0 = complex(c_fd)
    mu = np.sqrt(-1j * alpha * c0)
    mu = mu if mu.real > 0 else -mu
    k_ref = int(np.argmax(np.abs(i0)))
    i0 = i0 / i0[k_ref]

    ut = taylor_coefficients(profile, n_orders + 3)
    u_m = ut  # U(Y eps) = sum u_m eps^m Y^m
    w_m = np.array([(m + 2) * (m + 1) * ut[m + 2] for m in range(n_orders + 1)])  # U''(Y eps) coefficients
    visc = 1.0 / (1j * alpha)

    u_g, _, upp_g = (np.asarray(v, dtype=float) for v in eval_profile(profile, grid.y))

    def lap_from_equation(ik, fk):
        # (U - c0) L I - U'' I = F  gives L I without a second difference of I
        return (fk + upp_g * ik) / (u_g - c0)

    def lap_fd(v):
        return grid.deriv(v, 2) - alpha**2 * v

    ints = [i0]
    laps = [lap_from_equation(i0, 0.0)]
    polys = [np.zeros(1, dtype=complex)]
    cs = [c0]
    slopes = [complex(grid.deriv(i0)[0])]
    # bordered system: [R - c0 ... | -L I_0] [I_k; c_k] = F, with I_k(0) fixed and I_k(y_ref) = 0
    r_mat = (a - c0 * b).tolil()
    li0 = b @ i0
    border_col = sparse.csr_matrix((-li0).reshape(-1, 1))
    ref_row = sparse.csr_matrix(([1.0], ([0], [k_ref])), shape=(1, grid.n))
    big = sparse.bmat([[r_mat.tocsr(), border_col], [ref_row, None]], format="csc")
    try:
        lu = splu(big)
    except RuntimeError as exc:
        raise ExpansionTruncationError(f"singular bordered Rayleigh system at order 1: {exc}") from exc

    def bl(k, j):
        return _dexp_n(polys[k], mu, j) if 0 <= k < len(polys) else np.zeros(1, dtype=complex)

    for k in range(1, n_orders + 1):
        # boundary layer of order k
        g = np.zeros(1, dtype=complex)
        for m in range(1, k + 1):
            ym = np.zeros(m + 1, dtype=complex)
            ym[m] = u_m[m]
            g = npoly.polysub(g, npoly.polymul(ym, npoly.polysub(bl(k - m, 2), alpha**2 * bl(k - m - 2, 0))))
        for j in range(1, k):  # the j = k term multiplies B_0 = 0
            g = npoly.polyadd(g, cs[j] * npoly.polysub(bl(k - j, 2), alpha**2 * bl(k - j - 2, 0)))
        g = npoly.polysub(g, c0 * alpha**2 * bl(k - 2, 0))
        for m in range(0, k - 1):
            ym = np.zeros(m + 1, dtype=complex)
            ym[m] = w_m[m]
            g = npoly.polyadd(g, npoly.polymul(ym, bl(k - 2 - m, 0)))
        g = npoly.polyadd(g, visc * npoly.polysub(-2 * alpha**2 * bl(k - 2, 2), -alpha**4 * bl(k - 4, 0)))
        p = _solve_layer(g, mu, alpha)
        # homogeneous part a e^{-mu Y}: slope condition d/dy B_k = B_k'(Y)/eps must equal -I_{k-1}'(0)/eps
        slope_p = _dexp(p, mu)[0] if p.size else 0j
        amp = (-slopes[k - 1] - slope_p) / (-mu)
        p = npoly.polyadd(p, np.array([amp]))
        polys.append(np.trim_zeros(p, "b") if np.any(p) else np.zeros(1, dtype=complex))

        # interior of order k
        rhs = np.zeros(grid.n, dtype=complex)
        for j in range(1, k):
            rhs += cs[j] * laps[k - j]
        if k >= 2:
            rhs += visc * lap_fd(laps[k - 2])
        forcing = rhs.copy()
        rhs[0] = -polys[k][0]
        rhs[-1] = 0.0
        sol = lu.solve(np.concatenate([rhs, [0.0]]))
        if not np.all(np.isfinite(sol)):
            raise ExpansionTruncationError(f"interior corrector of order {k} is not finite")
        ints.append(sol[:-1])
        cs.append(complex(sol[-1]))
        laps.append(lap_from_equation(sol[:-1], forcing + sol[-1] * laps[0]))
        slopes.append(complex(grid.deriv(sol[:-1])[0]))

    orders = [(ints[k], polys[k], cs[k], slopes[k]) for k in range(n_orders + 1)]
    exp = ViscousModeExpansion(profile, alpha, float(nu), complex(mu), orders, grid, 0j)
    exp.closure = _closure_amplitude(exp, n_orders)
    return exp
