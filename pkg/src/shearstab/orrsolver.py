"""Viscous spectrum of a shear layer: eigenvalues, neutral curves, modes and resolvents.

Eigenvalues come from Muller iteration on the compound-matrix dispersion
function; global Chebyshev spectra only provide starting guesses. Mode
shapes, adjoint modes and resolvent solves use finite-difference
collocation on a geometric grid (see :mod:`shearstab.collocation`).
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares, minimize_scalar, nnls
from scipy.sparse.linalg import splu

from . import collocation as col
from .chebyshev import orr_spectrum
from .dispersion import DispersionFunction
from .errors import (
    ContinuationError,
    DegeneratePairingError,
    DomainError,
    NearSingularSolveError,
)
from .profile import ShearProfile, eval_profile
from .roots import muller

log = logging.getLogger(__name__)

ACCEPT_RESIDUAL = 1e-9


@dataclass(frozen=True)
class SpectralPoint:
    alpha: float
    nu: float
    c: complex
    residual: float

    @property
    def lam(self) -> complex:
        return -1j * self.alpha * self.c

    @property
    def alpha_tilde(self) -> float:
        return self.alpha / self.nu**0.25

    @property
    def lambda_tilde(self) -> complex:
        return self.lam / self.nu**0.5


# --------------------------------------------------------------------------
# eigenvalues


def spectral_guesses(profile: ShearProfile, alpha: float, nu: float, n: int = 200) -> np.ndarray:
    """Chebyshev estimates of the least stable eigenvalues, most unstable first.

    Spurious collocation values cluster near ``Re c ~ 0.9 U_+``; the wall
    modes of interest have ``Re c`` well below that, so larger phase speeds
    are dropped.
    """
    a = abs(alpha)
    w = orr_spectrum(profile, a, nu, n=n)
    w = w[w.real < 0.6 * abs(profile.u_plus)]
    return np.conj(w) if alpha < 0 else w


def find_eigenvalue(profile: ShearProfile, alpha: float, nu: float, c_guess: complex | None = None,
                    diagnostics: list | None = None) -> SpectralPoint | None:
    """Polish an eigenvalue with Muller's method; ``None`` if it leaves ``|c| < |U_+|`` or stalls."""
    if c_guess is None:
        guesses = spectral_guesses(profile, alpha, nu)
        if guesses.size == 0:
            return None
        c_guess = guesses[0]
    c_guess = complex(c_guess)
    if abs(c_guess) >= abs(profile.u_plus):
        raise DomainError(f"|c_guess| = {abs(c_guess):.3g} must be below |U_+|")
    disp = DispersionFunction(profile, alpha, nu)
    bound = abs(profile.u_plus)
    res = muller(disp, c_guess, ftol=1e-11, xtol=1e-15, max_iter=50, inside=lambda c: abs(c) < bound)
    if diagnostics is not None:
        diagnostics.append(res)
    if abs(res.value) < ACCEPT_RESIDUAL and abs(res.root) < bound:
        return SpectralPoint(float(alpha), float(nu), complex(res.root), float(abs(res.value)))
    log.debug("eigenvalue search failed at alpha=%g nu=%g: %s", alpha, nu, res.reason)
    return None


class BranchTracker:
    """Follows one eigenvalue branch ``c(alpha)`` at fixed ``nu``.

    Every new wavenumber is seeded by interpolating (or extrapolating) the
    nearest solved points; a failed polish is retried from intermediate
    wavenumbers.
    """

    def __init__(self, profile: ShearProfile, nu: float, start: SpectralPoint):
        self.profile = profile
        self.nu = nu
        self.alphas = [start.alpha]
        self.points = [start]

    def _guess(self, alpha: float) -> complex:
        k = bisect.bisect_left(self.alphas, alpha)
        near = sorted(range(len(self.alphas)), key=lambda i: abs(math.log(self.alphas[i] / alpha)))[:2]
        if len(near) == 1:
            return self.points[near[0]].c
        i, j = near
        a1, a2 = self.alphas[i], self.alphas[j]
        c1, c2 = self.points[i].c, self.points[j].c
        del k
        return c1 + (c2 - c1) * (math.log(alpha) - math.log(a1)) / (math.log(a2) - math.log(a1))

    def _insert(self, pt: SpectralPoint) -> None:
        k = bisect.bisect_left(self.alphas, pt.alpha)
        if k < len(self.alphas) and self.alphas[k] == pt.alpha:
            return
        self.alphas.insert(k, pt.alpha)
        self.points.insert(k, pt)

    def at(self, alpha: float, depth: int = 0) -> SpectralPoint:
        k = bisect.bisect_left(self.alphas, alpha)
        if k < len(self.alphas) and self.alphas[k] == alpha:
            return self.points[k]
        pt = find_eigenvalue(self.profile, alpha, self.nu, self._guess(alpha))
        if pt is None:
            if depth > 6:
                near = min(self.points, key=lambda q: abs(math.log(q.alpha / alpha)))
                raise ContinuationError(f"lost the eigenvalue branch at alpha = {alpha:.6g}, nu = {self.nu:g}",
                                        last_good=near)
            near = min(self.alphas, key=lambda a: abs(math.log(a / alpha)))
            self.at(math.sqrt(near * alpha), depth + 1)
            return self.at(alpha, depth + 1)
        self._insert(pt)
        return pt

    def growth(self, alpha: float) -> float:
        return self.at(alpha).lam.real


def _unstable_seed(profile: ShearProfile, nu: float) -> SpectralPoint | None:
    """Most unstable Chebyshev guess over a log grid of wavenumbers, polished."""
    best = None
    for at in np.geomspace(0.5, 12.0, 14):
        alpha = at * nu**0.25
        g = spectral_guesses(profile, alpha, nu)
        if g.size and g[0].imag > 0 and (best is None or alpha * g[0].imag > best[0] * best[1].imag):
            best = (alpha, g[0])
    if best is None:
        return None
    return find_eigenvalue(profile, best[0], nu, best[1])


def _carry_to(profile: ShearProfile, pt: SpectralPoint, nu: float, steps: int = 4) -> SpectralPoint | None:
    """Continue a point in ``nu`` at fixed rescaled wavenumber (``c`` scaled like ``nu^{1/4}``)."""
    cur = pt
    for nu_k in np.geomspace(pt.nu, nu, steps + 1)[1:]:
        f = (nu_k / cur.nu) ** 0.25
        nxt = find_eigenvalue(profile, cur.alpha * f, nu_k, cur.c * f)
        if nxt is None:
            return None
        cur = nxt
    return cur


@dataclass
class Band:
    nu: float
    alpha_minus: float
    alpha_plus: float
    tracker: BranchTracker = field(repr=False)


def _crossing(tracker: BranchTracker, a_in: float, direction: float, factor: float = 1.15, max_steps: int = 80,
              xtol: float = 1e-10) -> float:
    """Neutral wavenumber on one side of an unstable point (bisection on the sign of Im c)."""
    a = a_in
    for _ in range(max_steps):
        nxt = a * factor**direction
        if tracker.at(nxt).c.imag <= 0:
            return brentq(lambda x: tracker.at(x).c.imag, min(a, nxt), max(a, nxt), xtol=xtol * a, rtol=1e-12)
        a = nxt
    raise ContinuationError(f"no neutral crossing within {max_steps} steps from alpha = {a_in:g}",
                            last_good=tracker.at(a))


def unstable_band(profile: ShearProfile, nu: float, seed: SpectralPoint | None = None) -> Band | None:
    """``(alpha_-, alpha_+)`` at one viscosity, or ``None`` if no unstable eigenvalue is found."""
    if seed is None or seed.c.imag <= 0:
        seed = _unstable_seed(profile, nu)
    if seed is None or seed.c.imag <= 0:
        return None
    tr = BranchTracker(profile, nu, seed)
    lo = _crossing(tr, seed.alpha, -1.0)
    hi = _crossing(tr, seed.alpha, +1.0)
    return Band(nu, lo, hi, tr)


@dataclass
class NeutralCurve:
    samples: list
    fitted_exponents: tuple
    fitted_prefactors: tuple
    stable_nus: list = field(default_factory=list)

    def as_rows(self):
        return [tuple(s) for s in self.samples]


def neutral_curves(profile: ShearProfile, nu_list) -> NeutralCurve:
    """Lower and upper neutral wavenumbers for each viscosity, with power-law fits.

    Viscosities are visited from largest to smallest; each band is seeded by
    carrying the previous most unstable point down in ``nu``. Viscosities
    without an unstable eigenvalue are reported in ``stable_nus`` and left
    out of the fit.
    """
    nus = sorted({float(v) for v in nu_list}, reverse=True)
    if len(nus) < 2 or nus[0] / nus[-1] < 100 * (1 - 1e-12):
        raise DomainError("nu_list must span at least two decades")
    samples, stable = [], []
    seed = None
    for nu in nus:
        if seed is not None:
            seed = _carry_to(profile, seed, nu)
        band = unstable_band(profile, nu, seed)
        if band is None:
            stable.append(nu)
            seed = None
            continue
        samples.append((nu, band.alpha_minus, band.alpha_plus))
        mid = math.sqrt(band.alpha_minus * band.alpha_plus)
        seed = band.tracker.at(mid)
    if len(samples) < 2:
        raise ContinuationError(f"unstable band found at {len(samples)} viscosities only", last_good=samples)
    arr = np.array(samples)
    lnu = np.log(arr[:, 0])
    em, cm = np.polyfit(lnu, np.log(arr[:, 1]), 1)
    ep, cp = np.polyfit(lnu, np.log(arr[:, 2]), 1)
    return NeutralCurve(samples, (float(em), float(ep)), (float(np.exp(cm)), float(np.exp(cp))), stable)


def most_unstable(profile: ShearProfile, nu: float, band: Band | None = None, xtol: float = 1e-7) -> SpectralPoint | None:
    """Golden-section maximum of ``Re lambda`` over the unstable band; ``None`` if the band is empty."""
    band = band or unstable_band(profile, nu)
    if band is None:
        return None
    tr = band.tracker
    lo, hi = math.log(band.alpha_minus), math.log(band.alpha_plus)
    mid = 0.5 * (lo + hi)
    cands = np.linspace(lo, hi, 9)[1:-1]
    mid = max(cands, key=lambda x: tr.growth(math.exp(x)))
    step = cands[1] - cands[0]
    res = minimize_scalar(lambda x: -tr.growth(math.exp(x)), bracket=(mid - step, mid, mid + step), method="golden",
                          tol=xtol)
    return tr.at(math.exp(res.x))


# --------------------------------------------------------------------------
# three-scale envelope diagnostics


def upper_envelope(f: np.ndarray) -> np.ndarray:
    """``max_{x >= y} |f(x)|``: the smallest non-increasing majorant of ``|f|``."""
    return np.maximum.accumulate(np.abs(f)[::-1])[::-1]


def _fit_log_envelope(y, env, l0, fixed=()):
    nfree = len(l0)
    k = nfree + len(fixed)
    fixed = np.asarray(fixed, dtype=float)

    def model(x):
        ls = np.concatenate([np.exp(x[:nfree]), fixed])
        return np.exp(-y[:, None] / ls[None, :]) @ np.exp(x[nfree:])

    x0 = np.concatenate([np.log(l0), np.log(np.full(k, env.max() / k))])
    sol = least_squares(lambda x: np.log(model(x)) - np.log(env), x0)
    return np.exp(sol.x[:nfree]), np.exp(sol.x[nfree:]), float(np.max(np.abs(sol.fun)))


@dataclass(frozen=True)
class ScaleFit:
    """Decay lengths ``(outer, middle, critical)`` with the amplitudes of each field on them."""

    lengths: tuple
    psi_amplitudes: tuple
    omega_amplitudes: tuple
    misfit: float


def fit_three_scales(y: np.ndarray, psi: np.ndarray, omega: np.ndarray, alpha: float) -> ScaleFit:
    """Fit ``sum_k A_k exp(-y / l_k)`` to the upper envelopes of ``omega`` and ``psi``.

    The vorticity envelope fixes the middle and critical lengths (two terms);
    the stream function envelope then fixes the outer length with those two
    held. Finally both envelopes are projected, with non-negative weights, on
    all three exponentials.
    """
    eo, ep = upper_envelope(omega), upper_envelope(psi)
    m = (y > 0) & (eo > 1e-12 * eo.max())
    (lm, lc), _, r1 = _fit_log_envelope(y[m], eo[m], [1.0, min(0.1, 0.1 / abs(alpha) ** 0.5)])
    lm, lc = max(lm, lc), min(lm, lc)
    mp = (y > 0) & (ep > 1e-12 * ep.max())
    (lo,), _, r2 = _fit_log_envelope(y[mp], ep[mp], [1.0 / abs(alpha)], fixed=[lm, lc])
    lengths = np.array([lo, lm, lc])

    def project(mask, env):
        basis = np.exp(-y[mask][:, None] / lengths[None, :]) / env[mask][:, None]
        amps, _ = nnls(basis, np.ones(mask.sum()))
        return tuple(float(a) for a in amps)

    return ScaleFit(tuple(float(v) for v in lengths), project(mp, ep), project(m, eo), max(r1, r2))


# --------------------------------------------------------------------------
# eigenmodes


@dataclass
class Eigenmode:
    grid: col.Grid = field(repr=False)
    alpha: float
    nu: float
    c: complex
    psi: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    scale_fit: ScaleFit | None = None
    adjoint: bool = False
    operator: col.OrrOperator | None = field(default=None, repr=False)

    @property
    def y(self) -> np.ndarray:
        return self.grid.y

    @property
    def scale_amplitudes(self) -> tuple:
        return self.scale_fit.psi_amplitudes if self.scale_fit else ()

    def dpsi(self, order: int = 1) -> np.ndarray:
        return self.grid.deriv(self.psi, order)


def _mode(profile, point: SpectralPoint, adjoint: bool, n: int, grid: col.Grid | None = None) -> Eigenmode:
    if point.residual >= ACCEPT_RESIDUAL:
        raise DomainError(f"spectral point residual {point.residual:.2e} is not converged")
    grid = grid or col.grid_for(profile, point.alpha, point.nu, point.c, n=n)
    op = col.orr_operator(profile, grid, point.alpha, point.nu, adjoint=adjoint)
    cs, vecs = col.nearest_eigenpairs(op, point.c, k=2)
    col.separate_from_neighbour(cs)
    c_fd, psi = col.refine_eigenpair(op, cs[0], vecs[:, 0])
    if adjoint:
        # the velocity-pairing adjoint is the conjugate of the transposed solution
        psi = np.conj(psi)
    psi = psi / psi[np.argmax(np.abs(psi))]
    lap = grid.deriv(psi, 2) - point.alpha**2 * psi
    omega = -lap
    fit = None if adjoint else fit_three_scales(grid.y, psi, omega, point.alpha)
    return Eigenmode(grid, point.alpha, point.nu, complex(c_fd), psi, omega, fit, adjoint, op)


def eigenmode(point: SpectralPoint, profile: ShearProfile, n: int = 1200, grid: col.Grid | None = None) -> Eigenmode:
    """Stream function and vorticity of the eigenmode at ``point`` with ``max |psi| = 1``."""
    return _mode(profile, point, False, n, grid)


def adjoint_eigenmode(point: SpectralPoint, profile: ShearProfile, n: int = 1200,
                      grid: col.Grid | None = None) -> Eigenmode:
    """Adjoint eigenmode for the velocity pairing.

    The returned ``psi`` solves ``L((U - conj c) psi) - U'' psi + (nu / (i alpha)) L^2 psi = 0``
    with ``psi(0) = psi'(0) = 0``; ``c`` is reported in the direct convention.
    """
    return _mode(profile, point, True, n, grid)


def orr_residual(mode: Eigenmode) -> float:
    """Componentwise relative residual of the discrete Orr-Sommerfeld rows on the mode."""
    psi = np.conj(mode.psi) if mode.adjoint else mode.psi
    return mode.operator.backward_error(psi, mode.c)


def pairing(grid: col.Grid, phi1: np.ndarray, phi2: np.ndarray, alpha: float) -> complex:
    """``int (phi1' conj(phi2') + alpha^2 phi1 conj(phi2)) dy``, the L2 product of the two velocity fields."""
    d1 = grid.deriv(phi1)
    d2 = grid.deriv(phi2)
    return complex(grid.integrate(d1 * np.conj(d2) + alpha**2 * phi1 * np.conj(phi2)))


def normalized_pairing(direct: Eigenmode, adj: Eigenmode) -> complex:
    """Pairing divided by the velocity L2 norms of the two modes."""
    g = direct.grid
    p = pairing(g, direct.psi, adj.psi, direct.alpha)
    n1 = pairing(g, direct.psi, direct.psi, direct.alpha).real ** 0.5
    n2 = pairing(g, adj.psi, adj.psi, direct.alpha).real ** 0.5
    return p / (n1 * n2)


# --------------------------------------------------------------------------
# resolvent and spectral projections


@dataclass
class ResolventField:
    grid: col.Grid = field(repr=False)
    alpha: float
    nu: float
    c: complex
    psi: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    residual: float


def resolvent_solve(profile: ShearProfile, alpha: float, c: complex, nu: float, f, grid: col.Grid | None = None,
                    c_eig: complex | None = None, n: int = 1200) -> ResolventField:
    """Solve ``Orr_{alpha,c,nu} psi = f`` with ``psi(0) = psi'(0) = 0`` and a decaying far field.

    ``f`` is a callable of ``y`` or an array on ``grid``. If ``c_eig`` is given
    the solve is refused within ``1e-10`` of it.
    """
    if c_eig is not None and abs(c - c_eig) <= 1e-10:
        raise NearSingularSolveError("c coincides with the eigenvalue; use project_kernel_range / pseudo_inverse_solve")
    grid = grid or col.grid_for(profile, alpha, nu, c, n=n)
    op = col.orr_operator(profile, grid, alpha, nu)
    fv = f(grid.y) if callable(f) else np.asarray(f)
    rhs = np.array(fv, dtype=complex)
    rhs[list(op.bc_rows)] = 0.0
    psi = col.solve_checked(op, c, rhs)
    return ResolventField(grid, float(alpha), float(nu), complex(c), psi, rhs, op.backward_error(psi, c, rhs))


@dataclass
class KernelProjector:
    """``B1 v = [(v, v^t) / (v_NS, v^t)] v_NS`` and ``B2 = I - B1`` on stream functions."""

    direct: Eigenmode
    adjoint: Eigenmode
    denominator: complex

    def coefficient(self, psi: np.ndarray) -> complex:
        return pairing(self.direct.grid, psi, self.adjoint.psi, self.direct.alpha) / self.denominator

    def b1(self, psi: np.ndarray) -> np.ndarray:
        return self.coefficient(psi) * self.direct.psi

    def b2(self, psi: np.ndarray) -> np.ndarray:
        return psi - self.b1(psi)


def kernel_projector(point: SpectralPoint, profile: ShearProfile, n: int = 1200) -> KernelProjector:
    grid = col.grid_for(profile, point.alpha, point.nu, point.c, n=n)
    d = eigenmode(point, profile, grid=grid)
    a = adjoint_eigenmode(point, profile, grid=grid)
    den = pairing(grid, d.psi, a.psi, point.alpha)
    if abs(den) < 1e-12:
        raise DegeneratePairingError(f"direct/adjoint pairing {abs(den):.2e} vanishes")
    return KernelProjector(d, a, den)


def project_kernel_range(v: np.ndarray, point: SpectralPoint, profile: ShearProfile,
                         projector: KernelProjector | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(B1 v, B2 v)`` for a stream function ``v`` sampled on the mode grid."""
    pr = projector or kernel_projector(point, profile)
    b1 = pr.b1(np.asarray(v, dtype=complex))
    return b1, np.asarray(v, dtype=complex) - b1


def pseudo_inverse_solve(projector: KernelProjector, f: np.ndarray) -> np.ndarray:
    """Solve ``Orr_c psi = f`` at the eigenvalue on the complement of the kernel.

    The source is first stripped of its component outside the range (the
    range is the annihilator of the transposed kernel vector), then a bordered
    system adds the constraint ``(psi, v^t) = 0``.
    """
    from scipy import sparse

    d = projector.direct
    op = d.operator
    g = d.grid
    chi = np.conj(projector.adjoint.psi)  # transposed kernel vector
    rhs = np.array(f, dtype=complex)
    rhs[list(op.bc_rows)] = 0.0
    inner = op.interior()
    # range condition: int f chi dy = 0 on interior rows
    w = np.zeros(g.n, dtype=complex)
    w[inner] = chi[inner]
    ker_src = d.operator.b @ d.psi
    ker_src[list(op.bc_rows)] = 0.0
    coef = g.integrate(rhs * w) / g.integrate(ker_src * w)
    rhs_range = rhs - coef * ker_src
    # constraint row: pairing with the adjoint mode
    dchi = g.deriv(projector.adjoint.psi)
    jac = g.h0 * g.kappa * np.exp(g.kappa * g.s)
    qw = _simpson_weights(g.s) * jac
    row = (g.d[0].T @ (qw * np.conj(dchi))) + d.alpha**2 * qw * np.conj(projector.adjoint.psi)
    mat = sparse.bmat([[op.matrix(d.c), sparse.csc_matrix(ker_src.reshape(-1, 1))],
                       [sparse.csr_matrix(row.reshape(1, -1)), None]], format="csc")
    sol = splu(mat).solve(np.concatenate([rhs_range, [0.0]]))
    return sol[:-1]


def _simpson_weights(s: np.ndarray) -> np.ndarray:
    n = s.size
    h = s[1] - s[0]
    w = np.zeros(n)
    if n % 2 == 1:
        w[0:n:2] = 2.0
        w[1:n:2] = 4.0
        w[0] = w[-1] = 1.0
        return w * h / 3.0
    # even count: Simpson on the first n-1 points plus a trapezoid on the last interval
    w[: n - 1] = _simpson_weights(s[: n - 1])
    w[n - 2] += h / 2
    w[n - 1] += h / 2
    return w


# --------------------------------------------------------------------------
# weighted sup-norm templates


def _templates(y: np.ndarray, nu: float, c0: float, j: int, p: int):
    q = nu**0.25
    return q**j * np.exp(-c0 * q * y), np.exp(-c0 * y), q ** (-(j + p)) * np.exp(-c0 * y / q)


def xnorm_fit(grid: col.Grid, f: np.ndarray, n: int, p: int, c0: float, nu: float) -> float:
    """Smallest ``C`` with ``|d^j f| <= C [nu^{j/4} e^{-C0 nu^{1/4} y} + e^{-C0 y} + nu^{-(j+p)/4} e^{-C0 y / nu^{1/4}}]``, ``j <= n``."""
    best = 0.0
    for j in range(n + 1):
        dj = f if j == 0 else grid.deriv(f, j)
        bound = sum(_templates(grid.y, nu, c0, j, p))
        best = max(best, float(np.max(np.abs(dj) / bound)))
    return best


def xnorm_omega_fit(grid: col.Grid, f: np.ndarray, n: int, c0: float, nu: float) -> float:
    """Smallest ``C`` with ``|d^j f| <= C [e^{-C0 y} + nu^{-(j+1)/4} e^{-C0 y / nu^{1/4}}]``, ``j <= n``."""
    q = nu**0.25
    best = 0.0
    for j in range(n + 1):
        dj = f if j == 0 else grid.deriv(f, j)
        bound = np.exp(-c0 * grid.y) + q ** (-(j + 1)) * np.exp(-c0 * grid.y / q)
        best = max(best, float(np.max(np.abs(dj) / bound)))
    return best


def wall_shear_scale(profile: ShearProfile) -> float:
    return float(eval_profile(profile, 0.0)[1])
