import math

import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, settings, strategies as st

from shearstab import collocation as col
from shearstab.dispersion import DispersionFunction, os_dispersion
from shearstab.errors import NearSingularSolveError
from shearstab.orrsolver import (adjoint_eigenmode, eigenmode, find_eigenvalue, kernel_projector,
                                 most_unstable, neutral_curves, orr_residual, pairing,
                                 project_kernel_range, resolvent_solve, unstable_band, xnorm_fit,
                                 xnorm_omega_fit)
from shearstab.profile import eval_profile, exponential_profile
from shearstab.roots import count_zeros, muller

P = exponential_profile()
NU = 1e-6
ALPHA = 2.7 * NU**0.25


@pytest.fixture(scope="module")
def point():
    return find_eigenvalue(P, ALPHA, NU)


@pytest.fixture(scope="module")
def modes(point):
    d = eigenmode(point, P)
    return d, adjoint_eigenmode(point, P, grid=d.grid)


@pytest.fixture(scope="module")
def band():
    return unstable_band(P, 1e-5)


def chebyshev_orr_oracle(profile, alpha, nu, c_near, n=160, scale=2.0):
    """Orr-Sommerfeld eigenvalue nearest ``c_near`` by mapped Chebyshev collocation (clamped wall, decay at infinity)."""
    k = np.arange(n + 1)
    x = np.cos(np.pi * k / n)
    w = np.ones(n + 1)
    w[0] = w[-1] = 2
    w *= (-1) ** k
    d = np.outer(w, 1 / w) / (x[:, None] - x[None, :] + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    # y = scale (1 + x) / (1 - x); derivatives by the chain rule on the full node set
    xi = x[1:]
    y = scale * (1 + xi) / (1 - xi)
    g1 = (1 - xi) ** 2 / (2 * scale)
    dy = np.diag(g1) @ d[1:, 1:]
    d2, d4 = dy @ dy, dy @ dy @ dy @ dy
    u, _, u2 = eval_profile(profile, y)
    eye = np.eye(n)
    lap = d2 - alpha**2 * eye
    a = np.diag(u) @ lap - np.diag(u2) - nu / (1j * alpha) * (d4 - 2 * alpha**2 * d2 + alpha**4 * eye)
    b = lap.copy()
    # wall rows: psi(0) = 0, psi'(0) = 0 (y = 0 is the last node)
    a[-1], b[-1] = 0, 0
    a[-1, -1] = 1
    a[-2], b[-2] = dy[-1], 0
    # far field: d psi / dx = 0 at x = 1 (psi = 0 there through the dropped node)
    a[0], b[0] = d[0, 1:], 0
    ev = sl.eigvals(a, b)
    ev = ev[np.isfinite(ev)]
    return ev[np.argmin(np.abs(ev - c_near))]


# ---------------------------------------------------------------- dispersion


def test_dispersion_conjugation(point):
    for c in (point.c * 1.3, 0.1 + 0.05j, 0.2 + 0.2j):
        d1 = os_dispersion(P, ALPHA, c, NU)
        d2 = os_dispersion(P, -ALPHA, np.conj(c), NU)
        assert abs(d2 - np.conj(d1)) <= 1e-12 * abs(d1)


def test_dispersion_is_analytic(point):
    disp = DispersionFunction(P, ALPHA, NU)
    for c0 in (point.c * 1.3, point.c + 0.01j, 0.12 + 0.03j):
        h = 1e-6 * abs(c0)
        dx = (disp(c0 + h) - disp(c0 - h)) / (2 * h)
        dy = (disp(c0 + 1j * h) - disp(c0 - 1j * h)) / (2 * h)
        assert abs(0.5 * (dx + 1j * dy)) / abs(dx) < 1e-6


def test_winding_zero_far_above_unstable_disk():
    disp = DispersionFunction(P, ALPHA, NU)
    assert count_zeros(np.vectorize(disp), -0.5 + 0.55j, 0.5 + 0.95j, n=400) == 0


def test_winding_one_around_eigenvalue(point):
    disp = DispersionFunction(P, ALPHA, NU)
    r = 0.5 * point.c.imag
    assert count_zeros(np.vectorize(disp), point.c - r * (1 + 1j), point.c + r * (1 + 1j), n=400) == 1


# ---------------------------------------------------------------- eigenvalues


def test_eigenvalue_matches_chebyshev_oracle():
    nu, alpha = 1e-3, 0.5
    # D^4 rounding grows like n^8, so the oracle is only self-consistent to ~1e-6
    guess = chebyshev_orr_oracle(P, alpha, nu, 0.3)
    assert abs(chebyshev_orr_oracle(P, alpha, nu, guess, n=120) - guess) < 1e-6
    pt = find_eigenvalue(P, alpha, nu, guess)
    assert pt is not None and abs(pt.c - guess) < 1e-6


def test_lambda_definition_and_rescaling(point):
    assert point.lam == -1j * point.alpha * point.c
    assert point.alpha_tilde == pytest.approx(2.7, rel=1e-14)
    assert point.lambda_tilde == point.lam / NU**0.5


def test_conjugate_wavenumber_gives_conjugate_rate(point):
    neg = find_eigenvalue(P, -ALPHA, NU, np.conj(point.c))
    assert abs(neg.lam - np.conj(point.lam)) <= 1e-8 * abs(point.lam)


def test_phase_speed_scales_like_quarter_power():
    nus = [1e-4, 1e-5, 1e-6, 1e-7]
    cs = [find_eigenvalue(P, 2.7 * v**0.25, v).c for v in nus]
    slope = np.polyfit(np.log(nus), np.log(np.abs(cs)), 1)[0]
    assert abs(slope - 0.25) <= 0.03, f"slope {slope:.4f}"


def test_sign_scan_against_band(band):
    tr = band.tracker
    for a in np.geomspace(band.alpha_minus, band.alpha_plus, 7)[1:-1]:
        assert tr.at(float(a)).c.imag > 0
    assert tr.at(band.alpha_minus * 0.97).c.imag < 0
    assert tr.at(band.alpha_plus * 1.03).c.imag < 0


def test_most_unstable_is_interior(band):
    pt = most_unstable(P, 1e-5, band=band)
    assert band.alpha_minus < pt.alpha < band.alpha_plus
    assert pt.lam.real > 0
    for edge in (band.alpha_minus, band.alpha_plus):
        assert abs(band.tracker.at(edge).lam.real) < 1e-8 < pt.lam.real


def test_continuation_is_lipschitz(band):
    delta = 1e-3
    ks = []
    for a in np.geomspace(band.alpha_minus, band.alpha_plus, 6):
        a = float(a)
        ks.append(abs(band.tracker.at(a + delta).c - band.tracker.at(a).c) / delta)
    assert max(ks) < 5.0


def test_guess_outside_disk_is_rejected():
    with pytest.raises(Exception):
        find_eigenvalue(P, ALPHA, NU, 1.5 + 0.1j)


def test_muller_polynomial_roots():
    coeffs = [1, -2, 3, -4, 5]
    roots = np.roots(coeffs)
    for r in roots:
        res = muller(lambda z: np.polyval(coeffs, z), r + 0.05 + 0.05j)
        assert res.converged and abs(res.root - r) < 1e-10


def test_count_zeros_polynomial():
    f = lambda z: z**3 - 1
    assert count_zeros(f, -2 - 2j, 2 + 2j) == 3
    assert count_zeros(f, 0.5 - 0.5j, 1.5 + 0.5j) == 1
    assert count_zeros(f, 3 + 3j, 4 + 4j) == 0


def test_neutral_curve_ordering_and_monotonicity():
    nc = neutral_curves(P, [1e-5, 1e-6, 1e-7])
    rows = sorted(nc.samples)
    assert all(lo < hi for _, lo, hi in rows)
    lows = [lo for _, lo, _ in rows]
    assert all(np.diff(lows) > 0)  # alpha_- shrinks as nu shrinks


# ---------------------------------------------------------------- modes


def test_mode_boundary_values_and_normalization(modes):
    d, _ = modes
    assert abs(d.psi[0]) < 1e-8 and abs(d.dpsi()[0]) < 1e-8
    assert np.max(np.abs(d.psi)) == pytest.approx(1.0, abs=1e-15)
    lap = d.grid.deriv(d.psi, 2) - ALPHA**2 * d.psi
    assert np.array_equal(d.omega, -lap)


def test_mode_residuals(modes):
    d, a = modes
    assert orr_residual(d) < 1e-7
    assert orr_residual(a) < 1e-7


def test_adjoint_eigenvalue(point, modes):
    _, a = modes
    assert abs(a.c - point.c) < 1e-7


def test_vorticity_has_no_outer_component(modes):
    d, _ = modes
    amps = np.array(d.scale_fit.omega_amplitudes)
    assert amps[0] < 1e-3 * amps.max()


def test_xnorm_uniform_over_viscosity():
    consts = []
    for v in (1e-5, 1e-6, 1e-7):
        m = eigenmode(find_eigenvalue(P, 2.7 * v**0.25, v), P)
        consts.append(xnorm_fit(m.grid, m.psi, 0, -1, 0.5, v))
    assert all(np.isfinite(consts)) and max(consts) / min(consts) < 1.5


# ---------------------------------------------------------------- norm templates


@pytest.mark.parametrize("nu", [1e-4, 1e-6, 1e-8])
def test_xnorm_of_full_template_is_one(nu):
    g = col.grid_for(P, 1.0, nu, n=1200)
    q, c0 = nu**0.25, 0.7
    for p in (0, 1, -1):
        f = np.exp(-c0 * q * g.y) + np.exp(-c0 * g.y) + q ** (-p) * np.exp(-c0 * g.y / q)
        assert xnorm_fit(g, f, 0, p, c0, nu) == pytest.approx(1.0, rel=1e-14)
    om = np.exp(-c0 * g.y) + q**-1 * np.exp(-c0 * g.y / q)
    assert xnorm_omega_fit(g, om, 0, c0, nu) == pytest.approx(1.0, rel=1e-14)


def test_xnorm_single_templates_are_dominated():
    nu = 1e-8
    g = col.grid_for(P, 1.0, nu, n=1200)
    q, c0 = nu**0.25, 0.7
    middle = xnorm_fit(g, np.exp(-c0 * g.y), 0, 0, c0, nu)
    critical = xnorm_fit(g, np.exp(-c0 * g.y / q) / q, 0, 1, c0, nu)
    assert 1 / 3 <= middle < 1
    assert 0.98 < critical <= 1


# ---------------------------------------------------------------- resolvent and projectors


def test_resolvent_residual(point):
    r = resolvent_solve(P, ALPHA, point.c + 0.01, NU, lambda y: np.exp(-y))
    assert r.residual < 1e-8
    assert abs(r.psi[0]) < 1e-8 * np.max(np.abs(r.psi))


def test_resolvent_refuses_eigenvalue(point):
    with pytest.raises(NearSingularSolveError):
        resolvent_solve(P, ALPHA, point.c, NU, lambda y: np.exp(-y), c_eig=point.c)


@pytest.fixture(scope="module")
def projector(point):
    return kernel_projector(point, P)


def _random_field(grid, rng):
    y = grid.y
    k = rng.uniform(0.2, 3.0, 3)
    a = rng.normal(size=3) + 1j * rng.normal(size=3)
    return sum(ai * y**2 * np.exp(-ki * y) for ai, ki in zip(a, k))


def _rel(u, v, grid):
    return np.max(np.abs(u - v)) / max(np.max(np.abs(v)), 1e-300)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projector_identities(projector, seed):
    g = projector.direct.grid
    v = _random_field(g, np.random.default_rng(seed))
    b1, b2 = project_kernel_range(v, None, P, projector=projector)
    assert np.max(np.abs(b1 + b2 - v)) <= 1e-14 * np.max(np.abs(v))
    assert _rel(projector.b1(b1), b1, g) < 1e-8
    vt = projector.adjoint.psi
    num = abs(pairing(g, b2, vt, ALPHA))
    den = math.sqrt(pairing(g, b2, b2, ALPHA).real * pairing(g, vt, vt, ALPHA).real)
    assert num < 1e-8 * max(den, 1e-300) or np.max(np.abs(b2)) < 1e-12


def test_projector_fixes_kernel(projector):
    d = projector.direct.psi
    assert _rel(projector.b1(d), d, projector.direct.grid) < 1e-8
