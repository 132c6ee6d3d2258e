import numpy as np
import pytest
import scipy.linalg as sl

from shearstab.errors import DomainError, SingularIntegrationError
from shearstab.profile import eval_profile, exponential_profile, inflection_profile, table_profile
from shearstab.rayleigh import find_rayleigh_mode, guess_grid, rayleigh_miss, rayleigh_mode_on, rayleigh_scan
from shearstab.roots import count_zeros


def chebyshev_rayleigh_oracle(profile, alpha, n=360, scale=3.0):
    """Most unstable c of (U - c)(D^2 - a^2) psi = U'' psi by mapped Chebyshev collocation."""
    k = np.arange(n + 1)
    x = np.cos(np.pi * k / n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2
    c *= (-1) ** k
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    # y = scale (1 + x) / (1 - x) maps (-1, 1] -> [0, inf); drop x = 1 (psi = 0 at infinity)
    xi = x[1:]
    y = scale * (1 + xi) / (1 - xi)
    dxdy = (1 - xi) ** 2 / (2 * scale)
    d2x = -(1 - xi) ** 3 / (2 * scale**2)
    d1 = d[1:, 1:]
    dd = np.diag(dxdy**2) @ (d1 @ d1) + np.diag(d2x) @ d1
    u, _, u2 = eval_profile(profile, y)
    lap = dd - alpha**2 * np.eye(n)
    a = np.diag(u) @ lap - np.diag(u2)
    b = lap.copy()
    a[-1, :] = 0
    b[-1, :] = 0
    a[-1, -1] = 1  # psi(0) = 0
    w = sl.eigvals(a, b)
    w = w[np.isfinite(w) & (np.abs(w) < 2)]
    return w[np.argmax(w.imag)]


ORACLE_C_08 = chebyshev_rayleigh_oracle(inflection_profile(), 0.8)


def test_oracle_is_converged():
    assert abs(chebyshev_rayleigh_oracle(inflection_profile(), 0.8, n=420) - ORACLE_C_08) < 1e-8


def test_inflection_mode_matches_oracle():
    m = find_rayleigh_mode(inflection_profile(), 0.8, ORACLE_C_08 + 0.01j)
    assert m is not None and m.c.imag > 0
    assert abs(m.c - ORACLE_C_08) < 1e-4
    assert abs(rayleigh_miss(inflection_profile(), 0.8, m.c)) < 1e-10


def test_mode_satisfies_wall_condition_and_equation():
    p = inflection_profile()
    m = find_rayleigh_mode(p, 0.8, ORACLE_C_08)
    y = np.linspace(0.0, 15.0, 30001)
    psi, dpsi = rayleigh_mode_on(p, 0.8, m.c, y)
    norm = np.max(np.abs(psi))
    psi, dpsi = psi / norm, dpsi / norm
    assert abs(psi[0]) < 1e-10
    h = y[1] - y[0]
    # fourth-order derivative of psi' for psi''
    d2 = (-dpsi[4:] + 8 * dpsi[3:-1] - 8 * dpsi[1:-3] + dpsi[:-4]) / (12 * h)
    u, _, u2 = eval_profile(p, y[2:-2])
    resid = (u - m.c) * (d2 - 0.64 * psi[2:-2]) - u2 * psi[2:-2]
    assert np.max(np.abs(resid)) < 1e-8


def test_concave_profile_has_no_unstable_root():
    p = exponential_profile()
    found = [find_rayleigh_mode(p, 0.8, g, n_points=3) for g in guess_grid(p, 20)]
    assert all(m is None for m in found)


def test_linear_flow_miss_is_transported_exponential():
    y = np.linspace(0, 200, 4001)
    p = table_profile(np.column_stack([y, 0.5 * y / 200]))
    # U'' = 0: psi'' = alpha^2 psi, so the decaying seed arrives at the wall as exp(0)
    miss = rayleigh_miss(p, 0.8, 0.3 + 0.1j)
    assert abs(miss - 1.0) < 1e-8


def test_miss_conjugation():
    p = inflection_profile()
    for c in (0.3 + 0.1j, 0.6 + 0.02j, 0.45 + 0.3j):
        assert abs(rayleigh_miss(p, 0.8, np.conj(c)) - np.conj(rayleigh_miss(p, 0.8, c))) < 1e-12 * max(
            1, abs(rayleigh_miss(p, 0.8, c)))


def test_real_phase_speed_is_singular():
    with pytest.raises(SingularIntegrationError):
        rayleigh_miss(inflection_profile(), 0.8, 0.5 + 0j)


def test_guess_in_lower_half_plane_is_rejected():
    with pytest.raises(DomainError):
        find_rayleigh_mode(inflection_profile(), 0.8, 0.5 - 0.1j)


def test_root_converges_with_tolerance():
    p = inflection_profile()
    c1 = find_rayleigh_mode(p, 0.8, ORACLE_C_08, rtol=1e-9).c
    c2 = find_rayleigh_mode(p, 0.8, ORACLE_C_08, rtol=1e-12).c
    assert abs(c1 - c2) < 1e-6


def test_winding_count_equals_roots_found():
    p = inflection_profile()
    f = np.vectorize(lambda c: rayleigh_miss(p, 0.8, c))
    n = count_zeros(f, 0.05 + 0.005j, 0.95 + 0.45j, n=400)
    roots = {round(m.c.real, 6) + 1j * round(m.c.imag, 6) for g in guess_grid(p, 6)
             if (m := find_rayleigh_mode(p, 0.8, g, n_points=3)) is not None
             and 0.05 < m.c.real < 0.95 and 0.005 < m.c.imag < 0.45}
    assert n == len(roots) == 1


def test_scan_rows():
    rows = rayleigh_scan(inflection_profile(), [0.6, 0.8])
    assert [r[0] for r in rows] == [0.6, 0.8]
    assert all(r[3] and r[2] > 0 for r in rows)
