import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shearstab.amplitude import (SWITCH, Escapes, LandauModel, Saturates, Stable, classify_saturation,
                                 first_passage_time, instability_time, integrate_landau, resonant_kernel,
                                 saturation_amplitude)
from shearstab.errors import DomainError, InfeasibleError


def radius_exact(a, b, r0, t):
    """|phi(t)| for r' = a r + b r^3: w = r^-2 solves w' = -2a w - 2b."""
    w = (r0**-2 + b / a) * np.exp(-2 * a * t) - b / a
    return w**-0.5


def passage_exact(a, b, r0, level=1.0):
    return math.log((r0**-2 + b / a) / (level**-2 + b / a)) / (2 * a)


def test_linear_case_is_exponential():
    m = LandauModel(0.3 + 0.7j, 0.0, 0.01 + 0.02j)
    tr = integrate_landau(m, 20.0, 0.05)
    exact = abs(m.phi0) * np.exp(0.3 * tr.t)
    assert np.max(np.abs(tr.amplitude / exact - 1)) < 1e-8


def test_trajectory_matches_closed_form_radius():
    m = LandauModel(0.2 + 1.0j, -0.5 + 2.0j, 1e-3)
    tr = integrate_landau(m, 150.0, 0.05)
    assert np.max(np.abs(tr.amplitude / radius_exact(0.2, -0.5, 1e-3, tr.t) - 1)) < 1e-9


def test_energy_identity_along_trajectory():
    lam, a = 0.2 + 1.0j, -0.5 + 2.0j
    tr = integrate_landau(LandauModel(lam, a, 1e-2), 60.0, 0.01)
    e = tr.amplitude**2
    h = 0.01
    de = (-e[4:] + 8 * e[3:-1] - 8 * e[1:-3] + e[:-4]) / (12 * h)
    pred = 2 * lam.real * e[2:-2] + 2 * a.real * e[2:-2] ** 2
    assert np.max(np.abs(de - pred)) < 1e-7 * np.max(np.abs(pred))


def test_saturation_fixed_point():
    m = LandauModel(0.04, -2.5, 1e-4)
    assert saturation_amplitude(m) == pytest.approx(math.sqrt(0.04 / 2.5), rel=1e-3)


def test_saturation_slope_in_viscosity():
    nus = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
    amps = [saturation_amplitude(LandauModel(v**0.5, -1.0, 1e-3 * v**0.25)) for v in nus]
    assert np.polyfit(np.log(nus), np.log(amps), 1)[0] == pytest.approx(0.25, abs=0.01)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0.05, 1.0), st.floats(-2.0, 2.0))
def test_phase_equivariance(theta, re_lam, im_a):
    base = LandauModel(re_lam + 0.5j, -1.0 + 1j * im_a, 1e-2 + 0.003j)
    rot = LandauModel(base.lam, base.A, base.phi0 * np.exp(1j * theta))
    T, dt = 10 / re_lam, 0.05 / abs(base.lam)
    t1 = integrate_landau(base, T, dt)
    t2 = integrate_landau(rot, T, dt)
    assert np.max(np.abs(t2.phi - np.exp(1j * theta) * t1.phi)) <= 1e-10 * np.max(np.abs(t1.phi))


def test_blow_up_is_truncated():
    tr = integrate_landau(LandauModel(0.1, 1.0, 0.05), 1e3, 0.5)
    assert tr.blew_up
    assert tr.amplitude[-1] <= 10.0
    assert tr.t[-1] < passage_exact(0.1, 1.0, 0.05, 10.0) + 1e-9
    assert tr.quintic_doubt_time == pytest.approx(passage_exact(0.1, 1.0, 0.05, 0.3), rel=1e-8)


def test_sampling_step_guard():
    with pytest.raises(DomainError):
        integrate_landau(LandauModel(1.0, -1.0, 0.1), 10.0, 0.2)
    with pytest.raises(DomainError):
        LandauModel(1.0, -1.0, 0.0)


def test_classify_saturating():
    nu = 1e-6
    res = classify_saturation(LandauModel(nu**0.5, -1.0, 1e-5))
    assert isinstance(res, Saturates)
    assert res.amplitude == pytest.approx(10**-1.5, rel=1e-14)


def test_classify_escape_against_closed_form():
    nu, N = 1e-6, 3
    res = classify_saturation(LandauModel(nu**0.5, 1.0, nu**N))
    assert isinstance(res, Escapes)
    assert res.time_to_o1 == pytest.approx(passage_exact(nu**0.5, 1.0, nu**N), rel=1e-8)
    scale = nu**-0.5 * N * math.log(1 / nu)
    assert abs(res.time_to_o1 / scale - 1) <= 0.10


def test_classify_linear_and_stable():
    res = classify_saturation(LandauModel(0.02, 0.0, 1e-4))
    assert res == Escapes(math.log(1e4) / 0.02)
    assert isinstance(classify_saturation(LandauModel(-0.1, -1.0, 0.1)), Stable)


def test_first_passage_never_reached():
    assert first_passage_time(LandauModel(0.1, -1.0, 1e-3), 1.0) == math.inf


# ---------------------------------------------------------------- instability time


def test_instability_time_solves_defining_equation():
    for nu in (1e-4, 1e-6, 1e-8):
        for N, theta, lr in ((3.0, 0.0, 1.0), (1.0, 0.1, 0.4), (0.5, 0.0, 2.0)):
            r = instability_time(nu, N, theta, lr)
            s = nu**0.5 * r.T
            lhs = mp.mpf(nu) ** N * mp.e ** (lr * s) / mp.sqrt(s)
            assert float(abs(lhs / mp.mpf(nu) ** (0.25 + theta) - 1)) < 1e-10
            assert r.residual < 1e-10


def test_instability_time_increases_with_seed_depth():
    times = [instability_time(1e-6, N, 0.0, 1.0).T for N in (0.5, 1.0, 2.0, 3.0, 5.0)]
    assert all(np.diff(times) > 0)


def test_instability_time_limit_ratio_converges():
    devs = [abs(r.ratio / r.limit_ratio - 1) for r in (instability_time(v, 3.0, 0.0, 1.0)
                                                       for v in (1e-4, 1e-6, 1e-8, 1e-12))]
    assert all(np.diff(devs) < 0)
    assert devs[2] <= 0.05


def test_instability_time_errors():
    with pytest.raises(DomainError):
        instability_time(1e-6, 0.2, 0.0, 1.0)
    with pytest.raises(InfeasibleError):
        instability_time(0.5, 0.26, 0.0, 10.0)


# ---------------------------------------------------------------- resonant kernel


def test_kernel_confluent_limit():
    for eps, t in ((0.3 + 0.2j, 2.0), (-1.0, 5.0), (2j, 0.7)):
        assert resonant_kernel(eps, eps, t) == t * np.exp(eps * t)


def test_kernel_direct_branch():
    lam, eps, t = 0.5 + 1j, -0.2 + 0.1j, 3.0
    assert resonant_kernel(lam, eps, t) == (np.exp(lam * t) - np.exp(eps * t)) / (lam - eps)


def test_kernel_high_precision_oracle():
    eps = 0.01 + 0.02j
    lam = eps + 1e-9
    t = 1e3
    mp.mp.dps = 50
    ml, me = mp.mpc(lam), mp.mpc(eps)
    ref = complex((mp.exp(ml * t) - mp.exp(me * t)) / (ml - me))
    got = resonant_kernel(lam, eps, t)
    assert abs(got - ref) <= 1e-12 * abs(ref)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(0.0, 2 * math.pi), st.floats(0.5, 50.0))
def test_kernel_continuous_across_switch(re_eps, im_eps, angle, t):
    eps = complex(re_eps, im_eps)
    d = SWITCH / t * np.exp(1j * angle)
    below = resonant_kernel(eps + d * (1 - 1e-12), eps, t)
    above = resonant_kernel(eps + d * (1 + 1e-12), eps, t)
    assert abs(above - below) <= 1e-12 * abs(below)


def test_kernel_rejects_negative_time():
    with pytest.raises(DomainError):
        resonant_kernel(1.0, 0.5, -1.0)
