import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import erfcx

from shearstab.errors import DomainError, RootNotFoundError, UnsupportedEvaluationError
from shearstab.profile import (critical_layer, erf_profile, eval_profile, evolve_heat, exponential_profile,
                               inflection_profile, profile_from_config, table_profile)


def erf_maclaurin(x, terms=60):
    s = sum((-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1)) for n in range(terms))
    return 2 / math.sqrt(math.pi) * s


def heat_exact_exp(y, tau):
    """Odd-extension solution of U_t = U_yy from 1 - exp(-y), U(0) = 0."""
    r = 2 * np.sqrt(tau)
    a = (2 * tau - y) / r
    b = (y + 2 * tau) / r
    from scipy.special import erf, erfc
    term1 = 0.5 * np.exp(tau - y) * erfc(a)
    term2 = 0.5 * np.exp(-y * y / (4 * tau)) * erfcx(b)
    return erf(y / r) - term1 + term2


def test_exponential_profile_at_wall():
    assert eval_profile(exponential_profile(), 0.0) == (0.0, 1.0, -1.0)


def test_exponential_profile_far_field():
    u, u1, u2 = eval_profile(exponential_profile(), 40.0)
    assert abs(u - 1) < 1e-16 + math.exp(-40) and abs(u1) <= math.exp(-40) and abs(u2) <= math.exp(-40)


def test_erf_oracle_value_frozen():
    # Maclaurin oracle of erf(1), frozen
    assert erf_maclaurin(1.0) == pytest.approx(0.8427007929497149, abs=1e-15)


def test_heat_evolved_constant_matches_erf():
    # constant flow at 4 nu t = 4: U(2) = erf(1)
    p = erf_profile(1.0, 4.0)
    assert eval_profile(p, 2.0)[0] == pytest.approx(erf_maclaurin(1.0), abs=1e-14)


def test_evolve_heat_of_erf_family_stays_closed_form():
    p = evolve_heat(erf_profile(1.0, 1.0), nu=0.5, t=1.5)
    y = np.linspace(0, 5, 11)
    np.testing.assert_allclose(eval_profile(p, y)[0], [erf_maclaurin(v / 2.0) for v in y], atol=1e-13)


def test_evolve_heat_zero_time_is_identity():
    p = exponential_profile()
    assert evolve_heat(p, 1e-3, 0.0) is p


def test_evolve_heat_negative_time():
    with pytest.raises(DomainError):
        evolve_heat(exponential_profile(), 1e-3, -1.0)


def test_evolve_heat_matches_closed_form():
    p = evolve_heat(exponential_profile(), nu=1.0, t=0.01)
    y = np.linspace(0.0, 10.0, 401)
    err = np.max(np.abs(eval_profile(p, y)[0] - heat_exact_exp(y, 0.01)))
    assert err < 1e-6


def test_evolve_heat_keeps_boundary_values():
    p = evolve_heat(exponential_profile(), nu=1e-2, t=3.0)
    u0 = eval_profile(p, 0.0)[0]
    u_far = eval_profile(p, p.breaks[-1])[0]
    assert abs(u0) < 1e-14 and abs(u_far - 1.0) < 1e-12


def test_evolve_heat_semigroup():
    p = exponential_profile()
    two_step = evolve_heat(evolve_heat(p, 1.0, 0.004), 1.0, 0.006)
    one_step = evolve_heat(p, 1.0, 0.01)
    y = np.linspace(0.0, 10.0, 301)
    assert np.max(np.abs(eval_profile(two_step, y)[0] - eval_profile(one_step, y)[0])) < 1e-8


def test_table_profile_refuses_complex_input():
    y = np.linspace(0, 10, 50)
    p = table_profile(np.column_stack([y, 1 - np.exp(-y)]))
    with pytest.raises(UnsupportedEvaluationError):
        eval_profile(p, 0.5 + 0.1j)


def test_complex_evaluation_agrees_on_real_axis():
    y = np.linspace(0, 6, 25)
    for p in (exponential_profile(), erf_profile(), inflection_profile()):
        for a, b in zip(eval_profile(p, y), eval_profile(p, y.astype(complex))):
            np.testing.assert_allclose(b.real, a, atol=1e-15)
            assert np.max(np.abs(b.imag)) == 0


def test_inflection_profile_changes_curvature_sign():
    u2 = eval_profile(inflection_profile(), np.linspace(0, 6, 200))[2]
    assert u2.max() > 0 > u2.min()


def test_profile_from_config_kinds():
    assert profile_from_config({"kind": "exp"}).label == "exp"
    with pytest.raises(ValueError):
        profile_from_config({"kind": "parabola"})


def test_critical_layer_zero_speed():
    assert critical_layer(exponential_profile(), 0.0).y_c == 0


def test_critical_layer_real_closed_form():
    assert critical_layer(exponential_profile(), 0.1).y_c == pytest.approx(-math.log(0.9), abs=1e-13)


def test_critical_layer_complex_closed_form():
    c = 0.1 + 0.05j
    cl = critical_layer(exponential_profile(), c)
    assert abs(cl.y_c - (-np.log(1 - c))) < 1e-12


def test_critical_layer_on_curved_profile():
    cl = critical_layer(inflection_profile(), 0.6 + 0.05j)
    assert abs(eval_profile(inflection_profile(), cl.y_c)[0] - (0.6 + 0.05j)) < 1e-12


def test_critical_layer_rejects_fast_speed():
    with pytest.raises(DomainError):
        critical_layer(exponential_profile(), 1.2)


def test_critical_layer_reports_failure_with_last_iterate():
    with pytest.raises(RootNotFoundError) as info:
        critical_layer(exponential_profile(), 0.5 + 0.2j, max_iter=1)
    assert info.value.last is not None


@settings(max_examples=100, deadline=None)
@given(r=st.floats(0.0, 0.3), th=st.floats(-math.pi, math.pi))
def test_critical_layer_round_trip(r, th):
    c = r * np.exp(1j * th)
    cl = critical_layer(exponential_profile(), c)
    assert abs(eval_profile(exponential_profile(), cl.y_c)[0] - c) < 1e-12
