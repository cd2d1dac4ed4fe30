import math

import mpmath
import numpy as np
import pytest

from api.services.errors import DomainError
from api.services.special_functions_service import (
    beta,
    gamma,
    log_beta,
    log_gamma,
    log_gamma_array,
    reg_inc_beta,
    reg_inc_beta_array,
    stirling_remainder,
    stirling_remainder_ok,
)

mpmath.mp.dps = 40


def test_exact_values():
    assert gamma(5) == pytest.approx(24.0, rel=1e-12)
    assert beta(1, 1) == pytest.approx(1.0, rel=1e-12)
    assert beta(0.5, 0.5) == pytest.approx(math.pi, rel=1e-12)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_beta_matches_gamma_ratio_on_grid():
    u_values = np.linspace(0.1, 12.0, 5)
    v_values = np.linspace(0.3, 9.0, 4)
    for u in u_values:
        for v in v_values:
            expected = mpmath.gamma(u) * mpmath.gamma(v) / mpmath.gamma(u + v)
            assert beta(u, v) == pytest.approx(float(expected), rel=1e-11)


@pytest.mark.parametrize('x', [1e-3, 0.2, 0.49, 0.5, 1.0, 2.5, 10.0, 55.5, 170.0, 1e4])
def test_log_gamma_against_mpmath(x):
    assert log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-13, abs=1e-13)


def test_log_gamma_array_matches_scalar():
    x = np.array([0.05, 0.7, 3.0, 42.0])
    np.testing.assert_allclose(log_gamma_array(x), [log_gamma(v) for v in x], rtol=1e-15)


def test_gamma_overflow_returns_inf():
    assert gamma(200.0) == math.inf
    assert math.isfinite(log_gamma(200.0))


def test_log_beta_for_large_arguments():
    expected = mpmath.log(mpmath.beta(300, 400))
    assert log_beta(300, 400) == pytest.approx(float(expected), rel=1e-12)


@pytest.mark.parametrize('bad', [0.0, -1.0, float('nan'), float('inf'), 'x'])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        gamma(bad)
    with pytest.raises(DomainError):
        beta(1.0, bad)


@pytest.mark.parametrize('x, u, v', [
    (0.1, 0.5, 0.5),
    (0.3, 2.0, 3.0),
    (0.9, 0.5, 1.5),
    (0.5, 7.0, 0.8),
    (0.02, 1.25, 0.75),
    (0.999, 3.5, 0.25),
])
def test_regularized_incomplete_beta(x, u, v):
    expected = mpmath.betainc(u, v, 0, x, regularized=True)
    assert reg_inc_beta(x, u, v) == pytest.approx(float(expected), rel=1e-10, abs=1e-14)


def test_regularized_incomplete_beta_endpoints():
    assert reg_inc_beta(0.0, 2.0, 3.0) == 0.0
    assert reg_inc_beta(1.0, 2.0, 3.0) == 1.0
    values = reg_inc_beta_array(np.array([0.0, 0.5, 1.0]), 1.0, 1.0)
    np.testing.assert_allclose(values, [0.0, 0.5, 1.0], atol=1e-14)
    with pytest.raises(DomainError):
        reg_inc_beta(1.5, 1.0, 1.0)


def test_stirling_bound_on_log_grid():
    for x in np.geomspace(0.05, 150.0, 30):
        assert stirling_remainder_ok(x)


def test_stirling_remainder_values():
    remainder, bound = stirling_remainder(10.0)
    leading = math.sqrt(2 * math.pi) * 10.0 ** 9.5 * math.exp(-10.0)
    assert remainder == pytest.approx(math.gamma(10.0) / leading - 1.0, rel=1e-10)
    assert bound == pytest.approx(math.expm1(1.0 / 120.0), rel=1e-15)
    assert 0.0 < remainder < bound


@pytest.mark.parametrize('u, v', [(0.3, 2.5), (1.0, 7.0), (4.25, 0.6), (12.0, 30.0)])
def test_beta_symmetry_and_recurrence(u, v):
    assert beta(u, v) == pytest.approx(beta(v, u), rel=1e-14)
    assert beta(u + 1.0, v) == pytest.approx(beta(u, v) * u / (u + v), rel=1e-12)


def test_gamma_recurrence():
    for x in np.linspace(0.1, 100.0, 40):
        assert gamma(x + 1.0) == pytest.approx(x * gamma(x), rel=1e-12)


@pytest.mark.parametrize('x, u, v', [
    (0.1, 0.5, 0.5),
    (0.3, 2.0, 3.0),
    (0.75, 7.0, 0.8),
    (0.02, 1.25, 0.75),
])
def test_regularized_incomplete_beta_reflection(x, u, v):
    assert reg_inc_beta(x, u, v) + reg_inc_beta(1.0 - x, v, u) == pytest.approx(1.0, abs=1e-12)


def test_regularized_incomplete_beta_is_monotone_in_x():
    values = reg_inc_beta_array(np.linspace(0.0, 1.0, 101), 2.5, 0.7)
    assert np.all(np.diff(values) >= 0.0)
