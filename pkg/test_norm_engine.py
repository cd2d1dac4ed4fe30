import math

import numpy as np
import pytest

from api.services.errors import DomainError
from api.services.norm_engine_service import (
    NormEstimate,
    SweepPoint,
    extrapolate,
    power_iteration,
    rayleigh_quotient,
    spectral_oracle_norm,
    truncation_sweep,
)
from api.services.operator_service import (
    OperatorParams,
    StandardKernel,
    WeightedSequence,
    extremal_sequence,
    truncated_operator,
)

EXTRAPOLATED_LIMIT_FLOOR = 2.5

ORACLE_PARAMS = [
    OperatorParams(p=2.0),
    OperatorParams(p=2.0, mu=0.5, nu=0.5),
    OperatorParams(p=2.0, alpha=0.5),
    OperatorParams(p=2.0, beta=0.7, mu=0.3, nu=-0.3, gamma=1.3),
]


def dense_norm(params, N):
    size = N - 1
    return float(np.linalg.norm(truncated_operator(StandardKernel(params), size, size, mode='dense').to_dense(), 2))


@pytest.mark.parametrize('params', ORACLE_PARAMS)
@pytest.mark.parametrize('N', [10, 50, 100])
def test_power_iteration_matches_dense_spectral_norm(params, N):
    estimate = power_iteration(StandardKernel(params), N, tol=1e-13, max_iter=100_000)
    assert estimate.kind == 'power_iteration'
    assert estimate.truncation_N == N
    assert estimate.value == pytest.approx(dense_norm(params, N), rel=1e-8)


@pytest.mark.parametrize('params', ORACLE_PARAMS)
def test_spectral_oracle_matches_numpy(params):
    estimate = spectral_oracle_norm(StandardKernel(params), 60)
    assert estimate.kind == 'spectral_oracle'
    assert estimate.value == pytest.approx(dense_norm(params, 60), rel=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize('params', ORACLE_PARAMS)
def test_power_iteration_matches_oracle_at_500(params):
    spec = StandardKernel(params)
    power = power_iteration(spec, 500, tol=1e-13, max_iter=100_000).value
    oracle = spectral_oracle_norm(spec, 500).value
    assert abs(power - oracle) / oracle <= 1e-8


def test_power_iteration_one_by_one():
    spec = StandardKernel(OperatorParams(p=2.0))
    estimate = power_iteration(spec, 2)
    assert estimate.value == pytest.approx(1.0 / (2.0 * math.log(4.0)), rel=1e-14)
    assert estimate.residual == 0.0


def test_power_iteration_for_p_three_is_a_lower_bound():
    params = OperatorParams(p=3.0)
    spec = StandardKernel(params)
    closed_form = math.pi / math.sin(math.pi / 3.0)
    estimate = power_iteration(spec, 200)
    ones = rayleigh_quotient(spec, np.ones(199), 199)
    assert ones.value < estimate.value <= closed_form


def test_power_iteration_argument_checks():
    spec = StandardKernel(OperatorParams(p=2.0))
    with pytest.raises(DomainError):
        power_iteration(spec, 1)
    with pytest.raises(DomainError):
        power_iteration(spec, 10, tol=0.0)
    with pytest.raises(DomainError):
        power_iteration(spec, 10, max_iter=0)


def test_spectral_oracle_needs_p_two():
    with pytest.raises(DomainError):
        spectral_oracle_norm(StandardKernel(OperatorParams(p=3.0)), 20)
    with pytest.raises(DomainError):
        spectral_oracle_norm(StandardKernel(OperatorParams(p=2.0)), 5000)


def test_rayleigh_quotients_stay_below_the_section_norm():
    params = OperatorParams(p=2.0)
    spec = StandardKernel(params)
    N = 400
    section = dense_norm(params, N)
    for eps in (0.2, 0.1, 0.05):
        estimate = rayleigh_quotient(spec, extremal_sequence(params, eps, N), N - 1)
        assert estimate.kind == 'rayleigh_lower_bound'
        assert 0.0 < estimate.value <= section + 1e-9


def test_rayleigh_quotient_rejects_bad_sequences():
    spec = StandardKernel(OperatorParams(p=2.0))
    with pytest.raises(DomainError):
        rayleigh_quotient(spec, np.zeros(5), 5)
    with pytest.raises(DomainError):
        rayleigh_quotient(spec, WeightedSequence([1.0, -1.0]), 2)


def test_truncation_sweep_is_nondecreasing():
    spec = StandardKernel(OperatorParams(p=2.0))
    points = truncation_sweep(spec, [20, 80, 320])
    values = [point.estimate.value for point in points]
    assert [point.N for point in points] == [20, 80, 320]
    assert values[0] < values[1] < values[2] < math.pi
    assert points[0].as_dict()['N'] == 20


@pytest.mark.parametrize('schedule', [[], [100, 50], [100, 100], [2, 10]])
def test_truncation_sweep_rejects_bad_schedules(schedule):
    with pytest.raises(DomainError):
        truncation_sweep(StandardKernel(OperatorParams(p=2.0)), schedule)


def synthetic_points(values, ns):
    return [SweepPoint(N=N, estimate=NormEstimate(value=v, truncation_N=N, iterations=1,
                                                  residual=0.0, kind='power_iteration'))
            for N, v in zip(ns, values)]


def test_extrapolate_recovers_the_limit_of_an_exact_model():
    ns = [100, 1000, 10_000, 30_000, 100_000]
    values = [math.pi - 0.8 / math.log(N) for N in ns]
    result = extrapolate(synthetic_points(values, ns))
    assert result.reliable
    assert result.limit == pytest.approx(math.pi, abs=1e-8)
    assert result.kappa == pytest.approx(1.0, abs=1e-6)


def test_extrapolate_falls_back_on_a_poor_fit():
    ns = [100, 200, 400, 800, 1600]
    result = extrapolate(synthetic_points([1.0, 3.0, 1.0, 3.0, 1.0], ns))
    assert not result.reliable
    assert result.limit == 1.0


def test_extrapolate_needs_four_distinct_points():
    with pytest.raises(DomainError):
        extrapolate(synthetic_points([1.0, 2.0, 3.0], [10, 20, 30]))
    with pytest.raises(DomainError):
        extrapolate(synthetic_points([1.0, 2.0, 3.0, 4.0], [10, 20, 20, 30]))


@pytest.mark.slow
def test_classical_sweep_converges_towards_pi():
    spec = StandardKernel(OperatorParams(p=2.0))
    points = truncation_sweep(spec, [100, 1000, 10_000, 30_000])
    values = [point.estimate.value for point in points]
    assert all(0.0 < value <= math.pi + 1e-9 for value in values)
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert values[-1] >= 1.05 * values[0]
    limit = extrapolate(points).limit
    assert EXTRAPOLATED_LIMIT_FLOOR <= limit <= math.pi + 1e-6


@pytest.mark.parametrize('scale', [1e-6, 0.37, 250.0])
def test_rayleigh_quotient_is_scale_invariant(scale):
    params = OperatorParams(p=3.0, alpha=0.5, mu=0.2, nu=-0.1)
    spec = StandardKernel(params)
    a = extremal_sequence(params, 0.1, 300)
    base = rayleigh_quotient(spec, a, 250).value
    assert rayleigh_quotient(spec, a.scaled(scale), 250).value == pytest.approx(base, rel=1e-12)


def test_extrapolate_of_a_constant_sequence():
    ns = [100, 1000, 10_000, 30_000]
    result = extrapolate(synthetic_points([1.25] * 4, ns))
    assert result.reliable
    assert result.limit == 1.25


@pytest.mark.slow
def test_extremal_rayleigh_quotients_rise_as_eps_shrinks():
    params = OperatorParams(p=2.0)
    spec = StandardKernel(params)
    N = 100_000
    values = [rayleigh_quotient(spec, extremal_sequence(params, eps, N), N - 1).value
              for eps in (0.2, 0.1, 0.05)]
    assert 0.0 < values[0] < values[1] < values[2] <= math.pi + 1e-9
