"""
l^p -> l^p norm estimates for finite sections of nonnegative kernels.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from api.services.errors import DomainError
from api.services.operator_service import (
    START_INDEX,
    StandardKernel,
    WeightedSequence,
    _lp_norm_values,
    apply_truncated,
    conjugate_exponent,
    extremal_sequence,
    lp_norm,
    truncated_operator,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
MONOTONE_SLACK = 1e-13
START_EPS = 0.1

ORACLE_MAX_N = 3000
ORACLE_TOL = 1e-12
ORACLE_MAX_ITER = 100_000

KAPPA_BOUNDS = (0.25, 4.0)
FIT_RELIABILITY = 0.10

POWER_ITERATION = 'power_iteration'
SPECTRAL_ORACLE = 'spectral_oracle'
RAYLEIGH_LOWER_BOUND = 'rayleigh_lower_bound'


@dataclass(frozen=True)
class NormEstimate:
    value: float
    truncation_N: int
    iterations: int
    residual: float
    kind: str

    def as_dict(self):
        return {'value': self.value, 'truncation_N': self.truncation_N,
                'iterations': self.iterations, 'residual': self.residual, 'kind': self.kind}


@dataclass(frozen=True)
class SweepPoint:
    N: int
    estimate: NormEstimate

    def as_dict(self):
        return {'N': self.N, **self.estimate.as_dict()}


@dataclass(frozen=True)
class Extrapolation:
    limit: float
    reliable: bool
    c: float = math.nan
    kappa: float = math.nan
    residual: float = math.nan

    def as_dict(self):
        return {'limit': self.limit, 'reliable': self.reliable, 'c': self.c,
                'kappa': self.kappa, 'fit_residual': self.residual}


def _spec_p(spec):
    return float(spec.p)


def _start_vector(spec, size, p):
    params = spec.params if isinstance(spec, StandardKernel) else None
    if params is not None and params.in_theorem_range:
        x = extremal_sequence(params, START_EPS, size + START_INDEX - 1).values.copy()
    else:
        x = np.ones(size)
    return x / _lp_norm_values(x, p)


def _check_truncation(N, tol, max_iter):
    if int(N) != N or N < START_INDEX:
        raise DomainError(f"N must be an integer >= {START_INDEX}, got {N!r}")
    if not (0.0 < tol < 1.0):
        raise DomainError(f"tol must lie in (0, 1), got {tol!r}")
    if int(max_iter) != max_iter or max_iter < 1:
        raise DomainError(f"max_iter must be an integer >= 1, got {max_iter!r}")


def power_iteration(spec, N, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, mode='auto'):
    """
    Nonlinear power iteration x <- psi_{p'}(A^T psi_p(A x)) on rows and
    columns 2..N, with psi_q(y) = y^{q-1} and ||x||_p = 1 after every step.
    For a nonnegative A the estimates ||A x_k||_p never decrease, and each
    one is a lower bound for the full operator norm.
    """
    _check_truncation(N, tol, max_iter)
    p = _spec_p(spec)
    q = conjugate_exponent(p)
    size = int(N) - START_INDEX + 1
    A = truncated_operator(spec, size, size, mode=mode)

    x = _start_vector(spec, size, p)
    previous = None
    residual = math.inf
    value = 0.0
    iterations = 0
    for iterations in range(1, int(max_iter) + 1):
        y = np.maximum(A.matvec(x), 0.0)
        value = _lp_norm_values(y, p)
        if value == 0.0:
            residual = 0.0
            break
        if previous is not None:
            if value < previous * (1.0 - MONOTONE_SLACK):
                logger.warning("power iteration decreased at step %d: %.17g -> %.17g",
                               iterations, previous, value)
            residual = abs(value - previous) / value
            if residual <= tol:
                break
        previous = value
        z = np.maximum(A.rmatvec((y / value) ** (p - 1.0)), 0.0)
        x = z ** (q - 1.0)
        norm = _lp_norm_values(x, p)
        if norm == 0.0:
            residual = 0.0
            break
        x = x / norm
        logger.debug("power iteration N=%d step %d estimate %.15g", N, iterations, value)
    else:
        logger.info("power iteration N=%d stopped at max_iter=%d with residual %.3g", N, max_iter, residual)
    if not math.isfinite(residual):
        # a single step gives no change to measure
        residual = 1.0
    return NormEstimate(value=float(value), truncation_N=int(N), iterations=iterations,
                        residual=float(residual), kind=POWER_ITERATION)


def spectral_oracle_norm(spec, N):
    """Largest singular value of the dense p = 2 truncation, by power iteration on A^T A."""
    if abs(_spec_p(spec) - 2.0) > 1e-12:
        raise DomainError("the spectral oracle only applies to p = 2")
    if int(N) != N or N < START_INDEX or N > ORACLE_MAX_N:
        raise DomainError(f"the spectral oracle needs {START_INDEX} <= N <= {ORACLE_MAX_N}, got {N!r}")
    size = int(N) - START_INDEX + 1
    dense = truncated_operator(spec, size, size, mode='dense').to_dense()
    gram = dense.T @ dense

    v = np.ones(size) / math.sqrt(size)
    eigenvalue = 0.0
    residual = math.inf
    iterations = 0
    for iterations in range(1, ORACLE_MAX_ITER + 1):
        w = gram @ v
        new_eigenvalue = float(np.linalg.norm(w))
        if new_eigenvalue == 0.0:
            eigenvalue, residual = 0.0, 0.0
            break
        v = w / new_eigenvalue
        residual = abs(new_eigenvalue - eigenvalue) / new_eigenvalue
        eigenvalue = new_eigenvalue
        if residual <= ORACLE_TOL:
            break
    else:
        logger.warning("spectral oracle N=%d hit the iteration cap, residual %.3g", N, residual)
    return NormEstimate(value=math.sqrt(eigenvalue), truncation_N=int(N), iterations=iterations,
                        residual=float(residual), kind=SPECTRAL_ORACLE)


def rayleigh_quotient(spec, a, row_count, mode='auto'):
    """||A a||_p / ||a||_p on the given rows: a lower bound for the operator norm."""
    values = a.values if isinstance(a, WeightedSequence) else np.asarray(a, dtype=float)
    if values.size == 0 or np.any(values < 0.0) or not np.any(values > 0.0):
        raise DomainError("the Rayleigh quotient needs a nonzero nonnegative sequence")
    p = _spec_p(spec)
    a = WeightedSequence(values)
    image = apply_truncated(spec, a, row_count, mode=mode)
    value = lp_norm(image, p) / lp_norm(a, p)
    return NormEstimate(value=float(value), truncation_N=int(a.last_index), iterations=1,
                        residual=0.0, kind=RAYLEIGH_LOWER_BOUND)


def truncation_sweep(spec, schedule, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    schedule = [int(N) for N in schedule]
    if not schedule:
        raise DomainError("the schedule must not be empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError(f"the schedule must be strictly increasing, got {schedule}")
    if schedule[0] < 3:
        raise DomainError(f"schedule entries must be >= 3, got {schedule[0]}")
    points = []
    for N in schedule:
        estimate = power_iteration(spec, N, tol, max_iter)
        logger.info("sweep N=%d estimate %.12g (%d iterations)", N, estimate.value, estimate.iterations)
        points.append(SweepPoint(N=N, estimate=estimate))
    return points


def _model(theta, log_n):
    L, c, kappa = theta
    return L - c * log_n ** (-kappa)


def extrapolate(points):
    """
    Fit value(N) ~ L - c (log N)^{-kappa}, kappa in [0.25, 4], and return L.
    When the fit residual exceeds 10% of the spread of the values the last
    value is returned instead and the result is flagged unreliable.
    """
    if len(points) < 4:
        raise DomainError(f"extrapolation needs at least 4 sweep points, got {len(points)}")
    ns = [point.N for point in points]
    if len(set(ns)) != len(ns):
        raise DomainError("sweep points must have distinct N")
    ordered = sorted(points, key=lambda point: point.N)
    log_n = np.log(np.array([point.N for point in ordered], dtype=float))
    values = np.array([point.estimate.value for point in ordered], dtype=float)
    spread = float(values.max() - values.min())
    last = float(values[-1])
    if spread == 0.0:
        return Extrapolation(limit=last, reliable=True, c=0.0, kappa=1.0, residual=0.0)

    def residuals(theta):
        return _model(theta, log_n) - values

    best = None
    for kappa0 in (0.5, 1.0, 2.0):
        c0 = (values[-1] - values[0]) / (log_n[0] ** -kappa0 - log_n[-1] ** -kappa0)
        start = [last + c0 * log_n[-1] ** -kappa0, c0, kappa0]
        fit = least_squares(residuals, start,
                            bounds=([-np.inf, -np.inf, KAPPA_BOUNDS[0]], [np.inf, np.inf, KAPPA_BOUNDS[1]]),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20_000)
        if best is None or fit.cost < best.cost:
            best = fit
    L, c, kappa = (float(v) for v in best.x)
    fit_residual = float(np.sqrt(np.mean(best.fun ** 2)))
    if fit_residual > FIT_RELIABILITY * spread:
        logger.warning("extrapolation residual %.3g exceeds %.0f%% of the spread %.3g; using last value",
                       fit_residual, 100 * FIT_RELIABILITY, spread)
        return Extrapolation(limit=last, reliable=False, c=c, kappa=kappa, residual=fit_residual)
    return Extrapolation(limit=L, reliable=True, c=c, kappa=kappa, residual=fit_residual)
