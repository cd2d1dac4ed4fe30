"""
Analytic side: boundedness classification, the closed-form critical norm,
the Schur sums E(m) and F(n) with certified tails, and growth scans over
gamma that make the boundedness dichotomy visible on finite sections.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.stats import linregress

from api.services.errors import CertificationError, DomainError
from api.services.norm_engine_service import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    rayleigh_quotient,
    truncation_sweep,
)
from api.services.operator_service import (
    StandardKernel,
    _blocked_sum,
    extremal_sequence,
    pairwise_sum,
)
from api.services.special_functions_service import beta as beta_function
from api.services.special_functions_service import reg_inc_beta

logger = logging.getLogger(__name__)

CRITICAL_TOL = 1e-12
SCHUR_SLACK = 1e-9
SANDWICH_SLACK = 1e-9
SCHUR_START_CUTOFF = 100_000
SCHUR_MAX_CUTOFF = 100_000_000
SCHUR_CHUNK = 1_000_000
GROWTH_FIT_MIN_N = 100

BOUNDED_CRITICAL = 'bounded_critical'
BOUNDED_STRICT = 'bounded_strict'
UNBOUNDED = 'unbounded'
UNBOUNDED_REMARK1 = 'unbounded_remark1'
OUT_OF_THEOREM_RANGE = 'out_of_theorem_range'


@dataclass(frozen=True)
class BoundednessVerdict:
    tag: str
    critical_gamma: float
    margin: float

    @property
    def bounded(self):
        return self.tag in (BOUNDED_CRITICAL, BOUNDED_STRICT)

    def as_dict(self):
        return {'tag': self.tag, 'critical_gamma': self.critical_gamma, 'margin': self.margin}


def classify_boundedness(params):
    """
    Bounded iff p(gamma - 1) - (mu - nu) >= 0 for mu, nu in (-1, p - 1).
    Outside that range only the diagonal case alpha = beta = gamma = 1,
    mu = nu = delta with delta <= -1 or delta >= p - 1 is known (unbounded).
    """
    margin = params.margin
    critical = params.critical_gamma
    if params.in_theorem_range:
        if abs(margin) <= CRITICAL_TOL:
            tag = BOUNDED_CRITICAL
        elif margin > 0.0:
            tag = BOUNDED_STRICT
        else:
            tag = UNBOUNDED
    elif (params.mu == params.nu and params.alpha == params.beta == params.gamma == 1.0
          and (params.mu <= -1.0 or params.mu >= params.p - 1.0)):
        tag = UNBOUNDED_REMARK1
    else:
        tag = OUT_OF_THEOREM_RANGE
    return BoundednessVerdict(tag=tag, critical_gamma=critical, margin=margin)


def _beta_arguments(params):
    return (1.0 + params.mu) / params.p, (params.p - 1.0 - params.nu) / params.p


def _require_critical(params):
    if not params.in_theorem_range:
        raise DomainError(
            f"no closed-form norm is known for mu={params.mu}, nu={params.nu}: "
            f"both must lie in (-1, {params.p - 1.0})")
    if abs(params.gamma - params.critical_gamma) > CRITICAL_TOL:
        raise DomainError(
            f"no closed-form norm is known for gamma={params.gamma}: "
            f"only the critical value {params.critical_gamma} has one")


def closed_form_norm(params):
    """alpha^{-1/p} beta^{-1/p'} B((1 + mu)/p, (p - 1 - nu)/p) on the critical line."""
    _require_critical(params)
    u, v = _beta_arguments(params)
    return params.alpha ** (-1.0 / params.p) * params.beta ** (-1.0 / params.p_conj) * beta_function(u, v)


@dataclass(frozen=True)
class SchurReport:
    kind: str
    index: int
    sum_value: float
    tail_bound: float
    rhs: float
    satisfied: bool
    cutoff: int

    def as_dict(self):
        return {'kind': self.kind, 'index': self.index, 'sum': self.sum_value,
                'tail': self.tail_bound, 'rhs': self.rhs, 'satisfied': self.satisfied,
                'cutoff': self.cutoff}


def _schur_setup(params, kind, index):
    """
    Return (log_term(k), tail(N), rhs) for E(index) (kind 'E') or F(index) (kind 'F').

    log_term gives the log of the summand at summation indices k; tail(N) is
    the integral of the summand from N to infinity, which after the
    substitution s = (log x)^{scale} becomes an incomplete Beta integral.
    """
    p = params.p
    g = params.critical_gamma
    u, v = _beta_arguments(params)
    fixed_log = math.log(math.log(index))
    if kind == 'E':
        scale, inner = params.beta, params.alpha
        outer_power = params.alpha * u
        summand_power = params.beta * (1.0 + params.nu) / p
        a, b = v, u
    else:
        scale, inner = params.alpha, params.beta
        outer_power = params.beta * v
        summand_power = params.alpha * (p - 1.0 - params.mu) / p
        a, b = u, v
    fixed_core = math.exp(inner * fixed_log)

    def log_term(k):
        log_k = np.log(k)
        loglog_k = np.log(log_k)
        core = np.exp(scale * loglog_k)
        return ((scale - 1.0) * loglog_k - log_k - g * np.log(fixed_core + core)
                + outer_power * fixed_log - summand_power * loglog_k)

    complete = beta_function(a, b)

    def tail(N):
        T = math.exp(scale * math.log(math.log(N))) / fixed_core
        return complete * reg_inc_beta(1.0 / (1.0 + T), b, a) / scale

    rhs = complete / scale
    return log_term, tail, rhs


def _schur_report(params, kind, index, tail_tol):
    if int(index) != index or index < 2:
        raise DomainError(f"the Schur index must be an integer >= 2, got {index!r}")
    if not (tail_tol > 0.0):
        raise DomainError(f"tail_tol must be > 0, got {tail_tol!r}")
    _require_critical(params)
    log_term, tail, rhs = _schur_setup(params, kind, int(index))

    chunk_sums = []
    summed_to = 1
    cutoff = SCHUR_START_CUTOFF
    while True:
        for start in range(summed_to + 1, cutoff + 1, SCHUR_CHUNK):
            stop = min(start + SCHUR_CHUNK, cutoff + 1)
            chunk_sums.append(_blocked_sum(np.exp(log_term(np.arange(start, stop, dtype=float)))))
        summed_to = cutoff
        slack = float(np.exp(log_term(np.array([float(cutoff)])))[0])
        if slack <= tail_tol:
            break
        if cutoff * 2 > SCHUR_MAX_CUTOFF:
            raise CertificationError(
                f"{kind}({index}): first omitted term {slack:.3g} still exceeds "
                f"tail_tol={tail_tol:g} at the cutoff cap {SCHUR_MAX_CUTOFF}")
        cutoff *= 2
    sum_value = float(pairwise_sum(chunk_sums))
    tail_bound = tail(cutoff)
    satisfied = sum_value + tail_bound <= rhs + SCHUR_SLACK
    logger.debug("%s(%d): sum %.15g tail %.3g rhs %.15g cutoff %d",
                 kind, index, sum_value, tail_bound, rhs, cutoff)
    return SchurReport(kind=kind, index=int(index), sum_value=sum_value, tail_bound=tail_bound,
                       rhs=rhs, satisfied=satisfied, cutoff=cutoff)


def schur_E(params, m, tail_tol=1e-8):
    """E(m) <= (1/beta) B((1+mu)/p, (p-1-nu)/p)."""
    return _schur_report(params, 'E', m, tail_tol)


def schur_F(params, n, tail_tol=1e-8):
    """F(n) <= (1/alpha) B((1+mu)/p, (p-1-nu)/p)."""
    return _schur_report(params, 'F', n, tail_tol)


def schur_norm_bound(params):
    """
    Hoelder combination sup E^{1/p'} sup F^{1/p} of the Schur bounds, evaluated
    on the critical line; it also bounds every gamma above the critical value
    because the kernel decreases in gamma.
    """
    critical = params.with_gamma(params.critical_gamma)
    _require_critical(critical)
    u, v = _beta_arguments(critical)
    complete = beta_function(u, v)
    return (complete / params.beta) ** (1.0 / params.p_conj) * (complete / params.alpha) ** (1.0 / params.p)


@dataclass(frozen=True)
class GammaScan:
    gamma: float
    verdict: BoundednessVerdict
    points: list
    theta: Optional[float]

    def as_dict(self):
        return {'gamma': self.gamma, 'verdict': self.verdict.as_dict(), 'theta_fit': self.theta,
                'points': [point.as_dict() for point in self.points]}


def growth_exponent(points):
    """Slope of log value against log log N over points with N >= 100."""
    usable = [point for point in points if point.N >= GROWTH_FIT_MIN_N and point.estimate.value > 0.0]
    if len(usable) < 2:
        return None
    x = np.log(np.log(np.array([point.N for point in usable], dtype=float)))
    y = np.log(np.array([point.estimate.value for point in usable]))
    return float(linregress(x, y).slope)


def dichotomy_scan(base, gamma_values, schedule, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    if not gamma_values:
        raise DomainError("gamma_values must not be empty")
    scans = []
    for g in gamma_values:
        params = base.with_gamma(float(g))
        points = truncation_sweep(StandardKernel(params), schedule, tol, max_iter)
        theta = growth_exponent(points)
        verdict = classify_boundedness(params)
        logger.info("scan gamma=%g verdict=%s theta=%s", g, verdict.tag, theta)
        scans.append(GammaScan(gamma=params.gamma, verdict=verdict, points=points, theta=theta))
    return scans


@dataclass(frozen=True)
class SandwichReport:
    rayleigh: List = field(default_factory=list)
    sweep: List = field(default_factory=list)
    best_lower: float = 0.0
    upper: Optional[float] = None
    closed_form: Optional[float] = None
    ordered: bool = True

    def as_dict(self):
        return {
            'rayleigh': [{'eps': eps, **estimate.as_dict()} for eps, estimate in self.rayleigh],
            'sweep': [point.as_dict() for point in self.sweep],
            'best_lower': self.best_lower, 'upper': self.upper,
            'closed_form': self.closed_form, 'ordered': self.ordered,
        }


def sandwich(params, eps_values, N, schedule=(), tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """
    Lower bounds from the extremal family and from truncation sweeps next to
    the Schur upper bound (when gamma is at or above the critical value).
    """
    spec = StandardKernel(params)
    rayleigh = []
    for eps in eps_values:
        a = extremal_sequence(params, float(eps), N)
        rayleigh.append((float(eps), rayleigh_quotient(spec, a, N - 1)))
    sweep = truncation_sweep(spec, schedule, tol, max_iter) if schedule else []
    lowers = [estimate.value for _, estimate in rayleigh] + [point.estimate.value for point in sweep]
    best_lower = max(lowers) if lowers else 0.0

    upper = None
    closed_form = None
    if params.in_theorem_range and params.gamma >= params.critical_gamma - CRITICAL_TOL:
        upper = schur_norm_bound(params)
        if abs(params.gamma - params.critical_gamma) <= CRITICAL_TOL:
            closed_form = closed_form_norm(params)
    ordered = upper is None or best_lower <= upper + SANDWICH_SLACK
    return SandwichReport(rayleigh=rayleigh, sweep=sweep, best_lower=best_lower,
                          upper=upper, closed_form=closed_form, ordered=ordered)
