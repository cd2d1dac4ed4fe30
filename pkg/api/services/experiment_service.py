"""
One entry point per experiment. The command line and the HTTP blueprints both
go through run_experiment so a RunConfig always yields the same report.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List

from api.services.bounds_service import (
    CRITICAL_TOL,
    classify_boundedness,
    closed_form_norm,
    dichotomy_scan,
    sandwich,
    schur_E,
    schur_F,
    schur_norm_bound,
)
from api.services.carleson_service import (
    beta_ratio_bracket,
    carleson_constant,
    load_measure,
    measure_from_dict,
    moment_decay_check,
    proposition_check,
)
from api.services.errors import DomainError
from api.services.norm_engine_service import (
    extrapolate,
    power_iteration,
    spectral_oracle_norm,
    truncation_sweep,
)
from api.services.operator_service import StandardKernel, extremal_norm_p

logger = logging.getLogger(__name__)

UPPER_SLACK = 1e-9


@dataclass
class ExperimentResult:
    command: str
    report: dict
    rows: List[dict] = field(default_factory=list)
    violated: bool = False


def _is_critical(params):
    return params.in_theorem_range and abs(params.gamma - params.critical_gamma) <= CRITICAL_TOL


def _upper_bound(params):
    """Schur bound for gamma at or above the critical value, None when no bound is known."""
    if params.in_theorem_range and params.gamma >= params.critical_gamma - CRITICAL_TOL:
        return schur_norm_bound(params)
    return None


def _run_predict(config):
    params = config.params
    verdict = classify_boundedness(params)
    closed_form = closed_form_norm(params) if _is_critical(params) else None
    upper = _upper_bound(params)
    row = {**verdict.as_dict(), 'closed_form_norm': closed_form, 'schur_bound': upper}
    return {'verdict': verdict.as_dict(), 'closed_form_norm': closed_form, 'schur_bound': upper}, [row], False


def _estimate_row(estimate, method):
    return {'N': estimate.truncation_N, 'estimate': estimate.value, 'residual': estimate.residual,
            'iterations': estimate.iterations, 'method': method}


def _run_norm(config):
    params = config.params
    spec = StandardKernel(params)
    estimates = {}
    if config.method in ('power', 'both'):
        estimates['power'] = power_iteration(spec, config.N, config.tol, config.max_iter)
    if config.method in ('oracle', 'both'):
        estimates['oracle'] = spectral_oracle_norm(spec, config.N)
    rows = [_estimate_row(estimate, method) for method, estimate in estimates.items()]
    report = {'estimates': {method: estimate.as_dict() for method, estimate in estimates.items()}}
    if len(estimates) == 2:
        oracle = estimates['oracle'].value
        report['relative_difference'] = abs(estimates['power'].value - oracle) / oracle if oracle else 0.0

    values = [estimate.value for estimate in estimates.values()]
    if config.sweep:
        points = truncation_sweep(spec, config.schedule, config.tol, config.max_iter)
        rows += [_estimate_row(point.estimate, 'power') for point in points]
        report['sweep'] = [point.as_dict() for point in points]
        values += [point.estimate.value for point in points]
        if len(points) >= 4:
            report['extrapolation'] = extrapolate(points).as_dict()
        else:
            logger.info("sweep has %d points; extrapolation needs 4", len(points))

    upper = _upper_bound(params)
    report['upper_bound'] = upper
    violated = upper is not None and any(value > upper + UPPER_SLACK for value in values)
    if violated:
        logger.warning("a truncation estimate exceeds the upper bound %.15g", upper)
    return report, rows, violated


def _run_schur(config):
    params = config.params
    reports = []
    for index in config.indices:
        reports.append(schur_E(params, index, config.tail_tol))
        reports.append(schur_F(params, index, config.tail_tol))
    rows = [report.as_dict() for report in reports]
    violated = not all(report.satisfied for report in reports)
    return {'reports': rows, 'all_satisfied': not violated}, rows, violated


def _run_extremal(config):
    params = config.params
    schedule = config.schedule if config.sweep else ()
    result = sandwich(params, config.eps_values, config.N, schedule, config.tol, config.max_iter)
    rows = []
    norms = []
    for eps, estimate in result.rayleigh:
        rows.append({'eps': eps, 'N': config.N, 'rayleigh': estimate.value,
                     'closed_form': result.closed_form, 'upper': result.upper})
        norms.append({'eps': eps, 'norm_p': extremal_norm_p(params, eps, config.N)})
    report = {**result.as_dict(), 'extremal_norms': norms}
    return report, rows, not result.ordered


def _run_scan(config):
    base = config.params
    scans = dichotomy_scan(base, config.gamma_values, config.schedule, config.tol, config.max_iter)
    rows = []
    violated = False
    for scan in scans:
        for point in scan.points:
            rows.append({'gamma': scan.gamma, 'N': point.N, 'estimate': point.estimate.value,
                         'theta_fit': scan.theta, 'verdict': scan.verdict.tag})
        upper = _upper_bound(base.with_gamma(scan.gamma))
        if upper is not None and any(point.estimate.value > upper + UPPER_SLACK for point in scan.points):
            logger.warning("scan gamma=%g exceeds the upper bound %.15g", scan.gamma, upper)
            violated = True
    return {'scans': [scan.as_dict() for scan in scans]}, rows, violated


def _resolve_measure(config):
    if config.measure is not None:
        return measure_from_dict(config.measure)
    return load_measure(config.measure_path)


def _run_carleson(config):
    params = config.params
    measure = _resolve_measure(config)
    decay = moment_decay_check(measure, params.gamma, config.n_values)
    s = params.critical_gamma if config.s is None else config.s
    carleson = carleson_constant(measure, s, gamma_weight=params.gamma)
    bracket = beta_ratio_bracket(params.gamma, [math.log(n) for n in config.n_values])
    proposition = proposition_check(measure, params.p, params.mu, params.nu, params.gamma,
                                    config.measure_schedule, config.tol, config.max_iter)
    rows = [{'n': n, 'moment': value, 'scaled': scaled} for n, value, scaled in decay.rows]
    report = {'measure': measure.as_dict(), 'total_mass': measure.total_mass,
              'moments': decay.as_dict(), 'carleson': carleson.as_dict(),
              'beta_ratio': bracket, 'proposition': proposition.as_dict()}
    violated = proposition.carleson.is_carleson and not proposition.within_cap
    return report, rows, violated


RUNNERS = {
    'predict': _run_predict,
    'norm': _run_norm,
    'schur': _run_schur,
    'extremal': _run_extremal,
    'scan': _run_scan,
    'carleson': _run_carleson,
}


def run_experiment(config):
    runner = RUNNERS.get(config.command)
    if runner is None:
        raise DomainError(f"unknown command {config.command!r}")
    logger.info("running %s", config.command)
    result, rows, violated = runner(config)
    report = {'command': config.command, 'config': config.as_dict(), 'result': result, 'violated': violated}
    return ExperimentResult(command=config.command, report=report, rows=rows, violated=violated)
