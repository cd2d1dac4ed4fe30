"""
Positive measures on [0, 1) built from finitely many atoms and piecewise
constant densities, their Beta-type moments

    lambda[n] = int t^{log n - 1} (1 - t)^{gamma - 1} d lambda(t),

s-Carleson checks and the sufficiency test for the measure-kernel operator.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from api.services.errors import DomainError
from api.services.operator_service import MeasureKernel, OperatorParams
from api.services.special_functions_service import (
    log_beta_array,
    reg_inc_beta_array,
    stirling_remainder_ok,
)

logger = logging.getLogger(__name__)

CARLESON_GRID_POINTS = 10_000
CARLESON_GRID_CEILING = 1.0 - 1e-6
MOMENT_CAP_GRID_POINTS = 20_001
PROPOSITION_SLACK = 1e-9


@dataclass(frozen=True)
class Measure:
    """Atoms (t, w) with 0 < t < 1, w > 0 plus densities c on [a, b)."""
    atoms: Tuple[Tuple[float, float], ...] = ()
    pieces: Tuple[Tuple[float, float, float], ...] = ()

    def __post_init__(self):
        try:
            atoms = tuple((float(t), float(w)) for t, w in self.atoms)
            pieces = tuple((float(a), float(b), float(c)) for a, b, c in self.pieces)
        except (TypeError, ValueError):
            raise DomainError("atom and piece entries must be real numbers")
        for t, w in atoms:
            if not (0.0 < t < 1.0):
                raise DomainError(f"atom position must lie strictly inside (0, 1), got {t}")
            if not (w > 0.0) or not math.isfinite(w):
                raise DomainError(f"atom weight must be a finite positive real, got {w}")
        previous_end = 0.0
        for a, b, c in pieces:
            if not (0.0 <= a < b <= 1.0):
                raise DomainError(f"density piece needs 0 <= a < b <= 1, got [{a}, {b})")
            if not (c >= 0.0) or not math.isfinite(c):
                raise DomainError(f"density must be a finite nonnegative real, got {c}")
            if a < previous_end:
                raise DomainError("density pieces must be sorted and non-overlapping")
            previous_end = b
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'pieces', pieces)

    @property
    def total_mass(self):
        return sum(w for _, w in self.atoms) + sum(c * (b - a) for a, b, c in self.pieces)

    def __add__(self, other):
        pieces = sorted(self.pieces + other.pieces)
        return Measure(atoms=self.atoms + other.atoms, pieces=_merge_pieces(pieces))

    def scaled(self, factor):
        return Measure(atoms=tuple((t, w * factor) for t, w in self.atoms),
                       pieces=tuple((a, b, c * factor) for a, b, c in self.pieces))

    def as_dict(self):
        return {'atoms': [list(atom) for atom in self.atoms],
                'pieces': [list(piece) for piece in self.pieces]}


def _merge_pieces(pieces):
    """Split overlapping density pieces into disjoint ones with summed densities."""
    if not pieces:
        return ()
    cuts = sorted({x for a, b, _ in pieces for x in (a, b)})
    merged = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        density = sum(c for a, b, c in pieces if a <= lo and hi <= b)
        if density > 0.0:
            merged.append((lo, hi, density))
    return tuple(merged)


def lebesgue_measure(density=1.0):
    return Measure(pieces=((0.0, 1.0, density),))


def measure_from_dict(doc):
    if not isinstance(doc, dict):
        raise DomainError("a measure document must be a JSON object")
    unknown = set(doc) - {'atoms', 'pieces'}
    if unknown:
        raise DomainError(f"unknown measure keys: {sorted(unknown)}")
    try:
        atoms = tuple((t, w) for t, w in doc.get('atoms', []))
        pieces = tuple((a, b, c) for a, b, c in doc.get('pieces', []))
    except (TypeError, ValueError):
        raise DomainError("atoms must be [t, w] pairs and pieces [a, b, c] triples")
    return Measure(atoms=atoms, pieces=pieces)


def load_measure(path):
    with open(path, 'r', encoding='utf-8') as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as e:
            raise DomainError(f"measure file {path} is not valid JSON: {e}")
    return measure_from_dict(doc)


def moments_at_log(measure, gamma, log_n):
    """lambda evaluated at an array of log n values (any shape, entries > 0)."""
    log_n = np.asarray(log_n, dtype=float)
    flat = log_n.ravel()
    total = np.zeros_like(flat)
    for t, w in measure.atoms:
        total += w * np.exp((flat - 1.0) * math.log(t) + (gamma - 1.0) * math.log1p(-t))
    if measure.pieces:
        complete = np.exp(log_beta_array(flat, gamma))
        for a, b, c in measure.pieces:
            if c == 0.0:
                continue
            upper = 1.0 if b >= 1.0 else reg_inc_beta_array(np.full_like(flat, b), flat, gamma)
            lower = 0.0 if a <= 0.0 else reg_inc_beta_array(np.full_like(flat, a), flat, gamma)
            total += c * complete * np.maximum(upper - lower, 0.0)
    return total.reshape(log_n.shape)


def moment(measure, gamma, n):
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    if not (gamma > 0.0):
        raise DomainError(f"gamma must be > 0, got {gamma!r}")
    return float(moments_at_log(measure, float(gamma), np.array([math.log(n)]))[0])


def _tail_masses(measure, t_values, gamma_weight):
    t_values = np.asarray(t_values, dtype=float)
    tails = np.zeros_like(t_values)
    for t, w in measure.atoms:
        weight = w if gamma_weight is None else w * (1.0 - t) ** (gamma_weight - 1.0)
        tails += np.where(t_values <= t, weight, 0.0)
    for a, b, c in measure.pieces:
        lo = np.maximum(t_values, a)
        inside = lo < b
        if gamma_weight is None:
            mass = c * (b - lo)
        else:
            mass = c * ((1.0 - lo) ** gamma_weight - (1.0 - b) ** gamma_weight) / gamma_weight
        tails += np.where(inside, mass, 0.0)
    return tails


def tail_mass(measure, t, gamma_weight=None):
    """
    tau([t, 1)) where tau is lambda itself (gamma_weight None) or
    (1 - u)^{gamma - 1} d lambda(u) with gamma = gamma_weight.
    """
    if not (0.0 <= t < 1.0):
        raise DomainError(f"t must lie in [0, 1), got {t!r}")
    if gamma_weight is not None and not (gamma_weight > 0.0):
        raise DomainError(f"gamma weight must be > 0, got {gamma_weight!r}")
    return float(_tail_masses(measure, np.array([t]), gamma_weight)[0])


@dataclass(frozen=True)
class CarlesonReport:
    s: float
    constant: float
    witness_t: float
    is_carleson: bool
    gamma_weight: Optional[float] = None
    endpoint_ok: bool = True

    def as_dict(self):
        return {'s': self.s, 'constant': self.constant, 'witness_t': self.witness_t,
                'is_carleson': self.is_carleson, 'gamma_weight': self.gamma_weight,
                'endpoint_ok': self.endpoint_ok}


def carleson_constant(measure, s, gamma_weight=None, cap=None):
    """
    sup tau([t, 1)) / (1 - t)^s over atom positions, piece endpoints and a
    uniform grid on [0, 1 - 1e-6]. Pieces reaching t = 1 are decided
    analytically: weighted pieces need gamma >= s, unweighted ones s <= 1.
    """
    if not (s > 0.0):
        raise DomainError(f"s must be > 0, got {s!r}")
    candidates = [t for t, _ in measure.atoms]
    candidates += [x for a, b, _ in measure.pieces for x in (a, b) if x < 1.0]
    candidates = np.concatenate([np.array(sorted(set(candidates)), dtype=float),
                                 np.linspace(0.0, CARLESON_GRID_CEILING, CARLESON_GRID_POINTS)])
    ratios = _tail_masses(measure, candidates, gamma_weight) / (1.0 - candidates) ** s
    best = int(np.argmax(ratios))
    constant = float(ratios[best])

    endpoint_ok = True
    for a, b, c in measure.pieces:
        if b >= 1.0 and c > 0.0:
            if gamma_weight is None:
                endpoint_ok = endpoint_ok and s <= 1.0
            else:
                endpoint_ok = endpoint_ok and gamma_weight >= s
    is_carleson = endpoint_ok and math.isfinite(constant)
    if cap is not None:
        is_carleson = is_carleson and constant <= cap
    return CarlesonReport(s=float(s), constant=constant, witness_t=float(candidates[best]),
                          is_carleson=is_carleson, gamma_weight=gamma_weight, endpoint_ok=endpoint_ok)


@dataclass(frozen=True)
class MomentDecayReport:
    gamma: float
    rows: List[Tuple[int, float, float]]
    minimum: float
    maximum: float

    def as_dict(self):
        return {'gamma': self.gamma, 'minimum': self.minimum, 'maximum': self.maximum,
                'rows': [{'n': n, 'moment': value, 'scaled': scaled} for n, value, scaled in self.rows]}


def moment_decay_check(measure, gamma, n_values):
    """min and max of lambda[n] (log n)^gamma over n_values."""
    if not n_values:
        raise DomainError("n_values must not be empty")
    rows = []
    for n in n_values:
        value = moment(measure, gamma, n)
        rows.append((int(n), value, value * math.log(n) ** gamma))
    scaled = [row[2] for row in rows]
    return MomentDecayReport(gamma=float(gamma), rows=rows, minimum=min(scaled), maximum=max(scaled))


def beta_ratio_bracket(gamma, log_values):
    """
    Measured comparability constants for B(L, gamma) L^gamma over L values,
    together with the Stirling-bound check at every L and L + gamma used.
    """
    if not (gamma > 0.0):
        raise DomainError(f"gamma must be > 0, got {gamma!r}")
    log_values = np.asarray(log_values, dtype=float)
    if log_values.size == 0 or np.any(log_values <= 0.0):
        raise DomainError("L values must be a nonempty list of positive reals")
    scaled = np.exp(log_beta_array(log_values, gamma) + gamma * np.log(log_values))
    stirling_ok = all(stirling_remainder_ok(x) for L in log_values for x in (L, L + gamma))
    return {'gamma': float(gamma), 'c_lower': float(scaled.min()), 'c_upper': float(scaled.max()),
            'stirling_ok': stirling_ok}


@dataclass(frozen=True)
class PropositionReport:
    s: float
    carleson: CarlesonReport
    moment_cap: float
    norm_bound: float
    cap: float
    sweep: list = field(default_factory=list)
    within_cap: bool = True
    consistent: bool = True

    def as_dict(self):
        return {
            's': self.s, 'carleson': self.carleson.as_dict(), 'moment_cap': self.moment_cap,
            'norm_bound': self.norm_bound, 'cap': self.cap,
            'sweep': [point.as_dict() for point in self.sweep],
            'within_cap': self.within_cap,
            'verdict': 'consistent' if self.consistent else 'inconsistent',
        }


def moment_cap(measure, gamma, s, largest_index):
    """
    Upper bound of sup lambda(L) L^s for L between log 4 and log(largest_index^2).

    lambda is nonincreasing in L and L^s nondecreasing (s >= 0), so on each
    cell [L_i, L_{i+1}] of a geometric grid the product is at most
    lambda(L_i) L_{i+1}^s.
    """
    if s < 0.0:
        raise DomainError(f"the moment cap needs s >= 0, got {s}")
    grid = np.geomspace(2.0 * math.log(2.0), 2.0 * math.log(max(largest_index, 2)), MOMENT_CAP_GRID_POINTS)
    moments = moments_at_log(measure, gamma, grid)
    cells = moments[:-1] * grid[1:] ** s
    return float(max(cells.max(), moments[-1] * grid[-1] ** s))


def proposition_check(measure, p, mu, nu, gamma, schedule, tol=None, max_iter=None):
    """
    Consistency test of the sufficiency statement: when (1-t)^{gamma-1} d lambda
    is [1 + (mu - nu)/p]-Carleson, the truncation norms of the measure kernel
    must stay below sup_k lambda[k] (log k)^s times the critical norm.
    """
    from api.services.bounds_service import closed_form_norm
    from api.services.norm_engine_service import DEFAULT_MAX_ITER, DEFAULT_TOL, truncation_sweep

    weights = OperatorParams(p=p, mu=mu, nu=nu)
    if not weights.in_theorem_range:
        raise DomainError(f"mu and nu must lie in (-1, {weights.p - 1.0}), got mu={mu}, nu={nu}")
    s = weights.critical_gamma
    carleson = carleson_constant(measure, s, gamma_weight=gamma)

    spec = MeasureKernel(p=p, mu=mu, nu=nu, gamma=gamma, measure=measure)
    sweep = truncation_sweep(spec, schedule,
                             DEFAULT_TOL if tol is None else tol,
                             DEFAULT_MAX_ITER if max_iter is None else max_iter)

    cap_moment = moment_cap(measure, gamma, s, max(schedule))
    norm_bound = closed_form_norm(weights.with_gamma(s))
    cap = cap_moment * norm_bound
    within_cap = all(point.estimate.value <= cap * (1.0 + PROPOSITION_SLACK) + 1e-12 for point in sweep)
    consistent = carleson.is_carleson and within_cap
    if not consistent:
        logger.warning("proposition check inconsistent: carleson=%s within_cap=%s",
                       carleson.is_carleson, within_cap)
    return PropositionReport(s=s, carleson=carleson, moment_cap=cap_moment, norm_bound=norm_bound,
                             cap=cap, sweep=sweep, within_cap=within_cap, consistent=consistent)
