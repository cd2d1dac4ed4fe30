"""
Generalized multiplicative Hilbert kernels and their finite sections.

Indices always start at 2 (log 1 = 0 would make the kernels singular) and
all logarithms are natural. Two kernel families are supported:

* ``StandardKernel`` -- the matrix with entries
  (log m)^{[(a-1)+a mu]/p} (log n)^{[(b-1)-(p'-1) b nu]/p'}
  / (m^{1/p} n^{1/p'} [(log m)^a + (log n)^b]^gamma)
* ``MeasureKernel`` -- (log m)^{mu/p} (log n)^{-nu/p} lambda[mn] / (m^{1/p} n^{1/p'})
  where lambda[k] is the Beta-type moment of a positive measure on [0, 1).

Both factor as row_factor[m] * col_factor[n] * core(m, n); the row and column
factors are computed once in log space per truncation.
"""

import logging
import math
import numbers
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from scipy.sparse.linalg import LinearOperator

from api.services.errors import DomainError
from api.services.special_functions_service import gamma as gamma_function

logger = logging.getLogger(__name__)

START_INDEX = 2
SUMMATION_BLOCK = 1024
ROW_BLOCK = 256

# Dense truncations up to this many entries are materialised once and reused
DENSE_CACHE_ENTRIES = 25_000_000

# Exponential-sum factorisation of (x + y)^{-gamma}
EXPSUM_STEP = 0.125
EXPSUM_RELATIVE_TOL = 1e-15
EXPSUM_NODE_CHUNK = 64
EXPSUM_CACHE_ENTRIES = 20_000_000

MAX_WORKERS = 4


def conjugate_exponent(p):
    """Return p' with 1/p + 1/p' = 1."""
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise DomainError(f"p must be a real number, got {p!r}")
    if not math.isfinite(p) or p <= 1.0:
        raise DomainError(f"p must be a finite real > 1, got {p!r}")
    return p / (p - 1.0)


@dataclass(frozen=True)
class OperatorParams:
    p: float
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    mu: float = 0.0
    nu: float = 0.0
    p_conj: float = field(init=False)

    def __post_init__(self):
        for name in ('p', 'alpha', 'beta', 'gamma', 'mu', 'nu'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, 'p_conj', conjugate_exponent(self.p))
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (0.0 < self.beta <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if self.gamma <= 0.0:
            raise DomainError(f"gamma must be > 0, got {self.gamma}")

    @property
    def critical_gamma(self):
        return 1.0 + (self.mu - self.nu) / self.p

    @property
    def margin(self):
        return self.p * (self.gamma - 1.0) - (self.mu - self.nu)

    @property
    def in_theorem_range(self):
        upper = self.p - 1.0
        return -1.0 < self.mu < upper and -1.0 < self.nu < upper

    def with_gamma(self, gamma):
        return replace(self, gamma=gamma)

    def as_dict(self):
        return {
            'p': self.p, 'alpha': self.alpha, 'beta': self.beta,
            'gamma': self.gamma, 'mu': self.mu, 'nu': self.nu,
            'p_conj': self.p_conj,
        }


@dataclass(frozen=True)
class WeightedSequence:
    """A finite real sequence a_2, a_3, ..., a_{N}; values[k] holds a_{k+2}."""
    values: np.ndarray
    start_index: int = START_INDEX

    def __post_init__(self):
        if self.start_index != START_INDEX:
            raise DomainError(f"sequences start at index {START_INDEX}, got {self.start_index}")
        values = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise DomainError("sequence values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return len(self.values)

    @property
    def last_index(self):
        return START_INDEX + len(self.values) - 1

    def scaled(self, factor):
        return WeightedSequence(self.values * factor)


@dataclass(frozen=True)
class StandardKernel:
    params: OperatorParams

    @property
    def p(self):
        return self.params.p


@dataclass(frozen=True)
class MeasureKernel:
    p: float
    mu: float
    nu: float
    gamma: float
    measure: object

    def __post_init__(self):
        conjugate_exponent(self.p)
        if not (self.gamma > 0.0):
            raise DomainError(f"gamma must be > 0, got {self.gamma}")

    @property
    def p_conj(self):
        return conjugate_exponent(self.p)


KernelSpec = Union[StandardKernel, MeasureKernel]


def _indices(count):
    return np.arange(START_INDEX, START_INDEX + count, dtype=float)


def _log_factors(spec, indices, side):
    """log of the row (side='row') or column factor, and the core variable."""
    log_n = np.log(indices)
    loglog_n = np.log(log_n)
    if isinstance(spec, StandardKernel):
        prm = spec.params
        if side == 'row':
            exponent = ((prm.alpha - 1.0) + prm.alpha * prm.mu) / prm.p
            log_factor = exponent * loglog_n - log_n / prm.p
            core = np.exp(prm.alpha * loglog_n)
        else:
            exponent = ((prm.beta - 1.0) - (prm.p_conj - 1.0) * prm.beta * prm.nu) / prm.p_conj
            log_factor = exponent * loglog_n - log_n / prm.p_conj
            core = np.exp(prm.beta * loglog_n)
        return log_factor, core
    if isinstance(spec, MeasureKernel):
        if side == 'row':
            log_factor = (spec.mu / spec.p) * loglog_n - log_n / spec.p
        else:
            log_factor = -(spec.nu / spec.p) * loglog_n - log_n / spec.p_conj
        return log_factor, log_n
    raise DomainError(f"unknown kernel specification {type(spec).__name__}")


def _core_block(spec, row_core, col_core):
    if isinstance(spec, StandardKernel):
        total = row_core[:, None] + col_core[None, :]
        g = spec.params.gamma
        if g == 1.0:
            return 1.0 / total
        return np.power(total, -g)
    from api.services.carleson_service import moments_at_log
    log_mn = row_core[:, None] + col_core[None, :]
    return moments_at_log(spec.measure, spec.gamma, log_mn)


def entry(spec, m, n):
    """Single kernel entry K(m, n) for m, n >= 2."""
    for name, value in (('m', m), ('n', n)):
        if int(value) != value or value < START_INDEX:
            raise DomainError(f"{name} must be an integer >= {START_INDEX}, got {value!r}")
    rows = np.array([float(m)])
    cols = np.array([float(n)])
    log_row, row_core = _log_factors(spec, rows, 'row')
    log_col, col_core = _log_factors(spec, cols, 'col')
    core = _core_block(spec, row_core, col_core)[0, 0]
    return float(np.exp(log_row[0] + log_col[0]) * core)


def pairwise_sum(parts):
    """Sum a list of equally shaped arrays (or floats) along a fixed binary tree."""
    parts = list(parts)
    if not parts:
        return 0.0
    while len(parts) > 1:
        merged = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def _blocked_sum(values):
    blocks = [np.sum(values[i:i + SUMMATION_BLOCK]) for i in range(0, len(values), SUMMATION_BLOCK)]
    return float(pairwise_sum(blocks))


def _expsum_nodes(gamma, z_min, z_max):
    """Trapezoidal nodes t_k and weights w_k with (x+y)^{-gamma} ~ sum w_k e^{-t_k (x+y)}."""
    log_scale = math.log(EXPSUM_RELATIVE_TOL * gamma * gamma_function(gamma))
    s_low = (log_scale - gamma * math.log(z_max)) / gamma
    tail_point = 40.0 + 2.0 * max(gamma, 1.0) * math.log(40.0 + gamma)
    s_high = math.log(tail_point / z_min)
    count = int(math.ceil((s_high - s_low) / EXPSUM_STEP)) + 1
    s = s_low + EXPSUM_STEP * np.arange(count)
    weights = EXPSUM_STEP * np.exp(gamma * s) / gamma_function(gamma)
    return np.exp(s), weights


class TruncatedKernel(LinearOperator):
    """
    Finite section of a kernel: rows m = 2..row_count+1, columns n = 2..col_count+1.

    ``mode`` selects how entries are produced:
      'dense'   materialise once (small truncations),
      'blocked' recompute exact blocks on every product,
      'expsum'  low-rank exponential-sum factorisation (standard kernels only),
      'auto'    dense when it fits in DENSE_CACHE_ENTRIES, otherwise expsum for
                standard kernels and blocked for measure kernels.
    """

    def __init__(self, spec, row_count, col_count, mode='auto'):
        if row_count < 1 or col_count < 1:
            raise DomainError("a truncation needs at least one row and one column")
        super().__init__(dtype=np.float64, shape=(int(row_count), int(col_count)))
        self.spec = spec
        log_row, self._row_core = _log_factors(spec, _indices(row_count), 'row')
        log_col, self._col_core = _log_factors(spec, _indices(col_count), 'col')
        self._row_factor = np.exp(log_row)
        self._col_factor = np.exp(log_col)
        self.mode = self._resolve_mode(mode)
        self._dense = None
        self._factors = None
        if self.mode == 'dense':
            self._dense = self._block(0, row_count, 0, col_count)
        elif self.mode == 'expsum':
            z_min = float(self._row_core.min() + self._col_core.min())
            z_max = float(self._row_core.max() + self._col_core.max())
            self._nodes, self._weights = _expsum_nodes(spec.params.gamma, z_min, z_max)
            if len(self._nodes) * max(row_count, col_count) <= EXPSUM_CACHE_ENTRIES:
                self._factors = list(self._factor_chunks())
        logger.debug("truncation %dx%d using %s mode", row_count, col_count, self.mode)

    def _resolve_mode(self, mode):
        rows, cols = self.shape
        if mode == 'auto':
            if rows * cols <= DENSE_CACHE_ENTRIES:
                return 'dense'
            return 'expsum' if isinstance(self.spec, StandardKernel) else 'blocked'
        if mode == 'expsum' and not isinstance(self.spec, StandardKernel):
            raise DomainError("the exponential-sum factorisation needs a standard kernel")
        if mode not in ('dense', 'blocked', 'expsum'):
            raise DomainError(f"unknown truncation mode {mode!r}")
        return mode

    def _block(self, r0, r1, c0, c1):
        core = _core_block(self.spec, self._row_core[r0:r1], self._col_core[c0:c1])
        return self._row_factor[r0:r1, None] * core * self._col_factor[None, c0:c1]

    def to_dense(self):
        if self._dense is not None:
            return self._dense
        rows, cols = self.shape
        return self._block(0, rows, 0, cols)

    def _factor_chunks(self):
        for k in range(0, len(self._nodes), EXPSUM_NODE_CHUNK):
            t = self._nodes[k:k + EXPSUM_NODE_CHUNK]
            left = np.exp(-np.outer(self._row_core, t))
            right = np.exp(-np.outer(self._col_core, t))
            yield left, right, self._weights[k:k + EXPSUM_NODE_CHUNK]

    def _chunks(self):
        return self._factors if self._factors is not None else self._factor_chunks()

    def _blocked_product(self, x, transpose):
        rows, cols = self.shape
        out_len, in_len = (cols, rows) if transpose else (rows, cols)

        def out_block(start):
            stop = min(start + ROW_BLOCK, out_len)
            partials = []
            for c0 in range(0, in_len, SUMMATION_BLOCK):
                c1 = min(c0 + SUMMATION_BLOCK, in_len)
                if transpose:
                    block = self._block(c0, c1, start, stop)
                    partials.append(block.T @ x[c0:c1])
                else:
                    block = self._block(start, stop, c0, c1)
                    partials.append(block @ x[c0:c1])
            return pairwise_sum(partials)

        starts = list(range(0, out_len, ROW_BLOCK))
        with ThreadPoolExecutor(max_workers=MAX_WORKERS) as pool:
            pieces = list(pool.map(out_block, starts))
        return np.concatenate(pieces)

    def _expsum_product(self, x, transpose):
        if transpose:
            scaled = self._row_factor * x
            parts = [right @ (w * (left.T @ scaled)) for left, right, w in self._chunks()]
            return self._col_factor * pairwise_sum(parts)
        scaled = self._col_factor * x
        parts = [left @ (w * (right.T @ scaled)) for left, right, w in self._chunks()]
        return self._row_factor * pairwise_sum(parts)

    def _product(self, x, transpose):
        x = np.asarray(x, dtype=float).ravel()
        if self.mode == 'dense':
            dense = self._dense.T if transpose else self._dense
            n = dense.shape[1]
            return pairwise_sum([dense[:, c:c + SUMMATION_BLOCK] @ x[c:c + SUMMATION_BLOCK]
                                 for c in range(0, n, SUMMATION_BLOCK)])
        if self.mode == 'expsum':
            return self._expsum_product(x, transpose)
        return self._blocked_product(x, transpose)

    def _matvec(self, x):
        return self._product(x, transpose=False)

    def _rmatvec(self, x):
        return self._product(x, transpose=True)



def truncated_operator(spec, row_count, col_count, mode='auto'):
    return TruncatedKernel(spec, row_count, col_count, mode=mode)


def apply_truncated(spec, a, row_count, mode='auto'):
    """b_m = sum_{n=2}^{N} K(m, n) a_n for m = 2..row_count+1."""
    if row_count < 1:
        raise DomainError(f"row_count must be >= 1, got {row_count}")
    if len(a) == 0:
        return WeightedSequence(np.zeros(row_count))
    kernel = truncated_operator(spec, row_count, len(a), mode=mode)
    return WeightedSequence(kernel.matvec(a.values))


def _lp_norm_values(values, p):
    magnitudes = np.abs(np.asarray(values, dtype=float))
    if magnitudes.size == 0:
        return 0.0
    largest = float(magnitudes.max())
    if largest == 0.0:
        return 0.0
    return largest * _blocked_sum((magnitudes / largest) ** p) ** (1.0 / p)


def lp_norm(a, p):
    """(sum |a_n|^p)^{1/p} with a fixed pairwise summation tree."""
    conjugate_exponent(p)
    values = a.values if isinstance(a, WeightedSequence) else a
    return _lp_norm_values(values, float(p))


def extremal_sequence(params, eps, N):
    """a_n = eps^{1/p} n^{-1/p} (log n)^{-(1 + beta eps)/p} for n = 2..N."""
    if not (eps > 0.0):
        raise DomainError(f"eps must be > 0, got {eps!r}")
    if N < START_INDEX:
        raise DomainError(f"N must be >= {START_INDEX}, got {N!r}")
    n = _indices(int(N) - START_INDEX + 1)
    p = params.p
    log_values = (math.log(eps) - np.log(n) - (1.0 + params.beta * eps) * np.log(np.log(n))) / p
    return WeightedSequence(np.exp(log_values))


def extremal_norm_p(params, eps, N):
    """
    ||a||_p^p of the untruncated extremal sequence: the exact sum up to N plus
    the integral tail (log N)^{-beta eps} / beta of eps x^{-1} (log x)^{-1-beta eps}.
    """
    a = extremal_sequence(params, eps, N)
    partial = _blocked_sum(a.values ** params.p)
    tail = math.log(N) ** (-params.beta * eps) / params.beta
    return partial + tail
