"""
Run configuration shared by the command line and the HTTP endpoints.

Values are resolved from three layers, lowest precedence first: the
DEFAULTS table, a JSON config file, then explicit flags (or the
``options`` object of an HTTP request).
"""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from typing import List, Optional

from api.services.errors import ConfigError, DomainError
from api.services.operator_service import OperatorParams

logger = logging.getLogger(__name__)

COMMANDS = ('predict', 'norm', 'schur', 'extremal', 'scan', 'carleson')
METHODS = ('power', 'oracle', 'both')
OUTPUT_FORMATS = ('csv', 'json')

DEFAULTS = {
    'p': 2.0,
    'alpha': 1.0,
    'beta': 1.0,
    'gamma': 1.0,
    'mu': 0.0,
    'nu': 0.0,
    'N': 500,
    'schedule': [100, 500, 2000, 10_000, 30_000],
    'measure_schedule': [100, 200, 400, 800],
    'eps_values': [0.2, 0.1, 0.05],
    'gamma_values': [0.5, 0.75, 1.0, 1.25],
    'indices': [2, 3, 10, 100, 10_000],
    'n_values': [3, 100, 1_000_000],
    'tol': 1e-10,
    'max_iter': 10_000,
    'tail_tol': 1e-8,
    'method': 'power',
    'sweep': False,
    's': None,
    'measure_path': None,
    'measure': None,
    'output_path': None,
    'output_format': 'json',
}

REAL_KEYS = ('p', 'alpha', 'beta', 'gamma', 'mu', 'nu', 'tol', 'tail_tol')
INT_KEYS = ('N', 'max_iter')
INT_LIST_KEYS = ('schedule', 'measure_schedule', 'indices', 'n_values')
REAL_LIST_KEYS = ('eps_values', 'gamma_values')


@dataclass(frozen=True)
class RunConfig:
    command: str
    p: float
    alpha: float
    beta: float
    gamma: float
    mu: float
    nu: float
    N: int
    schedule: List[int]
    measure_schedule: List[int]
    eps_values: List[float]
    gamma_values: List[float]
    indices: List[int]
    n_values: List[int]
    tol: float
    max_iter: int
    tail_tol: float
    method: str
    sweep: bool
    s: Optional[float]
    measure_path: Optional[str]
    measure: Optional[dict]
    output_path: Optional[str]
    output_format: str

    @property
    def params(self):
        return OperatorParams(p=self.p, alpha=self.alpha, beta=self.beta,
                              gamma=self.gamma, mu=self.mu, nu=self.nu)

    def as_dict(self):
        return asdict(self)


def _real(key, value):
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a real number, got {value!r}")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a real number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {value!r}")
    return value


def _integer(key, value):
    number = _real(key, value)
    if number != int(number):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(number)


def _as_list(key, value):
    if isinstance(value, str):
        value = [item for item in value.split(',') if item.strip()]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{key} must be a list, got {value!r}")
    return list(value)


def coerce_value(key, value):
    if key in REAL_KEYS:
        return _real(key, value)
    if key in INT_KEYS:
        return _integer(key, value)
    if key in INT_LIST_KEYS:
        return [_integer(key, item) for item in _as_list(key, value)]
    if key in REAL_LIST_KEYS:
        return [_real(key, item) for item in _as_list(key, value)]
    if key == 's':
        return None if value is None else _real(key, value)
    if key == 'sweep':
        if isinstance(value, str):
            return value.strip().lower() in ('1', 'true', 'yes', 'on')
        return bool(value)
    if key == 'measure':
        if value is not None and not isinstance(value, dict):
            raise ConfigError("measure must be a JSON object with atoms and pieces")
        return value
    if key in ('measure_path', 'output_path'):
        return None if value is None else str(value)
    if key == 'method':
        if value not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {value!r}")
        return value
    if key == 'output_format':
        if value not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {', '.join(OUTPUT_FORMATS)}, got {value!r}")
        return value
    raise ConfigError(f"unknown configuration key {key!r}")


def read_config_file(path):
    """Read a flat JSON object of RunConfig keys. OSError propagates for unreadable files."""
    with open(path, 'r', encoding='utf-8') as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return doc


def _check_strictly_increasing(key, values):
    if not values:
        raise ConfigError(f"{key} must not be empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{key} must be strictly increasing, got {values}")


def validate(config):
    """Check the downstream preconditions before anything runs."""
    try:
        params = config.params
    except DomainError as e:
        raise ConfigError(str(e))
    if config.N < 2:
        raise ConfigError(f"N must be >= 2, got {config.N}")
    if not (0.0 < config.tol < 1.0):
        raise ConfigError(f"tol must lie in (0, 1), got {config.tol}")
    if config.max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {config.max_iter}")
    if not (config.tail_tol > 0.0):
        raise ConfigError(f"tail_tol must be > 0, got {config.tail_tol}")
    for key in ('schedule', 'measure_schedule'):
        values = getattr(config, key)
        _check_strictly_increasing(key, values)
        if values[0] < 3:
            raise ConfigError(f"{key} entries must be >= 3, got {values[0]}")
    if any(eps <= 0.0 for eps in config.eps_values) or not config.eps_values:
        raise ConfigError("eps_values must be a nonempty list of positive reals")
    if any(g <= 0.0 for g in config.gamma_values) or not config.gamma_values:
        raise ConfigError("gamma_values must be a nonempty list of positive reals")
    if not config.indices or any(i < 2 for i in config.indices):
        raise ConfigError("indices must be a nonempty list of integers >= 2")
    if not config.n_values or any(n < 2 for n in config.n_values):
        raise ConfigError("n_values must be a nonempty list of integers >= 2")
    if config.s is not None and config.s <= 0.0:
        raise ConfigError(f"s must be > 0, got {config.s}")
    if config.method == 'oracle' or config.method == 'both':
        if abs(params.p - 2.0) > 1e-12:
            raise ConfigError("the spectral oracle method needs p = 2")
    if config.command == 'carleson':
        if config.measure is None and config.measure_path is None:
            raise ConfigError("the carleson command needs a measure (measure_path or inline measure)")
        if config.measure_path is not None and not os.path.isfile(config.measure_path):
            raise FileNotFoundError(f"measure file not found: {config.measure_path}")
    return config


def build_config(command, file_values=None, overrides=None):
    """Merge DEFAULTS < file values < overrides into a validated RunConfig."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    merged = {key: list(value) if isinstance(value, list) else value for key, value in DEFAULTS.items()}
    for layer in (file_values or {}, overrides or {}):
        for key, value in layer.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown configuration key {key!r}")
            merged[key] = coerce_value(key, value)
    config = RunConfig(command=command, **merged)
    logger.debug("resolved config: %s", config.as_dict())
    return validate(config)
