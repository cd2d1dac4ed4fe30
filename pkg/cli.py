"""
mhilb: command-line front end for the multiplicative Hilbert operator experiments.

    python cli.py predict --p 2 --gamma 1
    python cli.py schur --indices 2,10,100
    python cli.py norm --N 500 --method both --format csv --output reports/norm.csv

Exit codes: 0 success, 1 a verified inequality failed, 2 usage error, 3 I/O error.
"""

import argparse
import logging
import sys

from api.services.config_service import COMMANDS, METHODS, OUTPUT_FORMATS, build_config, read_config_file
from api.services.errors import CertificationError, ConfigError, DomainError
from api.services.experiment_service import run_experiment
from api.services.report_service import render, write_report

logger = logging.getLogger('mhilb')

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

COMMAND_HELP = {
    'predict': 'classify boundedness and evaluate the closed-form norm',
    'norm': 'estimate the l^p norm of a finite section (optionally sweep and extrapolate)',
    'schur': 'evaluate the Schur sums E(m) and F(n) with certified tails',
    'extremal': 'Rayleigh lower bounds from the extremal family next to the Schur upper bound',
    'scan': 'truncation sweeps across gamma values with fitted growth exponents',
    'carleson': 'moment table, Carleson constant and the sufficiency check for a measure',
}

# flag -> (RunConfig key, help)
FLAGS = {
    '--p': ('p', 'exponent p > 1'),
    '--alpha': ('alpha', 'row exponent in (0, 1]'),
    '--beta': ('beta', 'column exponent in (0, 1]'),
    '--gamma': ('gamma', 'kernel exponent > 0'),
    '--mu': ('mu', 'row weight'),
    '--nu': ('nu', 'column weight'),
    '--N': ('N', 'truncation size (indices 2..N)'),
    '--schedule': ('schedule', 'comma-separated increasing truncation sizes'),
    '--measure-schedule': ('measure_schedule', 'truncation sizes for the measure kernel'),
    '--eps': ('eps_values', 'comma-separated eps values for the extremal family'),
    '--gamma-values': ('gamma_values', 'comma-separated gamma values to scan'),
    '--indices': ('indices', 'comma-separated Schur indices m, n >= 2'),
    '--n-values': ('n_values', 'comma-separated n values for the moment table'),
    '--tol': ('tol', 'relative stopping tolerance'),
    '--max-iter': ('max_iter', 'iteration cap'),
    '--tail-tol': ('tail_tol', 'slack allowed in the certified Schur tail'),
    '--s': ('s', 'Carleson exponent (defaults to 1 + (mu - nu)/p)'),
    '--measure': ('measure_path', 'JSON measure file'),
    '--output': ('output_path', 'report file (stdout when omitted)'),
}


class UsageErrorParser(argparse.ArgumentParser):
    """argparse that raises ConfigError instead of exiting, so main owns the exit codes."""

    def error(self, message):
        raise ConfigError(message)


def _add_run_flags(parser):
    parser.add_argument('--config', help='JSON file with RunConfig keys')
    for flag, (key, help_text) in FLAGS.items():
        parser.add_argument(flag, dest=key, help=help_text)
    parser.add_argument('--method', choices=METHODS, help='norm method')
    parser.add_argument('--sweep', action='store_true', help='also run a truncation sweep over the schedule')
    parser.add_argument('--format', dest='output_format', choices=OUTPUT_FORMATS, help='report format')
    parser.add_argument('--verbose', '-v', action='store_true', help='debug logging on stderr')


def build_parser():
    parser = UsageErrorParser(prog='mhilb', description='Generalized multiplicative Hilbert operator experiments')
    subparsers = parser.add_subparsers(dest='command', metavar='command', required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=COMMAND_HELP[command], argument_default=argparse.SUPPRESS)
        _add_run_flags(sub)
    return parser


def parse_config(argv):
    """Flags override config-file values, which override the defaults table."""
    if not argv:
        raise ConfigError("a command is required: " + ', '.join(COMMANDS))
    namespace = vars(build_parser().parse_args(argv))
    command = namespace.pop('command')
    config_path = namespace.pop('config', None)
    namespace.pop('verbose', None)
    if namespace.get('sweep') is False:
        namespace.pop('sweep')
    file_values = read_config_file(config_path) if config_path else {}
    return build_config(command, file_values, namespace)


def run(config, stream=None):
    """Run one experiment and write its report; returns the exit code."""
    stream = sys.stdout if stream is None else stream
    try:
        result = run_experiment(config)
        write_report(render(result, config), config.output_path, stream)
    except CertificationError as e:
        logger.error("%s", e)
        return EXIT_VIOLATION
    except DomainError as e:
        print(f"mhilb: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"mhilb: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    if result.violated:
        logger.warning("%s found a violated inequality", config.command)
        return EXIT_VIOLATION
    return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    verbose = '--verbose' in argv or '-v' in argv
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        config = parse_config(argv)
    except DomainError as e:
        print(f"mhilb: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"mhilb: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    return run(config)


if __name__ == '__main__':
    sys.exit(main())
