# This file builds the command-line parser and resolves job settings.

import argparse
import logging

from src.constants import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_CURVE_S_MAX,
    DEFAULT_CURVE_STEP,
    DEFAULT_DEGREE,
    DEFAULT_H_XI,
    DEFAULT_LOCAL_BLOCK,
    DEFAULT_MIN_SECOND_DERIV,
    DEFAULT_N_COUNT,
    DEFAULT_N_FROM,
    DEFAULT_N_TO,
    DEFAULT_NYSTROM_ORDER,
    DEFAULT_ORIGIN_DEGREE,
    DEFAULT_PLOT_STEP,
    DEFAULT_S_MAX,
    DEFAULT_SPACING_BIN,
    DEFAULT_SPACING_S_MAX,
    DEFAULT_STEP_FACTOR,
    DEFAULT_TWO_POINT_BIN,
    DEFAULT_TWO_POINT_S_MAX,
    DEFAULT_WINDOW,
    FORMAT_BASE_OFFSET,
    FORMAT_PLAIN,
    LAMBDA,
    MAX_CONDITIONED_COUNT,
    Q_OVER_LAMBDA,
    RESIDUAL_TOL,
    TOOLKIT_NAME,
    TOOLKIT_VERSION,
)
from src.errors import ArgumentError
from src.models import JobConfig

logger = logging.getLogger(__name__)

# Settings that steer the process rather than the computation
_PROCESS_KEYS = {'config', 'log_level', 'log_dir', 'handler', 'parser'}

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def float_list(text):
    """Comma-separated floats, e.g. '0.5,1,2'"""
    try:
        return [float(part) for part in str(text).split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def seed_value(text):
    try:
        value = int(text, 0) if isinstance(text, str) else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**64), got {value}")
    return value


class CLISetup:
    def __init__(self, app):
        self.app = app
        self.parser = None
        self._leaves = {}

    def build_parser(self):
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument('--config', help="key = value settings file; flags override it")
        common.add_argument('--log-level', default='INFO',
                            choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'])
        common.add_argument('--log-dir', help="also log to a daily rotating file in this directory")

        parser = argparse.ArgumentParser(
            prog=TOOLKIT_NAME,
            description="Spacing distributions of thinned sine-kernel processes and their 1/N^2 corrections",
        )
        parser.add_argument('--version', action='version', version=f"{TOOLKIT_NAME} {TOOLKIT_VERSION}")
        commands = parser.add_subparsers(dest='command', required=True)

        self._add_solve(commands, common)
        self._add_spacing(commands, common)
        self._add_det(commands, common)
        self._add_extrapolate(commands, common)
        self._add_zeros(commands, common)
        self.parser = parser
        return parser

    @staticmethod
    def _add_solver_options(sub):
        sub.add_argument('--degree', type=int, default=DEFAULT_DEGREE, help="Taylor degree per segment")
        sub.add_argument('--origin-degree', type=int, default=DEFAULT_ORIGIN_DEGREE)
        sub.add_argument('--step-factor', type=float, default=DEFAULT_STEP_FACTOR)
        sub.add_argument('--min-second-deriv', type=float, default=DEFAULT_MIN_SECOND_DERIV)
        sub.add_argument('--residual-tol', type=float, default=RESIDUAL_TOL)

    def _add_solve(self, commands, common):
        sub = commands.add_parser('solve', parents=[common], help="solve one transcendent")
        sub.add_argument('kind', choices=['sigma0', 'sigma1', 'u0', 'u1'])
        sub.add_argument('--xi', type=float, default=1.0)
        sub.add_argument('--s-max', '--smax', dest='s_max', type=float, default=DEFAULT_S_MAX)
        self._add_solver_options(sub)
        sub.add_argument('--sample-step', type=float, default=DEFAULT_PLOT_STEP)
        sub.add_argument('--out', required=True, help="transcendent JSON path")
        sub.add_argument('--samples', help="sampled CSV path (default: JSON path with .csv)")
        sub.set_defaults(handler='cmd_solve', parser=sub)
        self._leaves['solve'] = sub

    def _add_spacing(self, commands, common):
        sub = commands.add_parser('spacing', parents=[common], help="tabulate p(0;s;xi) and its 1/N^2 term")
        sub.add_argument('--xi', type=float, default=1.0)
        sub.add_argument('--path', choices=['sigma', 'u', 'both'], default='both')
        sub.add_argument('--grid-max', type=float, default=DEFAULT_CURVE_S_MAX)
        sub.add_argument('--grid-step', type=float, default=DEFAULT_CURVE_STEP)
        self._add_solver_options(sub)
        sub.add_argument('--tolerance', type=float, default=1e-5, help="cross-path consistency gate")
        sub.add_argument('--out', required=True)
        sub.add_argument('--discrepancy-out', help="per-point cross-path table (path=both)")
        sub.set_defaults(handler='cmd_spacing', parser=sub)
        self._leaves['spacing'] = sub

    def _add_det(self, commands, common):
        sub = commands.add_parser('det', parents=[common], help="Nystrom Fredholm determinants")
        sub.add_argument('--kernel', choices=['sine', 'finite'], default='sine')
        sub.add_argument('--N', dest='N', type=int)
        sub.add_argument('--xi', type=float, default=1.0)
        sub.add_argument('--s', dest='s', type=float_list, default=[0.5, 1.0, 2.0])
        sub.add_argument('--m', type=int, default=DEFAULT_NYSTROM_ORDER)
        sub.add_argument('--trace', action='store_true', help="add the 1/N^2 resolvent trace")
        sub.add_argument('--conditioned', type=int, choices=range(0, MAX_CONDITIONED_COUNT + 1),
                         help="add E(M;s) of the unthinned process")
        sub.add_argument('--h-xi', type=float, default=DEFAULT_H_XI)
        sub.add_argument('--out', required=True)
        sub.set_defaults(handler='cmd_det', parser=sub)
        self._leaves['det'] = sub

    def _add_extrapolate(self, commands, common):
        sub = commands.add_parser('extrapolate', parents=[common], help="finite-N spacing extrapolated in N")
        sub.add_argument('--n-from', type=int, default=DEFAULT_N_FROM)
        sub.add_argument('--n-to', type=int, default=DEFAULT_N_TO)
        sub.add_argument('--count', type=int, default=DEFAULT_N_COUNT)
        sub.add_argument('--xi', type=float, default=1.0)
        sub.add_argument('--s', dest='s', type=float_list, default=[0.5, 1.0, 2.0, 3.0])
        sub.add_argument('--m', type=int, default=DEFAULT_NYSTROM_ORDER)
        sub.add_argument('--workers', type=int, default=1)
        self._add_solver_options(sub)
        sub.add_argument('--out', required=True)
        sub.set_defaults(handler='cmd_extrapolate', parser=sub)
        self._leaves['extrapolate'] = sub

    def _add_zeros(self, commands, common):
        zeros = commands.add_parser('zeros', help="zeros data pipeline")
        steps = zeros.add_subparsers(dest='step', required=True)

        sub = steps.add_parser('unfold', parents=[common], help="heights to unit-density points")
        sub.add_argument('--input', required=True)
        sub.add_argument('--format', choices=[FORMAT_PLAIN, FORMAT_BASE_OFFSET], default=FORMAT_PLAIN)
        sub.add_argument('--mode', choices=['global', 'local'], default='global')
        sub.add_argument('--block', type=int, default=DEFAULT_LOCAL_BLOCK)
        sub.add_argument('--chunk-size', type=int, default=DEFAULT_CHUNK_SIZE)
        sub.add_argument('--out', required=True)
        sub.set_defaults(handler='cmd_zeros_unfold', parser=sub)
        self._leaves['zeros_unfold'] = sub

        sub = steps.add_parser('thin', parents=[common], help="independent deletion with probability 1 - xi")
        sub.add_argument('--input', required=True)
        sub.add_argument('--xi', type=float, required=True)
        sub.add_argument('--seed', type=seed_value, required=True)
        sub.add_argument('--chunk-size', type=int, default=DEFAULT_CHUNK_SIZE)
        sub.add_argument('--out', required=True)
        sub.set_defaults(handler='cmd_zeros_thin', parser=sub)
        self._leaves['zeros_thin'] = sub

        sub = steps.add_parser('twopoint', parents=[common], help="two-point correlation histogram")
        sub.add_argument('--input', required=True)
        sub.add_argument('--s-max', dest='s_max', type=float, default=DEFAULT_TWO_POINT_S_MAX)
        sub.add_argument('--bin-width', type=float, default=DEFAULT_TWO_POINT_BIN)
        sub.add_argument('--window', type=int, default=DEFAULT_WINDOW)
        sub.add_argument('--rescale', action='store_true', help="multiply gaps by xi (unit density)")
        sub.add_argument('--chunk-size', type=int, default=DEFAULT_CHUNK_SIZE)
        sub.add_argument('--out', required=True)
        sub.set_defaults(handler='cmd_zeros_twopoint', parser=sub)
        self._leaves['zeros_twopoint'] = sub

        sub = steps.add_parser('nnspacing', parents=[common], help="nearest-neighbour spacing histogram")
        sub.add_argument('--input', required=True)
        sub.add_argument('--s-max', dest='s_max', type=float, default=DEFAULT_SPACING_S_MAX)
        sub.add_argument('--bin-width', type=float, default=DEFAULT_SPACING_BIN)
        sub.add_argument('--rescale', action='store_true')
        sub.add_argument('--chunk-size', type=int, default=DEFAULT_CHUNK_SIZE)
        sub.add_argument('--out', required=True)
        sub.set_defaults(handler='cmd_zeros_nnspacing', parser=sub)
        self._leaves['zeros_nnspacing'] = sub

        sub = steps.add_parser('compare', parents=[common], help="residuals against a theory curve")
        sub.add_argument('--input', required=True, help="histogram CSV from twopoint or nnspacing")
        sub.add_argument('--theory', choices=['rmt', 'poisson'], default='rmt')
        sub.add_argument('--height', type=float, help="height E (default: from rho_bar metadata)")
        sub.add_argument('--lambda', dest='Lambda', type=float, default=LAMBDA)
        sub.add_argument('--q-over-lambda', type=float, default=Q_OVER_LAMBDA)
        sub.add_argument('--curve', help="spacing curve CSV for nnspacing theory")
        sub.add_argument('--out', required=True)
        sub.set_defaults(handler='cmd_zeros_compare', parser=sub)
        self._leaves['zeros_compare'] = sub

    # Settings resolution

    def parse(self, argv):
        """
        Parse argv, folding in the --config file underneath explicit flags.

        File values go through the same type callables as the flags and may
        satisfy required flags, so the file is applied before the full parse.
        """
        parser = self.parser or self.build_parser()
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument('--config')
        known, _ = pre.parse_known_args(argv)
        if known.config:
            leaf = self._leaf_for(argv)
            if leaf is not None:
                self._apply_config_file(leaf, self.app.data.read_config_file(known.config))
        return parser.parse_args(argv)

    def _leaf_for(self, argv):
        words = [a for a in argv if not a.startswith('-')]
        if not words:
            return None
        if words[0] == 'zeros' and len(words) > 1:
            return self._leaves.get(f"zeros_{words[1]}")
        return self._leaves.get(words[0])

    @staticmethod
    def _convert(action, key, text):
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ArgumentError(f"config key {key!r} expects true/false, got {text!r}")
        value = text
        if action.type is not None:
            try:
                value = action.type(text)
            except (argparse.ArgumentTypeError, TypeError, ValueError) as e:
                raise ArgumentError(f"config key {key!r}: {e}") from None
        if action.choices is not None and value not in action.choices:
            raise ArgumentError(f"config key {key!r}: {value!r} not one of {list(action.choices)}")
        return value

    def _apply_config_file(self, sub, values):
        actions = {action.dest: action for action in sub._actions if action.dest not in ('help', 'config')}
        defaults = {}
        for key, text in values.items():
            if key in ('command', 'step', 'generator'):
                continue
            if key not in actions or key in ('handler', 'parser'):
                raise ArgumentError(f"unknown config key {key!r}")
            defaults[key] = self._convert(actions[key], key, text)
        # a file value satisfies a required flag; an explicit flag still wins
        for key in defaults:
            actions[key].required = False
        sub.set_defaults(**defaults)
        logger.debug(f"Config file supplied {sorted(defaults)}")

    @staticmethod
    def job_config(args):
        name = args.command if args.command != 'zeros' else f"zeros {args.step}"
        values = {k: v for k, v in vars(args).items() if k not in _PROCESS_KEYS | {'command', 'step'}}
        return JobConfig(command=name, values=values)
