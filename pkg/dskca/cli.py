"""
Implements the command line surface.

Subcommands:
    fit {kpca,gha,ksvd,kcca}   train a model and write it (and its trace)
    eval                       write the evaluations of a model on a dataset
    project                    write a dataset with the evaluations appended (for plotting)
    slice                      write one-hot slice indicators of a response column
    diagnose rate              print the log-log slope of a trace
    diagnose angle             print sin^2 of the angle between a model and a reference
    oracle {quadrature,dual}   write exact reference eigenfunctions on a probe file

Exit codes: 0 success, 1 usage error, 2 runtime error (see ``errors.EXIT_CODES``).

.. class:: ArgumentParser(argparse.ArgumentParser)
    Parser raising errors.UsageError instead of exiting

.. function:: build_parser() -> ArgumentParser
.. function:: run_command(argv: Optional[Sequence[str]] = None) -> int
    Run one command and return its exit code
.. function:: main() -> int
    Configure logging and run the command line of the process
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import (
    Any,
    Optional,
    Sequence
)

import numpy as np
import yaml

from . import (
    datasets,
    errors,
    settings
)
from .component_analysis import (
    diagnostics,
    oracles,
    random_streams,
    solvers
)
from .component_analysis import settings as numeric_settings
from .component_analysis.kernel_features import (
    FeatureForm,
    KernelFamily,
    KernelSpec,
    median_bandwidth
)
from .component_analysis.model import PairedModel
from .serialization import ModelFile
from .utils.logging_ import logging_


logger = logging.getLogger(__name__)

# fit flags that map onto TrainConfig fields (flag destination -> config key)
CONFIG_FLAGS = {
    'k': 'k',
    'iters': 'iterations',
    'data_batch': 'data_batch',
    'feature_batch': 'feature_batch',
    'total_features': 'total_features',
    'theta0': 'theta0',
    'theta1': 'theta1',
    'seed': 'seed',
    'revisit': 'revisit',
    'sampling': 'sampling',
    'ridge': 'ridge',
    'trace_stride': 'trace_stride',
    'store_frequencies': 'store_frequencies'
}
REQUIRED_CONFIG = ('k', 'iterations', 'data_batch', 'feature_batch', 'total_features', 'theta0')

EPILOG = """\
subcommand flags:
  fit {kpca,gha,ksvd,kcca} --data F [--data-y F] --out F [--kernel K] [--bandwidth B|median]
      [--kernel-y K] [--bandwidth-y B] [--config YAML] [--k N] [--iters T] [--data-batch N]
      [--feature-batch N] [--total-features N] [--theta0 X] [--theta1 X] [--seed S]
      [--revisit {cycle,none}] [--sampling {with_replacement,epoch_shuffle}] [--ridge X] [--trace F] [--trace-stride N]
      [--probe F] [--probe-y F] [--reference F] [--monitor-view {left,right}]
  eval --model F --data F --out F [--view {left,right}]
  project --model F --data F --out F [--view {left,right}]
  slice --data F --slices N --out F [--column C]
  diagnose rate --trace F [--window X]
  diagnose angle --model F --data F (--reference F | --dual) [--view {left,right}]
  oracle quadrature --k N --probe F --out F [--kernel K] [--bandwidth B] [--mean X] [--std X] [--grid N]
  oracle dual --data F --k N --probe F --out F [--kernel K] [--bandwidth B] [--seed S]

data flags of every command reading a dataset: [--format {csv,f64le}] [--skip-header]
run `dskca <command> --help` for details\
"""


class ArgumentParser(argparse.ArgumentParser):
    """ Implements argument parser that raises errors.UsageError (exit code 1) instead of exiting """

    def error(self, message: str) -> None:
        raise errors.UsageError(f'{self.format_usage().strip()}\n{self.prog}: error: {message}')


def _bandwidth(value: str) -> Any:
    if value == 'median':
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected a number or "median", got {value!r}') from None


# ----- PARSER -----

def _add_data_arguments(parser: ArgumentParser, required: bool = True) -> None:
    parser.add_argument('--data', required=required, help='dataset file (left view)')
    parser.add_argument('--format', choices=[item.value for item in datasets.DatasetFormat], default='csv')
    parser.add_argument('--skip-header', action='store_true', help='ignore the first CSV row')


def _add_kernel_arguments(parser: ArgumentParser, suffix: str = '', default: Optional[str] = 'gaussian') -> None:
    parser.add_argument(f'--kernel{suffix}', choices=[item.value for item in KernelFamily], default=default)
    parser.add_argument(f'--bandwidth{suffix}', type=_bandwidth, default=None,
                        help='number or "median" (median trick, default)')


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='dskca', description='Doubly stochastic kernel component analysis', epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest='command', required=True)

    # fit
    fit = commands.add_parser('fit', help='train a model', formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    fit.add_argument('task', choices=[item.value for item in solvers.Task], help='component analysis to run')
    _add_data_arguments(fit)
    fit.add_argument('--data-y', help='dataset file of the right view (ksvd, kcca)')
    _add_kernel_arguments(fit)
    _add_kernel_arguments(fit, suffix='-y', default=None)
    fit.add_argument('--feature-form', choices=[item.value for item in FeatureForm], default='phase',
                     help='random Fourier feature form')
    fit.add_argument('--config', help='YAML file with training configuration (flags override it)')
    fit.add_argument('--k', type=int, help='number of components')
    fit.add_argument('--iters', type=int, help='number of iterations T')
    fit.add_argument('--data-batch', type=int, help='data points per iteration (B_x)')
    fit.add_argument('--feature-batch', type=int, help='random features per iteration (B_w)')
    fit.add_argument('--total-features', type=int, help='feature budget (multiple of --feature-batch)')
    fit.add_argument('--theta0', type=float, help='step size numerator, eta_t = theta0 / (1 + theta1 t)')
    fit.add_argument('--theta1', type=float, help='step size decay (0 for a constant step)')
    fit.add_argument('--seed', type=int, help='run seed')
    fit.add_argument('--revisit', choices=[item.value for item in solvers.Revisit],
                     help='what to do once the feature budget is spent')
    fit.add_argument('--sampling', choices=[item.value for item in solvers.Sampling], help='mini-batch sampling')
    fit.add_argument('--ridge', type=float, help='kcca ridge on the view covariances')
    fit.add_argument('--trace-stride', type=int, help='iterations between trace rows')
    fit.add_argument('--store-frequencies', action='store_true', default=None,
                     help='keep feature blocks in memory instead of regenerating them')
    fit.add_argument('--out', required=True, help='model file to write')
    fit.add_argument('--trace', help='trace CSV to write')
    fit.add_argument('--probe', help='probe points for the potential column of the trace')
    fit.add_argument('--probe-y', help='right view probe points (paired tasks)')
    fit.add_argument('--monitor-view', choices=['left', 'right'], default='left',
                     help='view compared with --reference (right needs --probe-y)')
    fit.add_argument('--reference', help='reference evaluations on the probe points [m x k]')
    fit.add_argument('--no-timing', action='store_true', help='write zero seconds to the trace')
    fit.set_defaults(handler=_fit)

    # eval / project
    for name, handler, help_text in (('eval', _eval, 'write model evaluations'),
                                     ('project', _project, 'write data with model evaluations appended')):
        command = commands.add_parser(name, help=help_text)
        command.add_argument('--model', required=True)
        _add_data_arguments(command)
        command.add_argument('--view', choices=['left', 'right'], default='left')
        command.add_argument('--out', required=True)
        command.set_defaults(handler=handler)

    # slice
    slices = commands.add_parser('slice', help='write one-hot slice indicators of a response (kernel SIR right view)')
    _add_data_arguments(slices)
    slices.add_argument('--column', type=int, default=1, help='1-based response column')
    slices.add_argument('--slices', type=int, required=True, help='number of equal-count slices')
    slices.add_argument('--out', required=True)
    slices.set_defaults(handler=_slice)

    # diagnose
    diagnose = commands.add_parser('diagnose', help='convergence diagnostics')
    diagnose_commands = diagnose.add_subparsers(dest='diagnostic', required=True)

    rate = diagnose_commands.add_parser('rate', help='log-log slope of the potential')
    rate.add_argument('--trace', required=True)
    rate.add_argument('--window', type=float, default=0.5)
    rate.set_defaults(handler=_diagnose_rate)

    angle = diagnose_commands.add_parser('angle', help='sin^2 of the angle to a reference subspace')
    angle.add_argument('--model', required=True)
    _add_data_arguments(angle)
    angle.add_argument('--view', choices=['left', 'right'], default='left')
    references = angle.add_mutually_exclusive_group(required=True)
    references.add_argument('--reference', help='reference evaluations on the data points [n x k]')
    references.add_argument('--dual', action='store_true', help='compare with exact dual kernel PCA')
    angle.set_defaults(handler=_diagnose_angle)

    # oracle
    oracle = commands.add_parser('oracle', help='exact reference eigenfunctions')
    oracle_commands = oracle.add_subparsers(dest='oracle', required=True)

    quadrature = oracle_commands.add_parser('quadrature', help='population operator of a 1-D gaussian density')
    _add_kernel_arguments(quadrature)
    quadrature.add_argument('--mean', type=float, default=0.0)
    quadrature.add_argument('--std', type=float, default=1.0)
    quadrature.add_argument('--grid', type=int, default=400)
    quadrature.add_argument('--k', type=int, required=True)
    quadrature.add_argument('--probe', required=True)
    quadrature.add_argument('--format', choices=[item.value for item in datasets.DatasetFormat], default='csv')
    quadrature.add_argument('--skip-header', action='store_true')
    quadrature.add_argument('--out', required=True)
    quadrature.set_defaults(handler=_oracle_quadrature)

    dual = oracle_commands.add_parser('dual', help='empirical operator via the gram matrix')
    _add_data_arguments(dual)
    _add_kernel_arguments(dual)
    dual.add_argument('--k', type=int, required=True)
    dual.add_argument('--seed', type=int, default=0, help='seed of the median trick')
    dual.add_argument('--probe', required=True)
    dual.add_argument('--out', required=True)
    dual.set_defaults(handler=_oracle_dual)

    return parser


# ----- HELPERS -----

def _kernel(family: str, bandwidth: Any, data: np.ndarray, seed: int, feature_form: str = 'phase') -> KernelSpec:
    family = KernelFamily(family)
    if not family.is_fourier:
        bandwidth = 1.0
    elif bandwidth is None or bandwidth == 'median':
        median_seed = random_streams.derive_seed(seed, numeric_settings.MEDIAN_STREAM)
        bandwidth = median_bandwidth(data, numeric_settings.MEDIAN_SUBSAMPLE, seed=median_seed)
        logger.info('median trick bandwidth: %.6g', bandwidth)

    return KernelSpec(family=family, bandwidth=bandwidth, dim=data.shape[1], feature_form=feature_form)


def _train_config(args: argparse.Namespace) -> solvers.TrainConfig:
    values = {}
    if args.config:
        try:
            with open(args.config, encoding='utf8') as file:
                loaded = yaml.safe_load(file) or {}
        except (OSError, yaml.YAMLError) as error:
            raise errors.ConfigurationError(f'cannot read configuration {args.config}: {error}') from error
        if not isinstance(loaded, dict):
            raise errors.ConfigurationError(f'{args.config} must hold a mapping')
        values.update(loaded)

    for flag, key in CONFIG_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            values[key] = value

    missing = [key for key in REQUIRED_CONFIG if key not in values]
    if missing:
        raise errors.UsageError(f'missing training settings (flags or --config): {", ".join(missing)}')

    return solvers.TrainConfig.from_mapping(values)


def _view(model_file: ModelFile, view: str) -> Any:
    if isinstance(model_file.model, PairedModel):
        return model_file.model.left if view == 'left' else model_file.model.right
    if view == 'right':
        raise errors.UsageError(f'{model_file.task.value} models have no right view')

    return model_file.model


# ----- HANDLERS -----

def _fit(args: argparse.Namespace) -> int:
    task = solvers.Task(args.task)
    config = _train_config(args)

    if task.is_paired:
        if not args.data_y:
            raise errors.UsageError(f'{task.value} needs --data-y')
        dataset = datasets.load_paired(args.data, args.data_y, args.format, args.skip_header)
    else:
        dataset = datasets.load_dataset(args.data, args.format, args.skip_header)

    kernel = _kernel(args.kernel, args.bandwidth, dataset.values, config.seed, args.feature_form)
    kernel_y = None
    if task.is_paired:
        bandwidth_y = args.bandwidth_y if args.bandwidth_y is not None else args.bandwidth
        kernel_y = _kernel(args.kernel_y or args.kernel, bandwidth_y, dataset.paired,
                           random_streams.derive_seed(config.seed, numeric_settings.VIEW_STREAM), args.feature_form)

    monitor = None
    if args.probe or args.reference:
        if not (args.probe and args.reference):
            raise errors.UsageError('--probe and --reference go together')
        probe = datasets.load_dataset(args.probe, args.format, args.skip_header).values
        probe_y = None
        if args.probe_y:
            if not task.is_paired:
                raise errors.UsageError(f'{task.value} has no right view for --probe-y')
            probe_y = datasets.load_dataset(args.probe_y, args.format, args.skip_header).values
        reference = datasets.load_dataset(args.reference, 'csv').values
        monitor = diagnostics.SubspaceMonitor(probe, reference, probe_y=probe_y, view=args.monitor_view)

    result = solvers.fit(task, solvers.ArraySource(dataset.values, dataset.paired), config, kernel,
                         kernel_y=kernel_y, monitor=monitor, timing=not args.no_timing)

    ModelFile(task=task, model=result.model, total_features=config.total_features).save(args.out)
    if args.trace:
        result.trace.to_csv(args.trace)

    return 0


def _eval(args: argparse.Namespace) -> int:
    model = _view(ModelFile.load(args.model), args.view)
    dataset = datasets.load_dataset(args.data, args.format, args.skip_header)

    datasets.write_csv(args.out, model.evaluate(dataset.values))

    return 0


def _project(args: argparse.Namespace) -> int:
    model = _view(ModelFile.load(args.model), args.view)
    dataset = datasets.load_dataset(args.data, args.format, args.skip_header)

    header = [f'x{column + 1}' for column in range(dataset.dim)] + [f'h{column + 1}' for column in range(model.k)]
    datasets.write_csv(args.out, np.hstack((dataset.values, model.evaluate(dataset.values))), header=header)

    return 0


def _slice(args: argparse.Namespace) -> int:
    values = datasets.load_dataset(args.data, args.format, args.skip_header).values
    if not 1 <= args.column <= values.shape[1]:
        raise errors.UsageError(f'--column must be in [1, {values.shape[1]}], got {args.column}')

    datasets.write_csv(args.out, datasets.slice_indicators(values[:, args.column - 1], args.slices))

    return 0


def _diagnose_rate(args: argparse.Namespace) -> int:
    slope = diagnostics.rate_fit(diagnostics.DiagnosticsTrace.read_csv(args.trace), args.window)
    print(f'{slope:.6f}')

    return 0


def _diagnose_angle(args: argparse.Namespace) -> int:
    model = _view(ModelFile.load(args.model), args.view)
    points = datasets.load_dataset(args.data, args.format, args.skip_header).values

    if args.dual:
        reference = oracles.dual_kpca(points, model.spec, model.k).evaluate(points)
    else:
        reference = datasets.load_dataset(args.reference, 'csv').values

    print(f'{diagnostics.sin2_subspace_empirical(reference, model.evaluate(points)):.6g}')

    return 0


def _oracle_quadrature(args: argparse.Namespace) -> int:
    family = KernelFamily(args.kernel)
    if args.bandwidth == 'median':
        raise errors.UsageError('the quadrature oracle needs a numeric --bandwidth')
    spec = KernelSpec(family=family, bandwidth=1.0 if args.bandwidth is None else args.bandwidth, dim=1)

    solution = oracles.quadrature_operator_eig(spec, oracles.GaussianDensity(args.mean, args.std), args.grid, args.k)
    logger.info('operator eigenvalues: %s', ', '.join(f'{value:.6g}' for value in solution.eigenvalues))

    probe = datasets.load_dataset(args.probe, args.format, args.skip_header).values
    datasets.write_csv(args.out, solution.evaluate(probe))

    return 0


def _oracle_dual(args: argparse.Namespace) -> int:
    points = datasets.load_dataset(args.data, args.format, args.skip_header).values
    spec = _kernel(args.kernel, args.bandwidth, points, args.seed)

    solution = oracles.dual_kpca(points, spec, args.k)
    logger.info('operator eigenvalues: %s', ', '.join(f'{value:.6g}' for value in solution.eigenvalues))

    probe = datasets.load_dataset(args.probe, args.format, args.skip_header).values
    datasets.write_csv(args.out, solution.evaluate(probe))

    return 0


# - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - - -

def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    :param argv: arguments without the program name (``sys.argv[1:]`` if omitted)
    :type argv: Optional[Sequence[str]]

    :return: exit code: 0 success, 1 usage error, 2 runtime error
    :rtype: int
    """

    parser = build_parser()

    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except SystemExit as exit_:
        # --help
        return exit_.code if isinstance(exit_.code, int) else 0
    except errors.UsageError as error:
        print(error, file=sys.stderr)
        return errors.EXIT_CODES[errors.UsageError]
    except errors.DskcaError as error:
        logger.error('%s: %s', type(error).__name__, error, exc_info=error)
        return errors.EXIT_CODES.get(type(error), error.exit_code)
    except OSError as error:
        logger.error('I/O error: %s', error, exc_info=error)
        return errors.DskcaError.exit_code


def main() -> int:
    logging_.setup_logging(settings.LOGGING_CONFIG_PATH)

    return run_command(sys.argv[1:])
