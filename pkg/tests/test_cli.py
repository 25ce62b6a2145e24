"""
Test the command line surface
"""

import numpy as np
import pytest

from dskca import (
    cli,
    datasets,
    settings
)
from dskca.serialization import ModelFile


FIT_FLAGS = ['--k', '2', '--iters', '200', '--data-batch', '16', '--feature-batch', '16',
             '--total-features', '1024', '--theta0', '0.5', '--theta1', '0.01', '--seed', '7',
             '--trace-stride', '10', '--no-timing']


@pytest.fixture
def files(tmp_path, rng):
    """ Gaussian 1-D data, a probe set and paired 2-D views """
    paths = {name: tmp_path / f'{name}.csv' for name in ('data', 'probe', 'left', 'right')}

    datasets.write_csv(paths['data'], rng.standard_normal((300, 1)))
    datasets.write_csv(paths['probe'], rng.standard_normal((100, 1)))
    left = rng.standard_normal((200, 2))
    datasets.write_csv(paths['left'], left)
    datasets.write_csv(paths['right'], left[:, ::-1] + 0.3 * rng.standard_normal((200, 2)))

    paths['tmp'] = tmp_path
    return paths


def _fit(files, *extra, name='model'):
    model, trace = files['tmp'] / f'{name}.dskc', files['tmp'] / f'{name}.csv'
    code = cli.run_command(['fit', 'kpca', '--data', str(files['data']), '--kernel', 'gaussian', '--bandwidth', '1',
                            '--out', str(model), '--trace', str(trace), *FIT_FLAGS, *extra])
    return code, model, trace


def test_fit_and_eval(files):
    code, model, _ = _fit(files)
    assert code == 0

    out = files['tmp'] / 'h.csv'
    assert cli.run_command(['eval', '--model', str(model), '--data', str(files['probe']), '--out', str(out)]) == 0

    evaluations = datasets.load_dataset(out).values
    probe = datasets.load_dataset(files['probe']).values
    assert evaluations.shape == (100, 2)
    np.testing.assert_array_equal(evaluations, ModelFile.load(model).model.evaluate(probe))


def test_fit_is_reproducible(files):
    _, first_model, first_trace = _fit(files, name='first')
    _, second_model, second_trace = _fit(files, name='second')

    assert first_model.read_bytes() == second_model.read_bytes()
    assert first_trace.read_bytes() == second_trace.read_bytes()


def test_fit_with_median_bandwidth_and_config(files):
    config = files['tmp'] / 'config.yaml'
    config.write_text('k: 3\niterations: 20\ndata_batch: 8\nfeature_batch: 8\ntotal_features: 64\ntheta0: 0.5\n')
    model = files['tmp'] / 'median.dskc'

    code = cli.run_command(['fit', 'gha', '--data', str(files['data']), '--bandwidth', 'median',
                            '--config', str(config), '--k', '2', '--out', str(model)])

    assert code == 0
    loaded = ModelFile.load(model)
    assert loaded.model.k == 2
    assert loaded.total_features == 64


def test_potential_trace_and_rate(files, capsys):
    reference = files['tmp'] / 'reference.csv'
    assert cli.run_command(['oracle', 'quadrature', '--bandwidth', '1', '--k', '2', '--probe', str(files['probe']),
                            '--out', str(reference)]) == 0

    code, _, trace = _fit(files, '--probe', str(files['probe']), '--reference', str(reference))
    assert code == 0
    assert trace.read_text().splitlines()[0] == 'iteration,potential,h_norm_max,seconds'

    capsys.readouterr()
    assert cli.run_command(['diagnose', 'rate', '--trace', str(trace), '--window', '0.5']) == 0
    float(capsys.readouterr().out)


def test_diagnose_angle_against_dual(files, capsys):
    _, model, _ = _fit(files)

    capsys.readouterr()
    assert cli.run_command(['diagnose', 'angle', '--model', str(model), '--data', str(files['probe']), '--dual']) == 0
    assert 0.0 <= float(capsys.readouterr().out) <= 1.0


def test_oracle_dual(files):
    out = files['tmp'] / 'dual.csv'

    assert cli.run_command(['oracle', 'dual', '--data', str(files['probe']), '--k', '3', '--probe', str(files['data']),
                            '--out', str(out)]) == 0
    assert datasets.load_dataset(out).values.shape == (300, 3)


def test_project_writes_a_header(files):
    _, model, _ = _fit(files)
    out = files['tmp'] / 'projection.csv'

    assert cli.run_command(['project', '--model', str(model), '--data', str(files['probe']), '--out', str(out)]) == 0
    assert out.read_text().splitlines()[0] == 'x1,h1,h2'


def test_paired_fit_and_views(files):
    model = files['tmp'] / 'pair.dskc'
    out = files['tmp'] / 'right.csv'

    code = cli.run_command(['fit', 'kcca', '--data', str(files['left']), '--data-y', str(files['right']),
                            '--out', str(model), '--ridge', '0.1', *FIT_FLAGS])
    assert code == 0

    assert cli.run_command(['eval', '--model', str(model), '--data', str(files['right']), '--view', 'right',
                            '--out', str(out)]) == 0
    assert datasets.load_dataset(out).values.shape == (200, 2)


def test_usage_errors(files, capsys):
    assert cli.run_command(['fit', 'kpca', '--data', str(files['data']), '--out', 'x', '--colour', 'red']) == 1
    assert '--colour' in capsys.readouterr().err

    # no training settings
    assert cli.run_command(['fit', 'kpca', '--data', str(files['data']), '--out', str(files['tmp'] / 'x')]) == 1
    # paired task without the right view
    assert cli.run_command(['fit', 'ksvd', '--data', str(files['left']), '--out', str(files['tmp'] / 'x'),
                            *FIT_FLAGS]) == 1
    assert cli.run_command(['diagnose']) == 1
    assert cli.run_command(['--help']) == 0


def test_runtime_errors(files):
    missing = files['tmp'] / 'missing.csv'
    assert cli.run_command(['fit', 'kpca', '--data', str(missing), '--out', str(files['tmp'] / 'x'), *FIT_FLAGS]) == 2

    _, model, _ = _fit(files)
    assert cli.run_command(['eval', '--model', str(model), '--data', str(files['left']),
                            '--out', str(files['tmp'] / 'h.csv')]) == 2
    assert cli.run_command(['eval', '--model', str(files['data']), '--data', str(files['probe']),
                            '--out', str(files['tmp'] / 'h.csv')]) == 2


def test_paired_monitor_uses_the_right_view_points(files, rng):
    """ The right view is compared on its own probe points, even when the views differ in dimension """
    right = np.hstack((datasets.load_dataset(files['right']).values, rng.standard_normal((200, 1))))
    paths = {name: files['tmp'] / f'{name}.csv' for name in ('right3', 'probe_x', 'probe_y', 'reference')}
    datasets.write_csv(paths['right3'], right)
    datasets.write_csv(paths['probe_x'], rng.standard_normal((50, 2)))
    probe_y = rng.standard_normal((50, 3))
    datasets.write_csv(paths['probe_y'], probe_y)
    datasets.write_csv(paths['reference'], probe_y[:, :2])
    trace = files['tmp'] / 'paired.csv'

    code = cli.run_command(['fit', 'ksvd', '--data', str(files['left']), '--data-y', str(paths['right3']),
                            '--out', str(files['tmp'] / 'paired.dskc'), '--trace', str(trace), *FIT_FLAGS,
                            '--iters', '20', '--probe', str(paths['probe_x']), '--probe-y', str(paths['probe_y']),
                            '--reference', str(paths['reference']), '--monitor-view', 'right'])

    assert code == 0
    potentials = [float(row.split(',')[1]) for row in trace.read_text().splitlines()[1:]]
    assert potentials and all(0.0 <= value <= 1.0 for value in potentials)


def test_monitor_point_errors(files):
    # a 1-D probe for 2-D data
    assert cli.run_command(['fit', 'ksvd', '--data', str(files['left']), '--data-y', str(files['right']),
                            '--out', str(files['tmp'] / 'x'), *FIT_FLAGS, '--probe', str(files['probe']),
                            '--reference', str(files['probe'])]) == 2
    # right view without its probe points
    assert cli.run_command(['fit', 'ksvd', '--data', str(files['left']), '--data-y', str(files['right']),
                            '--out', str(files['tmp'] / 'x'), *FIT_FLAGS, '--probe', str(files['left']),
                            '--reference', str(files['left']), '--monitor-view', 'right']) == 2
    # single view tasks have no right probe
    assert cli.run_command(['fit', 'kpca', '--data', str(files['data']), '--out', str(files['tmp'] / 'x'),
                            *FIT_FLAGS, '--probe', str(files['probe']), '--probe-y', str(files['probe']),
                            '--reference', str(files['probe'])]) == 1


def test_help_lists_the_subcommand_flags(capsys):
    assert cli.run_command(['--help']) == 0
    out = capsys.readouterr().out
    assert 'subcommand flags' in out
    assert '--data-batch' in out and '--probe-y' in out

    assert cli.run_command(['fit', '--help']) == 0
    out = capsys.readouterr().out
    assert '--total-features' in out and 'feature budget' in out


def test_malformed_thread_setting_is_a_runtime_error(files, monkeypatch):
    _, model, _ = _fit(files)
    monkeypatch.setattr(settings, 'THREADS_ENV', 'many')

    assert cli.run_command(['eval', '--model', str(model), '--data', str(files['probe']),
                            '--out', str(files['tmp'] / 'h.csv')]) == 2


def test_slice_writes_indicators(files):
    response = files['tmp'] / 'response.csv'
    datasets.write_csv(response, np.column_stack((np.zeros(8), np.arange(8.0)[::-1])))
    out = files['tmp'] / 'slices.csv'

    assert cli.run_command(['slice', '--data', str(response), '--column', '2', '--slices', '4', '--out', str(out)]) == 0
    indicators = datasets.load_dataset(out).values
    np.testing.assert_array_equal(indicators.argmax(axis=1), [3, 3, 2, 2, 1, 1, 0, 0])

    assert cli.run_command(['slice', '--data', str(response), '--column', '3', '--slices', '4', '--out', str(out)]) == 1
    assert cli.run_command(['slice', '--data', str(response), '--slices', '9', '--out', str(out)]) == 2
