"""
Test subspace angles, traces, rates and the first-order probe
"""

import math

import numpy as np
import pytest

from dskca import errors
from dskca.component_analysis import diagnostics
from dskca.component_analysis.model import (
    PairedModel,
    init_model
)


def _orthonormal(rng, rows, cols):
    return np.linalg.qr(rng.standard_normal((rows, cols)))[0]


# ----- trace -----

def test_trace_rejects_potentials_outside_the_unit_interval():
    trace = diagnostics.DiagnosticsTrace()
    trace.append(1, math.nan, 1.0, 0.0)
    trace.append(2, 1.0 + 1e-12, 1.0, 0.0)

    assert math.isnan(trace.potential[0])
    assert trace.potential[1] == 1.0

    with pytest.raises(errors.DiagnosticsError):
        trace.append(3, 1.5, 1.0, 0.0)
    with pytest.raises(errors.DiagnosticsError):
        diagnostics.DiagnosticsTrace(iterations=[1], potential=[])


def test_trace_csv(tmp_path):
    trace = diagnostics.DiagnosticsTrace()
    trace.append(100, 0.25, 1.5, 0.0)
    trace.append(200, 0.1 / 3, 1.25, 0.0)

    path = tmp_path / 'trace.csv'
    trace.to_csv(path)

    assert path.read_text().splitlines()[:2] == ['iteration,potential,h_norm_max,seconds', '100,0.25,1.5,0']
    assert diagnostics.DiagnosticsTrace.read_csv(path) == trace


def test_trace_csv_errors(tmp_path):
    path = tmp_path / 'trace.csv'

    path.write_text('iter,pot\n1,0.5\n')
    with pytest.raises(errors.DiagnosticsError):
        diagnostics.DiagnosticsTrace.read_csv(path)

    path.write_text('iteration,potential,h_norm_max,seconds\n1,half,1,0\n')
    with pytest.raises(errors.DiagnosticsError):
        diagnostics.DiagnosticsTrace.read_csv(path)


# ----- subspace angles -----

def test_cos2_subspace_gram_identity_metric(rng):
    Q = _orthonormal(rng, 6, 4)
    V, G = Q[:, :2], Q[:, 2:]
    identity = np.eye(6)

    assert diagnostics.cos2_subspace_gram(V, V, identity) == pytest.approx(1.0, abs=1e-12)
    assert diagnostics.cos2_subspace_gram(V, G, identity) == pytest.approx(0.0, abs=1e-12)


def test_cos2_subspace_gram_basis_invariance(rng):
    points = rng.standard_normal((20, 2))
    gram = np.exp(-0.5 * np.sum((points[:, None] - points[None]) ** 2, axis=-1))
    V, G = rng.standard_normal((20, 3)), rng.standard_normal((20, 3))
    value = diagnostics.cos2_subspace_gram(V, G, gram)

    M, N = rng.standard_normal((3, 3)) + 3 * np.eye(3), rng.standard_normal((3, 3)) + 3 * np.eye(3)
    assert diagnostics.cos2_subspace_gram(V @ M, G @ N, gram) == pytest.approx(value, abs=1e-10)
    assert 0.0 <= value <= 1.0


def test_cos2_subspace_gram_rank_deficient(rng):
    V = rng.standard_normal((5, 2))
    G = np.column_stack((V[:, 0], 2 * V[:, 0]))

    with pytest.raises(errors.RankDeficiencyError):
        diagnostics.cos2_subspace_gram(V, G, np.eye(5))


def test_sin2_subspace_empirical_angle():
    angle = math.pi / 6
    Ev = np.array([[1.0], [0.0]])
    Eh = np.array([[math.cos(angle)], [math.sin(angle)]])

    assert diagnostics.sin2_subspace_empirical(Ev, Eh) == pytest.approx(0.25, abs=1e-12)
    assert diagnostics.sin2_subspace_empirical(Ev, np.array([[0.0], [3.0]])) == pytest.approx(1.0, abs=1e-12)


def test_sin2_subspace_empirical_basis_invariance(rng):
    Ev, Eh = rng.standard_normal((50, 3)), rng.standard_normal((50, 3))
    value = diagnostics.sin2_subspace_empirical(Ev, Eh)
    M = rng.standard_normal((3, 3)) + 3 * np.eye(3)

    assert diagnostics.sin2_subspace_empirical(Ev @ M, Eh) == pytest.approx(value, abs=1e-10)
    assert diagnostics.sin2_subspace_empirical(Ev, Eh @ M) == pytest.approx(value, abs=1e-10)
    assert diagnostics.sin2_subspace_empirical(Ev, Ev @ M) == pytest.approx(0.0, abs=1e-10)


def test_sin2_subspace_empirical_errors(rng):
    with pytest.raises(errors.RankDeficiencyError):
        diagnostics.sin2_subspace_empirical(rng.standard_normal((10, 2)), np.ones((10, 2)))
    with pytest.raises(errors.DimensionMismatchError):
        diagnostics.sin2_subspace_empirical(rng.standard_normal((10, 2)), rng.standard_normal((9, 2)))


def test_subspace_monitor(gaussian_1d, rng):
    probe = rng.standard_normal((100, 1))
    model = init_model(gaussian_1d, 2, 16, seed=0)
    monitor = diagnostics.SubspaceMonitor(probe, model.evaluate(probe) @ np.array([[1.0, 2.0], [0.5, -1.0]]))

    assert monitor(model) == pytest.approx(0.0, abs=1e-10)
    assert monitor(PairedModel(model, init_model(gaussian_1d, 2, 16, seed=1))) == pytest.approx(0.0, abs=1e-10)

    with pytest.raises(errors.ConfigurationError):
        diagnostics.SubspaceMonitor(probe, probe, view='right')


# ----- rates -----

def _power_law_trace(exponent, points=100):
    trace = diagnostics.DiagnosticsTrace()
    for iteration in range(100, 100 * points + 1, 100):
        trace.append(iteration, min(1.0, 50.0 * iteration ** exponent), 1.0, 0.0)
    return trace


def test_rate_fit_recovers_the_exponent():
    assert diagnostics.rate_fit(_power_law_trace(-1.0), 0.5) == pytest.approx(-1.0, abs=1e-9)
    assert diagnostics.rate_fit(_power_law_trace(-0.5), 0.3) == pytest.approx(-0.5, abs=1e-9)


def test_rate_fit_errors():
    with pytest.raises(errors.DiagnosticsError):
        diagnostics.rate_fit(_power_law_trace(-1.0, points=12), 0.5)
    with pytest.raises(errors.DiagnosticsError):
        diagnostics.rate_fit(_power_law_trace(-1.0), 1.5)

    trace = diagnostics.DiagnosticsTrace()
    for iteration in range(1, 21):
        trace.append(iteration, math.nan, 1.0, 0.0)
    with pytest.raises(errors.DiagnosticsError):
        diagnostics.rate_fit(trace, 0.5)


def test_check_monotone():
    assert diagnostics.check_monotone(_power_law_trace(-1.0))

    increasing = diagnostics.DiagnosticsTrace()
    for iteration in range(1, 60):
        increasing.append(iteration, iteration / 100.0, 1.0, 0.0)
    assert not diagnostics.check_monotone(increasing)


# ----- first-order probe -----

def test_update_residual_vanishes_without_a_step(rng):
    G = _orthonormal(rng, 5, 2)

    assert diagnostics.update_residual(np.eye(5), G, G, 0.0) == 0.0


def test_first_order_probe_is_quadratic():
    result = diagnostics.first_order_probe(12, 3, seed=0, eta_list=[1e-2, 5e-3, 2.5e-3, 1.25e-3])

    assert result.residuals.shape == (4,)
    assert np.all(np.diff(result.residuals) < 0)
    assert result.passed
    assert result.slope < 2.5


def test_first_order_probe_checks_inputs():
    with pytest.raises(errors.ConfigurationError):
        diagnostics.first_order_probe(3, 3, seed=0, eta_list=[0.1])
    with pytest.raises(errors.ConfigurationError):
        diagnostics.first_order_probe(6, 2, seed=0, eta_list=[0.01, 0.1])


# ----- reporting -----

def test_canonical_correlations(rng):
    X = rng.standard_normal((200, 2))
    noise = rng.standard_normal((200, 1))

    correlations = diagnostics.canonical_correlations(X, np.column_stack((X[:, 0], noise)))

    assert correlations[0] == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= correlations[1] < 0.5


def test_align_columns(rng):
    reference = rng.standard_normal((30, 2))
    M = np.array([[2.0, 1.0], [-1.0, 1.0]])

    aligned, rotation = diagnostics.align_columns(reference @ M, reference)

    np.testing.assert_allclose(aligned, reference, atol=1e-10)
    np.testing.assert_allclose(rotation, np.linalg.inv(M), atol=1e-10)
