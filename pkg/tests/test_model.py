"""
Test the coefficient model
"""

import numpy as np
import pytest

from dskca import errors
from dskca.component_analysis import kernel_features
from dskca.component_analysis.model import (
    CoefficientModel,
    PairedModel,
    init_model
)


def _grown_model(spec, n_blocks, k=3, block_size=16, seed=9, store_frequencies=False):
    model = init_model(spec, k, block_size, seed, store_frequencies)
    coefficients = np.random.default_rng(seed)
    for index in range(1, n_blocks):
        block = kernel_features.make_feature_block(spec, seed, index, block_size)
        model.append_block(block, coefficients.standard_normal((block_size, k)))

    return model


def test_empty_model_evaluates_to_zero(gaussian_1d):
    model = CoefficientModel(gaussian_1d, k=2, run_seed=0, block_size=8)

    np.testing.assert_array_equal(model.evaluate(np.linspace(-1, 1, 5)), np.zeros((5, 2)))


def test_init_model_is_orthonormal(gaussian_3d):
    model = init_model(gaussian_3d, k=4, feature_batch=32, seed=1)
    scaled = model.alpha(0) * model.block(0).scale

    assert model.n_blocks == 1
    np.testing.assert_allclose(scaled.T @ scaled, np.eye(4), atol=1e-12)


def test_init_columns_do_not_depend_on_k(gaussian_3d):
    single = init_model(gaussian_3d, k=1, feature_batch=32, seed=4)
    several = init_model(gaussian_3d, k=3, feature_batch=32, seed=4)

    np.testing.assert_allclose(several.alpha(0)[:, 0], single.alpha(0)[:, 0], rtol=1e-12, atol=1e-12)


def test_init_needs_enough_features(linear_spec):
    with pytest.raises(errors.ModelError):
        init_model(linear_spec(2), k=3, feature_batch=16, seed=0)


def test_evaluate_is_linear_under_scale_all(gaussian_3d, rng):
    model = _grown_model(gaussian_3d, 5)
    X = rng.standard_normal((50, 3))
    M = rng.standard_normal((3, 3))

    expected = model.evaluate(X) @ M
    np.testing.assert_allclose(model.scale_all(M).evaluate(X), expected, rtol=1e-12, atol=1e-12)


def test_features_times_coefficients_is_evaluate(gaussian_3d, rng):
    model = _grown_model(gaussian_3d, 4)
    X = rng.standard_normal((30, 3))

    assert model.features(X).shape == (30, model.n_features) == (30, 64)
    assert model.coefficients.shape == (64, 3)
    np.testing.assert_allclose(model.features(X) @ model.coefficients, model.evaluate(X, threads=1),
                               rtol=1e-10, atol=1e-12)
    assert [block.block_index for block, _ in model.iter_blocks()] == [0, 1, 2, 3]


def test_empty_model_has_no_coefficients(gaussian_1d):
    model = CoefficientModel(gaussian_1d, k=2, run_seed=0, block_size=8)

    assert model.coefficients.shape == (0, 2)
    assert model.features(np.zeros((3, 1))).shape == (3, 0)


def test_regeneration_matches_stored_frequencies(gaussian_3d, rng):
    regenerated = _grown_model(gaussian_3d, 6)
    stored = _grown_model(gaussian_3d, 6, store_frequencies=True)
    X = rng.standard_normal((20, 3))

    assert np.array_equal(regenerated.evaluate(X), stored.evaluate(X))
    assert np.array_equal(regenerated.evaluate(X), regenerated.set_store_frequencies(True).evaluate(X))


def test_threaded_evaluation_is_bit_identical(gaussian_1d):
    model = _grown_model(gaussian_1d, 40, k=2, block_size=8)
    X = np.linspace(-3, 3, 33)

    assert np.array_equal(model.evaluate(X, threads=1), model.evaluate(X, threads=4))


def test_append_block_must_be_contiguous(gaussian_1d):
    model = init_model(gaussian_1d, 2, 8, seed=0)

    with pytest.raises(errors.ModelError):
        model.append_block(kernel_features.make_feature_block(gaussian_1d, 0, 2, 8), np.zeros((8, 2)))
    with pytest.raises(errors.ModelError):
        model.append_block(kernel_features.make_feature_block(gaussian_1d, 0, 1, 8), np.zeros((8, 3)))
    with pytest.raises(errors.NonFiniteError):
        model.append_block(kernel_features.make_feature_block(gaussian_1d, 0, 1, 8), np.full((8, 2), np.inf))


def test_add_to_block(gaussian_1d):
    model = init_model(gaussian_1d, 2, 8, seed=0)
    before = model.alpha(0).copy()

    model.add_to_block(0, np.ones((8, 2)))
    np.testing.assert_array_equal(model.alpha(0), before + 1.0)

    with pytest.raises(errors.ModelError):
        model.add_to_block(1, np.ones((8, 2)))


def test_scale_all_checks_shape(gaussian_1d):
    with pytest.raises(errors.ModelError):
        init_model(gaussian_1d, 2, 8, seed=0).scale_all(np.eye(3))


def test_copy_is_independent(gaussian_1d):
    model = init_model(gaussian_1d, 2, 8, seed=0)
    clone = model.copy()
    clone.scale_all(2 * np.eye(2))

    assert not np.array_equal(model.alpha(0), clone.alpha(0))


def test_evaluate_rejects_wrong_dimension(gaussian_3d):
    with pytest.raises(errors.DimensionMismatchError):
        init_model(gaussian_3d, 1, 8, seed=0).evaluate(np.zeros((4, 2)))


def test_paired_model(gaussian_1d, gaussian_3d):
    left = init_model(gaussian_1d, 2, 8, seed=0)
    right = init_model(gaussian_3d, 2, 8, seed=1)
    pair = PairedModel(left, right)

    assert pair.k == 2
    assert pair.swapped().left is right

    with pytest.raises(errors.ModelError):
        PairedModel(left, init_model(gaussian_3d, 3, 8, seed=1))
