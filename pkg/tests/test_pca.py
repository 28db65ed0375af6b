"""Feature reduction: centering, principal projection, standardization."""

import numpy as np
import pytest

from armul.pca import apply_transform, reduce_features


def test_target_dim_too_large():
    with pytest.raises(ValueError):
        reduce_features(np.ones((5, 3)), 4)


def test_output_shape_and_standardization():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 6)) * np.array([1, 2, 3, 4, 5, 6])
    out, transform = reduce_features(X, 3)
    assert out.shape == (200, 3)
    assert np.allclose(out.mean(axis=0), 0.0, atol=1e-10)
    assert np.allclose(out.std(axis=0), 1.0, atol=1e-10)


def test_intercept_column():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 4))
    out, transform = reduce_features(X, 2, add_intercept=True)
    assert out.shape == (50, 3)
    assert np.array_equal(out[:, -1], np.ones(50))
    assert transform["add_intercept"] is True


def test_rank_k_data_reconstructed():
    # data of exact rank 2: projecting to 2 directions loses nothing, so the
    # centered matrix is recovered from the projection
    rng = np.random.default_rng(2)
    B = rng.normal(size=(7, 2))
    Z = rng.normal(size=(100, 2))
    X = Z @ B.T
    out, transform = reduce_features(X, 2)
    Xc = X - transform["mean"]
    U = transform["directions"]
    recon = (Xc @ U) @ U.T
    assert np.max(np.abs(recon - Xc)) < 1e-8


def test_directions_orthonormal_and_principal():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(300, 5)) @ np.diag([5.0, 3.0, 1.0, 0.5, 0.1])
    _, transform = reduce_features(X, 2)
    U = transform["directions"]
    assert np.allclose(U.T @ U, np.eye(2), atol=1e-8)
    # compare captured variance against the exact SVD answer
    Xc = X - X.mean(axis=0)
    s = np.linalg.svd(Xc, compute_uv=False)
    captured = np.sum((Xc @ U) ** 2)
    assert captured == pytest.approx(s[0] ** 2 + s[1] ** 2, rel=1e-8)


def test_apply_transform_matches_fit():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 5))
    out, transform = reduce_features(X, 3, add_intercept=True)
    again = apply_transform(X, transform)
    assert np.array_equal(out, again)


def test_apply_transform_new_data():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 4))
    _, transform = reduce_features(X, 2)
    Xnew = rng.normal(size=(10, 4))
    out = apply_transform(Xnew, transform)
    expect = ((Xnew - transform["mean"]) @ transform["directions"]
              - transform["col_mean"]) / transform["col_std"]
    assert np.allclose(out, expect)


def test_constant_column_does_not_divide_by_zero():
    X = np.column_stack([np.arange(20.0), np.ones(20)])
    out, _ = reduce_features(X, 2)
    assert np.all(np.isfinite(out))
