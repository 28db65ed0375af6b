"""PCA preprocessing for pooled multi-task feature matrices."""

from __future__ import annotations

import numpy as np

from .linalg import top_left_singular


def reduce_features(X: np.ndarray, target_dim: int, add_intercept: bool = False):
    """Center with the pooled mean, project onto the top principal directions
    (power iteration with deflation), standardize the projected columns and
    optionally append a constant-1 column.

    Returns (reduced matrix, projection dict) so new data can be mapped with
    the same transform.
    """
    X = np.asarray(X, dtype=float)
    if target_dim > X.shape[1]:
        raise ValueError("target_dim exceeds the original dimension")
    mean = X.mean(axis=0)
    Xc = X - mean
    U = top_left_singular(Xc.T, target_dim)  # principal directions (p, k)
    proj = Xc @ U
    col_mean = proj.mean(axis=0)
    col_std = proj.std(axis=0)
    col_std[col_std == 0.0] = 1.0
    out = (proj - col_mean) / col_std
    if add_intercept:
        out = np.column_stack([out, np.ones(out.shape[0])])
    transform = dict(mean=mean, directions=U, col_mean=col_mean, col_std=col_std,
                     add_intercept=add_intercept)
    return out, transform


def apply_transform(X: np.ndarray, transform: dict) -> np.ndarray:
    proj = (np.asarray(X, dtype=float) - transform["mean"]) @ transform["directions"]
    out = (proj - transform["col_mean"]) / transform["col_std"]
    if transform["add_intercept"]:
        out = np.column_stack([out, np.ones(out.shape[0])])
    return out
