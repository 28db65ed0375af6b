"""Nonsmooth primitives: block/scalar soft-thresholding and the Huber loss."""

from __future__ import annotations

import numpy as np


def group_soft_threshold(x: np.ndarray, c: float) -> np.ndarray:
    """prox of c*||.||_2: scale x toward zero, clamping at zero when ||x|| <= c."""
    if c < 0:
        raise ValueError("threshold must be >= 0")
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm <= c:
        return np.zeros_like(x)
    return (1.0 - c / nrm) * x


def group_soft_threshold_cols(X: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Column-wise group soft-threshold of a (d, m) matrix with per-column c."""
    nrm = np.linalg.norm(X, axis=0)
    factor = np.zeros_like(nrm)
    np.divide(nrm - c, nrm, out=factor, where=nrm > c)
    return X * np.maximum(factor, 0.0)


def scalar_soft_threshold(x: float, c: float) -> float:
    if c < 0:
        raise ValueError("threshold must be >= 0")
    return float(np.sign(x) * max(abs(x) - c, 0.0))


def huber_value(x: float, lam: float) -> float:
    if lam <= 0:
        raise ValueError("lam must be > 0")
    ax = abs(x)
    if ax <= lam:
        return 0.5 * x * x
    return lam * (ax - 0.5 * lam)


def huber_grad(x: float, lam: float) -> float:
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if abs(x) <= lam:
        return float(x)
    return float(lam * np.sign(x))
