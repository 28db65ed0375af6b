"""Evaluation quantities: max parameter error, cluster alignment, prediction
errors."""

from __future__ import annotations

from itertools import permutations

import numpy as np

from .core import TaskDataset
from .errors import EmptySubset, KTooLarge


def max_l2_error(theta_hat: np.ndarray, theta_star: np.ndarray,
                 subset=None) -> float:
    """Max over the subset of column-wise l2 distances."""
    if theta_hat.shape != theta_star.shape:
        raise ValueError("shape mismatch")
    if subset is None:
        subset = np.arange(theta_hat.shape[1])
    subset = np.asarray(subset, dtype=int)
    if subset.size == 0:
        raise EmptySubset("subset must be non-empty")
    diff = theta_hat[:, subset] - theta_star[:, subset]
    return float(np.max(np.linalg.norm(diff, axis=0)))


def cluster_alignment(z_hat, z_star, K: int):
    """Best label-agreement fraction over all K! relabelings of z_star.

    Returns (accuracy, tau) where tau maps true labels to predicted ones;
    ties resolve to the lexicographically smallest permutation.
    """
    if K > 8:
        raise KTooLarge("brute-force alignment supports K <= 8")
    z_hat = np.asarray(z_hat, dtype=int)
    z_star = np.asarray(z_star, dtype=int)
    best_acc, best_tau = -1.0, None
    for tau in permutations(range(K)):
        mapped = np.array(tau)[z_star]
        acc = float(np.mean(mapped == z_hat))
        if acc > best_acc:
            best_acc, best_tau = acc, tau
    return best_acc, best_tau


def misclassification_rate(theta: np.ndarray, data: TaskDataset) -> float:
    """Fraction of samples with sgn(x^T theta) != y; sgn(0) counts as +1."""
    scores = data.features @ theta
    pred = np.where(scores >= 0.0, 1.0, -1.0)
    return float(np.mean(pred != data.responses))


def mean_squared_prediction_error(theta: np.ndarray, data: TaskDataset) -> float:
    r = data.features @ theta - data.responses
    return float(np.mean(r * r))
