"""Synthetic multi-task linear-regression scenarios with (epsilon, delta)
relatedness controls.

Covariates are N(0, I_d); responses follow y = x^T theta* + N(0, 1).  Inlier
coefficient vectors sit within delta of a structured prototype (consensus,
K cluster centers, or a rank-K subspace); an epsilon fraction of tasks is
replaced by draws from the radius-2 sphere.  Streams are split hierarchically
from the scenario seed (Philox via numpy SeedSequence) so generation is
reproducible task by task.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TaskCollection, TaskDataset
from .errors import BadFraction


@dataclass(frozen=True)
class Scenario:
    tasks: TaskCollection
    theta_star: np.ndarray        # (d, m)
    inliers: np.ndarray           # sorted task indices
    meta: dict


def sample_uniform_sphere(d: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """A point with exact norm r: a normalized Gaussian draw scaled by r."""
    if r < 0:
        raise ValueError("radius must be >= 0")
    if r == 0.0:
        return np.zeros(d)
    v = rng.standard_normal(d)
    nrm = np.linalg.norm(v)
    while nrm == 0.0:  # pragma: no cover - essentially impossible
        v = rng.standard_normal(d)
        nrm = np.linalg.norm(v)
    return (r / nrm) * v


def _spawn(seed: int, n_children: int):
    return [np.random.Generator(np.random.Philox(s))
            for s in np.random.SeedSequence(seed).spawn(n_children)]


def _apply_outliers(theta: np.ndarray, epsilon: float, rng) -> np.ndarray:
    m = theta.shape[1]
    if not (0.0 <= epsilon < 1.0):
        raise BadFraction("epsilon must lie in [0, 1)")
    n_out = math.ceil(epsilon * m)
    idx = rng.choice(m, size=n_out, replace=False)
    for j in idx:
        theta[:, j] = sample_uniform_sphere(theta.shape[0], 2.0, rng)
    inliers = np.setdiff1d(np.arange(m), idx)
    return inliers


def _sample_tasks(theta: np.ndarray, n: int, rngs) -> TaskCollection:
    d, m = theta.shape
    tasks = []
    for j in range(m):
        X = rngs[j].standard_normal((n, d))
        y = X @ theta[:, j] + rngs[j].standard_normal(n)
        tasks.append(TaskDataset(task_id=j, features=X, responses=y))
    return TaskCollection(tasks)


def gen_vanilla_scenario(m: int = 30, n: int = 200, d: int = 50,
                         epsilon: float = 0.0, delta: float = 0.0,
                         seed: int = 0) -> Scenario:
    """All inlier targets at distance delta from the consensus 2*e_1."""
    param_rng, out_rng, *task_rngs = _spawn(seed, m + 2)
    beta = np.zeros(d)
    beta[0] = 2.0
    theta = np.column_stack(
        [beta + sample_uniform_sphere(d, delta, param_rng) for _ in range(m)]
    )
    inliers = _apply_outliers(theta, epsilon, out_rng)
    tasks = _sample_tasks(theta, n, task_rngs)
    meta = dict(case="vanilla", epsilon=epsilon, delta=delta, m=m, n=n, d=d,
                K=None, seed=seed)
    return Scenario(tasks, theta, inliers, meta)


def true_cluster_labels(m: int, K: int) -> np.ndarray:
    """Zero-based labels of the fixed assignment (j mod K) + 1 for j = 1..m."""
    return np.arange(1, m + 1) % K


def gen_clustered_scenario(m: int = 30, n: int = 200, d: int = 50, K: int = 3,
                           epsilon: float = 0.0, delta: float = 0.0,
                           seed: int = 0) -> Scenario:
    """Inlier targets near K centers 2*e_k with a fixed cyclic assignment."""
    if K > d:
        raise ValueError("K must not exceed d")
    param_rng, out_rng, *task_rngs = _spawn(seed, m + 2)
    centers = 2.0 * np.eye(d)[:, :K]
    labels = true_cluster_labels(m, K)
    theta = centers[:, labels] + np.column_stack(
        [sample_uniform_sphere(d, delta, param_rng) for _ in range(m)]
    )
    inliers = _apply_outliers(theta, epsilon, out_rng)
    tasks = _sample_tasks(theta, n, task_rngs)
    meta = dict(case="clustered", epsilon=epsilon, delta=delta, m=m, n=n, d=d,
                K=K, seed=seed, labels=labels.tolist())
    return Scenario(tasks, theta, inliers, meta)


def gen_lowrank_scenario(m: int = 30, n: int = 200, d: int = 50, K: int = 3,
                         epsilon: float = 0.0, delta: float = 0.0,
                         seed: int = 0) -> Scenario:
    """Inlier targets near the span of the first K canonical basis vectors,
    with standard-normal coefficient vectors."""
    if K > d:
        raise ValueError("K must not exceed d")
    param_rng, out_rng, *task_rngs = _spawn(seed, m + 2)
    basis = np.eye(d)[:, :K]
    coeffs = param_rng.standard_normal((K, m))
    theta = basis @ coeffs + np.column_stack(
        [sample_uniform_sphere(d, delta, param_rng) for _ in range(m)]
    )
    inliers = _apply_outliers(theta, epsilon, out_rng)
    tasks = _sample_tasks(theta, n, task_rngs)
    meta = dict(case="lowrank", epsilon=epsilon, delta=delta, m=m, n=n, d=d,
                K=K, seed=seed)
    return Scenario(tasks, theta, inliers, meta)


GENERATORS = {
    "vanilla": gen_vanilla_scenario,
    "clustered": gen_clustered_scenario,
    "lowrank": gen_lowrank_scenario,
}
