"""Comparison methods: single-task learning, data pooling, clustered and
low-rank multi-task learning."""

from __future__ import annotations

import numpy as np

from .core import SolverConfig, TaskCollection, validate_collection
from .errors import SingularDesign
from .linalg import top_left_singular
from .losses import BatchedLoss, GaussianMean, SquaredError


def fit_single_task(tasks: TaskCollection, loss,
                    config: SolverConfig = SolverConfig(),
                    exact: bool = False) -> np.ndarray:
    """Column j minimizes f_j alone.  Closed forms where available; with
    ``exact`` a near-singular squared-error design raises instead of falling
    back to gradient descent."""
    validate_collection(tasks, loss)
    if exact and isinstance(loss, SquaredError):
        for t in tasks:
            A = t.features.T @ t.features / t.n
            if np.linalg.cond(A) >= 1e12:
                raise SingularDesign(f"task {t.task_id}: X^T X is singular")
    batch = BatchedLoss(loss, tasks)
    return batch.single_task_minimizers(tol=config.tol, max_iters=config.outer_iters * 10)


def fit_pooled(tasks: TaskCollection, loss, weights=None,
               config: SolverConfig = SolverConfig()) -> np.ndarray:
    """Minimizer of the weighted consensus loss sum_j w_j f_j(beta)."""
    validate_collection(tasks, loss)
    w = tasks.sizes if weights is None else np.asarray(weights, dtype=float)
    batch = BatchedLoss(loss, tasks)
    return _pooled_fit(batch, w, np.arange(tasks.m), config)


def _pooled_fit(batch: BatchedLoss, w, members, config, x0=None) -> np.ndarray:
    """Weighted pooled minimizer over a subset of tasks."""
    w_s = w[members]
    if batch._kind == "SquaredError":
        A = np.tensordot(w_s, batch.A[members], axes=1)
        b = w_s @ batch.b[members]
        if np.linalg.cond(A) < 1e12:
            return np.linalg.solve(A, b)
    if batch._kind == "GaussianMean":
        return w_s @ batch.mu[members] / w_s.sum()
    # gradient descent on the weighted average loss
    L = np.maximum(batch.lipschitz()[members], 1e-12)
    step = 1.0 / max(float(w_s @ L), 1e-12)
    beta = np.zeros(batch.d) if x0 is None else x0.copy()
    sub = np.asarray(members)
    for _ in range(config.outer_iters * 10):
        Theta = np.repeat(beta[:, None], batch.m, axis=1)
        g = batch.grads(Theta)[:, sub] @ w_s
        beta -= step * g
        if np.linalg.norm(g) * step <= config.tol:
            break
    return beta


def fit_clustered_mtl(tasks: TaskCollection, loss, K: int, weights=None,
                      config: SolverConfig = SolverConfig(),
                      restarts: int = 5):
    """Alternating exact assignment and per-cluster pooled fits; keeps the
    best of several seeded restarts."""
    validate_collection(tasks, loss)
    if not (2 <= K <= tasks.m):
        raise ValueError("need 2 <= K <= m")
    w = tasks.sizes if weights is None else np.asarray(weights, dtype=float)
    batch = BatchedLoss(loss, tasks)
    m = tasks.m
    theta0 = batch.single_task_minimizers()

    best = None
    for r in range(restarts):
        rng = np.random.default_rng(config.seed + r)
        centers = theta0[:, rng.choice(m, size=K, replace=False)].copy()
        labels = np.full(m, -1)
        for _ in range(100):
            cost = np.column_stack(
                [batch.values(np.repeat(centers[:, [k]], m, axis=1)) for k in range(K)]
            )
            new_labels = np.argmin(cost, axis=1)
            counts = np.bincount(new_labels, minlength=K)
            for k in np.flatnonzero(counts == 0):
                fit = w * cost[np.arange(m), new_labels]
                j = int(np.argmax(fit))
                new_labels[j] = k
                centers[:, k] = theta0[:, j]
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for k in range(K):
                members = np.flatnonzero(labels == k)
                if members.size:
                    centers[:, k] = _pooled_fit(batch, w, members, config,
                                                x0=centers[:, k])
        obj = float(np.sum(w * batch.values(centers[:, labels])))
        if best is None or obj < best[0]:
            best = (obj, centers.copy(), labels.copy())
    return best[1], best[2]


def fit_lowrank_mtl(tasks: TaskCollection, loss, K: int, weights=None,
                    config: SolverConfig = SolverConfig(), max_rounds: int = 500):
    """Alternating gradient descent on the rank-K factorization B @ Z."""
    validate_collection(tasks, loss)
    if not (1 <= K <= min(tasks.d, tasks.m)):
        raise ValueError("need 1 <= K <= min(d, m)")
    w = tasks.sizes if weights is None else np.asarray(weights, dtype=float)
    batch = BatchedLoss(loss, tasks)
    L = np.maximum(batch.lipschitz(), 1e-12)
    theta0 = batch.single_task_minimizers()
    B = top_left_singular(theta0, K, seed=config.seed)
    Z = B.T @ theta0
    prev = float(np.sum(w * batch.values(B @ Z)))
    for _ in range(max_rounds):
        sB2 = np.linalg.norm(B, 2) ** 2
        G = batch.grads(B @ Z)
        Z = Z - (B.T @ G) / np.maximum(L * sB2, 1e-12)
        G = batch.grads(B @ Z)
        curv = np.linalg.eigvalsh((Z * (w * L)) @ Z.T)[-1]
        B = B - ((G * w) @ Z.T) / max(float(curv), 1e-12)
        obj = float(np.sum(w * batch.values(B @ Z)))
        if abs(prev - obj) <= config.tol * max(1.0, abs(prev)):
            break
        prev = obj
    Q, R = np.linalg.qr(B)
    return Q, R @ Z
