"""Solving a new task with shrinkage toward summary statistics saved from a
previous multi-task fit."""

from __future__ import annotations

import numpy as np

from .core import SolverConfig, TaskDataset
from .errors import RankDeficientBasis
from .losses import loss_grad, loss_value
from .prox import group_soft_threshold


def _prox_solve(data: TaskDataset, loss, anchor: np.ndarray, lam: float,
                config: SolverConfig, u0=None) -> np.ndarray:
    """Proximal-gradient minimization of f(anchor + u) + lam * ||u||."""
    L = max(loss.lipschitz(data), 1e-12)
    eta = 1.0 / L
    u = np.zeros_like(anchor) if u0 is None else u0.copy()
    for _ in range(config.outer_iters * 10):
        g = loss_grad(loss, anchor + u, data)
        u_new = group_soft_threshold(u - eta * g, eta * lam)
        if np.linalg.norm(u_new - u) <= config.tol * max(1.0, np.linalg.norm(u)):
            u = u_new
            break
        u = u_new
    return anchor + u


def transfer_vanilla(new_data: TaskDataset, loss, beta_hat: np.ndarray,
                     lam: float, config: SolverConfig = SolverConfig()) -> np.ndarray:
    """argmin of f(theta) + lam * ||theta - beta_hat||."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    if beta_hat.shape[0] != new_data.dim:
        raise ValueError("anchor dimension does not match the new data")
    return _prox_solve(new_data, loss, beta_hat, lam, config)


def transfer_clustered(new_data: TaskDataset, loss, centers: np.ndarray,
                       lam: float, config: SolverConfig = SolverConfig()):
    """Solve one penalized problem per center; return the best (theta, z)."""
    centers = np.asarray(centers, dtype=float)
    K = centers.shape[1]
    best = None
    for k in range(K):
        theta = _prox_solve(new_data, loss, centers[:, k], lam, config)
        obj = loss_value(loss, theta, new_data) + lam * np.linalg.norm(
            theta - centers[:, k]
        )
        if best is None or obj < best[0] - 1e-15:
            best = (obj, theta, k)
    return best[1], best[2]


def transfer_lowrank(new_data: TaskDataset, loss, basis: np.ndarray,
                     lam: float, config: SolverConfig = SolverConfig()):
    """Alternate the exact projection z = B^+ theta with proximal-gradient
    steps on theta shrunk toward B z."""
    B = np.asarray(basis, dtype=float)
    K = B.shape[1]
    if np.linalg.matrix_rank(B) < K:
        raise RankDeficientBasis("basis must have full column rank")
    pinv = np.linalg.pinv(B)
    L = max(loss.lipschitz(new_data), 1e-12)
    eta = 1.0 / L
    # start from the unpenalized minimizer; theta = 0 can be a spurious fixed
    # point of the alternation when ||grad f(0)|| <= lam
    theta = _prox_solve(new_data, loss, np.zeros(new_data.dim), 0.0, config)
    for _ in range(config.outer_iters):
        z = pinv @ theta
        anchor = B @ z
        u = theta - anchor
        for _ in range(config.inner_gamma_iters):
            g = loss_grad(loss, anchor + u, new_data)
            u = group_soft_threshold(u - eta * g, eta * lam)
        theta_new = anchor + u
        if np.linalg.norm(theta_new - theta) <= config.tol * max(
            1.0, np.linalg.norm(theta)
        ):
            theta = theta_new
            break
        theta = theta_new
    return theta, pinv @ theta
