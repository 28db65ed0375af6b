"""Joint estimation by alternating a proximal-gradient step on the per-task
offsets with a structure-specific prototype update.

The objective is sum_j w_j [ f_j(theta_j) + lambda_j ||theta_j - gamma_j|| ]
with the prototype matrix Gamma constrained to a consensus vector, K cluster
centers, or a rank-K factorization.  Parameters are split as Theta = Gamma + V;
each outer iteration applies one proximal-gradient update to every column of V
followed by a few rounds of prototype refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (AUTO, Clustered, FitResult, LowRank, PenaltyConfig,
                   SolverConfig, StructureSpec, TaskCollection, Vanilla,
                   check_structure, validate_collection)
from .errors import EmptyCluster, NonFinite
from .linalg import top_left_singular
from .losses import BatchedLoss
from .prox import group_soft_threshold_cols


@dataclass
class SolverState:
    V: np.ndarray            # (d, m)
    artifacts: dict          # beta | (centers, labels) | (basis, coeffs)
    iteration: int = 0
    objective: float = math.inf


def _gamma_matrix(structure: StructureSpec, artifacts: dict, m: int) -> np.ndarray:
    if isinstance(structure, Vanilla):
        return np.repeat(artifacts["beta"][:, None], m, axis=1)
    if isinstance(structure, Clustered):
        return artifacts["centers"][:, artifacts["labels"]]
    return artifacts["basis"] @ artifacts["coeffs"]


def objective(tasks, loss, penalty: PenaltyConfig, theta: np.ndarray,
              gamma: np.ndarray, batch: BatchedLoss | None = None) -> float:
    """Weighted sum of per-task losses plus unsquared l2 penalties."""
    if batch is None:
        batch = BatchedLoss(loss, tasks)
    w, lam = penalty.resolve(tasks)
    return _objective(batch, w, lam, theta, gamma)


def _objective(batch, w, lam, theta, gamma) -> float:
    vals = batch.values(theta)
    pen = lam * np.linalg.norm(theta - gamma, axis=0)
    val = float(np.sum(w * (vals + pen)))
    if not np.isfinite(val):
        raise NonFinite("objective is not finite")
    return val


def v_step(V: np.ndarray, gamma: np.ndarray, batch: BatchedLoss,
           lam: np.ndarray, eta_v: np.ndarray) -> np.ndarray:
    """One proximal-gradient update of every offset column."""
    G = batch.grads(gamma + V)
    return group_soft_threshold_cols(V - eta_v * G, eta_v * lam)


def gamma_step_vanilla(beta: np.ndarray, V: np.ndarray, batch: BatchedLoss,
                       w: np.ndarray, L: np.ndarray, inner_iters: int,
                       eta: float | None = None) -> np.ndarray:
    """Gradient descent on the shifted pooled loss sum_j w_j f_j(beta + v_j)."""
    step = eta if eta is not None else 1.0 / max(float(w @ L), 1e-12)
    for _ in range(inner_iters):
        G = batch.grads(beta[:, None] + V)
        beta = beta - step * (G @ w)
    return beta


def _assign_labels(centers, V, batch, w, min_count):
    """Exact per-task argmin over centers, with optional cardinality repair."""
    K = centers.shape[1]
    m = V.shape[1]
    cost = np.empty((m, K))
    for k in range(K):
        cost[:, k] = batch.values(centers[:, [k]] + V)
    labels = np.argmin(cost, axis=1)  # ties -> lowest index
    if min_count is not None:
        wcost = cost * w[:, None]
        counts = np.bincount(labels, minlength=K)
        # greedily move the cheapest tasks from surplus clusters into deficits
        while np.any(counts < min_count):
            k = int(np.argmin(counts))
            best_j, best_inc = -1, math.inf
            for j in range(m):
                zj = labels[j]
                if zj == k or counts[zj] <= min_count:
                    continue
                inc = wcost[j, k] - wcost[j, zj]
                if inc < best_inc:
                    best_j, best_inc = j, inc
            if best_j < 0:
                raise EmptyCluster("cardinality floor is infeasible")
            counts[labels[best_j]] -= 1
            labels[best_j] = k
            counts[k] += 1
    return labels, cost


def gamma_step_clustered(centers: np.ndarray, labels: np.ndarray, V: np.ndarray,
                         batch: BatchedLoss, w: np.ndarray, L: np.ndarray,
                         inner_iters: int, min_count=None,
                         reseed_ref: np.ndarray | None = None):
    """Alternate exact label assignment with per-center gradient steps."""
    K = centers.shape[1]
    for _ in range(inner_iters):
        labels, cost = _assign_labels(centers, V, batch, w, min_count)
        if min_count is None:
            # re-seed empty centers at the current column of the worst-fit task
            counts = np.bincount(labels, minlength=K)
            if np.any(counts == 0):
                fit = w * cost[np.arange(len(labels)), labels]
                theta_now = centers[:, labels] + V
                for k in np.flatnonzero(counts == 0):
                    j = int(np.argmax(fit))
                    centers[:, k] = theta_now[:, j]
                    labels[j] = k
                    fit[j] = -math.inf
        G = batch.grads(centers[:, labels] + V)
        for k in range(K):
            members = labels == k
            if not np.any(members):
                continue
            denom = max(float(w[members] @ L[members]), 1e-12)
            centers[:, k] -= (G[:, members] @ w[members]) / denom
    return centers, labels


def gamma_step_lowrank(basis: np.ndarray, coeffs: np.ndarray, V: np.ndarray,
                       batch: BatchedLoss, w: np.ndarray, L: np.ndarray,
                       inner_iters: int):
    """Alternating gradient descent on the factorization basis @ coeffs."""
    for _ in range(inner_iters):
        # coefficient update: the problem decouples across tasks
        sB2 = np.linalg.norm(basis, 2) ** 2
        G = batch.grads(basis @ coeffs + V)
        coeffs = coeffs - (basis.T @ G) / np.maximum(L * sB2, 1e-12)
        # basis update: curvature bounded by lam_max of sum_j w_j L_j z_j z_j^T
        G = batch.grads(basis @ coeffs + V)
        curv = np.linalg.eigvalsh((coeffs * (w * L)) @ coeffs.T)[-1]
        basis = basis - ((G * w) @ coeffs.T) / max(float(curv), 1e-12)
    return basis, coeffs


def _init_state(structure, batch, w, config, init) -> SolverState:
    m, d = batch.m, batch.d
    if init is not None:
        if isinstance(init, FitResult):
            artifacts = {k: np.array(v) for k, v in init.artifacts.items()}
            V = init.theta_hat - _gamma_matrix(structure, artifacts, m)
        else:
            artifacts = {k: np.array(v) for k, v in init.items() if k != "V"}
            V = np.array(init["V"], dtype=float)
        return SolverState(V=V, artifacts=artifacts)

    theta0 = batch.single_task_minimizers()
    if isinstance(structure, Vanilla):
        artifacts = {"beta": theta0 @ w / w.sum()}
    elif isinstance(structure, Clustered):
        centers = _kmeans_seed(theta0, structure.K, config.seed)
        labels = np.argmin(
            np.linalg.norm(theta0[:, :, None] - centers[:, None, :], axis=0), axis=1
        )
        artifacts = {"centers": centers, "labels": labels}
    else:
        basis = top_left_singular(theta0, structure.K, seed=config.seed)
        artifacts = {"basis": basis, "coeffs": basis.T @ theta0}
    V = theta0 - _gamma_matrix(structure, artifacts, m)
    return SolverState(V=V, artifacts=artifacts)


def _kmeans_seed(points: np.ndarray, K: int, seed: int, lloyd_rounds: int = 10):
    """Farthest-point seeding plus a few Lloyd rounds on the columns."""
    d, m = points.shape
    rng = np.random.default_rng(seed)
    centers = np.empty((d, K))
    centers[:, 0] = points[:, rng.integers(m)]
    for k in range(1, K):
        dist = np.min(
            np.linalg.norm(points[:, :, None] - centers[:, None, :k], axis=0), axis=1
        )
        centers[:, k] = points[:, int(np.argmax(dist))]
    for _ in range(lloyd_rounds):
        labels = np.argmin(
            np.linalg.norm(points[:, :, None] - centers[:, None, :], axis=0), axis=1
        )
        for k in range(K):
            members = labels == k
            if np.any(members):
                centers[:, k] = np.mean(points[:, members], axis=1)
    return centers


def fit_armul(tasks: TaskCollection, loss, structure: StructureSpec,
              penalty: PenaltyConfig, config: SolverConfig = SolverConfig(),
              init=None, batch: BatchedLoss | None = None) -> FitResult:
    """Run the alternating solver and return the fitted parameter matrix."""
    validate_collection(tasks, loss)
    check_structure(structure, tasks)
    if batch is None:
        batch = BatchedLoss(loss, tasks)
    w, lam = penalty.resolve(tasks)
    L = np.maximum(batch.lipschitz(), 1e-12)
    if config.step_size_v == AUTO:
        eta_v = 1.0 / L
    else:
        eta_v = np.full(batch.m, float(config.step_size_v))
    eta_gamma = None if config.step_size_gamma == AUTO else float(config.step_size_gamma)

    min_count = None
    if isinstance(structure, Clustered) and structure.min_fraction is not None:
        min_count = math.ceil(structure.min_fraction * batch.m / structure.K)
        if min_count * structure.K > batch.m:
            raise ValueError("cardinality floor exceeds the number of tasks")

    state = _init_state(structure, batch, w, config, init)
    V, art = state.V, state.artifacts
    gamma = _gamma_matrix(structure, art, batch.m)
    trace = [_objective(batch, w, lam, gamma + V, gamma)]
    converged = False
    for t in range(config.outer_iters):
        V = v_step(V, gamma, batch, lam, eta_v)
        if isinstance(structure, Vanilla):
            art["beta"] = gamma_step_vanilla(
                art["beta"], V, batch, w, L, config.inner_gamma_iters, eta_gamma
            )
        elif isinstance(structure, Clustered):
            art["centers"], art["labels"] = gamma_step_clustered(
                art["centers"], art["labels"], V, batch, w, L,
                config.inner_gamma_iters, min_count,
            )
        else:
            art["basis"], art["coeffs"] = gamma_step_lowrank(
                art["basis"], art["coeffs"], V, batch, w, L,
                config.inner_gamma_iters,
            )
        gamma = _gamma_matrix(structure, art, batch.m)
        obj = _objective(batch, w, lam, gamma + V, gamma)
        trace.append(obj)
        if abs(trace[-2] - obj) <= config.tol * max(1.0, abs(trace[-2])):
            converged = True
            break

    if isinstance(structure, LowRank):
        # report an orthonormal basis; the product basis @ coeffs is unchanged
        Q, R = np.linalg.qr(art["basis"])
        art["basis"], art["coeffs"] = Q, R @ art["coeffs"]
        gamma = art["basis"] @ art["coeffs"]

    name = {Vanilla: "vanilla", Clustered: "clustered", LowRank: "lowrank"}[
        type(structure)
    ]
    result = FitResult(
        theta_hat=gamma + V,
        structure=name,
        artifacts=art,
        objective_trace=np.array(trace),
        converged=converged,
    )
    result.kkt_residual = kkt_residual(tasks, loss, penalty, result, batch=batch)
    return result


def kkt_residual(tasks, loss, penalty: PenaltyConfig, result: FitResult,
                 batch: BatchedLoss | None = None) -> float:
    """Worst first-order optimality violation of the per-task subproblems."""
    if batch is None:
        batch = BatchedLoss(loss, tasks)
    _, lam = penalty.resolve(tasks)
    theta = result.theta_hat
    diff = theta - result.gamma()
    G = batch.grads(theta)
    worst = 0.0
    for j in range(batch.m):
        nrm = np.linalg.norm(diff[:, j])
        if nrm <= 1e-12 * max(1.0, np.linalg.norm(theta[:, j])):
            res = max(np.linalg.norm(G[:, j]) - lam[j], 0.0)
        else:
            res = np.linalg.norm(G[:, j] + lam[j] * diff[:, j] / nrm)
        worst = max(worst, float(res))
    return worst
