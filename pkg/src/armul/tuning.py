"""K-fold cross-validation for the penalty pre-constant c (lambda = c*sqrt(d))
and for the structure parameter K."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (Clustered, GlobalLambda, LowRank, PenaltyConfig,
                   SolverConfig, TaskCollection, TaskDataset)
from .errors import TooFewSamples
from .losses import BatchedLoss
from .metrics import mean_squared_prediction_error, misclassification_rate
from .solver import fit_armul

REGRESSION_C_GRID = tuple(round(0.2 * i, 10) for i in range(1, 11))
LOGISTIC_C_GRID = tuple(round(0.05 * i, 10) for i in range(1, 11))


@dataclass(frozen=True)
class CvPlan:
    folds: int = 5
    c_grid: tuple = REGRESSION_C_GRID
    k_grid: Optional[tuple] = None
    metric: str = "mse"
    seed: int = 0
    solver: SolverConfig = field(
        default_factory=lambda: SolverConfig(outer_iters=200, tol=1e-7)
    )

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if not self.c_grid:
            raise ValueError("c_grid must be non-empty")
        if self.metric not in ("mse", "misclassification"):
            raise ValueError("metric must be 'mse' or 'misclassification'")


def make_folds(tasks: TaskCollection, folds: int, seed: int):
    """Per-task fold ids; within each task the fold sizes differ by <= 1."""
    assignments = []
    seqs = np.random.SeedSequence(seed).spawn(tasks.m)
    for task, seq in zip(tasks, seqs):
        if task.n < folds:
            raise TooFewSamples(
                f"task {task.task_id} has {task.n} samples for {folds} folds"
            )
        rng = np.random.Generator(np.random.Philox(seq))
        perm = rng.permutation(task.n)
        ids = np.empty(task.n, dtype=int)
        ids[perm] = np.arange(task.n) % folds
        assignments.append(ids)
    return assignments


def _split(tasks: TaskCollection, assignments, fold_index: int):
    train, held = [], []
    for task, ids in zip(tasks, assignments):
        keep = ids != fold_index
        train.append(TaskDataset(task.task_id, task.features[keep],
                                 None if task.responses is None
                                 else task.responses[keep]))
        held.append(TaskDataset(task.task_id, task.features[~keep],
                                None if task.responses is None
                                else task.responses[~keep]))
    return TaskCollection(train), held


def _heldout_score(theta: np.ndarray, held, metric: str) -> float:
    scores = []
    for j, task in enumerate(held):
        if metric == "mse":
            scores.append(mean_squared_prediction_error(theta[:, j], task))
        else:
            scores.append(misclassification_rate(theta[:, j], task))
    return float(np.mean(scores))


def cv_score(tasks: TaskCollection, loss, structure, penalty: PenaltyConfig,
             plan: CvPlan, fold_index: int, assignments=None) -> float:
    """Fit on every task's data minus one fold; average the held-out metric."""
    if assignments is None:
        assignments = make_folds(tasks, plan.folds, plan.seed)
    train, held = _split(tasks, assignments, fold_index)
    result = fit_armul(train, loss, structure, penalty, plan.solver)
    return _heldout_score(result.theta_hat, held, plan.metric)


def _grid_scores(tasks, loss, structure, plan: CvPlan):
    """Mean CV score per c, warm-starting fits along the c grid."""
    assignments = make_folds(tasks, plan.folds, plan.seed)
    sqrt_d = math.sqrt(tasks.d)
    totals = np.zeros(len(plan.c_grid))
    for fold in range(plan.folds):
        train, held = _split(tasks, assignments, fold)
        batch = BatchedLoss(loss, train)
        init = None
        for i, c in enumerate(plan.c_grid):
            penalty = PenaltyConfig(GlobalLambda(c * sqrt_d))
            result = fit_armul(train, loss, structure, penalty, plan.solver,
                               init=init, batch=batch)
            init = result
            totals[i] += _heldout_score(result.theta_hat, held, plan.metric)
    return totals / plan.folds


def select_c(tasks: TaskCollection, loss, structure, plan: CvPlan):
    """Smallest c attaining the minimal mean CV score, plus the score table."""
    means = _grid_scores(tasks, loss, structure, plan)
    best = int(np.argmin(means))  # ties resolve to the smaller c
    table = list(zip(plan.c_grid, means.tolist()))
    return plan.c_grid[best], table


def select_structure_param(tasks: TaskCollection, loss, structure_family: str,
                           plan: CvPlan):
    """Joint (K, c) grid search; ties prefer smaller K, then smaller c.

    ``structure_family`` is "clustered" or "lowrank".  Returns
    (best_K, best_c, table) with one (K, c, score) row per grid cell.
    """
    if not plan.k_grid:
        raise ValueError("k_grid must be set")
    table = []
    best = None
    for K in plan.k_grid:
        if structure_family == "clustered":
            structure = Clustered(K) if K >= 2 else None
        elif structure_family == "lowrank":
            structure = LowRank(K)
        else:
            raise ValueError(f"unknown structure family {structure_family!r}")
        if structure is None:
            raise ValueError("clustered selection requires K >= 2")
        means = _grid_scores(tasks, loss, structure, plan)
        for c, s in zip(plan.c_grid, means):
            table.append((K, c, float(s)))
            if best is None or s < best[0]:
                best = (float(s), K, c)
    return best[1], best[2], table
