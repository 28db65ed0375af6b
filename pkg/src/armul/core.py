"""Domain types: datasets, structure/penalty configuration, solver settings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BadLabel, DimensionMismatch, EmptyTask, KTooLarge


@dataclass(frozen=True)
class TaskDataset:
    """Samples of one task: an (n, d) feature matrix and an optional response vector.

    For regression and logistic tasks, ``responses`` holds y (logistic labels
    must be +1/-1).  For mean estimation the feature rows themselves are the
    observations and ``responses`` is None.
    """

    task_id: int
    features: np.ndarray
    responses: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch(f"task {self.task_id}: features must be 2-D")
        if X.shape[0] == 0:
            raise EmptyTask(f"task {self.task_id} has no samples")
        object.__setattr__(self, "features", X)
        if self.responses is not None:
            y = np.asarray(self.responses, dtype=float).ravel()
            if y.shape[0] != X.shape[0]:
                raise DimensionMismatch(
                    f"task {self.task_id}: {X.shape[0]} rows but {y.shape[0]} responses"
                )
            object.__setattr__(self, "responses", y)
        self.features.setflags(write=False)
        if self.responses is not None:
            self.responses.setflags(write=False)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class TaskCollection:
    """An ordered list of tasks sharing one ambient dimension."""

    tasks: tuple
    shared_dim: int

    def __init__(self, tasks: Sequence[TaskDataset]):
        tasks = tuple(tasks)
        if not tasks:
            raise EmptyTask("collection must contain at least one task")
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "shared_dim", tasks[0].dim)

    @property
    def m(self) -> int:
        return len(self.tasks)

    @property
    def d(self) -> int:
        return self.shared_dim

    @property
    def sizes(self) -> np.ndarray:
        return np.array([t.n for t in self.tasks], dtype=float)

    def __iter__(self):
        return iter(self.tasks)

    def __getitem__(self, j):
        return self.tasks[j]


def validate_collection(collection: TaskCollection, loss=None) -> None:
    """Check all task invariants; raises on the first violation.

    When ``loss`` is a logistic model, responses must be exactly +/-1.
    """
    d = collection.shared_dim
    check_labels = loss is not None and getattr(loss, "binary_labels", False)
    for task in collection:
        if task.n == 0:
            raise EmptyTask(f"task {task.task_id} has no samples")
        if task.dim != d:
            raise DimensionMismatch(
                f"task {task.task_id} has width {task.dim}, expected {d}"
            )
        if check_labels:
            y = task.responses
            if y is None or not np.all(np.isin(y, (-1.0, 1.0))):
                raise BadLabel(f"task {task.task_id}: logistic labels must be +/-1")


# ---------------------------------------------------------------------------
# Structure of the prototype set.


@dataclass(frozen=True)
class Vanilla:
    """All tasks shrink toward one consensus vector."""


@dataclass(frozen=True)
class Clustered:
    """Tasks shrink toward one of K cluster centers.

    ``min_fraction`` (alpha) enforces a per-cluster floor of ceil(alpha*m/K)
    members during assignment.
    """

    K: int
    min_fraction: Optional[float] = None

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("Clustered requires K >= 2")
        if self.min_fraction is not None and not (0.0 < self.min_fraction <= 1.0):
            raise ValueError("min_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class LowRank:
    """Tasks shrink toward a rank-K subspace."""

    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("LowRank requires K >= 1")


StructureSpec = Union[Vanilla, Clustered, LowRank]


def check_structure(structure: StructureSpec, collection: TaskCollection) -> None:
    if isinstance(structure, Clustered) and structure.K > collection.m:
        raise KTooLarge(f"Clustered K={structure.K} exceeds m={collection.m}")
    if isinstance(structure, LowRank):
        if structure.K > min(collection.d, collection.m):
            raise KTooLarge(
                f"LowRank K={structure.K} exceeds min(d, m)="
                f"{min(collection.d, collection.m)}"
            )


# ---------------------------------------------------------------------------
# Penalty configuration.


@dataclass(frozen=True)
class GlobalLambda:
    """One tuning parameter, scaled per task as lambda_j = lam / sqrt(n_j)."""

    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


@dataclass(frozen=True)
class PerTaskLambda:
    values: tuple

    def __init__(self, values):
        vals = tuple(float(v) for v in values)
        if any(v < 0 for v in vals):
            raise ValueError("all lambda_j must be >= 0")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PenaltyConfig:
    """Task weights (default w_j = n_j) and penalty levels."""

    lambda_rule: Union[GlobalLambda, PerTaskLambda]
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if np.any(w <= 0):
                raise ValueError("all weights must be > 0")
            object.__setattr__(self, "weights", w)

    def resolve(self, collection: TaskCollection):
        """Return (weights, lambdas) as length-m arrays for a collection."""
        n = collection.sizes
        m = collection.m
        if self.weights is None:
            w = n.copy()
        else:
            if self.weights.shape[0] != m:
                raise DimensionMismatch("weights length must equal task count")
            w = self.weights.copy()
        if isinstance(self.lambda_rule, GlobalLambda):
            lam = self.lambda_rule.lam / np.sqrt(n)
        else:
            vals = np.array(self.lambda_rule.values, dtype=float)
            if vals.shape[0] != m:
                raise DimensionMismatch("per-task lambdas length must equal task count")
            lam = vals
        return w, lam


# ---------------------------------------------------------------------------
# Solver settings and fit results.

AUTO = "auto"


@dataclass(frozen=True)
class SolverConfig:
    step_size_v: Union[float, str] = AUTO
    step_size_gamma: Union[float, str] = AUTO
    outer_iters: int = 500
    inner_gamma_iters: int = 5
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be >= 1")
        if self.inner_gamma_iters < 1:
            raise ValueError("inner_gamma_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        for name in ("step_size_v", "step_size_gamma"):
            v = getattr(self, name)
            if v != AUTO and not (isinstance(v, (int, float)) and v > 0):
                raise ValueError(f"{name} must be positive or 'auto'")


@dataclass
class FitResult:
    """Estimated parameter matrix plus the structure artifacts that produced it."""

    theta_hat: np.ndarray                 # (d, m)
    structure: str                        # "vanilla" | "clustered" | "lowrank"
    artifacts: dict = field(default_factory=dict)
    objective_trace: np.ndarray = field(default_factory=lambda: np.array([]))
    converged: bool = False
    kkt_residual: float = math.nan

    def gamma(self) -> np.ndarray:
        """Reconstruct the (d, m) prototype matrix from the artifacts."""
        if self.structure == "vanilla":
            beta = self.artifacts["beta"]
            return np.repeat(beta[:, None], self.theta_hat.shape[1], axis=1)
        if self.structure == "clustered":
            return self.artifacts["centers"][:, self.artifacts["labels"]]
        if self.structure == "lowrank":
            return self.artifacts["basis"] @ self.artifacts["coeffs"]
        raise ValueError(f"unknown structure {self.structure!r}")
