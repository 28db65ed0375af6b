"""Loss models: empirical loss values, gradients and curvature bounds.

Three concrete losses are supported.  ``SquaredError`` and ``Logistic`` expect
(features, responses) pairs; ``GaussianMean`` treats each feature row as the
observation itself.  ``BatchedLoss`` precomputes per-task sufficient statistics
so the solver can evaluate all tasks at once.
"""

from __future__ import annotations

import numpy as np

from .core import TaskCollection, TaskDataset
from .errors import NonFinite


def lambda_max(A: np.ndarray, rtol: float = 1e-8, max_iters: int = 5000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    d = A.shape[0]
    if d == 1:
        return float(A[0, 0])
    rng = np.random.default_rng(0)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iters):
        Av = A @ v
        nrm = np.linalg.norm(Av)
        if nrm == 0.0:
            return 0.0
        v = Av / nrm
        val = float(v @ (A @ v))
        if abs(val - prev) <= rtol * max(abs(val), 1.0):
            return val
        prev = val
    return prev


def _stable_softplus(t: np.ndarray) -> np.ndarray:
    # b(t) = log(1 + e^t), computed without overflow
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class SquaredError:
    """Mean of (x_i^T theta - y_i)^2."""

    binary_labels = False

    def value(self, theta: np.ndarray, data: TaskDataset) -> float:
        r = data.features @ theta - data.responses
        return float(np.mean(r * r))

    def grad(self, theta: np.ndarray, data: TaskDataset) -> np.ndarray:
        r = data.features @ theta - data.responses
        return 2.0 * (data.features.T @ r) / data.n

    def lipschitz(self, data: TaskDataset) -> float:
        A = data.features.T @ data.features / data.n
        return 2.0 * lambda_max(A)


class Logistic:
    """Mean of b(x_i^T theta) - y_i x_i^T theta with y_i in {+1, -1}."""

    binary_labels = True

    def value(self, theta: np.ndarray, data: TaskDataset) -> float:
        t = data.features @ theta
        return float(np.mean(_stable_softplus(t) - data.responses * t))

    def grad(self, theta: np.ndarray, data: TaskDataset) -> np.ndarray:
        t = data.features @ theta
        return data.features.T @ (_sigmoid(t) - data.responses) / data.n

    def lipschitz(self, data: TaskDataset) -> float:
        A = data.features.T @ data.features / data.n
        return 0.25 * lambda_max(A)


class GaussianMean:
    """Mean of ||xi_i - theta||^2 where the feature rows are the observations."""

    binary_labels = False

    def value(self, theta: np.ndarray, data: TaskDataset) -> float:
        r = data.features - theta
        return float(np.mean(np.sum(r * r, axis=1)))

    def grad(self, theta: np.ndarray, data: TaskDataset) -> np.ndarray:
        return 2.0 * (theta - np.mean(data.features, axis=0))

    def lipschitz(self, data: TaskDataset) -> float:
        return 2.0


def loss_value(model, theta, data) -> float:
    val = model.value(np.asarray(theta, dtype=float), data)
    if not np.isfinite(val):
        raise NonFinite("loss value is not finite")
    return val


def loss_grad(model, theta, data) -> np.ndarray:
    g = model.grad(np.asarray(theta, dtype=float), data)
    if not np.all(np.isfinite(g)):
        raise NonFinite("loss gradient is not finite")
    return g


def grad_lipschitz_bound(model, data) -> float:
    return model.lipschitz(data)


class BatchedLoss:
    """Vectorized per-collection loss evaluation.

    ``values(Theta)`` and ``grads(Theta)`` take a (d, m) parameter matrix with
    one column per task.  Quadratic losses are reduced to sufficient statistics
    once at construction; the logistic loss keeps the raw data.
    """

    def __init__(self, model, collection: TaskCollection):
        self.model = model
        self.collection = collection
        self.m = collection.m
        self.d = collection.d
        self._lip = np.array([model.lipschitz(t) for t in collection])
        self._kind = type(model).__name__
        if isinstance(model, SquaredError):
            self.A = np.stack(
                [t.features.T @ t.features / t.n for t in collection]
            )  # (m, d, d)
            self.b = np.stack(
                [t.features.T @ t.responses / t.n for t in collection]
            )  # (m, d)
            self.c = np.array([np.mean(t.responses**2) for t in collection])
        elif isinstance(model, GaussianMean):
            self.mu = np.stack([np.mean(t.features, axis=0) for t in collection])
            self.c = np.array(
                [np.mean(np.sum(t.features**2, axis=1)) for t in collection]
            )

    def lipschitz(self) -> np.ndarray:
        return self._lip

    def values(self, Theta: np.ndarray) -> np.ndarray:
        Th = Theta.T  # (m, d)
        if self._kind == "SquaredError":
            quad = np.einsum("ja,jab,jb->j", Th, self.A, Th)
            return quad - 2.0 * np.sum(self.b * Th, axis=1) + self.c
        if self._kind == "GaussianMean":
            return np.sum(Th * Th, axis=1) - 2.0 * np.sum(self.mu * Th, axis=1) + self.c
        return np.array(
            [self.model.value(Theta[:, j], t) for j, t in enumerate(self.collection)]
        )

    def grads(self, Theta: np.ndarray) -> np.ndarray:
        if self._kind == "SquaredError":
            G = 2.0 * ((self.A @ Theta.T[:, :, None])[:, :, 0] - self.b)
            return G.T
        if self._kind == "GaussianMean":
            return 2.0 * (Theta - self.mu.T)
        return np.column_stack(
            [self.model.grad(Theta[:, j], t) for j, t in enumerate(self.collection)]
        )

    def single_task_minimizers(self, tol: float = 1e-10, max_iters: int = 5000):
        """Per-task loss minimizers; closed form where available, GD otherwise."""
        if self._kind == "GaussianMean":
            return self.mu.T.copy()
        if self._kind == "SquaredError":
            out = np.empty((self.d, self.m))
            for j in range(self.m):
                A = self.A[j]
                if np.linalg.cond(A) < 1e12:
                    out[:, j] = np.linalg.solve(A, self.b[j])
                else:
                    out[:, j] = _descend(
                        lambda th: 2.0 * (A @ th - self.b[j]), self._lip[j],
                        np.zeros(self.d), tol, max_iters,
                    )
            return out
        out = np.empty((self.d, self.m))
        for j, t in enumerate(self.collection):
            out[:, j] = _descend(
                lambda th, t=t: self.model.grad(th, t), self._lip[j],
                np.zeros(self.d), tol, max_iters,
            )
        return out


def _descend(grad_fn, lip, x0, tol, max_iters):
    eta = 1.0 / max(lip, 1e-12)
    x = x0
    for _ in range(max_iters):
        g = grad_fn(x)
        x = x - eta * g
        if np.linalg.norm(g) <= tol:
            break
    return x
