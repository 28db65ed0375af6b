"""Closed forms for the one-dimensional mean problem.

Huber location estimator, the soft-threshold shrinkage around it, the
James-Stein family and ridge-regularized multi-task means.  These serve as
exact oracles for the generic solver, so the Huber minimizer is computed by a
breakpoint scan rather than iterative descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateS, TooFewTasks
from .prox import huber_grad


@dataclass(frozen=True)
class MeansProblem:
    sample_means: np.ndarray
    n: int
    lam: float

    def __post_init__(self):
        x = np.asarray(self.sample_means, dtype=float).ravel()
        if x.size < 1:
            raise TooFewTasks("need at least one task")
        object.__setattr__(self, "sample_means", x)
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


def huber_location(xs: np.ndarray, lam: float) -> float:
    """Exact minimizer of sum_j rho_lam(theta - x_j).

    The derivative G(theta) = sum_j psi_lam(theta - x_j) is piecewise linear
    and non-decreasing; scan the sorted breakpoints {x_j +/- lam} for the sign
    change and solve the linear piece.  A flat zero stretch (non-unique
    minimum) resolves to the midpoint of the optimal interval.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size == 0:
        raise TooFewTasks("need at least one point")
    bps = np.unique(np.concatenate([xs - lam, xs + lam]))
    vals = np.sum(np.clip(bps[:, None] - xs[None, :], -lam, lam), axis=1)
    # flat stretches of G are mathematically zero but accumulate rounding noise
    eps = 1e-9 * max(1.0, xs.size * lam)
    # G(bps[0]) = -m*lam < 0 and G(bps[-1]) = +m*lam > 0
    i = int(np.argmax(vals > eps))
    if vals[i - 1] < -eps:
        # strict sign change inside the segment: solve the linear piece
        lo, hi = bps[i - 1], bps[i]
        glo, ghi = vals[i - 1], vals[i]
        return float(lo - glo * (hi - lo) / (ghi - glo))
    # zero stretch ending at bps[i-1]; walk back to its start and take the
    # midpoint of the optimal interval
    k = i - 1
    while k > 0 and abs(vals[k - 1]) <= eps:
        k -= 1
    return float(0.5 * (bps[k] + bps[i - 1]))


def armul_means_closed_form(problem: MeansProblem):
    """Huber center plus soft-threshold shrinkage of each sample mean."""
    if problem.lam <= 0:
        raise ValueError("lam must be > 0")
    xs = problem.sample_means
    center = huber_location(xs, problem.lam)
    diff = xs - center
    thetas = xs - np.minimum(problem.lam, np.abs(diff)) * np.sign(diff)
    return center, thetas


def js_shrink_zero(x: np.ndarray) -> np.ndarray:
    """Shrink toward zero: (1 - (m-2)/||x||^2) x.  Requires m >= 3."""
    x = np.asarray(x, dtype=float).ravel()
    m = x.size
    if m < 3:
        raise TooFewTasks("shrinkage toward zero requires m >= 3")
    nrm2 = float(np.sum(x * x))
    if nrm2 == 0.0:
        raise DegenerateS("zero vector has undefined shrinkage factor")
    return (1.0 - (m - 2) / nrm2) * x


def js_shrink_mean(x: np.ndarray) -> np.ndarray:
    """Shrink toward the sample mean.  Requires m >= 4 and spread S > 0."""
    x = np.asarray(x, dtype=float).ravel()
    m = x.size
    if m < 4:
        raise TooFewTasks("mean-centered shrinkage requires m >= 4")
    xbar = float(np.mean(x))
    S = float(np.sum((x - xbar) ** 2))
    if S == 0.0:
        raise DegenerateS("constant vector: shrinkage factor is undefined")
    return xbar + (1.0 - (m - 3) / S) * (x - xbar)


def js_shrink_mean_positive(x: np.ndarray) -> np.ndarray:
    """Positive-part variant; a constant vector maps to all-xbar."""
    x = np.asarray(x, dtype=float).ravel()
    m = x.size
    if m < 4:
        raise TooFewTasks("mean-centered shrinkage requires m >= 4")
    xbar = float(np.mean(x))
    S = float(np.sum((x - xbar) ** 2))
    factor = max(1.0 - (m - 3) / S, 0.0) if S > 0.0 else 0.0
    return xbar + factor * (x - xbar)


def js_estimators(x: np.ndarray):
    """All three shrinkage estimators; requires m >= 4."""
    return js_shrink_zero(x), js_shrink_mean(x), js_shrink_mean_positive(x)


def ridge_mtl_means(x: np.ndarray, lam: float):
    """Ridge-penalized joint means: center xbar, entries pulled by 1/(1+lam)."""
    if lam <= 0:
        raise ValueError("lam must be > 0")
    x = np.asarray(x, dtype=float).ravel()
    xbar = float(np.mean(x))
    return xbar, xbar + (x - xbar) / (1.0 + lam)
