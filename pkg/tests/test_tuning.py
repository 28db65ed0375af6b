"""Cross-validation: fold construction, scoring, and grid selection."""

import math

import numpy as np
import pytest

from armul.core import (GlobalLambda, PenaltyConfig, SolverConfig,
                        TaskCollection, TaskDataset, Vanilla)
from armul.losses import GaussianMean, SquaredError
from armul.errors import TooFewSamples
from armul.tuning import (CvPlan, cv_score, make_folds, select_c,
                          select_structure_param)


def _regression_tasks(m=4, n=40, d=3, delta=0.0, seed=0):
    rng = np.random.default_rng(seed)
    theta_star = rng.normal(size=d)
    tasks = []
    for j in range(m):
        theta_j = theta_star + delta * rng.normal(size=d) / math.sqrt(d)
        X = rng.normal(size=(n, d))
        y = X @ theta_j + 0.5 * rng.normal(size=n)
        tasks.append(TaskDataset(j, X, y))
    return TaskCollection(tasks)


# ---------------------------------------------------------------------------
# make_folds


def test_fold_sizes_balanced():
    tasks = _regression_tasks(m=3, n=23)
    assignments = make_folds(tasks, 5, seed=1)
    assert len(assignments) == 3
    for ids in assignments:
        counts = np.bincount(ids, minlength=5)
        # 23 = 4*5 + 3, so sizes are {5,5,5,4,4} in some order
        assert counts.max() - counts.min() <= 1
        assert counts.sum() == 23


def test_fold_determinism():
    tasks = _regression_tasks()
    a = make_folds(tasks, 5, seed=7)
    b = make_folds(tasks, 5, seed=7)
    c = make_folds(tasks, 5, seed=8)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    assert any(not np.array_equal(x, y) for x, y in zip(a, c))


def test_fold_too_few_samples():
    tasks = TaskCollection([
        TaskDataset(0, np.ones((3, 2)), np.ones(3)),
    ])
    with pytest.raises(TooFewSamples):
        make_folds(tasks, 5, seed=0)


# ---------------------------------------------------------------------------
# cv_score


def test_cv_score_zero_on_noiseless_shared_model():
    # all tasks share one noiseless linear model; any fit that merges and
    # interpolates gives a held-out MSE of ~0
    rng = np.random.default_rng(3)
    theta = np.array([1.0, -2.0])
    tasks = TaskCollection([
        TaskDataset(j, X := rng.normal(size=(30, 2)), X @ theta)
        for j in range(4)
    ])
    plan = CvPlan(folds=3, solver=SolverConfig(outer_iters=500, tol=1e-10))
    penalty = PenaltyConfig(GlobalLambda(50.0))
    score = cv_score(tasks, SquaredError(), Vanilla(), penalty, plan, 0)
    assert score < 1e-8


def test_cv_score_respects_fold_index():
    tasks = _regression_tasks(seed=5)
    plan = CvPlan(folds=4)
    penalty = PenaltyConfig(GlobalLambda(1.0))
    assignments = make_folds(tasks, plan.folds, plan.seed)
    s0 = cv_score(tasks, SquaredError(), Vanilla(), penalty, plan, 0,
                  assignments=assignments)
    s1 = cv_score(tasks, SquaredError(), Vanilla(), penalty, plan, 1,
                  assignments=assignments)
    assert s0 != s1  # different held-out data almost surely scores differently


# ---------------------------------------------------------------------------
# select_c


def test_select_c_singleton_grid():
    tasks = _regression_tasks()
    plan = CvPlan(folds=3, c_grid=(0.8,))
    c, table = select_c(tasks, SquaredError(), Vanilla(), plan)
    assert c == 0.8
    assert len(table) == 1 and table[0][0] == 0.8


def test_select_c_deterministic():
    tasks = _regression_tasks(seed=11)
    plan = CvPlan(folds=3, c_grid=(0.2, 0.6, 1.0))
    c1, t1 = select_c(tasks, SquaredError(), Vanilla(), plan)
    c2, t2 = select_c(tasks, SquaredError(), Vanilla(), plan)
    assert c1 == c2
    assert all(a == b for a, b in zip(t1, t2))  # bit-identical scores


def test_select_c_tie_prefers_smaller(monkeypatch):
    # force all CV scores equal; the tie must resolve to the smallest c
    import armul.tuning as tuning
    monkeypatch.setattr(tuning, "_grid_scores",
                        lambda *a, **k: np.zeros(3))
    plan = CvPlan(folds=3, c_grid=(0.4, 0.8, 1.2))
    c, _ = select_c(_regression_tasks(), SquaredError(), Vanilla(), plan)
    assert c == 0.4


def test_select_c_prefers_pooling_for_identical_tasks():
    # identical tasks with noise: heavier coupling should not lose to the
    # smallest c, and the selected lambda should sit above the bottom of
    # the grid
    rng = np.random.default_rng(21)
    theta = np.array([2.0, -1.0, 0.5])
    tasks = TaskCollection([
        TaskDataset(j, X := rng.normal(size=(25, 3)),
                    X @ theta + rng.normal(size=25))
        for j in range(6)
    ])
    plan = CvPlan(folds=5, c_grid=(0.05, 0.4, 3.2))
    c, table = select_c(tasks, SquaredError(), Vanilla(), plan)
    scores = dict((round(k, 10), v) for k, v in table)
    assert scores[3.2] <= scores[0.05] + 1e-9
    assert c != 0.05


def test_select_c_means_prefers_separation_for_far_tasks():
    # two wildly different mean-estimation tasks: tight coupling is hurtful,
    # so the small-c end of the grid must win
    rng = np.random.default_rng(2)
    tasks = TaskCollection([
        TaskDataset(0, rng.normal(-20.0, 1.0, size=(40, 1))),
        TaskDataset(1, rng.normal(20.0, 1.0, size=(40, 1))),
    ])

    # mean estimation scored with MSE against the (constant-feature) samples
    # is not expressible with the built-in metrics, so check the fitted
    # parameters directly across the grid instead
    plan = CvPlan(folds=4, c_grid=(0.01, 600.0))
    from armul.solver import fit_armul
    far = fit_armul(tasks, GaussianMean(), Vanilla(),
                    PenaltyConfig(GlobalLambda(0.01)), plan.solver)
    near = fit_armul(tasks, GaussianMean(), Vanilla(),
                     PenaltyConfig(GlobalLambda(600.0)), plan.solver)
    spread_far = abs(far.theta_hat[0, 0] - far.theta_hat[0, 1])
    spread_near = abs(near.theta_hat[0, 0] - near.theta_hat[0, 1])
    assert spread_far > 30.0
    assert spread_near < 1.0


# ---------------------------------------------------------------------------
# select_structure_param


def test_select_structure_requires_k_grid():
    plan = CvPlan(folds=3)
    with pytest.raises(ValueError):
        select_structure_param(_regression_tasks(), SquaredError(),
                               "clustered", plan)


def test_select_structure_unknown_family():
    plan = CvPlan(folds=3, k_grid=(2,))
    with pytest.raises(ValueError):
        select_structure_param(_regression_tasks(), SquaredError(),
                               "spiral", plan)


def test_select_structure_singleton_grids():
    tasks = _regression_tasks(m=6, n=30)
    plan = CvPlan(folds=3, c_grid=(0.6,), k_grid=(2,))
    K, c, table = select_structure_param(tasks, SquaredError(),
                                         "clustered", plan)
    assert (K, c) == (2, 0.6)
    assert table == [(2, 0.6, table[0][2])]


def test_select_structure_recovers_true_k():
    # two well-separated clusters of regression tasks; K=2 should beat K=3
    # and K=4 on held-out error
    rng = np.random.default_rng(17)
    centers = np.array([[3.0, 0.0], [-3.0, 0.0]])
    tasks = []
    for j in range(8):
        theta_j = centers[j % 2]
        X = rng.normal(size=(40, 2))
        tasks.append(TaskDataset(j, X, X @ theta_j + 0.3 * rng.normal(size=40)))
    tasks = TaskCollection(tasks)
    plan = CvPlan(folds=4, c_grid=(0.4, 0.8), k_grid=(2, 3))
    K, c, table = select_structure_param(tasks, SquaredError(),
                                         "clustered", plan)
    assert K == 2
    assert len(table) == 4


def test_select_structure_tie_prefers_smaller_k(monkeypatch):
    import armul.tuning as tuning
    monkeypatch.setattr(tuning, "_grid_scores",
                        lambda *a, **k: np.zeros(2))
    plan = CvPlan(folds=3, c_grid=(0.2, 0.4), k_grid=(2, 3, 4))
    K, c, _ = select_structure_param(_regression_tasks(m=6), SquaredError(),
                                     "clustered", plan)
    assert (K, c) == (2, 0.2)
