import numpy as np
import pytest

from armul import (GaussianMean, Logistic, SquaredError, TaskCollection,
                   TaskDataset, grad_lipschitz_bound, loss_grad, loss_value)
from armul.losses import BatchedLoss


def one_sample(x, y=None):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    resp = None if y is None else np.atleast_1d(np.asarray(y, dtype=float))
    return TaskDataset(0, x, resp)


def test_squared_error_value():
    data = one_sample([1.0, 0.0], 2.0)
    assert loss_value(SquaredError(), np.zeros(2), data) == 4.0


def test_logistic_value():
    data = one_sample([1.0, 1.0], 1.0)
    assert abs(loss_value(Logistic(), np.zeros(2), data) - np.log(2)) < 1e-12


def test_gaussian_mean_value():
    data = TaskDataset(0, np.array([[0.0, 0.0], [2.0, 0.0]]))
    assert loss_value(GaussianMean(), np.array([1.0, 0.0]), data) == 1.0


def test_squared_error_grad():
    data = one_sample([1.0, 0.0], 2.0)
    assert np.allclose(loss_grad(SquaredError(), np.zeros(2), data), [-4.0, 0.0])


def test_logistic_grad():
    data = one_sample([1.0, 0.0], 1.0)
    assert np.allclose(loss_grad(Logistic(), np.zeros(2), data), [-0.5, 0.0])


def test_gaussian_mean_grad():
    data = TaskDataset(0, np.array([[0.0, 0.0], [2.0, 0.0]]))
    g = loss_grad(GaussianMean(), np.array([1.0, 0.0]), data)
    assert np.allclose(g, [0.0, 0.0])


def test_lipschitz_bounds():
    eye = TaskDataset(0, np.eye(2), np.array([1.0, -1.0]))
    assert abs(grad_lipschitz_bound(SquaredError(), eye) - 1.0) < 1e-7
    assert abs(grad_lipschitz_bound(Logistic(), eye) - 0.125) < 1e-8
    rng = np.random.default_rng(0)
    any_data = TaskDataset(0, rng.normal(size=(5, 3)))
    assert grad_lipschitz_bound(GaussianMean(), any_data) == 2.0


def test_logistic_no_overflow():
    data = one_sample([1.0], 1.0)
    val = loss_value(Logistic(), np.array([1000.0]), data)
    assert np.isfinite(val)
    val = loss_value(Logistic(), np.array([-1000.0]), data)
    assert np.isfinite(val)


def random_task(rng, loss, n=8, d=3):
    X = rng.normal(size=(n, d))
    if isinstance(loss, GaussianMean):
        return TaskDataset(0, X)
    if isinstance(loss, Logistic):
        y = rng.choice([-1.0, 1.0], size=n)
    else:
        y = rng.normal(size=n)
    return TaskDataset(0, X, y)


@pytest.mark.parametrize("loss", [SquaredError(), Logistic(), GaussianMean()])
def test_gradient_matches_finite_differences(loss):
    rng = np.random.default_rng(5)
    for _ in range(20):
        data = random_task(rng, loss)
        theta = rng.normal(size=3)
        g = loss_grad(loss, theta, data)
        h = 1e-6
        fd = np.empty(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fd[i] = (loss_value(loss, theta + e, data)
                     - loss_value(loss, theta - e, data)) / (2 * h)
        assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, np.linalg.norm(g))


@pytest.mark.parametrize("loss", [SquaredError(), Logistic(), GaussianMean()])
def test_convexity(loss):
    rng = np.random.default_rng(6)
    for _ in range(50):
        data = random_task(rng, loss)
        t1, t2 = rng.normal(size=(2, 3)) * 2
        t = float(rng.uniform(0.01, 0.99))
        lhs = loss_value(loss, t * t1 + (1 - t) * t2, data)
        rhs = t * loss_value(loss, t1, data) + (1 - t) * loss_value(loss, t2, data)
        assert lhs <= rhs + 1e-12


@pytest.mark.parametrize("loss", [SquaredError(), Logistic(), GaussianMean()])
def test_descent_lemma(loss):
    rng = np.random.default_rng(7)
    for _ in range(50):
        data = random_task(rng, loss)
        theta = rng.normal(size=3) * 2
        L = grad_lipschitz_bound(loss, data)
        g = loss_grad(loss, theta, data)
        assert loss_value(loss, theta - g / L, data) <= loss_value(loss, theta, data) + 1e-12


def test_batched_matches_per_task():
    rng = np.random.default_rng(8)
    for loss in (SquaredError(), Logistic(), GaussianMean()):
        tasks = TaskCollection([random_task(rng, loss, n=6 + j) for j in range(4)])
        batch = BatchedLoss(loss, tasks)
        Theta = rng.normal(size=(3, 4))
        vals = batch.values(Theta)
        grads = batch.grads(Theta)
        for j, task in enumerate(tasks):
            assert abs(vals[j] - loss_value(loss, Theta[:, j], task)) < 1e-10
            assert np.allclose(grads[:, j], loss_grad(loss, Theta[:, j], task),
                               atol=1e-10)
        assert np.allclose(batch.lipschitz(),
                           [grad_lipschitz_bound(loss, t) for t in tasks],
                           rtol=1e-6)
