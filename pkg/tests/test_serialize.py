"""Dataset and fit-result file round-trips."""

import json

import numpy as np
import pytest

from armul.core import (FitResult, GlobalLambda, PenaltyConfig, SolverConfig,
                        TaskCollection, TaskDataset, Vanilla)
from armul.errors import ParseError, StructureMismatch
from armul.losses import SquaredError
from armul.serialize import (check_summary, read_collection, read_fit_result,
                             write_collection, write_fit_result,
                             write_scenario)
from armul.simgen import gen_vanilla_scenario
from armul.solver import fit_armul


def _collection(seed=0, with_y=True):
    rng = np.random.default_rng(seed)
    tasks = []
    for j in range(3):
        n = 5 + j
        X = rng.normal(size=(n, 2))
        y = rng.normal(size=n) if with_y else None
        tasks.append(TaskDataset(j, X, y))
    return TaskCollection(tasks)


def test_collection_round_trip_bit_identical(tmp_path):
    tasks = _collection()
    path = str(tmp_path / "data.csv")
    write_collection(path, tasks, "squared_error", seed=42)
    back, meta = read_collection(path)
    assert back.m == 3 and back.d == 2
    for a, b in zip(tasks, back):
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.responses, b.responses)
    assert meta == {"m": 3, "d": 2, "loss": "squared_error", "seed": 42}


def test_collection_without_responses(tmp_path):
    tasks = _collection(with_y=False)
    path = str(tmp_path / "means.csv")
    write_collection(path, tasks, "gaussian_mean")
    back, meta = read_collection(path)
    assert all(t.responses is None for t in back)
    assert meta["loss"] == "gaussian_mean"


def test_collection_header_and_meta(tmp_path):
    tasks = _collection()
    path = str(tmp_path / "data.csv")
    theta_star = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    write_collection(path, tasks, "squared_error",
                     theta_star=theta_star, inliers=[0, 2])
    header = open(path).readline().strip()
    assert header == "task_id,y,x1,x2"
    meta = json.load(open(str(tmp_path / "data.meta.json")))
    assert meta["theta_star"] == theta_star.tolist()
    assert meta["inliers"] == [0, 2]


def test_read_missing_file():
    with pytest.raises(ParseError):
        read_collection("/nonexistent/nope.csv")


def test_read_malformed_rows(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("task_id,y,x1\n0,1.0,not_a_number\n")
    with pytest.raises(ParseError):
        read_collection(str(path))


def test_read_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,target,x1\n0,1.0,2.0\n")
    with pytest.raises(ParseError):
        read_collection(str(path))


def test_scenario_round_trip(tmp_path):
    sc = gen_vanilla_scenario(m=4, n=10, d=3, epsilon=0.25, seed=9)
    path = str(tmp_path / "scenario.csv")
    write_scenario(path, sc)
    back, meta = read_collection(path)
    assert back.m == 4
    assert np.array_equal(np.array(meta["theta_star"]), sc.theta_star)
    assert np.array_equal(np.array(meta["inliers"]), sc.inliers)
    for a, b in zip(sc.tasks, back):
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.responses, b.responses)


def test_fit_result_round_trip(tmp_path):
    sc = gen_vanilla_scenario(m=3, n=20, d=2, seed=1)
    result = fit_armul(sc.tasks, SquaredError(), Vanilla(),
                       PenaltyConfig(GlobalLambda(1.0)),
                       SolverConfig(outer_iters=50))
    path = str(tmp_path / "fit.json")
    write_fit_result(path, result)
    back = read_fit_result(path)
    assert np.array_equal(back.theta_hat, result.theta_hat)
    assert np.array_equal(back.objective_trace, result.objective_trace)
    assert back.structure == result.structure
    assert back.converged == result.converged
    assert back.kkt_residual == result.kkt_residual
    assert set(back.artifacts) == set(result.artifacts)
    for k in result.artifacts:
        assert np.array_equal(np.asarray(back.artifacts[k]),
                              np.asarray(result.artifacts[k]))


def test_fit_result_missing_file():
    with pytest.raises(ParseError):
        read_fit_result("/nonexistent/fit.json")


def test_fit_result_malformed(tmp_path):
    path = tmp_path / "fit.json"
    path.write_text('{"theta_hat": [[1.0]]}')
    with pytest.raises(ParseError):
        read_fit_result(str(path))


def test_check_summary():
    result = FitResult(
        theta_hat=np.zeros((2, 3)),
        structure="vanilla",
        artifacts={"beta": np.zeros(2)},
        objective_trace=np.zeros(1),
        converged=True,
        kkt_residual=0.0,
    )
    check_summary(result, "vanilla")
    with pytest.raises(StructureMismatch):
        check_summary(result, "clustered")
    with pytest.raises(StructureMismatch):
        check_summary(result, "hexagonal")
