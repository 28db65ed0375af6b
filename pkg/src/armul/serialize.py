"""File formats: dataset CSV + metadata JSON, fit-result JSON."""

from __future__ import annotations

import csv
import json
import os
from typing import Optional

import numpy as np

from .core import FitResult, TaskCollection, TaskDataset
from .errors import ParseError, StructureMismatch
from .simgen import Scenario


def write_collection(path: str, tasks: TaskCollection, loss_name: str,
                     theta_star: Optional[np.ndarray] = None,
                     inliers=None, seed: Optional[int] = None) -> None:
    """One CSV with header task_id,y,x1..xd plus a metadata JSON alongside."""
    d = tasks.d
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_id", "y"] + [f"x{i + 1}" for i in range(d)])
        for task in tasks:
            y = task.responses
            for i in range(task.n):
                yi = "" if y is None else repr(float(y[i]))
                writer.writerow([task.task_id, yi]
                                + [repr(float(v)) for v in task.features[i]])
    meta = {"m": tasks.m, "d": d, "loss": loss_name}
    if theta_star is not None:
        meta["theta_star"] = np.asarray(theta_star).tolist()
    if inliers is not None:
        meta["inliers"] = [int(j) for j in inliers]
    if seed is not None:
        meta["seed"] = int(seed)
    with open(_meta_path(path), "w") as fh:
        json.dump(meta, fh)


def _meta_path(path: str) -> str:
    base, _ = os.path.splitext(path)
    return base + ".meta.json"


def read_collection(path: str):
    """Returns (TaskCollection, metadata dict)."""
    if not os.path.exists(path):
        raise ParseError(f"no such file: {path}")
    try:
        by_task: dict = {}
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:2] != ["task_id", "y"]:
                raise ParseError(f"{path}: unexpected header {header[:2]}")
            for row in reader:
                tid = int(row[0])
                y = float(row[1]) if row[1] != "" else None
                x = [float(v) for v in row[2:]]
                by_task.setdefault(tid, ([], []))
                by_task[tid][0].append(x)
                by_task[tid][1].append(y)
    except (ValueError, IndexError, StopIteration) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    tasks = []
    for tid in sorted(by_task):
        X, ys = by_task[tid]
        responses = None if any(v is None for v in ys) else np.array(ys)
        tasks.append(TaskDataset(task_id=tid, features=np.array(X),
                                 responses=responses))
    meta = {}
    mpath = _meta_path(path)
    if os.path.exists(mpath):
        with open(mpath) as fh:
            meta = json.load(fh)
    return TaskCollection(tasks), meta


def write_scenario(path: str, scenario: Scenario) -> None:
    write_collection(path, scenario.tasks, "squared_error",
                     theta_star=scenario.theta_star,
                     inliers=scenario.inliers,
                     seed=scenario.meta.get("seed"))


def write_fit_result(path: str, result: FitResult) -> None:
    payload = {
        "structure": result.structure,
        "theta_hat": result.theta_hat.tolist(),
        "objective_trace": result.objective_trace.tolist(),
        "converged": bool(result.converged),
        "kkt_residual": float(result.kkt_residual),
        "artifacts": {
            k: np.asarray(v).tolist() for k, v in result.artifacts.items()
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def read_fit_result(path: str) -> FitResult:
    if not os.path.exists(path):
        raise ParseError(f"no such file: {path}")
    try:
        with open(path) as fh:
            payload = json.load(fh)
        artifacts = {}
        for k, v in payload["artifacts"].items():
            arr = np.array(v)
            if k == "labels":
                arr = arr.astype(int)
            artifacts[k] = arr
        return FitResult(
            theta_hat=np.array(payload["theta_hat"]),
            structure=payload["structure"],
            artifacts=artifacts,
            objective_trace=np.array(payload["objective_trace"]),
            converged=payload["converged"],
            kkt_residual=payload["kkt_residual"],
        )
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


EXPECTED_ARTIFACTS = {
    "vanilla": {"beta"},
    "clustered": {"centers", "labels"},
    "lowrank": {"basis", "coeffs"},
}


def check_summary(result: FitResult, structure_name: str) -> None:
    expected = EXPECTED_ARTIFACTS.get(structure_name)
    if expected is None:
        raise StructureMismatch(f"unknown structure {structure_name!r}")
    if result.structure != structure_name or not expected <= set(result.artifacts):
        raise StructureMismatch(
            f"summary holds {result.structure!r} artifacts, wanted {structure_name!r}"
        )
