"""Benchmark command line: simulate, fit, cv, transfer, oracle-check, pca.

Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import baselines, simgen, transfer
from .core import (Clustered, GlobalLambda, LowRank, PenaltyConfig,
                   PerTaskLambda, SolverConfig, Vanilla)
from .errors import ArmulError, ConfigError, ParseError
from .losses import GaussianMean, Logistic, SquaredError
from .metrics import (max_l2_error, mean_squared_prediction_error,
                      misclassification_rate)
from .pca import reduce_features
from .serialize import (check_summary, read_collection, read_fit_result,
                        write_collection, write_fit_result)
from .solver import fit_armul
from .tuning import (LOGISTIC_C_GRID, REGRESSION_C_GRID, CvPlan, select_c,
                     select_structure_param)

LOSSES = {
    "squared_error": SquaredError,
    "logistic": Logistic,
    "gaussian_mean": GaussianMean,
}

SIM_COLUMNS = ["case", "method", "epsilon", "delta", "rep", "max_err_S",
               "max_err_all", "runtime_ms", "selected_c", "selected_K"]


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
    # flags win over config values
    for key, val in vars(args).items():
        if key in ("config", "func") or val is None:
            continue
        cfg[key.replace("_", "-") if False else key] = val
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing config field: {key}")
    return cfg[key]


def _structure_for(case: str, K):
    if case == "vanilla":
        return Vanilla()
    if case == "clustered":
        return Clustered(int(K))
    if case == "lowrank":
        return LowRank(int(K))
    raise ConfigError(f"case: unknown value {case!r}")


def _workers() -> int:
    env = os.environ.get("ARMUL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# simulate


def _theta_for_method(method, scenario, cfg, plan):
    """Fit one method on a scenario; returns (theta, selected_c, selected_K)."""
    tasks = scenario.tasks
    loss = SquaredError()
    case = scenario.meta["case"]
    K = scenario.meta.get("K") or cfg.get("K", 3)
    sel_c, sel_K = "", ""
    if method == "armul":
        if plan.k_grid and case != "vanilla":
            sel_K, sel_c, _ = select_structure_param(tasks, loss, case, plan)
        else:
            sel_K = K if case != "vanilla" else ""
            sel_c, _ = select_c(tasks, loss, _structure_for(case, K), plan)
        structure = _structure_for(case, sel_K or K)
        penalty = PenaltyConfig(GlobalLambda(sel_c * math.sqrt(tasks.d)))
        solver = SolverConfig(outer_iters=cfg.get("outer_iters", 500),
                              tol=cfg.get("tol", 1e-8))
        theta = fit_armul(tasks, loss, structure, penalty, solver).theta_hat
    elif method == "stl":
        theta = baselines.fit_single_task(tasks, loss)
    elif method == "pooled":
        beta = baselines.fit_pooled(tasks, loss)
        theta = np.repeat(beta[:, None], tasks.m, axis=1)
    elif method == "clustered_mtl":
        centers, labels = baselines.fit_clustered_mtl(tasks, loss, int(K))
        theta = centers[:, labels]
        sel_K = K
    elif method == "lowrank_mtl":
        B, Z = baselines.fit_lowrank_mtl(tasks, loss, int(K))
        theta = B @ Z
        sel_K = K
    else:
        raise ConfigError(f"methods: unknown method {method!r}")
    return theta, sel_c, sel_K


def _simulate_cell(job):
    cfg, case, eps, delta, rep = job
    seed = int(np.random.SeedSequence(
        [cfg.get("seed", 0), zlib.crc32(case.encode()) & 0xFFFF,
         int(round(eps * 1000)), int(round(delta * 1000)), rep]
    ).generate_state(1)[0])
    gen = simgen.GENERATORS[case]
    kwargs = dict(m=cfg.get("m", 30), n=cfg.get("n", 200), d=cfg.get("d", 50),
                  epsilon=eps, delta=delta, seed=seed)
    if case != "vanilla":
        kwargs["K"] = cfg.get("K", 3)
    scenario = gen(**kwargs)
    cv_cfg = cfg.get("cv", {})
    plan = CvPlan(folds=cv_cfg.get("folds", 5),
                  c_grid=tuple(cv_cfg.get("c_grid", REGRESSION_C_GRID)),
                  k_grid=tuple(cv_cfg["k_grid"]) if cv_cfg.get("k_grid") else None,
                  seed=seed)
    rows = []
    for method in cfg.get("methods", ["armul", "stl", "pooled"]):
        t0 = time.perf_counter()
        theta, sel_c, sel_K = _theta_for_method(method, scenario, cfg, plan)
        ms = 1000.0 * (time.perf_counter() - t0)
        rows.append([case, method, eps, delta, rep,
                     max_l2_error(theta, scenario.theta_star, scenario.inliers),
                     max_l2_error(theta, scenario.theta_star),
                     round(ms, 3), sel_c, sel_K])
    return rows


def simulate_rows(cfg: dict):
    """All result rows for a simulate config, in deterministic order."""
    case = _require(cfg, "case")
    if case not in simgen.GENERATORS:
        raise ConfigError(f"case: unknown value {case!r}")
    eps_list = cfg.get("epsilon", [0.0])
    delta_list = cfg.get("delta", [0.0])
    reps = int(cfg.get("reps", 1))
    jobs = [(cfg, case, float(e), float(dl), r)
            for e in eps_list for dl in delta_list for r in range(reps)]
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_simulate_cell, jobs))
    else:
        chunks = [_simulate_cell(job) for job in jobs]
    return [row for chunk in chunks for row in chunk]


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    rows = simulate_rows(cfg)
    out = cfg.get("out", "results.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SIM_COLUMNS)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


# ---------------------------------------------------------------------------
# fit


def _penalty_from_config(cfg: dict, d: int) -> PenaltyConfig:
    spec = cfg.get("lambda", {"global": 0.0})
    weights = np.array(cfg["weights"], dtype=float) if "weights" in cfg else None
    if "per_task" in spec:
        return PenaltyConfig(PerTaskLambda(spec["per_task"]), weights=weights)
    if "c" in spec:
        return PenaltyConfig(GlobalLambda(float(spec["c"]) * math.sqrt(d)),
                             weights=weights)
    if "global" in spec:
        return PenaltyConfig(GlobalLambda(float(spec["global"])), weights=weights)
    raise ConfigError("lambda: expected one of 'global', 'c', 'per_task'")


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    tasks, meta = read_collection(_require(cfg, "dataset"))
    loss_name = cfg.get("loss", meta.get("loss", "squared_error"))
    if loss_name not in LOSSES:
        raise ConfigError(f"loss: unknown value {loss_name!r}")
    loss = LOSSES[loss_name]()
    method = cfg.get("method", "armul")
    solver = SolverConfig(outer_iters=int(cfg.get("outer_iters", 500)),
                          tol=float(cfg.get("tol", 1e-8)),
                          seed=int(cfg.get("seed", 0)))
    if method == "armul":
        structure = _structure_for(cfg.get("structure", "vanilla"), cfg.get("K", 2))
        penalty = _penalty_from_config(cfg, tasks.d)
        result = fit_armul(tasks, loss, structure, penalty, solver)
    elif method == "stl":
        theta = baselines.fit_single_task(tasks, loss, solver)
        from .core import FitResult
        result = FitResult(theta_hat=theta, structure="vanilla",
                           artifacts={"beta": theta.mean(axis=1)},
                           objective_trace=np.array([]), converged=True,
                           kkt_residual=0.0)
    else:
        raise ConfigError(f"method: unknown value {method!r}")
    out = cfg.get("out", "fit.json")
    write_fit_result(out, result)
    print(f"wrote fit result to {out}")
    if cfg.get("test_dataset"):
        test, _ = read_collection(cfg["test_dataset"])
        scores = []
        for j, task in enumerate(test):
            if loss_name == "logistic":
                scores.append(misclassification_rate(result.theta_hat[:, j], task))
            else:
                scores.append(
                    mean_squared_prediction_error(result.theta_hat[:, j], task)
                )
        row = {"metric": "misclassification" if loss_name == "logistic" else "mse",
               "per_task": scores, "mean": float(np.mean(scores))}
        with open(out + ".metrics.json", "w") as fh:
            json.dump(row, fh)
        print(f"test {row['metric']}: {row['mean']:.6f}")
    return 0


# ---------------------------------------------------------------------------
# cv


def cmd_cv(args) -> int:
    cfg = _load_config(args)
    tasks, meta = read_collection(_require(cfg, "dataset"))
    loss_name = cfg.get("loss", meta.get("loss", "squared_error"))
    loss = LOSSES[loss_name]()
    default_grid = LOGISTIC_C_GRID if loss_name == "logistic" else REGRESSION_C_GRID
    cv_cfg = cfg.get("cv", {})
    plan = CvPlan(folds=int(cv_cfg.get("folds", 5)),
                  c_grid=tuple(cv_cfg.get("c_grid", default_grid)),
                  k_grid=tuple(cv_cfg["k_grid"]) if cv_cfg.get("k_grid") else None,
                  metric="misclassification" if loss_name == "logistic" else "mse",
                  seed=int(cfg.get("seed", 0)))
    family = cfg.get("structure", "vanilla")
    out = cfg.get("out", "cv.csv")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        if plan.k_grid and family != "vanilla":
            best_K, best_c, table = select_structure_param(tasks, loss, family, plan)
            writer.writerow(["K", "c", "score"])
            writer.writerows(table)
            print(f"selected K={best_K}, c={best_c}")
        else:
            structure = _structure_for(family, cfg.get("K", 2))
            best_c, table = select_c(tasks, loss, structure, plan)
            writer.writerow(["c", "score"])
            writer.writerows(table)
            print(f"selected c={best_c}")
    return 0


# ---------------------------------------------------------------------------
# transfer


def cmd_transfer(args) -> int:
    cfg = _load_config(args)
    summary = read_fit_result(_require(cfg, "summary"))
    tasks, meta = read_collection(_require(cfg, "dataset"))
    if tasks.m != 1:
        raise ConfigError("transfer expects a single-task dataset")
    loss = LOSSES[cfg.get("loss", meta.get("loss", "squared_error"))]()
    lam = float(cfg.get("lam", 0.0))
    structure = cfg.get("structure", summary.structure)
    check_summary(summary, structure)
    new_data = tasks[0]
    solver = SolverConfig(tol=float(cfg.get("tol", 1e-10)))
    payload = {"structure": structure, "lam": lam}
    if structure == "vanilla":
        theta = transfer.transfer_vanilla(new_data, loss,
                                          summary.artifacts["beta"], lam, solver)
    elif structure == "clustered":
        theta, z = transfer.transfer_clustered(new_data, loss,
                                               summary.artifacts["centers"],
                                               lam, solver)
        payload["z"] = int(z)
    else:
        theta, z = transfer.transfer_lowrank(new_data, loss,
                                             summary.artifacts["basis"],
                                             lam, solver)
        payload["z"] = np.asarray(z).tolist()
    payload["theta"] = theta.tolist()
    out = cfg.get("out", "transfer.json")
    with open(out, "w") as fh:
        json.dump(payload, fh)
    print(f"wrote transferred parameters to {out}")
    return 0


# ---------------------------------------------------------------------------
# oracle-check


def _oracle_checks(solver_tol: float):
    """Yield (name, max deviation, threshold) for the self-check suites."""
    from .prox import group_soft_threshold, huber_value
    from .warmup import MeansProblem, armul_means_closed_form

    rng = np.random.default_rng(7)
    cfg = SolverConfig(outer_iters=3000, tol=solver_tol)

    # 1-D closed-form equivalence (penalty curvature maps lam -> lam/2)
    dev = 0.0
    for _ in range(20):
        m = int(rng.integers(3, 12))
        n = int(rng.integers(3, 20))
        from .core import TaskCollection, TaskDataset
        tasks = TaskCollection([
            TaskDataset(j, rng.normal(rng.uniform(-3, 3), 1.0, size=(n, 1)))
            for j in range(m)
        ])
        lam = float(rng.uniform(0.1, 3.0))
        penalty = PenaltyConfig(PerTaskLambda([lam] * m), weights=np.ones(m))
        result = fit_armul(tasks, GaussianMean(), Vanilla(), penalty, cfg)
        xbar = np.array([t.features.mean() for t in tasks])
        _, thetas = armul_means_closed_form(MeansProblem(xbar, n, lam / 2.0))
        dev = max(dev, float(np.max(np.abs(result.theta_hat.ravel() - thetas))))
    yield ("one_dim_oracle", dev, 1e-5)

    # merge to the pooled minimizer under homogeneity
    dev = 0.0
    for s in range(10):
        sc = simgen.gen_vanilla_scenario(m=8, n=60, d=4, seed=s)
        # factor 2 matches the curvature of the squared-error score
        lam = 2.0 * 2.0 * math.sqrt(4 + math.log(8))
        penalty = PenaltyConfig(GlobalLambda(lam))
        result = fit_armul(sc.tasks, SquaredError(), Vanilla(), penalty,
                           SolverConfig(outer_iters=2000, tol=solver_tol))
        pooled = baselines.fit_pooled(sc.tasks, SquaredError())
        dev = max(dev, float(np.max(np.linalg.norm(
            result.theta_hat - pooled[:, None], axis=0))))
    yield ("merge_to_pooled", dev, 1e-5)

    # personalization bound ||theta_j - stl_j|| <= 2 lam_j / rho_j
    worst = -math.inf
    for s in range(5):
        sc = simgen.gen_vanilla_scenario(m=6, n=80, d=5, delta=0.5, seed=100 + s)
        lam = 1.0
        penalty = PenaltyConfig(GlobalLambda(lam))
        result = fit_armul(sc.tasks, SquaredError(), Vanilla(), penalty,
                           SolverConfig(outer_iters=2000, tol=solver_tol))
        stl = baselines.fit_single_task(sc.tasks, SquaredError())
        for j, task in enumerate(sc.tasks):
            rho = 2.0 * np.linalg.eigvalsh(
                task.features.T @ task.features / task.n)[0]
            bound = 2.0 * (lam / math.sqrt(task.n)) / rho
            gap = np.linalg.norm(result.theta_hat[:, j] - stl[:, j])
            worst = max(worst, float(gap - bound))
    yield ("personalization_bound", max(worst, 0.0), 0.0)

    # prox and Huber identities on random draws
    dev = 0.0
    for _ in range(200):
        x = rng.normal(size=2) * rng.uniform(0, 3)
        c = float(rng.uniform(0, 2))
        p = group_soft_threshold(x, c)
        dev = max(dev, abs(np.linalg.norm(p) - max(np.linalg.norm(x) - c, 0.0)))
        lam = float(rng.uniform(0.1, 2.0))
        xb, th = rng.normal(), rng.normal()
        grid = np.linspace(-10, 10, 20001)
        obj = 0.5 * (grid - xb) ** 2 + lam * np.abs(th - grid)
        g0 = grid[int(np.argmin(obj))]
        fine = np.linspace(g0 - 2e-3, g0 + 2e-3, 4001)
        inf_conv = float(np.min(0.5 * (fine - xb) ** 2 + lam * np.abs(th - fine)))
        dev = max(dev, abs(inf_conv - huber_value(th - xb, lam)))
    yield ("prox_and_huber_identities", dev, 1e-6)


def cmd_oracle_check(args) -> int:
    tol = float(getattr(args, "solver_tol", None) or 1e-12)
    failed = 0
    for name, dev, threshold in _oracle_checks(tol):
        ok = dev <= threshold
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: max deviation {dev:.3e} "
              f"(allowed {threshold:.1e})")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# pca


def cmd_pca(args) -> int:
    cfg = _load_config(args)
    tasks, meta = read_collection(_require(cfg, "dataset"))
    target_dim = int(_require(cfg, "target_dim"))
    X = np.vstack([t.features for t in tasks])
    if target_dim > X.shape[1]:
        raise ConfigError(f"target_dim {target_dim} exceeds dimension {X.shape[1]}")
    reduced, transform = reduce_features(X, target_dim,
                                         add_intercept=bool(cfg.get("add_intercept")))
    from .core import TaskCollection, TaskDataset
    out_tasks, offset = [], 0
    for t in tasks:
        out_tasks.append(TaskDataset(t.task_id, reduced[offset:offset + t.n],
                                     t.responses))
        offset += t.n
    out = cfg.get("out", "reduced.csv")
    write_collection(out, TaskCollection(out_tasks),
                     meta.get("loss", "squared_error"))
    print(f"wrote reduced dataset ({reduced.shape[1]} columns) to {out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="armul",
                                     description="Multi-task shrinkage benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a synthetic benchmark grid")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--case", choices=sorted(simgen.GENERATORS))
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one method on a dataset file")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--dataset")
    p.add_argument("--method")
    p.add_argument("--structure", choices=["vanilla", "clustered", "lowrank"])
    p.add_argument("--K", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--test-dataset", dest="test_dataset")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="cross-validate the penalty pre-constant")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--dataset")
    p.add_argument("--structure", choices=["vanilla", "clustered", "lowrank"])
    p.add_argument("--K", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("transfer", help="solve a new task from saved summaries")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--summary")
    p.add_argument("--dataset")
    p.add_argument("--lam", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("oracle-check", help="run the closed-form self checks")
    p.add_argument("--solver-tol", dest="solver_tol", type=float)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("pca", help="reduce feature dimension by PCA")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--dataset")
    p.add_argument("--target-dim", dest="target_dim", type=int)
    p.add_argument("--add-intercept", dest="add_intercept", action="store_true",
                   default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pca)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ArmulError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
