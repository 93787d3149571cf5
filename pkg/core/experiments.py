"""Copyright 2025 The ghive developers

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .constants import DEFAULT_ALPHA, DEFAULT_MAX_ITER, DEFAULT_N_MC, DEFAULT_SEED, DEFAULT_TOL
from .enums import Estimator, ExperimentName, FitMode, SeScale
from .errors import GhiveError, ValidationError
from .estimator import fit_naive_mle, fit_qml_all, make_split
from .inference import Contrast, confidence_interval, wald_interval
from .pipeline import project_folds
from .rng import replication_seed
from .simgen import SimConfig, fstar_oracle, make_truth, metrics, sample_dataset


if TYPE_CHECKING:
    from types_.arrays import FloatArray

    from .estimator import Dataset, FoldFits, SplitPlan
    from .inference import InferenceResult
    from .pipeline import GhiveFit
    from .simgen import SimTruth


__all__ = (
    "AGGREGATED_COLUMNS",
    "GRID_COLUMNS",
    "LONG_COLUMNS",
    "ExperimentResult",
    "ExperimentSpec",
    "aggregate",
    "preset",
    "run_experiment",
    "run_simulation",
)


logger: logging.Logger = logging.getLogger(__name__)


GRID_COLUMNS: tuple[str, ...] = ("experiment", "grid_index", "n", "p", "m_dim", "k", "eta")
LONG_COLUMNS: tuple[str, ...] = (*GRID_COLUMNS, "estimator", "rep", "metric", "value", "failed")
AGGREGATED_COLUMNS: tuple[str, ...] = (*GRID_COLUMNS, "estimator", "metric", "mean", "se", "count")

GHIVE_MODES: dict[Estimator, FitMode] = {
    Estimator.data_driven: FitMode.data_driven,
    Estimator.oracle_k: FitMode.oracle_k,
    Estimator.oracle_p: FitMode.oracle_p,
}
ALL_ESTIMATORS: tuple[Estimator, ...] = tuple(Estimator)
PSEUDO_TRUE = "fstar_oracle"

type Row = dict[str, Any]


@dataclass(frozen=True, slots=True)
class ExperimentSpec:
    """A grid of simulation settings, the estimators to compare and the replication count.

    ``name`` is ``None`` for a single ad-hoc simulation.
    """

    name: ExperimentName | None
    grid: tuple[SimConfig, ...]
    estimators: tuple[Estimator, ...] = ALL_ESTIMATORS
    reps: int = 1
    seed: int = DEFAULT_SEED
    alpha: float = DEFAULT_ALPHA
    n_mc: int = DEFAULT_N_MC
    entry: tuple[int, int] = (0, 0)
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self) -> None:
        if not self.grid:
            raise ValidationError("An experiment needs at least one grid point.")

        if self.reps < 1:
            raise ValidationError(f"reps must be at least 1, got {self.reps}.")

    @property
    def label(self) -> str:
        return self.name.value if self.name is not None else "simulate"

    @property
    def fixed_truth(self) -> bool:
        return self.name is ExperimentName.table1


@dataclass(frozen=True, slots=True)
class ExperimentResult:
    spec: ExperimentSpec
    long: pd.DataFrame
    aggregated: pd.DataFrame


@dataclass(frozen=True, slots=True)
class _Task:
    spec: ExperimentSpec
    grid_index: int
    config: SimConfig
    rep: int
    truth: SimTruth | None = None
    f_star: FloatArray | None = field(default=None)


def task_seed(seed: int, grid_index: int, rep: int) -> int:
    return replication_seed(seed, (grid_index << 32) | rep)


def _grid(base: dict[str, Any], key: str, values: list[Any]) -> tuple[SimConfig, ...]:
    return tuple(SimConfig(**{**base, key: value}) for value in values)


def preset(
    name: ExperimentName,
    *,
    reps: int | None = None,
    seed: int = DEFAULT_SEED,
    full_scale: bool = False,
    n_mc: int | None = None,
) -> ExperimentSpec:
    """Desk-scale (or full-scale) settings of the published simulation study."""
    grid: tuple[SimConfig, ...]
    estimators: tuple[Estimator, ...] = ALL_ESTIMATORS
    default_n_mc: int = DEFAULT_N_MC

    if name is ExperimentName.fig1_bias:
        default_n_mc = n_mc or (200_000 if full_scale else 100_000)
        p_values: list[int] = list(range(3, 49, 3)) if full_scale else [3, 6, 12, 24, 48]
        grid = _grid({"n": default_n_mc, "m_dim": 4, "k": 3, "eta": 1.0}, "p", p_values)
        estimators = ()
        default_reps: int = 20 if full_scale else 5

    elif name is ExperimentName.fig1_eta:
        etas: list[float] = [float(e) for e in range(1, 9)]
        grid = _grid({"n": 100, "p": 4, "m_dim": 4, "k": 3}, "eta", etas)
        default_reps = 500 if full_scale else 100

    elif name is ExperimentName.fig2_n:
        sizes: list[int] = list(range(100, 401, 50)) if full_scale else [100, 200, 300, 400]
        grid = _grid({"p": 4, "m_dim": 4, "k": 3, "eta": 4.0}, "n", sizes)
        default_reps = 200 if full_scale else 50

    elif name is ExperimentName.fig2_m:
        dims: list[int] = [4, 8, 12, 16, 20] if full_scale else [4, 12, 20]
        grid = _grid({"n": 200, "p": 4, "k": 3, "eta": 4.0}, "m_dim", dims)
        default_reps = 100 if full_scale else 30

    else:
        default_n_mc = 200_000 if full_scale else 100_000
        sizes = [40, 70] if full_scale else [70]
        grid = _grid({"p": 4, "m_dim": 20, "k": 3, "eta": 4.0}, "n", sizes)
        estimators = (Estimator.data_driven, Estimator.naive_mle)
        default_reps = 100

    return ExperimentSpec(
        name=name,
        grid=grid,
        estimators=estimators,
        reps=reps if reps is not None else default_reps,
        seed=seed,
        n_mc=n_mc if n_mc is not None else default_n_mc,
    )


def _row(task: _Task, estimator: str, metric: str, value: float, *, failed: bool = False) -> Row:
    cfg: SimConfig = task.config
    return {
        "experiment": task.spec.label,
        "grid_index": task.grid_index,
        "n": cfg.n,
        "p": cfg.p,
        "m_dim": cfg.m_dim,
        "k": cfg.k,
        "eta": cfg.eta,
        "estimator": estimator,
        "rep": task.rep,
        "metric": metric,
        "value": float(value),
        "failed": failed,
    }


def _failure(task: _Task, estimator: str, error: Exception) -> Row:
    logger.warning("Rep %d of grid point %d failed for %s: %s", task.rep, task.grid_index, estimator, error)
    return _row(task, estimator, "failed", math.nan, failed=True)


def _interval_rows(
    task: _Task, estimator: str, result: InferenceResult, targets: tuple[float, float], suffix: str
) -> list[Row]:
    target_pf, target_theta = targets
    values: dict[str, float] = {
        "estimate": result.estimate,
        "se": result.se,
        "ci_length": result.length,
        "cover_pf": float(result.covers(target_pf)),
        "cover_theta": float(result.covers(target_theta)),
    }
    return [_row(task, estimator, metric + suffix, value) for metric, value in values.items()]


def _bias_rows(task: _Task) -> list[Row]:
    spec: ExperimentSpec = task.spec
    cfg: SimConfig = task.config.replace(seed=task_seed(spec.seed, task.grid_index, task.rep))

    try:
        truth: SimTruth = make_truth(cfg)
        f_star: FloatArray = fstar_oracle(truth, cfg, n_mc=spec.n_mc, tol=spec.tol, max_iter=spec.max_iter).values
    except GhiveError as e:
        return [_failure(task, PSEUDO_TRUE, e)]

    record = metrics(f_star, truth, f_star=f_star)
    return [_row(task, PSEUDO_TRUE, key, record[key]) for key in ("bias1", "bias2")]


def _error_rows(task: _Task) -> list[Row]:
    spec: ExperimentSpec = task.spec
    rep_seed: int = task_seed(spec.seed, task.grid_index, task.rep)
    cfg: SimConfig = task.config

    try:
        truth: SimTruth = task.truth if task.truth is not None else make_truth(cfg.replace(seed=rep_seed))
        data: Dataset = sample_dataset(truth, cfg, rep_seed)
        split: SplitPlan = make_split(data.n, rep_seed)
        folds: FoldFits | None = None
        if any(e in GHIVE_MODES for e in spec.estimators):
            folds = fit_qml_all(data, cfg.family, split, spec.tol, spec.max_iter)
    except GhiveError as e:
        return [_failure(task, estimator.value, e) for estimator in spec.estimators]

    contrast: Contrast = Contrast.basis(*spec.entry, cfg.m_dim, cfg.p)
    targets: tuple[float, float] = (0.0, 0.0)
    if spec.fixed_truth and task.f_star is not None:
        targets = (contrast.apply(truth.p_b_perp @ task.f_star), contrast.apply(truth.theta))

    rows: list[Row] = []
    for estimator in spec.estimators:
        try:
            if estimator is Estimator.naive_mle:
                coef = fit_naive_mle(data, cfg.family, spec.tol, spec.max_iter)
                theta_hat: FloatArray = coef.values
                p_perp_hat: FloatArray | None = None

                if spec.fixed_truth:
                    wald: InferenceResult = wald_interval(data, cfg.family, coef, contrast, spec.alpha)
                    rows.extend(_interval_rows(task, estimator.value, wald, targets, ""))
            else:
                assert folds is not None
                fit: GhiveFit = project_folds(
                    data,
                    cfg.family,
                    split,
                    folds,
                    GHIVE_MODES[estimator],
                    k=cfg.k,
                    projector=truth.p_b_perp,
                    tol=spec.tol,
                    max_iter=spec.max_iter,
                )
                theta_hat, p_perp_hat = fit.theta_hat, fit.p_perp
                rows.append(_row(task, estimator.value, "k_hat", fit.k_hat))

                if spec.fixed_truth:
                    for scale, suffix in ((SeScale.sample, ""), (SeScale.asymptotic, "_asymptotic")):
                        ci: InferenceResult = confidence_interval(
                            fit, data, cfg.family, contrast, spec.alpha, se_scale=scale
                        )
                        rows.extend(_interval_rows(task, estimator.value, ci, targets, suffix))

            record = metrics(theta_hat, truth, p_perp_hat=p_perp_hat)
            rows.extend(_row(task, estimator.value, key, value) for key, value in record.items())

        except GhiveError as e:
            rows.append(_failure(task, estimator.value, e))

    return rows


def _run_task(task: _Task) -> list[Row]:
    if task.spec.name is ExperimentName.fig1_bias:
        return _bias_rows(task)

    return _error_rows(task)


def _fixed_truths(spec: ExperimentSpec) -> list[tuple[SimTruth | None, FloatArray | None]]:
    if not spec.fixed_truth:
        return [(None, None)] * len(spec.grid)

    fixed: list[tuple[SimTruth | None, FloatArray | None]] = []
    for index, cfg in enumerate(spec.grid):
        truth_cfg: SimConfig = cfg.replace(seed=task_seed(spec.seed, index, 0))
        truth: SimTruth = make_truth(truth_cfg)
        f_star: FloatArray = fstar_oracle(truth, truth_cfg, n_mc=spec.n_mc, tol=spec.tol, max_iter=spec.max_iter).values
        logger.info("Pseudo-true target for grid point %d computed with n_mc=%d.", index, spec.n_mc)
        fixed.append((truth, f_star))

    return fixed


def aggregate(long: pd.DataFrame) -> pd.DataFrame:
    """Mean, standard error and count of every metric over the non-failed replications."""
    ok: pd.DataFrame = long.loc[~long["failed"].astype(bool)]
    keys: list[str] = [*GRID_COLUMNS, "estimator", "metric"]

    grouped = ok.groupby(keys, sort=True)["value"]
    summary: pd.DataFrame = grouped.agg(mean="mean", std="std", count="count").reset_index()
    summary["se"] = (summary["std"] / np.sqrt(summary["count"])).fillna(0.0)

    return summary.loc[:, list(AGGREGATED_COLUMNS)].reset_index(drop=True)


def run_experiment(spec: ExperimentSpec, *, n_jobs: int = 1) -> ExperimentResult:
    """Run every grid point and replication; failed replications become flagged rows."""
    fixed = _fixed_truths(spec)
    tasks: list[_Task] = [
        _Task(spec=spec, grid_index=index, config=cfg, rep=rep, truth=fixed[index][0], f_star=fixed[index][1])
        for index, cfg in enumerate(spec.grid)
        for rep in range(spec.reps)
    ]
    logger.info("Running %s: %d grid points x %d reps on %d workers.", spec.label, len(spec.grid), spec.reps, n_jobs)

    if n_jobs == 1:
        chunks: list[list[Row]] = [_run_task(task) for task in tasks]
    else:
        chunks = list(Parallel(n_jobs=n_jobs)(delayed(_run_task)(task) for task in tasks))

    rows: list[Row] = [row for chunk in chunks for row in chunk]
    long: pd.DataFrame = pd.DataFrame(rows, columns=list(LONG_COLUMNS))
    long = long.sort_values(["grid_index", "estimator", "rep", "metric"], kind="stable").reset_index(drop=True)

    failures: int = int(long["failed"].sum())
    if failures:
        logger.warning("%s finished with %d failed estimator runs.", spec.label, failures)

    return ExperimentResult(spec=spec, long=long, aggregated=aggregate(long))


def run_simulation(
    config: SimConfig,
    estimators: tuple[Estimator, ...] = ALL_ESTIMATORS,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    n_jobs: int = 1,
) -> ExperimentResult:
    """``config.reps`` replications of one setting, truth redrawn per replication."""
    spec: ExperimentSpec = ExperimentSpec(
        name=None,
        grid=(config,),
        estimators=estimators,
        reps=config.reps,
        seed=config.seed,
        tol=tol,
        max_iter=max_iter,
    )
    return run_experiment(spec, n_jobs=n_jobs)
