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
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple, Protocol

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg

from .constants import (
    DEFAULT_MAX_HALVINGS,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    REGULARIZATION_SCALE,
    STREAM_SPLIT,
)
from .errors import DimensionMismatchError, FamilyDomainError, FoldTooSmallError, NumericalError, ValidationError
from .rng import make_generator


if TYPE_CHECKING:
    from types_.arrays import BoolArray, FloatArray, IntArray

    from .family import GlmFamily


__all__ = (
    "CoefMatrix",
    "Dataset",
    "FoldFits",
    "LogLikelihood",
    "NewtonResult",
    "QuasiLikelihood",
    "SplitPlan",
    "damped_newton",
    "fit_naive_mle",
    "fit_qml_all",
    "fit_qml_one",
    "fit_qml_response",
    "make_split",
    "weighted_gram",
)


logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Dataset:
    """Observed covariates ``x`` (n×p) and responses ``y`` (n×M)."""

    x: FloatArray
    y: FloatArray

    def __post_init__(self) -> None:
        x: FloatArray = np.asarray(self.x, dtype=np.float64)
        y: FloatArray = np.asarray(self.y, dtype=np.float64)

        if y.ndim == 1:
            y = y[:, None]

        if x.ndim != 2 or y.ndim != 2:
            raise DimensionMismatchError("x and y must be two-dimensional.")

        if x.shape[0] != y.shape[0]:
            raise DimensionMismatchError(f"x has {x.shape[0]} rows but y has {y.shape[0]}.")

        if x.shape[0] < 2 or x.shape[1] < 1 or y.shape[1] < 1:
            raise ValidationError("A dataset needs n >= 2, p >= 1 and M >= 1.")

        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("Dataset entries must be finite.")

        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def m_dim(self) -> int:
        return int(self.y.shape[1])

    def validate_for(self, family: GlmFamily) -> None:
        family.validate_response(self.y)


@dataclass(frozen=True, slots=True)
class SplitPlan:
    seed: int
    d1: IntArray
    d2: IntArray

    @property
    def n(self) -> int:
        return int(self.d1.size + self.d2.size)

    def fold_of_row(self) -> IntArray:
        """0 for rows in ``d1``, 1 for rows in ``d2``."""
        folds: IntArray = np.zeros(self.n, dtype=np.int64)
        folds[self.d2] = 1
        return folds


def make_split(n: int, seed: int) -> SplitPlan:
    """Seeded two-fold split; the first ``⌈n/2⌉`` entries of a uniform permutation form ``d1``."""
    if n < 2:
        raise ValidationError(f"Cannot split {n} observations into two folds.")

    rng: np.random.Generator = make_generator(seed, stream=STREAM_SPLIT)
    perm: IntArray = rng.permutation(n).astype(np.int64)
    half: int = (n + 1) // 2

    return SplitPlan(seed=int(seed), d1=np.sort(perm[:half]), d2=np.sort(perm[half:]))


def weighted_gram(x: FloatArray, weights: FloatArray) -> FloatArray:
    """``(1/n) Σᵢ wᵢ xᵢ xᵢᵀ``, symmetrized."""
    gram: FloatArray = (x.T * weights) @ x / x.shape[0]
    return 0.5 * (gram + gram.T)


class Objective(Protocol):
    def value(self, f: FloatArray) -> float: ...

    def gradient(self, f: FloatArray) -> FloatArray: ...

    def hessian(self, f: FloatArray) -> FloatArray: ...


class QuasiLikelihood:
    """Modified quasi-likelihood ``Q(F) = (1/n) Σᵢ ∫₀^{F xᵢ} (yᵢ − b'(s)) / b''(s) ds`` of one response."""

    def __init__(self, x: FloatArray, y: FloatArray, family: GlmFamily) -> None:
        self.x: FloatArray = x
        self.y: FloatArray = y
        self.family: GlmFamily = family

    def value(self, f: FloatArray) -> float:
        return float(np.mean(self.family.quasi_loglik(self.y, self.x @ f)))

    def gradient(self, f: FloatArray) -> FloatArray:
        residual: FloatArray = self.family.weighted_residual(self.y, self.x @ f)
        return self.x.T @ residual / self.x.shape[0]

    def curvature(self, f: FloatArray) -> FloatArray:
        """``−∇²Q(F) = (1/n) Σᵢ (1 + ζᵢ(F)) xᵢ xᵢᵀ``."""
        zeta: FloatArray = self.family.zeta(self.y, self.x @ f)
        return weighted_gram(self.x, 1.0 + zeta)

    def hessian(self, f: FloatArray) -> FloatArray:
        return -self.curvature(f)


class LogLikelihood:
    """Ordinary canonical-link log-likelihood ``(1/n) Σᵢ yᵢ ηᵢ − b(ηᵢ)`` of one response."""

    def __init__(self, x: FloatArray, y: FloatArray, family: GlmFamily) -> None:
        self.x: FloatArray = x
        self.y: FloatArray = y
        self.family: GlmFamily = family

    def value(self, f: FloatArray) -> float:
        return float(np.mean(self.family.loglik(self.y, self.x @ f)))

    def gradient(self, f: FloatArray) -> FloatArray:
        return self.x.T @ (self.y - self.family.mean(self.x @ f)) / self.x.shape[0]

    def fisher(self, f: FloatArray) -> FloatArray:
        return weighted_gram(self.x, self.family.variance(self.x @ f))

    def hessian(self, f: FloatArray) -> FloatArray:
        return -self.fisher(f)


@dataclass(slots=True)
class NewtonResult:
    coef: FloatArray
    converged: bool
    grad_norm: float
    value: float
    iterations: int
    fallbacks: int = 0
    trace: list[float] = field(default_factory=list)


def _ascent_direction(gradient: FloatArray, hessian: FloatArray) -> tuple[FloatArray, bool]:
    """Newton direction ``(−H)⁻¹ g``; returns ``(g, True)`` when ``−H`` cannot be made positive definite."""
    neg: FloatArray = -0.5 * (hessian + hessian.T)

    try:
        return linalg.cho_solve(linalg.cho_factor(neg), gradient), False
    except linalg.LinAlgError:
        pass

    min_eig: float = float(linalg.eigvalsh(neg)[0])
    delta: float = REGULARIZATION_SCALE * (1.0 + abs(min_eig))

    try:
        return linalg.cho_solve(linalg.cho_factor(neg + delta * np.eye(neg.shape[0])), gradient), False
    except linalg.LinAlgError:
        return gradient.copy(), True


def _safe_value(objective: Objective, f: FloatArray) -> float:
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            value: float = objective.value(f)
    except FamilyDomainError:
        return -np.inf

    return value if np.isfinite(value) else -np.inf


def damped_newton(
    objective: Objective,
    start: FloatArray,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    max_halvings: int = DEFAULT_MAX_HALVINGS,
) -> NewtonResult:
    """Maximize ``objective`` from ``start`` with backtracking Newton steps.

    A step is accepted once the objective does not decrease, halving it at most ``max_halvings``
    times. Convergence means ``‖∇‖∞ < tol``. When the negated Hessian stays indefinite after the
    ``δI`` shift the iteration takes a gradient step instead.
    """
    f: FloatArray = np.array(start, dtype=np.float64)
    value: float = _safe_value(objective, f)
    trace: list[float] = [value]
    fallbacks: int = 0

    if not np.isfinite(value):
        raise ValidationError("The objective is not finite at the starting point.")

    gradient: FloatArray = objective.gradient(f)
    grad_norm: float = float(np.max(np.abs(gradient)))
    iterations: int = 0

    while iterations < max_iter and grad_norm >= tol:
        direction, fell_back = _ascent_direction(gradient, objective.hessian(f))
        fallbacks += fell_back

        step: float = 1.0
        accepted: bool = False

        for _ in range(max_halvings + 1):
            candidate: FloatArray = f + step * direction
            candidate_value: float = _safe_value(objective, candidate)

            if candidate_value >= value:
                accepted = True
                break

            step *= 0.5

        iterations += 1
        if not accepted:
            logger.debug("Line search stalled after %d halvings (grad %.3e).", max_halvings, grad_norm)
            break

        f, value = candidate, candidate_value  # pyright: ignore[reportPossiblyUnboundVariable]
        trace.append(value)

        gradient = objective.gradient(f)
        grad_norm = float(np.max(np.abs(gradient)))

    return NewtonResult(
        coef=f,
        converged=grad_norm < tol,
        grad_norm=grad_norm,
        value=value,
        iterations=iterations,
        fallbacks=fallbacks,
        trace=trace,
    )


def fit_qml_one(
    x_sub: FloatArray,
    y_sub: FloatArray,
    family: GlmFamily,
    starts: list[FloatArray],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    max_halvings: int = DEFAULT_MAX_HALVINGS,
) -> NewtonResult:
    """Maximize the modified quasi-likelihood of one response from every start; keep the best."""
    if not starts:
        raise ValidationError("fit_qml_one needs at least one starting value.")

    if x_sub.shape[0] < x_sub.shape[1]:
        raise ValidationError(f"{x_sub.shape[0]} rows cannot identify {x_sub.shape[1]} coefficients.")

    objective: QuasiLikelihood = QuasiLikelihood(x_sub, y_sub, family)
    best: NewtonResult | None = None

    for start in starts:
        if not np.isfinite(_safe_value(objective, start)):
            logger.debug("Skipping a start where the quasi-likelihood is not finite.")
            continue

        result: NewtonResult = damped_newton(objective, start, tol=tol, max_iter=max_iter, max_halvings=max_halvings)

        if result.fallbacks:
            logger.debug("Quasi-likelihood fit used %d gradient fallback steps.", result.fallbacks)

        if best is None or result.value > best.value:
            best = result

    if best is None:
        raise NumericalError("The quasi-likelihood is not finite at any starting value.")

    return best


@dataclass(slots=True)
class CoefMatrix:
    """Per-response coefficient rows with their convergence diagnostics."""

    values: FloatArray
    converged: BoolArray
    grad_norm: FloatArray

    @classmethod
    def from_results(cls, results: list[NewtonResult]) -> CoefMatrix:
        return cls(
            values=np.vstack([r.coef for r in results]),
            converged=np.array([r.converged for r in results], dtype=np.bool_),
            grad_norm=np.array([r.grad_norm for r in results], dtype=np.float64),
        )

    @property
    def m_dim(self) -> int:
        return int(self.values.shape[0])

    @property
    def p(self) -> int:
        return int(self.values.shape[1])

    def average(self, other: CoefMatrix) -> CoefMatrix:
        if self.values.shape != other.values.shape:
            raise DimensionMismatchError("Cannot average coefficient matrices of different shapes.")

        return CoefMatrix(
            values=(self.values + other.values) / 2.0,
            converged=self.converged & other.converged,
            grad_norm=np.maximum(self.grad_norm, other.grad_norm),
        )


class FoldFits(NamedTuple):
    f_d1: CoefMatrix
    f_d2: CoefMatrix
    f_avg: CoefMatrix


def _mle_one(x: FloatArray, y: FloatArray, family: GlmFamily, tol: float, max_iter: int) -> NewtonResult:
    return damped_newton(LogLikelihood(x, y, family), np.zeros(x.shape[1]), tol=tol, max_iter=max_iter)


def fit_qml_response(
    x: FloatArray,
    y: FloatArray,
    family: GlmFamily,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> NewtonResult:
    """Quasi-likelihood fit of one response started from zero and from its naive MLE."""
    warm: NewtonResult = _mle_one(x, y, family, tol, max_iter)
    starts: list[FloatArray] = [np.zeros(x.shape[1])]

    if np.all(np.isfinite(warm.coef)):
        starts.append(warm.coef)

    return fit_qml_one(x, y, family, starts, tol, max_iter)


def _fit_rows(
    x: FloatArray,
    y: FloatArray,
    family: GlmFamily,
    tol: float,
    max_iter: int,
    n_jobs: int,
    *,
    quasi: bool,
) -> list[NewtonResult]:
    worker = fit_qml_response if quasi else _mle_one

    if n_jobs == 1:
        return [worker(x, y[:, m], family, tol, max_iter) for m in range(y.shape[1])]

    runner: Parallel = Parallel(n_jobs=n_jobs, prefer="threads")
    return list(runner(delayed(worker)(x, y[:, m], family, tol, max_iter) for m in range(y.shape[1])))


def _warn_unconverged(coef: CoefMatrix, label: str) -> None:
    failed: list[int] = np.flatnonzero(~coef.converged).tolist()
    if failed:
        logger.warning("%s: %d of %d responses did not converge: %s", label, len(failed), coef.m_dim, failed)


def fit_qml_all(
    data: Dataset,
    family: GlmFamily,
    split: SplitPlan,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    n_jobs: int = 1,
) -> FoldFits:
    """Fit every response on each fold; starts are zero and the same fold's naive MLE."""
    for label, fold in (("D1", split.d1), ("D2", split.d2)):
        if fold.size < data.p:
            raise FoldTooSmallError(label, int(fold.size), data.p)

    folds: list[CoefMatrix] = []
    for label, fold in (("D1", split.d1), ("D2", split.d2)):
        results: list[NewtonResult] = _fit_rows(
            data.x[fold], data.y[fold], family, tol, max_iter, n_jobs, quasi=True
        )
        coef: CoefMatrix = CoefMatrix.from_results(results)
        _warn_unconverged(coef, f"Quasi-likelihood fit on {label}")
        folds.append(coef)

    f_d1, f_d2 = folds
    return FoldFits(f_d1=f_d1, f_d2=f_d2, f_avg=f_d1.average(f_d2))


def fit_naive_mle(
    data: Dataset,
    family: GlmFamily,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    n_jobs: int = 1,
) -> CoefMatrix:
    """Per-response canonical GLM fit on all observations, ignoring hidden variables."""
    if data.n < data.p:
        raise ValidationError(f"{data.n} observations cannot identify {data.p} coefficients.")

    coef: CoefMatrix = CoefMatrix.from_results(_fit_rows(data.x, data.y, family, tol, max_iter, n_jobs, quasi=False))
    _warn_unconverged(coef, "Naive MLE")
    return coef

