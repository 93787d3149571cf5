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
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import linalg

from .constants import EIGEN_NEGATIVE_TOL, RATIO_FLOOR
from .errors import DegenerateCovarianceError, DimensionMismatchError, NumericalError, ValidationError


if TYPE_CHECKING:
    from types_.arrays import FloatArray, IntArray

    from .estimator import CoefMatrix, Dataset, SplitPlan
    from .family import GlmFamily


__all__ = (
    "ResidualMatrix",
    "SpectralResult",
    "analyze_covariance",
    "covariance_crossfit",
    "crossfit_residuals",
    "eigen_decompose",
    "eigenvalue_ratios",
    "projector_complement",
    "select_k",
)


logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class ResidualMatrix:
    """Cross-fitted weighted residuals; ``fold_of_row[i]`` is the fold whose coefficients produced row ``i``."""

    values: FloatArray
    fold_of_row: IntArray


@dataclass(frozen=True, slots=True)
class SpectralResult:
    sigma_hat: FloatArray
    eigvals: FloatArray
    eigvecs: FloatArray
    k_hat: int
    k_bar: int
    ratios: FloatArray
    v_k: FloatArray
    p_perp: FloatArray


def _check_finite(values: FloatArray, what: str) -> None:
    bad = ~np.isfinite(values).all(axis=0)
    if bad.any():
        responses: list[int] = np.flatnonzero(bad).tolist()
        raise NumericalError(f"The {what} is not finite for responses {responses}; the fold fit diverged.")


def crossfit_residuals(
    data: Dataset,
    family: GlmFamily,
    f_d1: CoefMatrix,
    f_d2: CoefMatrix,
    split: SplitPlan,
) -> ResidualMatrix:
    """Residuals of each fold evaluated with the coefficients fitted on the other fold.

    Raises ``NumericalError`` when a fold fit has diverged far enough that a held-out linear
    predictor or residual is no longer finite.
    """
    values: FloatArray = np.empty((data.n, data.m_dim), dtype=np.float64)

    for rows, coef in ((split.d2, f_d1), (split.d1, f_d2)):
        with np.errstate(over="ignore", invalid="ignore"):
            eta: FloatArray = data.x[rows] @ coef.values.T
        _check_finite(eta, "held-out linear predictor")

        with np.errstate(over="ignore", invalid="ignore"):
            values[rows] = family.weighted_residual(data.y[rows], eta)
        _check_finite(values[rows], "held-out residual")

    return ResidualMatrix(values=values, fold_of_row=1 - split.fold_of_row())


def covariance_crossfit(resid: ResidualMatrix, split: SplitPlan) -> FloatArray:
    """Average of the two folds' residual second-moment matrices."""
    if split.d1.size == 0 or split.d2.size == 0:
        raise ValidationError("Both folds must be non-empty.")

    e1: FloatArray = resid.values[split.d1]
    e2: FloatArray = resid.values[split.d2]
    with np.errstate(over="ignore", invalid="ignore"):
        sigma: FloatArray = 0.5 * (e1.T @ e1 / e1.shape[0] + e2.T @ e2 / e2.shape[0])

    return 0.5 * (sigma + sigma.T)


def eigen_decompose(sigma: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Eigenvalues in non-increasing order with matching orthonormal eigenvector columns."""
    if not np.all(np.isfinite(sigma)):
        raise DegenerateCovarianceError("The residual covariance has non-finite entries.")

    try:
        eigvals, eigvecs = linalg.eigh(0.5 * (sigma + sigma.T))
    except linalg.LinAlgError as exc:
        raise DegenerateCovarianceError(f"Eigendecomposition of the residual covariance failed: {exc}") from exc

    eigvals = eigvals[::-1].copy()
    eigvecs = eigvecs[:, ::-1].copy()

    top: float = max(float(eigvals[0]), 0.0)
    if eigvals[-1] < -EIGEN_NEGATIVE_TOL * top:
        logger.warning("Covariance has a negative eigenvalue %.3e (largest %.3e).", eigvals[-1], top)

    return eigvals, eigvecs


def eigenvalue_ratios(eigvals: FloatArray, k_bar: int) -> FloatArray:
    """``λⱼ / λⱼ₊₁`` for ``j = 1..k_bar`` with denominators floored at 1e-300."""
    return eigvals[:k_bar] / np.maximum(eigvals[1 : k_bar + 1], RATIO_FLOOR)


def select_k(eigvals: FloatArray, n: int, m_dim: int, *, k_bar: int | None = None) -> int:
    """Eigenvalue-ratio estimate of the number of factors; ties go to the smallest ``j``.

    The search runs over ``j = 1..K̄`` with ``K̄ = ⌊min(n, M)/2⌋`` unless ``k_bar`` is given.
    """
    eigvals = np.asarray(eigvals, dtype=np.float64)
    if k_bar is None:
        k_bar = min(n, m_dim) // 2

    if eigvals.size < 2 or k_bar < 1:
        raise ValidationError(f"Eigenvalue-ratio selection needs K̄ >= 1 (n={n}, M={m_dim}).")

    if eigvals.size < k_bar + 1:
        raise ValidationError(f"{eigvals.size} eigenvalues cannot support K̄ = {k_bar}.")

    if np.all(eigvals <= 0.0):
        raise DegenerateCovarianceError("All eigenvalues of the residual covariance are non-positive.")

    return int(np.argmax(eigenvalue_ratios(eigvals, k_bar))) + 1


def projector_complement(eigvecs: FloatArray, k: int) -> FloatArray:
    """``I − V_k V_kᵀ`` where ``V_k`` holds the first ``k`` columns of ``eigvecs``."""
    m_dim: int = eigvecs.shape[0]

    if k < 0 or k > m_dim:
        raise ValidationError(f"k={k} must lie in [0, {m_dim}].")

    v_k: FloatArray = eigvecs[:, :k]
    p_perp: FloatArray = np.eye(m_dim) - v_k @ v_k.T

    return 0.5 * (p_perp + p_perp.T)


def _check_projector(projector: FloatArray, m_dim: int) -> FloatArray:
    projector = np.asarray(projector, dtype=np.float64)

    if projector.shape != (m_dim, m_dim):
        raise DimensionMismatchError(f"Projector must be {m_dim}x{m_dim}, got {projector.shape}.")

    if not np.all(np.isfinite(projector)):
        raise ValidationError("Projector entries must be finite.")

    if not np.allclose(projector, projector.T, atol=1e-6) or not np.allclose(projector @ projector, projector, atol=1e-6):
        logger.warning("Supplied projector is not a symmetric idempotent matrix; using it as given.")

    return projector


def analyze_covariance(
    sigma_hat: FloatArray,
    n: int,
    *,
    k: int | None = None,
    projector: FloatArray | None = None,
) -> SpectralResult:
    """Eigendecompose ``sigma_hat`` and build the complement projector.

    With neither ``k`` nor ``projector`` the rank is chosen by eigenvalue ratio. A supplied
    ``projector`` is used unchanged and its rank is read off its trace.
    """
    m_dim: int = sigma_hat.shape[0]
    eigvals, eigvecs = eigen_decompose(sigma_hat)

    k_bar: int = min(n, m_dim) // 2
    ratios: FloatArray = eigenvalue_ratios(eigvals, k_bar) if k_bar >= 1 else np.empty(0)

    if projector is not None:
        p_perp: FloatArray = _check_projector(projector, m_dim)
        k_hat: int = min(max(round(m_dim - float(np.trace(p_perp))), 0), m_dim)
        _, complement_vecs = eigen_decompose(np.eye(m_dim) - p_perp)
        v_k: FloatArray = complement_vecs[:, :k_hat]

    else:
        if k is None:
            k_hat = select_k(eigvals, n, m_dim)
            logger.debug("Eigenvalue ratios %s give K̂ = %d.", np.round(ratios, 4).tolist(), k_hat)
        else:
            k_hat = int(k)

        p_perp = projector_complement(eigvecs, k_hat)
        v_k = eigvecs[:, :k_hat]

    return SpectralResult(
        sigma_hat=sigma_hat,
        eigvals=eigvals,
        eigvecs=eigvecs,
        k_hat=k_hat,
        k_bar=k_bar,
        ratios=ratios,
        v_k=v_k,
        p_perp=p_perp,
    )
