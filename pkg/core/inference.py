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
from typing import TYPE_CHECKING, Self

import numpy as np
from scipy import linalg, special

from .constants import DEFAULT_ALPHA, G_CONDITION_TOL, REGULARIZATION_SCALE
from .enums import SeScale
from .errors import DimensionMismatchError, NumericalError, SingularGMatrixError, ValidationError
from .estimator import LogLikelihood, QuasiLikelihood


if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from types_.arrays import FloatArray

    from .estimator import CoefMatrix, Dataset
    from .family import GlmFamily
    from .pipeline import GhiveFit


__all__ = (
    "Contrast",
    "GCondition",
    "InferenceResult",
    "VarianceEstimate",
    "confidence_interval",
    "fisher_information",
    "g_matrices",
    "normal_quantile",
    "variance_estimate",
    "wald_interval",
)


logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Contrast:
    """Unit vectors ``u`` (length M) and ``v`` (length p) selecting ``uᵀ Θ v``."""

    u: FloatArray
    v: FloatArray
    renormalized: bool = False

    @classmethod
    def from_raw(cls, u: ArrayLike, v: ArrayLike) -> Self:
        u_: FloatArray = np.asarray(u, dtype=np.float64).ravel()
        v_: FloatArray = np.asarray(v, dtype=np.float64).ravel()

        norms: list[float] = []
        for name, vec in (("u", u_), ("v", v_)):
            norm: float = float(np.linalg.norm(vec))
            if not np.all(np.isfinite(vec)) or norm == 0.0:
                raise ValidationError(f"Contrast vector {name} must be finite and non-zero.")
            norms.append(norm)

        renormalized: bool = any(abs(norm - 1.0) > 1e-8 for norm in norms)
        if renormalized:
            logger.warning("Contrast vectors had norms %.6g and %.6g; normalizing to unit length.", *norms)

        return cls(u=u_ / norms[0], v=v_ / norms[1], renormalized=renormalized)

    @classmethod
    def basis(cls, row: int, column: int, m_dim: int, p: int) -> Self:
        """The contrast picking entry ``(row, column)``, zero-based."""
        if not (0 <= row < m_dim and 0 <= column < p):
            raise DimensionMismatchError(f"Entry ({row}, {column}) is outside a {m_dim}x{p} matrix.")

        return cls(u=np.eye(m_dim)[row], v=np.eye(p)[column])

    def check_dims(self, m_dim: int, p: int) -> None:
        if self.u.size != m_dim or self.v.size != p:
            raise DimensionMismatchError(f"Contrast has dims ({self.u.size}, {self.v.size}) but the fit is {m_dim}x{p}.")

    def apply(self, matrix: FloatArray) -> float:
        return float(self.u @ matrix @ self.v)


@dataclass(frozen=True, slots=True)
class GCondition:
    response: int
    min_eigenvalue: float
    max_eigenvalue: float
    regularized: bool
    delta: float


@dataclass(frozen=True, slots=True)
class VarianceEstimate:
    s_hat_sq: float
    se: float
    g_condition: tuple[GCondition, ...]


@dataclass(frozen=True, slots=True)
class InferenceResult:
    contrast: Contrast
    estimate: float
    se: float
    s_hat_sq: float
    ci_lo: float
    ci_hi: float
    alpha: float
    se_scale: str
    g_condition: tuple[GCondition, ...] = ()

    @property
    def length(self) -> float:
        return self.ci_hi - self.ci_lo

    def covers(self, value: float) -> bool:
        return self.ci_lo <= value <= self.ci_hi


def normal_quantile(prob: float) -> float:
    if not 0.0 < prob < 1.0:
        raise ValidationError(f"Quantile level must lie in (0, 1), got {prob}.")

    return float(special.ndtri(prob))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}.")


def g_matrices(data: Dataset, family: GlmFamily, f_hat: CoefMatrix) -> tuple[list[FloatArray], tuple[GCondition, ...]]:
    """``Ĝₘ = (1/n) Σᵢ (1 + ζᵢₘ(F̂ₘ)) xᵢ xᵢᵀ`` per response, shifted by ``δI`` when ill-conditioned.

    This is the negated Hessian of the quasi-likelihood at ``F̂ₘ`` over the full sample.
    """
    if f_hat.p != data.p or f_hat.m_dim != data.m_dim:
        raise DimensionMismatchError("Coefficient matrix does not match the dataset.")

    matrices: list[FloatArray] = []
    conditions: list[GCondition] = []

    for m in range(data.m_dim):
        g: FloatArray = QuasiLikelihood(data.x, data.y[:, m], family).curvature(f_hat.values[m])
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"G matrix of response {m} has non-finite entries.")

        eig: FloatArray = linalg.eigvalsh(g)
        low, high = float(eig[0]), float(eig[-1])

        delta: float = 0.0
        if low < G_CONDITION_TOL * max(1.0, high):
            delta = REGULARIZATION_SCALE * (1.0 + abs(low))
            g = g + delta * np.eye(data.p)
            logger.warning("G matrix of response %d has eigenvalue %.3e; adding %.3e to the diagonal.", m, low, delta)

        matrices.append(g)
        conditions.append(
            GCondition(response=m, min_eigenvalue=low, max_eigenvalue=high, regularized=delta > 0.0, delta=delta)
        )

    return matrices, tuple(conditions)


def _solve(matrix: FloatArray, rhs: FloatArray, response: int) -> FloatArray:
    if not np.all(np.isfinite(matrix)):
        raise SingularGMatrixError(response)

    eig: FloatArray = np.abs(linalg.eigvalsh(matrix))
    if eig[0] <= np.finfo(np.float64).eps * max(float(eig[-1]), 1.0):
        raise SingularGMatrixError(response)

    return linalg.solve(matrix, rhs, assume_a="sym")


def variance_estimate(
    data: Dataset,
    family: GlmFamily,
    fit: GhiveFit,
    contrast: Contrast,
    *,
    se_scale: SeScale = SeScale.asymptotic,
) -> VarianceEstimate:
    """``ŝₙ² = Σᵢ (uᵀ P̂⊥ ĥᵢ)²`` with ``ĥᵢₘ = ε̂ᵢₘ vᵀ Ĝₘ⁻¹ xᵢ`` over all observations.

    Residuals use the averaged ``F̂``. The asymptotic scale returns ``se = ŝₙ / n``; the sample
    scale returns ``ŝₙ / √n``.
    """
    contrast.check_dims(fit.m_dim, fit.p)
    if fit.p != data.p or fit.m_dim != data.m_dim:
        raise DimensionMismatchError("Fit does not match the dataset.")

    matrices, conditions = g_matrices(data, family, fit.f_hat)
    residuals: FloatArray = family.weighted_residual(data.y, data.x @ fit.f_hat.values.T)

    h: FloatArray = np.empty_like(residuals)
    for m, g in enumerate(matrices):
        h[:, m] = residuals[:, m] * (data.x @ _solve(g, contrast.v, m))

    projected: FloatArray = h @ (fit.p_perp.T @ contrast.u)
    s_hat_sq: float = float(np.sum(projected * projected))

    if se_scale is SeScale.asymptotic:
        se: float = float(np.sqrt(s_hat_sq)) / data.n
    else:
        se = float(np.sqrt(s_hat_sq / data.n))

    return VarianceEstimate(s_hat_sq=s_hat_sq, se=se, g_condition=conditions)


def confidence_interval(
    fit: GhiveFit,
    data: Dataset,
    family: GlmFamily,
    contrast: Contrast,
    alpha: float = DEFAULT_ALPHA,
    *,
    se_scale: SeScale = SeScale.asymptotic,
) -> InferenceResult:
    """Normal interval ``uᵀΘ̂v ± q₁₋α/₂ · se`` for the projected pseudo-true contrast."""
    _check_alpha(alpha)

    variance: VarianceEstimate = variance_estimate(data, family, fit, contrast, se_scale=se_scale)
    estimate: float = contrast.apply(fit.theta_hat)
    half: float = (normal_quantile(1.0 - alpha / 2.0) if alpha < 1.0 else 0.0) * variance.se

    return InferenceResult(
        contrast=contrast,
        estimate=estimate,
        se=variance.se,
        s_hat_sq=variance.s_hat_sq,
        ci_lo=estimate - half,
        ci_hi=estimate + half,
        alpha=alpha,
        se_scale=se_scale.value,
        g_condition=variance.g_condition,
    )


def fisher_information(data: Dataset, family: GlmFamily, coef: CoefMatrix) -> list[FloatArray]:
    return [LogLikelihood(data.x, data.y[:, m], family).fisher(coef.values[m]) for m in range(data.m_dim)]


def wald_interval(
    data: Dataset,
    family: GlmFamily,
    coef: CoefMatrix,
    contrast: Contrast,
    alpha: float = DEFAULT_ALPHA,
) -> InferenceResult:
    """Wald interval for ``uᵀ F̂ v`` of the naive MLE, treating the response fits as independent."""
    _check_alpha(alpha)
    contrast.check_dims(coef.m_dim, coef.p)

    variance: float = 0.0
    for m, info in enumerate(fisher_information(data, family, coef)):
        if contrast.u[m] != 0.0:
            variance += contrast.u[m] ** 2 * float(contrast.v @ _solve(info, contrast.v, m))

    se: float = float(np.sqrt(variance / data.n))
    estimate: float = contrast.apply(coef.values)
    half: float = (normal_quantile(1.0 - alpha / 2.0) if alpha < 1.0 else 0.0) * se

    return InferenceResult(
        contrast=contrast,
        estimate=estimate,
        se=se,
        s_hat_sq=variance,
        ci_lo=estimate - half,
        ci_hi=estimate + half,
        alpha=alpha,
        se_scale="wald",
    )
