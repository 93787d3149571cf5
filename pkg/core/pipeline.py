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

from .constants import DEFAULT_MAX_ITER, DEFAULT_TOL
from .enums import FitMode
from .errors import ValidationError
from .estimator import fit_qml_all, make_split
from .spectral import analyze_covariance, covariance_crossfit, crossfit_residuals


if TYPE_CHECKING:
    from types_.arrays import FloatArray

    from .estimator import CoefMatrix, Dataset, FoldFits, SplitPlan
    from .family import GlmFamily
    from .spectral import SpectralResult


__all__ = ("GhiveFit", "ResponseRecord", "ghive_fit", "project_folds")


logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class ResponseRecord:
    response: int
    converged_d1: bool
    converged_d2: bool
    grad_norm_d1: float
    grad_norm_d2: float


@dataclass(frozen=True, slots=True)
class GhiveFit:
    """Everything one run of the estimator produces."""

    family: GlmFamily
    mode: FitMode
    n: int
    tol: float
    max_iter: int
    split: SplitPlan
    f_d1: CoefMatrix
    f_d2: CoefMatrix
    f_hat: CoefMatrix
    spectral: SpectralResult
    theta_hat: FloatArray
    diagnostics: tuple[ResponseRecord, ...]

    @property
    def p(self) -> int:
        return self.f_hat.p

    @property
    def m_dim(self) -> int:
        return self.f_hat.m_dim

    @property
    def k_hat(self) -> int:
        return self.spectral.k_hat

    @property
    def p_perp(self) -> FloatArray:
        return self.spectral.p_perp

    @property
    def unconverged(self) -> list[int]:
        return [r.response for r in self.diagnostics if not (r.converged_d1 and r.converged_d2)]


def _diagnostics(folds: FoldFits) -> tuple[ResponseRecord, ...]:
    return tuple(
        ResponseRecord(
            response=m,
            converged_d1=bool(folds.f_d1.converged[m]),
            converged_d2=bool(folds.f_d2.converged[m]),
            grad_norm_d1=float(folds.f_d1.grad_norm[m]),
            grad_norm_d2=float(folds.f_d2.grad_norm[m]),
        )
        for m in range(folds.f_avg.m_dim)
    )


def project_folds(
    data: Dataset,
    family: GlmFamily,
    split: SplitPlan,
    folds: FoldFits,
    mode: FitMode = FitMode.data_driven,
    *,
    k: int | None = None,
    projector: FloatArray | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> GhiveFit:
    """Residual PCA and projection on top of already fitted folds."""
    if mode is FitMode.oracle_k and (k is None or not 0 <= k <= data.m_dim):
        raise ValidationError(f"Oracle(K) mode needs 0 <= k <= {data.m_dim}, got {k}.")

    if mode is FitMode.oracle_p and projector is None:
        raise ValidationError("Oracle(P) mode needs a projector.")

    resid = crossfit_residuals(data, family, folds.f_d1, folds.f_d2, split)
    sigma_hat: FloatArray = covariance_crossfit(resid, split)

    spectral: SpectralResult = analyze_covariance(
        sigma_hat,
        data.n,
        k=k if mode is FitMode.oracle_k else None,
        projector=projector if mode is FitMode.oracle_p else None,
    )
    theta_hat: FloatArray = spectral.p_perp @ folds.f_avg.values

    return GhiveFit(
        family=family,
        mode=mode,
        n=data.n,
        tol=tol,
        max_iter=max_iter,
        split=split,
        f_d1=folds.f_d1,
        f_d2=folds.f_d2,
        f_hat=folds.f_avg,
        spectral=spectral,
        theta_hat=theta_hat,
        diagnostics=_diagnostics(folds),
    )


def ghive_fit(
    data: Dataset,
    family: GlmFamily,
    seed: int,
    mode: FitMode = FitMode.data_driven,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    k: int | None = None,
    projector: FloatArray | None = None,
    n_jobs: int = 1,
) -> GhiveFit:
    """Split, fit each fold, cross-fit the residual covariance, project.

    Returns ``Θ̂ = P̂⊥ F̂`` with ``F̂`` the fold average. Responses whose fits did not converge
    are logged and listed in the diagnostics.
    """
    data.validate_for(family)

    split: SplitPlan = make_split(data.n, seed)
    folds: FoldFits = fit_qml_all(data, family, split, tol, max_iter, n_jobs=n_jobs)

    fit: GhiveFit = project_folds(
        data, family, split, folds, mode, k=k, projector=projector, tol=tol, max_iter=max_iter
    )
    logger.info(
        "Fitted %s model (n=%d, p=%d, M=%d) in %s mode with K̂=%d.",
        family.name,
        data.n,
        data.p,
        data.m_dim,
        mode.value,
        fit.k_hat,
    )

    if fit.unconverged:
        logger.warning("Responses %s did not converge on at least one fold.", fit.unconverged)

    return fit
