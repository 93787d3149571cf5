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

import dataclasses
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Self

import numpy as np
from scipy import linalg, special

from .constants import (
    DEFAULT_MAX_ITER,
    DEFAULT_N_MC,
    DEFAULT_SEED,
    DEFAULT_TOL,
    EIGEN_NEGATIVE_TOL,
    SIGMA_Z_DECAY,
    STREAM_FSTAR,
    STREAM_REPLICATION,
    STREAM_TRUTH,
)
from .enums import FamilyKind
from .errors import DimensionMismatchError, SigmaZNotPositiveDefiniteError, ValidationError
from .estimator import CoefMatrix, Dataset, fit_qml_response
from .family import GlmFamily
from .rng import make_generator


if TYPE_CHECKING:
    from types_.arrays import FloatArray
    from types_.simulation import Metrics, SimConfigPayload


__all__ = (
    "SimConfig",
    "SimTruth",
    "circulant_sigma_z",
    "column_projector",
    "fstar_oracle",
    "linear_pseudo_true",
    "make_truth",
    "metrics",
    "sample_dataset",
)


logger: logging.Logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SimConfig:
    n: int
    p: int
    m_dim: int
    k: int
    eta: float
    family: GlmFamily = GlmFamily(FamilyKind.bernoulli)
    seed: int = DEFAULT_SEED
    reps: int = 1
    sigma_z_decay: float = SIGMA_Z_DECAY

    def __post_init__(self) -> None:
        if min(self.n, self.p, self.m_dim, self.k, self.reps) < 1 or self.n < 2:
            raise ValidationError("SimConfig needs n >= 2 and positive p, m_dim, k and reps.")

        if self.k > self.m_dim or self.k > self.p:
            raise ValidationError(f"k={self.k} must not exceed m_dim={self.m_dim} or p={self.p}.")

        if not self.eta >= 0.0:
            raise ValidationError(f"eta must be non-negative, got {self.eta}.")

    def replace(self, **changes: Any) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def to_payload(self) -> SimConfigPayload:
        return {
            "n": self.n,
            "p": self.p,
            "m_dim": self.m_dim,
            "k": self.k,
            "eta": self.eta,
            "family": self.family.name,
            "seed": self.seed,
            "reps": self.reps,
            "sigma_z_decay": self.sigma_z_decay,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> Self:
        try:
            return cls(
                n=int(payload["n"]),
                p=int(payload["p"]),
                m_dim=int(payload["m_dim"]),
                k=int(payload["k"]),
                eta=float(payload["eta"]),
                family=GlmFamily.from_name(str(payload.get("family", "bernoulli"))),
                seed=int(payload.get("seed", DEFAULT_SEED)),
                reps=int(payload.get("reps", 1)),
                sigma_z_decay=float(payload.get("sigma_z_decay", SIGMA_Z_DECAY)),
            )
        except KeyError as e:
            raise ValidationError(f"Simulation config is missing {e}.") from None


@dataclass(frozen=True, slots=True)
class SimTruth:
    a: FloatArray
    b: FloatArray
    theta: FloatArray
    sigma_z: FloatArray
    sigma_z_root: FloatArray
    p_b: FloatArray
    p_b_perp: FloatArray

    @property
    def sigma_x(self) -> FloatArray:
        return self.a @ self.sigma_z @ self.a.T + np.eye(self.a.shape[0])


def circulant_sigma_z(k: int, decay: float = SIGMA_Z_DECAY) -> FloatArray:
    """Symmetric circulant with unit diagonal and entries ``decay ** min(d, k − d)``."""
    d = np.arange(k)
    first: FloatArray = np.power(decay, np.minimum(d, k - d).astype(np.float64))
    return linalg.circulant(first)


def column_projector(b: FloatArray) -> FloatArray:
    """Orthogonal projector onto the column space of ``b``."""
    basis: FloatArray = linalg.orth(b) if np.any(b) else np.zeros((b.shape[0], 0))
    return basis @ basis.T


def _normalize_rows(mat: FloatArray) -> FloatArray:
    return mat / np.linalg.norm(mat, axis=1, keepdims=True)


def make_truth(config: SimConfig) -> SimTruth:
    """Draw ``A``, then ``B``, then ``Θ`` from the truth stream of ``config.seed``.

    Rows are normalized, ``B`` is scaled by ``eta`` and ``Θ`` is projected onto the orthogonal
    complement of ``col(B)``.
    """
    rng: np.random.Generator = make_generator(config.seed, stream=STREAM_TRUTH)

    a: FloatArray = _normalize_rows(rng.standard_normal((config.p, config.k)))
    b: FloatArray = _normalize_rows(rng.standard_normal((config.m_dim, config.k))) * config.eta
    theta_raw: FloatArray = _normalize_rows(rng.standard_normal((config.m_dim, config.p)))

    p_b: FloatArray = column_projector(b)
    p_b_perp: FloatArray = np.eye(config.m_dim) - p_b

    sigma_z: FloatArray = circulant_sigma_z(config.k, config.sigma_z_decay)
    eigvals, eigvecs = linalg.eigh(sigma_z)

    if eigvals[0] <= EIGEN_NEGATIVE_TOL * max(float(eigvals[-1]), 1.0):
        raise SigmaZNotPositiveDefiniteError(
            f"Circulant Σ_Z with decay {config.sigma_z_decay} and k={config.k} is not positive definite "
            f"(smallest eigenvalue {eigvals[0]:.3e}); try sigma_z_decay = {-config.sigma_z_decay}."
        )

    root: FloatArray = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))

    return SimTruth(
        a=a,
        b=b,
        theta=p_b_perp @ theta_raw,
        sigma_z=sigma_z,
        sigma_z_root=root,
        p_b=p_b,
        p_b_perp=p_b_perp,
    )


def sample_dataset(
    truth: SimTruth,
    config: SimConfig,
    rep_seed: int,
    *,
    n: int | None = None,
    stream: int = STREAM_REPLICATION,
) -> Dataset:
    """Draw ``Z``, ``W`` and the responses; ``X = AZ + W`` and ``Yₘ`` has natural parameter ``ΘₘX + BₘZ``."""
    size: int = config.n if n is None else n
    rng: np.random.Generator = make_generator(rep_seed, stream=stream)

    z: FloatArray = rng.standard_normal((size, config.k)) @ truth.sigma_z_root.T
    w: FloatArray = rng.standard_normal((size, config.p))
    x: FloatArray = z @ truth.a.T + w
    natural: FloatArray = x @ truth.theta.T + z @ truth.b.T

    kind: FamilyKind = config.family.kind
    if kind is FamilyKind.bernoulli:
        y: FloatArray = rng.binomial(1, special.expit(natural)).astype(np.float64)
    elif kind is FamilyKind.gaussian:
        y = natural + rng.standard_normal(natural.shape)
    else:
        y = rng.poisson(np.exp(natural)).astype(np.float64)

    return Dataset(x=x, y=y)


def fstar_oracle(
    truth: SimTruth,
    config: SimConfig,
    family: GlmFamily | None = None,
    n_mc: int = DEFAULT_N_MC,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CoefMatrix:
    """Monte-Carlo pseudo-true coefficients: the quasi-likelihood maximizer on one large sample."""
    if n_mc < 10_000:
        raise ValidationError(f"n_mc must be at least 10000, got {n_mc}.")

    family = family or config.family
    data: Dataset = sample_dataset(truth, config.replace(family=family), config.seed, n=n_mc, stream=STREAM_FSTAR)

    coef: CoefMatrix = CoefMatrix.from_results(
        [fit_qml_response(data.x, data.y[:, m], family, tol, max_iter) for m in range(data.m_dim)]
    )

    if not np.all(coef.converged):
        logger.warning("Pseudo-true oracle did not converge for responses %s.", np.flatnonzero(~coef.converged).tolist())

    return coef


def linear_pseudo_true(truth: SimTruth) -> FloatArray:
    """Closed-form pseudo-true coefficients of the Gaussian family, ``Θ + B Σ_Z Aᵀ Σ_X⁻¹``."""
    cross: FloatArray = truth.b @ truth.sigma_z @ truth.a.T
    return truth.theta + linalg.solve(truth.sigma_x, cross.T, assume_a="pos").T


def metrics(
    theta_hat: FloatArray,
    truth: SimTruth,
    f_star: FloatArray | None = None,
    p_perp_hat: FloatArray | None = None,
) -> Metrics:
    m_dim, p = truth.theta.shape

    if theta_hat.shape != (m_dim, p):
        raise DimensionMismatchError(f"theta_hat is {theta_hat.shape}, expected {(m_dim, p)}.")

    error: float = float(np.linalg.norm(theta_hat - truth.theta))
    record: Metrics = {
        "frob_err": error**2 / np.sqrt(p * m_dim),
        "frob_err_unsquared": error / np.sqrt(p * m_dim),
    }

    if f_star is not None:
        if f_star.shape != (m_dim, p):
            raise DimensionMismatchError(f"f_star is {f_star.shape}, expected {(m_dim, p)}.")

        record["bias1"] = float(np.linalg.norm(f_star - truth.theta)) / np.sqrt(m_dim)
        record["bias2"] = float(np.linalg.norm(truth.p_b_perp @ f_star - truth.theta)) / np.sqrt(m_dim)

    if p_perp_hat is not None:
        if p_perp_hat.shape != (m_dim, m_dim):
            raise DimensionMismatchError(f"p_perp_hat is {p_perp_hat.shape}, expected {(m_dim, m_dim)}.")

        record["proj_err"] = float(np.linalg.norm(p_perp_hat - truth.p_b_perp))

    return record
