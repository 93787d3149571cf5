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

import json
import logging
import pathlib
from typing import TYPE_CHECKING, Any, cast

import numpy as np

from core.enums import FitMode
from core.errors import DimensionMismatchError, ValidationError
from core.estimator import CoefMatrix, SplitPlan
from core.family import GlmFamily
from core.pipeline import GhiveFit, ResponseRecord
from core.spectral import SpectralResult

from .atomic import atomic_write_text
from .models import matrix_from_payload, matrix_to_payload


if TYPE_CHECKING:
    from core.experiments import ExperimentResult
    from core.inference import InferenceResult
    from core.simgen import SimConfig, SimTruth
    from types_.fit import FitPayload, PreprocessPayload
    from types_.inference import InferencePayload
    from types_.simulation import FStarPayload, Metrics


__all__ = (
    "FIT_VERSION",
    "fit_from_payload",
    "fit_to_payload",
    "fstar_to_payload",
    "inference_to_payload",
    "read_json",
    "write_json",
    "write_results",
)


logger: logging.Logger = logging.getLogger(__name__)

FIT_VERSION: int = 1


def write_json(path: pathlib.Path | str, payload: Any) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, allow_nan=False) + "\n")


def read_json(path: pathlib.Path | str, what: str = "JSON") -> dict[str, Any]:
    path = pathlib.Path(path)

    try:
        with open(path, encoding="utf-8") as fp:
            data: Any = json.load(fp)
    except FileNotFoundError:
        raise ValidationError(f"{what} file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"Unable to read {what} file {path}: {e}") from None

    if not isinstance(data, dict):
        raise ValidationError(f"{what} file {path} must hold a JSON object.")

    return cast(dict[str, Any], data)


def fit_to_payload(fit: GhiveFit, *, center: bool = False, standardize: bool = False) -> FitPayload:
    spectral: SpectralResult = fit.spectral

    return {
        "version": FIT_VERSION,
        "family": cast(Any, fit.family.name),
        "mode": cast(Any, fit.mode.value),
        "n": fit.n,
        "p": fit.p,
        "m_dim": fit.m_dim,
        "tol": fit.tol,
        "max_iter": fit.max_iter,
        "preprocess": {"center": center, "standardize": standardize},
        "split": {"seed": fit.split.seed, "d1": fit.split.d1.tolist(), "d2": fit.split.d2.tolist()},
        "f_hat": matrix_to_payload(fit.f_hat.values),
        "f_d1": matrix_to_payload(fit.f_d1.values),
        "f_d2": matrix_to_payload(fit.f_d2.values),
        "theta_hat": matrix_to_payload(fit.theta_hat),
        "spectral": {
            "sigma_hat": matrix_to_payload(spectral.sigma_hat),
            "eigvals": [float(v) for v in spectral.eigvals],
            "eigvecs": matrix_to_payload(spectral.eigvecs),
            "ratios": [float(v) for v in spectral.ratios],
            "k_bar": spectral.k_bar,
            "k_hat": spectral.k_hat,
            "v_k": matrix_to_payload(spectral.v_k),
            "p_perp": matrix_to_payload(spectral.p_perp),
        },
        "diagnostics": [
            {
                "response": r.response,
                "converged_d1": r.converged_d1,
                "converged_d2": r.converged_d2,
                "grad_norm_d1": r.grad_norm_d1,
                "grad_norm_d2": r.grad_norm_d2,
            }
            for r in fit.diagnostics
        ],
    }


def fit_from_payload(payload: dict[str, Any]) -> tuple[GhiveFit, PreprocessPayload]:
    """Rebuild a fit (and the preprocessing it was run with) from its JSON artifact."""
    try:
        return _decode_fit(payload)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed fit artifact: {e}") from None


def _decode_fit(payload: dict[str, Any]) -> tuple[GhiveFit, PreprocessPayload]:
    version: int = int(payload["version"])
    if version != FIT_VERSION:
        raise ValidationError(f"Unsupported fit artifact version {version}.")

    family: GlmFamily = GlmFamily.from_name(str(payload["family"]))
    mode: FitMode = FitMode(payload["mode"])
    n, p, m_dim = int(payload["n"]), int(payload["p"]), int(payload["m_dim"])

    spectral_payload: dict[str, Any] = payload["spectral"]
    records: tuple[ResponseRecord, ...] = tuple(ResponseRecord(**r) for r in payload["diagnostics"])
    split: SplitPlan = SplitPlan(
        seed=int(payload["split"]["seed"]),
        d1=np.asarray(payload["split"]["d1"], dtype=np.int64),
        d2=np.asarray(payload["split"]["d2"], dtype=np.int64),
    )
    preprocess: PreprocessPayload = {
        "center": bool(payload.get("preprocess", {}).get("center", False)),
        "standardize": bool(payload.get("preprocess", {}).get("standardize", False)),
    }

    conv_d1 = np.array([r.converged_d1 for r in records], dtype=np.bool_)
    conv_d2 = np.array([r.converged_d2 for r in records], dtype=np.bool_)
    grad_d1 = np.array([r.grad_norm_d1 for r in records], dtype=np.float64)
    grad_d2 = np.array([r.grad_norm_d2 for r in records], dtype=np.float64)

    f_d1 = CoefMatrix(matrix_from_payload(payload["f_d1"], "f_d1"), conv_d1, grad_d1)
    f_d2 = CoefMatrix(matrix_from_payload(payload["f_d2"], "f_d2"), conv_d2, grad_d2)
    f_hat = CoefMatrix(matrix_from_payload(payload["f_hat"], "f_hat"), conv_d1 & conv_d2, np.maximum(grad_d1, grad_d2))
    theta_hat = matrix_from_payload(payload["theta_hat"], "theta_hat")

    spectral: SpectralResult = SpectralResult(
        sigma_hat=matrix_from_payload(spectral_payload["sigma_hat"], "sigma_hat"),
        eigvals=np.asarray(spectral_payload["eigvals"], dtype=np.float64),
        eigvecs=matrix_from_payload(spectral_payload["eigvecs"], "eigvecs"),
        k_hat=int(spectral_payload["k_hat"]),
        k_bar=int(spectral_payload["k_bar"]),
        ratios=np.asarray(spectral_payload["ratios"], dtype=np.float64),
        v_k=matrix_from_payload(spectral_payload["v_k"], "v_k"),
        p_perp=matrix_from_payload(spectral_payload["p_perp"], "p_perp"),
    )

    for name, arr, shape in (
        ("f_hat", f_hat.values, (m_dim, p)),
        ("theta_hat", theta_hat, (m_dim, p)),
        ("p_perp", spectral.p_perp, (m_dim, m_dim)),
    ):
        if arr.shape != shape:
            raise DimensionMismatchError(f"Fit artifact {name} is {arr.shape}, expected {shape}.")

    fit: GhiveFit = GhiveFit(
        family=family,
        mode=mode,
        n=n,
        tol=float(payload["tol"]),
        max_iter=int(payload["max_iter"]),
        split=split,
        f_d1=f_d1,
        f_d2=f_d2,
        f_hat=f_hat,
        spectral=spectral,
        theta_hat=theta_hat,
        diagnostics=records,
    )
    return fit, preprocess


def inference_to_payload(result: InferenceResult) -> InferencePayload:
    return {
        "u": [float(v) for v in result.contrast.u],
        "v": [float(v) for v in result.contrast.v],
        "estimate": result.estimate,
        "se": result.se,
        "s_hat_sq": result.s_hat_sq,
        "ci_lo": result.ci_lo,
        "ci_hi": result.ci_hi,
        "alpha": result.alpha,
        "se_scale": cast(Any, result.se_scale),
        "renormalized": result.contrast.renormalized,
        "g_condition": [
            {
                "response": g.response,
                "min_eigenvalue": g.min_eigenvalue,
                "max_eigenvalue": g.max_eigenvalue,
                "regularized": g.regularized,
                "delta": g.delta,
            }
            for g in result.g_condition
        ],
    }


def fstar_to_payload(config: SimConfig, truth: SimTruth, coef: CoefMatrix, n_mc: int, record: Metrics) -> FStarPayload:
    return {
        "config": config.to_payload(),
        "n_mc": n_mc,
        "f_star": matrix_to_payload(coef.values),
        "theta": matrix_to_payload(truth.theta),
        "projected_f_star": matrix_to_payload(truth.p_b_perp @ coef.values),
        "converged": [bool(c) for c in coef.converged],
        "bias1": float(record.get("bias1", float("nan"))),
        "bias2": float(record.get("bias2", float("nan"))),
    }


def write_results(result: ExperimentResult, out_dir: pathlib.Path | str) -> tuple[pathlib.Path, pathlib.Path]:
    """Write ``long.csv`` and ``aggregated.csv`` into ``out_dir``."""
    out_dir = pathlib.Path(out_dir)
    long_path: pathlib.Path = out_dir / "long.csv"
    aggregated_path: pathlib.Path = out_dir / "aggregated.csv"

    atomic_write_text(long_path, result.long.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    atomic_write_text(aggregated_path, result.aggregated.to_csv(index=False, float_format="%.17g", lineterminator="\n"))

    logger.info("Wrote %d long rows and %d aggregated rows to %s.", len(result.long), len(result.aggregated), out_dir)
    return long_path, aggregated_path
