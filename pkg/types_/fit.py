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

from typing import Literal, TypedDict


class MatrixPayload(TypedDict):
    rows: int
    cols: int
    data: list[float]


class ResponseDiagnostics(TypedDict):
    response: int
    converged_d1: bool
    converged_d2: bool
    grad_norm_d1: float
    grad_norm_d2: float


class SpectralPayload(TypedDict):
    sigma_hat: MatrixPayload
    eigvals: list[float]
    eigvecs: MatrixPayload
    ratios: list[float]
    k_bar: int
    k_hat: int
    v_k: MatrixPayload
    p_perp: MatrixPayload


class SplitPayload(TypedDict):
    seed: int
    d1: list[int]
    d2: list[int]


class PreprocessPayload(TypedDict):
    center: bool
    standardize: bool


class FitPayload(TypedDict):
    version: int
    family: Literal["gaussian", "bernoulli", "poisson"]
    mode: Literal["data_driven", "oracle_k", "oracle_p"]
    n: int
    p: int
    m_dim: int
    tol: float
    max_iter: int
    preprocess: PreprocessPayload
    split: SplitPayload
    f_hat: MatrixPayload
    f_d1: MatrixPayload
    f_d2: MatrixPayload
    theta_hat: MatrixPayload
    spectral: SpectralPayload
    diagnostics: list[ResponseDiagnostics]
