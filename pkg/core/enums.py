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

import enum


__all__ = ("Estimator", "ExperimentName", "FamilyKind", "FitMode", "SeScale")


class FamilyKind(enum.StrEnum):
    gaussian = "gaussian"
    bernoulli = "bernoulli"
    poisson = "poisson"


class FitMode(enum.StrEnum):
    data_driven = "data_driven"
    oracle_k = "oracle_k"
    oracle_p = "oracle_p"


class Estimator(enum.StrEnum):
    data_driven = "data_driven"
    oracle_k = "oracle_k"
    oracle_p = "oracle_p"
    naive_mle = "naive_mle"


class ExperimentName(enum.StrEnum):
    fig1_bias = "fig1-bias"
    fig1_eta = "fig1-eta"
    fig2_n = "fig2-n"
    fig2_m = "fig2-m"
    table1 = "table1"


class SeScale(enum.StrEnum):
    asymptotic = "asymptotic"
    sample = "sample"
