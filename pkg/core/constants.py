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

__all__ = (
    "DEFAULT_ALPHA",
    "DEFAULT_MAX_HALVINGS",
    "DEFAULT_MAX_ITER",
    "DEFAULT_N_MC",
    "DEFAULT_SEED",
    "DEFAULT_TOL",
    "EIGEN_NEGATIVE_TOL",
    "EPS_FLOOR",
    "G_CONDITION_TOL",
    "RATIO_FLOOR",
    "REGULARIZATION_SCALE",
    "SIGMA_Z_DECAY",
    "STREAM_FSTAR",
    "STREAM_REPLICATION",
    "STREAM_SPLIT",
    "STREAM_TRUTH",
)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
DEFAULT_MAX_HALVINGS = 30
DEFAULT_ALPHA = 0.05
DEFAULT_N_MC = 50_000
DEFAULT_SEED = 20240229

EPS_FLOOR = 1e-10
RATIO_FLOOR = 1e-300
REGULARIZATION_SCALE = 1e-8
G_CONDITION_TOL = 1e-8
EIGEN_NEGATIVE_TOL = 1e-10
SIGMA_Z_DECAY = 0.5

# Philox counter words separating the random streams of one seed.
STREAM_TRUTH = 0
STREAM_REPLICATION = 1
STREAM_FSTAR = 2
STREAM_SPLIT = 3
