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

import copy
import os
import pathlib
import tomllib
from typing import TYPE_CHECKING, Any


if TYPE_CHECKING:
    from types_.config import Config


__all__ = ("DEFAULTS", "config", "load_config")


DEFAULTS: Config = {
    "OPTIONS": {"logging": 20, "threads": 1, "seed": 20240229},
    "SOLVER": {"tol": 1e-8, "max_iter": 100, "eps_floor": 1e-10},
    "SIMULATION": {"n_mc": 50_000, "sigma_z_decay": 0.5},
    "INFERENCE": {"alpha": 0.05, "se_scale": "asymptotic"},
}


def load_config(path: pathlib.Path | None = None) -> Config:
    """Load the TOML configuration, section by section over :data:`DEFAULTS`.

    The file is ``$GHIVE_CONFIG`` when set, otherwise ``config.toml`` in the working directory.
    A missing file leaves the defaults untouched. ``$GHIVE_THREADS`` overrides ``OPTIONS.threads``.
    """
    if path is None:
        path = pathlib.Path(os.environ.get("GHIVE_CONFIG", "config.toml"))

    loaded: Config = copy.deepcopy(DEFAULTS)

    if path.is_file():
        with open(path, "rb") as fp:
            data: dict[str, Any] = tomllib.load(fp)

        for section, values in data.items():
            if section in loaded and isinstance(values, dict):
                loaded[section].update(values)  # type: ignore

    threads: str | None = os.environ.get("GHIVE_THREADS")
    if threads:
        loaded["OPTIONS"]["threads"] = max(1, int(threads))

    return loaded


config: Config = load_config()
