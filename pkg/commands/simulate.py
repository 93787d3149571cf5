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

import argparse
import logging
import pathlib
from typing import TYPE_CHECKING, Any

import core
from core.enums import Estimator
from core.experiments import run_simulation
from core.simgen import SimConfig
from storage import read_json, write_results

from . import Command


if TYPE_CHECKING:
    from core.experiments import ExperimentResult

    from . import Subparsers


logger: logging.Logger = logging.getLogger(__name__)


def parse_estimators(value: str) -> tuple[Estimator, ...]:
    try:
        return tuple(Estimator(name.strip()) for name in value.split(",") if name.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def load_sim_config(path: pathlib.Path, **overrides: Any) -> SimConfig:
    payload: dict[str, Any] = read_json(path, "simulation config")
    payload.setdefault("sigma_z_decay", core.config["SIMULATION"]["sigma_z_decay"])
    payload.update({key: value for key, value in overrides.items() if value is not None})
    return SimConfig.from_payload(payload)


class Simulate(Command):
    name = "simulate"
    help = "Replicate one simulation setting and record per-replication error metrics."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--config", type=pathlib.Path, required=True, help="simulation config JSON")
        parser.add_argument(
            "--estimators",
            type=parse_estimators,
            default=tuple(Estimator),
            help="comma separated subset of " + ",".join(e.value for e in Estimator),
        )
        parser.add_argument("--reps", type=int, help="overrides the config's reps")
        parser.add_argument("--seed", type=int, help="overrides the config's seed")
        parser.add_argument("--out", type=pathlib.Path, required=True, help="directory for long.csv and aggregated.csv")
        self.add_threads(parser)

    def run(self, args: argparse.Namespace) -> int:
        config: SimConfig = load_sim_config(args.config, reps=args.reps, seed=args.seed)
        result: ExperimentResult = run_simulation(
            config,
            args.estimators,
            tol=core.config["SOLVER"]["tol"],
            max_iter=core.config["SOLVER"]["max_iter"],
            n_jobs=args.threads,
        )

        write_results(result, args.out)
        return 0


def setup(subparsers: Subparsers) -> None:
    Simulate().register(subparsers)
