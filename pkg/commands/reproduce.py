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
import time
from typing import TYPE_CHECKING

from core.enums import ExperimentName
from core.experiments import preset, run_experiment
from storage import write_results

from . import Command


if TYPE_CHECKING:
    from core.experiments import ExperimentResult, ExperimentSpec

    from . import Subparsers


logger: logging.Logger = logging.getLogger(__name__)


class Reproduce(Command):
    name = "reproduce"
    help = "Run one of the published simulation studies at desk or full scale."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("experiment", choices=[e.value for e in ExperimentName])
        parser.add_argument("--reps", type=int, help="replications per grid point (default: desk-scale preset)")
        parser.add_argument("--n-mc", type=int, help="Monte-Carlo size of the pseudo-true oracle")
        parser.add_argument("--full-scale", action="store_true", help="use the published grids and replication counts")
        parser.add_argument("--out", type=pathlib.Path, required=True, help="directory for long.csv and aggregated.csv")
        self.add_seed(parser)
        self.add_threads(parser)

    def run(self, args: argparse.Namespace) -> int:
        spec: ExperimentSpec = preset(
            ExperimentName(args.experiment),
            reps=args.reps,
            seed=args.seed,
            full_scale=args.full_scale,
            n_mc=args.n_mc,
        )

        start: float = time.perf_counter()
        result: ExperimentResult = run_experiment(spec, n_jobs=args.threads)
        logger.info("%s finished in %.1fs.", spec.label, time.perf_counter() - start)

        write_results(result, args.out)
        return 0


def setup(subparsers: Subparsers) -> None:
    Reproduce().register(subparsers)
