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
from typing import TYPE_CHECKING

import core
from core.simgen import fstar_oracle, make_truth, metrics
from storage import fstar_to_payload, write_json

from . import Command
from .simulate import load_sim_config


if TYPE_CHECKING:
    from core.estimator import CoefMatrix
    from core.simgen import SimConfig, SimTruth

    from . import Subparsers


logger: logging.Logger = logging.getLogger(__name__)


class FStarOracle(Command):
    name = "fstar-oracle"
    help = "Monte-Carlo pseudo-true coefficients of a simulation setting and their bias against the truth."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--config", type=pathlib.Path, required=True, help="simulation config JSON")
        parser.add_argument("--n-mc", type=int, default=core.config["SIMULATION"]["n_mc"])
        parser.add_argument("--seed", type=int, help="overrides the config's seed")
        parser.add_argument("--out", type=pathlib.Path, required=True, help="JSON to write")

    def run(self, args: argparse.Namespace) -> int:
        config: SimConfig = load_sim_config(args.config, seed=args.seed)
        truth: SimTruth = make_truth(config)

        coef: CoefMatrix = fstar_oracle(
            truth,
            config,
            n_mc=args.n_mc,
            tol=core.config["SOLVER"]["tol"],
            max_iter=core.config["SOLVER"]["max_iter"],
        )
        record = metrics(coef.values, truth, f_star=coef.values)

        write_json(args.out, fstar_to_payload(config, truth, coef, args.n_mc, record))
        logger.info("bias %.4g, projected bias %.4g; wrote %s.", record["bias1"], record["bias2"], args.out)
        return 0


def setup(subparsers: Subparsers) -> None:
    FStarOracle().register(subparsers)
