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
from core.enums import FamilyKind, FitMode
from core.errors import ValidationError
from storage import fit_to_payload, load_dataset, read_csv, write_json

from . import Command, parse_k


if TYPE_CHECKING:
    from core.estimator import Dataset
    from core.pipeline import GhiveFit
    from types_.arrays import FloatArray

    from . import Subparsers


logger: logging.Logger = logging.getLogger(__name__)


def resolve_mode(k: int | None, projector: bool) -> FitMode:
    if projector:
        if k:
            raise ValidationError("--k and --projector are mutually exclusive.")
        return FitMode.oracle_p

    if k is None:
        return FitMode.data_driven

    if k == 0:
        raise ValidationError("--k 0 requires --projector.")

    return FitMode.oracle_k


class Fit(Command):
    name = "fit"
    help = "Estimate the coefficient matrix of a multi-response GLM with hidden variables."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--x", type=pathlib.Path, required=True, help="covariate CSV (n x p)")
        parser.add_argument("--y", type=pathlib.Path, required=True, help="response CSV (n x M)")
        parser.add_argument("--family", choices=[f.value for f in FamilyKind], default=FamilyKind.bernoulli.value)
        parser.add_argument("--k", type=parse_k, default=None, metavar="auto|INT", help="number of hidden factors")
        parser.add_argument("--projector", type=pathlib.Path, help="CSV with a known M x M projector")
        parser.add_argument("--center", action="store_true", help="center the columns of X")
        parser.add_argument("--standardize", action="store_true", help="center and scale the columns of X")
        parser.add_argument("--tol", type=float, default=core.config["SOLVER"]["tol"])
        parser.add_argument("--max-iter", type=int, default=core.config["SOLVER"]["max_iter"])
        parser.add_argument("--out", type=pathlib.Path, required=True, help="fit JSON to write")
        self.add_seed(parser)
        self.add_threads(parser)

    def run(self, args: argparse.Namespace) -> int:
        mode: FitMode = resolve_mode(args.k, args.projector is not None)
        family: core.GlmFamily = core.GlmFamily.from_name(args.family, eps_floor=core.config["SOLVER"]["eps_floor"])

        data: Dataset = load_dataset(args.x, args.y, family, center=args.center, standardize=args.standardize)
        projector: FloatArray | None = read_csv(args.projector).rows if args.projector is not None else None

        fit: GhiveFit = core.ghive_fit(
            data,
            family,
            args.seed,
            mode,
            args.tol,
            args.max_iter,
            k=args.k,
            projector=projector,
            n_jobs=args.threads,
        )

        write_json(args.out, fit_to_payload(fit, center=args.center, standardize=args.standardize))
        logger.info("Wrote fit to %s.", args.out)
        return 0


def setup(subparsers: Subparsers) -> None:
    Fit().register(subparsers)
