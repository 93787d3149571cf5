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
from core.enums import SeScale
from core.errors import DimensionMismatchError
from storage import fit_from_payload, inference_to_payload, load_dataset, read_json, write_json

from . import Command, load_vector


if TYPE_CHECKING:
    from core.estimator import Dataset
    from core.inference import InferenceResult

    from . import Subparsers


logger: logging.Logger = logging.getLogger(__name__)


class Infer(Command):
    name = "infer"
    help = "Confidence interval for a linear contrast u'Θv of a saved fit."

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--fit", type=pathlib.Path, required=True, help="fit JSON written by 'ghive fit'")
        parser.add_argument("--x", type=pathlib.Path, required=True, help="the covariate CSV the fit used")
        parser.add_argument("--y", type=pathlib.Path, required=True, help="the response CSV the fit used")
        parser.add_argument("--u", required=True, help="CSV vector of length M, or e<i>")
        parser.add_argument("--v", required=True, help="CSV vector of length p, or e<i>")
        parser.add_argument("--alpha", type=float, default=core.config["INFERENCE"]["alpha"])
        parser.add_argument(
            "--se-scale",
            choices=[s.value for s in SeScale],
            default=core.config["INFERENCE"]["se_scale"],
        )
        parser.add_argument("--out", type=pathlib.Path, required=True, help="inference JSON to write")

    def run(self, args: argparse.Namespace) -> int:
        fit, preprocess = fit_from_payload(read_json(args.fit, "fit"))
        family: core.GlmFamily = core.GlmFamily.from_name(fit.family.name, eps_floor=core.config["SOLVER"]["eps_floor"])
        data: Dataset = load_dataset(args.x, args.y, family, **preprocess)

        if (data.n, data.p, data.m_dim) != (fit.n, fit.p, fit.m_dim):
            raise DimensionMismatchError(
                f"Data is {data.n}x{data.p} with M={data.m_dim} but the fit was {fit.n}x{fit.p} with M={fit.m_dim}."
            )

        contrast: core.Contrast = core.Contrast.from_raw(
            load_vector(args.u, fit.m_dim, "u"),
            load_vector(args.v, fit.p, "v"),
        )
        result: InferenceResult = core.confidence_interval(
            fit, data, family, contrast, args.alpha, se_scale=SeScale(args.se_scale)
        )

        write_json(args.out, inference_to_payload(result))
        logger.info(
            "Estimate %.6g, se %.6g, %.0f%% interval [%.6g, %.6g]; wrote %s.",
            result.estimate,
            result.se,
            100.0 * (1.0 - result.alpha),
            result.ci_lo,
            result.ci_hi,
            args.out,
        )
        return 0


def setup(subparsers: Subparsers) -> None:
    Infer().register(subparsers)
