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
import importlib
import logging
import pathlib
from typing import TYPE_CHECKING, ClassVar

import numpy as np

import core
from core.errors import DimensionMismatchError, ValidationError
from storage import read_csv


if TYPE_CHECKING:
    from types_.arrays import FloatArray

    type Subparsers = argparse._SubParsersAction[argparse.ArgumentParser]


__all__ = ("Command", "load_vector", "parse_k", "setup")


logger: logging.Logger = logging.getLogger(__name__)


class Command:
    """One ``ghive`` sub-command. Subclasses add their arguments and implement :meth:`run`."""

    name: ClassVar[str]
    help: ClassVar[str]

    def register(self, subparsers: Subparsers) -> argparse.ArgumentParser:
        parser: argparse.ArgumentParser = subparsers.add_parser(self.name, help=self.help, description=self.help)
        self.add_arguments(parser)
        parser.set_defaults(handler=self.run)
        return parser

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        raise NotImplementedError

    def run(self, args: argparse.Namespace) -> int:
        raise NotImplementedError

    @staticmethod
    def add_seed(parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--seed",
            type=int,
            default=core.config["OPTIONS"]["seed"],
            help="master seed for every random draw (default: %(default)s)",
        )

    @staticmethod
    def add_threads(parser: argparse.ArgumentParser) -> None:
        parser.add_argument(
            "--threads",
            type=int,
            default=core.config["OPTIONS"]["threads"],
            help="worker pool size (default: %(default)s, GHIVE_THREADS overrides the config)",
        )


def parse_k(value: str) -> int | None:
    """``auto`` selects K from the data; an integer fixes it."""
    if value.strip().lower() == "auto":
        return None

    try:
        k: int = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or an integer, got {value!r}") from None

    if k < 0:
        raise argparse.ArgumentTypeError(f"k must be non-negative, got {k}")

    return k


def load_vector(value: str, dim: int, name: str) -> FloatArray:
    """A contrast vector from a CSV file or the basis shorthand ``e<i>`` (1-based)."""
    if value[:1] == "e" and value[1:].isdigit():
        index: int = int(value[1:])
        if not 1 <= index <= dim:
            raise DimensionMismatchError(f"{name}={value} is outside 1..{dim}.")

        vec: FloatArray = np.zeros(dim)
        vec[index - 1] = 1.0
        return vec

    path: pathlib.Path = pathlib.Path(value)
    if not path.is_file():
        raise ValidationError(f"{name} must be a CSV file or e<i>, got {value!r}.")

    vec = read_csv(path).rows.ravel()
    if vec.size != dim:
        raise DimensionMismatchError(f"{name} has {vec.size} entries, expected {dim}.")

    return vec


def setup(parser: argparse.ArgumentParser) -> None:
    subparsers: Subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    modules: list[str] = [f".{f.stem}" for f in sorted(pathlib.Path(__file__).parent.glob("*[a-zA-Z].py"))]
    loaded: list[str] = []

    for module in modules:
        try:
            importlib.import_module(module, package="commands").setup(subparsers)
        except Exception as e:
            logger.error('Unable to load command: "%s" > %s', module, e)
        else:
            loaded.append(f"commands{module}")

    logger.debug("Loaded the following commands: %s", loaded)
