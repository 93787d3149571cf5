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
import sys
from collections.abc import Sequence

import commands
import core


LOGGER: logging.Logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser: argparse.ArgumentParser = argparse.ArgumentParser(
        prog="ghive",
        description="Multi-response GLM estimation and inference with hidden variables.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at debug level")
    commands.setup(parser)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    core.setup_logging(core.config["OPTIONS"]["logging"])
    args: argparse.Namespace = build_parser().parse_args(argv)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        return int(args.handler(args))
    except core.GhiveError as e:
        print(f"ghive {args.command}: error: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        LOGGER.warning("Shutting down due to Keyboard Interrupt.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
