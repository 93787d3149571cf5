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

import logging
import sys
from typing import TextIO


__all__ = ("setup_logging",)


HANDLER_NAME: str = "ghive"


def setup_logging(level: int = logging.INFO) -> None:
    handler: logging.StreamHandler[TextIO] = logging.StreamHandler(sys.stderr)
    formatter: logging.Formatter = logging.Formatter(
        "[{asctime}] [{levelname:<8}] {name}: {message}",
        "%Y-%m-%d %H:%M:%S",
        style="{",
    )
    handler.setFormatter(formatter)
    handler.set_name(HANDLER_NAME)

    root: logging.Logger = logging.getLogger()
    for existing in root.handlers[:]:
        if existing.get_name() == HANDLER_NAME:
            root.removeHandler(existing)

    root.addHandler(handler)
    root.setLevel(level)
