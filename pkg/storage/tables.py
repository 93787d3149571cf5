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

import io
import logging
import pathlib
import re
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

from core.errors import CsvParseError, DimensionMismatchError, ValidationError
from core.estimator import Dataset

from .atomic import atomic_write_text
from .models import CsvTable


if TYPE_CHECKING:
    from core.family import GlmFamily
    from types_.arrays import FloatArray


__all__ = ("load_dataset", "preprocess", "read_csv", "save_csv")


logger: logging.Logger = logging.getLogger(__name__)

LINE_RE: re.Pattern[str] = re.compile(r"line (\d+)")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path: pathlib.Path | str) -> CsvTable:
    """Parse a comma-separated numeric table.

    The first row is a header when any of its cells is non-numeric. Errors carry 1-based file
    line and column positions.
    """
    path = pathlib.Path(path)
    label: str = str(path)

    try:
        text: str = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CsvParseError("file not found", path=label) from None
    except (OSError, UnicodeDecodeError) as e:
        raise CsvParseError(f"unable to read file ({e})", path=label) from None

    if not text.strip():
        raise CsvParseError("file is empty", path=label)

    try:
        frame: pd.DataFrame = pd.read_csv(
            io.StringIO(text), header=None, dtype=str, keep_default_na=False, skip_blank_lines=True
        )
    except pd.errors.ParserError as e:
        match: re.Match[str] | None = LINE_RE.search(str(e))
        row: int | None = int(match.group(1)) if match else None
        raise CsvParseError("ragged row", path=label, row=row) from None

    short: np.ndarray = np.argwhere(frame.isna().to_numpy())
    if short.size:
        raise CsvParseError("ragged row", path=label, row=int(short[0][0]) + 1)

    cells: list[list[str]] = [[c.strip() for c in row] for row in frame.to_numpy(dtype=str).tolist()]
    headers: list[str] = []
    offset: int = 1

    if cells and not all(_is_number(c) for c in cells[0]):
        headers = cells.pop(0)
        offset = 2

    if not cells:
        raise CsvParseError("no data rows", path=label)

    values: FloatArray = np.empty((len(cells), len(cells[0])), dtype=np.float64)
    for i, row in enumerate(cells):
        for j, cell in enumerate(row):
            if cell == "":
                raise CsvParseError("missing value", path=label, row=i + offset, column=j + 1)

            try:
                value: float = float(cell)
            except ValueError:
                raise CsvParseError(f"non-numeric value {cell!r}", path=label, row=i + offset, column=j + 1) from None

            if not np.isfinite(value):
                raise CsvParseError(f"non-finite value {cell!r}", path=label, row=i + offset, column=j + 1)

            values[i, j] = value

    return CsvTable(rows=values, headers=headers)


def save_csv(path: pathlib.Path | str, table: CsvTable | FloatArray) -> None:
    """Write a table with 17 significant digits, so reading it back is exact."""
    if not isinstance(table, CsvTable):
        table = CsvTable(rows=table)

    frame: pd.DataFrame = pd.DataFrame(table.rows, columns=table.headers or None)
    text: str = frame.to_csv(index=False, header=bool(table.headers), float_format="%.17g", lineterminator="\n")
    atomic_write_text(path, text)


def preprocess(x: FloatArray, *, center: bool = False, standardize: bool = False) -> FloatArray:
    """Column-wise centering, then (optionally) unit-variance scaling with ``ddof=1``."""
    out: FloatArray = np.array(x, dtype=np.float64)

    if center or standardize:
        out = out - out.mean(axis=0)

    if standardize:
        scale: FloatArray = out.std(axis=0, ddof=1)
        constant: list[int] = [int(j) + 1 for j in np.flatnonzero(scale <= 0.0)]
        if constant:
            raise ValidationError(f"Cannot standardize constant column(s) {constant}.")

        out = out / scale

    return out


def load_dataset(
    x_path: pathlib.Path | str,
    y_path: pathlib.Path | str,
    family: GlmFamily,
    *,
    center: bool = False,
    standardize: bool = False,
) -> Dataset:
    x_table: CsvTable = read_csv(x_path)
    y_table: CsvTable = read_csv(y_path)

    if x_table.shape[0] != y_table.shape[0]:
        raise DimensionMismatchError(f"{x_path} has {x_table.shape[0]} data rows but {y_path} has {y_table.shape[0]}.")

    y: FloatArray = y_table.rows
    bad: np.ndarray = np.argwhere(~family.response_mask(y))
    if bad.size:
        row, column = (int(v) for v in bad[0])
        raise CsvParseError(
            f"{y[row, column]:g} is not a valid {family.name} response",
            path=str(y_path),
            row=row + (2 if y_table.headers else 1),
            column=column + 1,
        )

    data: Dataset = Dataset(x=preprocess(x_table.rows, center=center, standardize=standardize), y=y)
    logger.info("Loaded dataset with n=%d, p=%d, M=%d from %s and %s.", data.n, data.p, data.m_dim, x_path, y_path)
    return data
