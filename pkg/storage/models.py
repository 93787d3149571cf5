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

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from core.errors import DimensionMismatchError, ValidationError


if TYPE_CHECKING:
    from types_.arrays import FloatArray
    from types_.fit import MatrixPayload


__all__ = ("CsvTable", "matrix_from_payload", "matrix_to_payload")


@dataclass(frozen=True, slots=True)
class CsvTable:
    """A rectangular, finite table parsed from (or destined for) a CSV file."""

    rows: FloatArray
    headers: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        rows: FloatArray = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[:, None]

        if rows.ndim != 2:
            raise DimensionMismatchError(f"A table must be two-dimensional, got {rows.ndim} dimensions.")

        if self.headers and len(self.headers) != rows.shape[1]:
            raise DimensionMismatchError(f"{len(self.headers)} headers for {rows.shape[1]} columns.")

        object.__setattr__(self, "rows", rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.rows.shape[0]), int(self.rows.shape[1]))


def matrix_to_payload(matrix: FloatArray) -> MatrixPayload:
    arr: FloatArray = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    return {"rows": int(arr.shape[0]), "cols": int(arr.shape[1]), "data": [float(v) for v in arr.ravel()]}


def matrix_from_payload(payload: MatrixPayload | dict[str, Any], name: str = "matrix") -> FloatArray:
    try:
        rows, cols = int(payload["rows"]), int(payload["cols"])
        data: FloatArray = np.asarray(payload["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed {name} payload: {e}") from None

    if data.size != rows * cols:
        raise DimensionMismatchError(f"{name} payload declares {rows}x{cols} but holds {data.size} values.")

    return data.reshape(rows, cols)
